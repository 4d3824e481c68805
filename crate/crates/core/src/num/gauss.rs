//! Gauss–Legendre nodes and weights on `[-1, 1]`.
//!
//! Used for the tensor quadrature over the angular variables in the
//! distinct-structure approximation, where the integrand is smooth and
//! periodic-free so fixed-order Gauss rules converge spectrally.

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// computed by Newton iteration on the Legendre recurrence.  Exact for
/// polynomials of degree `≤ 2n − 1`.
pub fn legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "Gauss rule needs at least one node");
    let mut out = Vec::with_capacity(n);
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chapter-and-verse starting guess for the i-th positive root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and its derivative via the three-term recurrence.
            let mut p0 = 1.0f64;
            let mut p1 = 0.0f64;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * x * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            pp = n as f64 * (x * p0 - p1) / (x * x - 1.0);
            let dx = p0 / pp;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        out.push((-x, w));
        if 2 * (i + 1) <= n {
            out.push((x, w));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// The same rule mapped to `[a, b]`.
pub fn legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    legendre(n).into_iter().map(|(x, w)| (mid + half * x, half * w)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        // 8 nodes are exact through degree 15.
        let rule = legendre(8);
        for p in 0..=15usize {
            let got: f64 = rule.iter().map(|&(x, w)| w * x.powi(p as i32)).sum();
            let want = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
            assert!((got - want).abs() < 1e-14, "degree {p}: {got} vs {want}");
        }
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for &n in &[1usize, 2, 5, 31, 64] {
            let s: f64 = legendre(n).iter().map(|&(_, w)| w).sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}: weight sum {s}");
        }
    }

    #[test]
    fn cosine_powers_match_beta_moments() {
        // ∫_{-π/2}^{π/2} cos^p θ dθ = √π Γ((p+1)/2)/Γ(p/2 + 1).
        use statrs::function::gamma::gamma;
        let rule = legendre_on(64, -0.5 * std::f64::consts::PI, 0.5 * std::f64::consts::PI);
        for p in 1..=6u32 {
            let got: f64 = rule.iter().map(|&(x, w)| w * x.cos().powi(p as i32)).sum();
            let pf = p as f64;
            let want = std::f64::consts::PI.sqrt() * gamma(0.5 * (pf + 1.0)) / gamma(0.5 * pf + 1.0);
            assert!((got - want).abs() < 1e-13 * want.abs().max(1.0), "p={p}: {got} vs {want}");
        }
    }

    #[test]
    fn mapped_rule_matches_analytic_integral() {
        let rule = legendre_on(16, 0.0, 2.0);
        let got: f64 = rule.iter().map(|&(x, w)| w * x.exp()).sum();
        assert!((got - (2f64.exp() - 1.0)).abs() < 1e-12);
    }
}
