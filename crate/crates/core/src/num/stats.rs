//! Small statistical helpers for the Monte Carlo layer.

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for a binomial proportion at confidence `z`.
///
/// Well-behaved at 0 and n hits (never collapses to a point, never leaves
/// `[0, 1]`), which is exactly what rare-event tail estimation needs.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    assert!(n > 0, "Wilson interval needs at least one trial");
    let n_f = n as f64;
    let p = hits as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    // At the boundary counts the exact interval endpoint is 0 (resp. 1);
    // the algebra above only reproduces that up to rounding residue.
    let lo = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if hits == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// "Rule of three" upper bound for the success probability after `n`
/// failure-only trials, at ~95% confidence.
pub fn rule_of_three(n: u64) -> f64 {
    assert!(n > 0);
    3.0 / n as f64
}

/// Mean and 95% normal CI from a streamed sum / sum-of-squares triple.
pub fn mean_ci(sum: f64, sum_sq: f64, n: u64) -> (f64, (f64, f64)) {
    assert!(n > 1, "CI needs at least two observations");
    let n_f = n as f64;
    let mean = sum / n_f;
    let var = ((sum_sq - sum * sum / n_f) / (n_f - 1.0)).max(0.0);
    let half = Z95 * (var / n_f).sqrt();
    (mean, (mean - half, mean + half))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_brackets_the_point_estimate() {
        let (lo, hi) = wilson_interval(17, 1000, Z95);
        assert!(lo < 0.017 && 0.017 < hi);
        assert!(lo > 0.0 && hi < 1.0);
    }

    #[test]
    fn wilson_zero_hits_has_positive_upper() {
        let (lo, hi) = wilson_interval(0, 1000, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
        assert!(rule_of_three(1000) >= hi * 0.5);
    }

    #[test]
    fn mean_ci_matches_hand_computation() {
        // Observations 1, 2, 3: mean 2, s² = 1, half-width z/√3.
        let (m, (lo, hi)) = mean_ci(6.0, 14.0, 3);
        assert!((m - 2.0).abs() < 1e-15);
        let half = Z95 / 3.0f64.sqrt();
        assert!((hi - lo - 2.0 * half).abs() < 1e-12);
    }
}
