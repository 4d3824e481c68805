//! Distributional laws of the exact path samplers.
//!
//! Every sampler in `simulate` claims an exact joint law; these tests hold
//! each one to an analytic consequence of that law — means, variances,
//! covariances, a time-change identity in distribution, and an exact
//! chi-square marginal — at tolerances sized to several standard errors of
//! the estimator, so failures indicate bias rather than noise.

use chi2sup::model::{ChiSquareModel, TrendFunction};
use chi2sup::simulate::{
    chi_square_path, sample_bm, sample_bridge, sample_component, sample_fbm, sample_stationary,
    sup_trend, PathBatch, TimeGrid,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn column(batch: &PathBatch, j: usize) -> Vec<f64> {
    (0..batch.n_paths()).map(|i| batch.path(i)[j]).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Unbiased sample covariance.
fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / (xs.len() - 1) as f64
}

fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    covariance(xs, ys) / (variance(xs) * variance(ys)).sqrt()
}

#[test]
fn brownian_motion_covariance_structure() {
    let grid = TimeGrid::from_points(vec![0.3, 0.7, 1.0]).unwrap();
    let n = 1_000_000;
    let batch = sample_bm(&grid, n, 11).unwrap();
    let (w03, w07, w10) = (column(&batch, 0), column(&batch, 1), column(&batch, 2));

    // E W(1) = 0 (SE 1/√N = 0.001) and Var W(1) = 1 (SE √(2/N) ≈ 0.0014).
    assert!(mean(&w10).abs() < 0.005, "mean W(1) = {}", mean(&w10));
    assert!(
        (variance(&w10) - 1.0).abs() < 0.005,
        "Var W(1) = {}",
        variance(&w10)
    );
    // Cov(W(s), W(t)) = min(s, t).
    let c = covariance(&w03, &w07);
    assert!((c - 0.3).abs() < 0.01, "Cov(W(0.3), W(0.7)) = {c}");
}

#[test]
fn normalized_bridge_unit_variance_and_near_diagonal_correlation() {
    let grid = TimeGrid::from_points(vec![0.2, 0.4, 0.41]).unwrap();
    let n = 1_000_000;
    let batch = sample_bridge(&grid, n, 12).unwrap();
    let chi02 = column(&batch, 0);
    let chi040 = column(&batch, 1);
    let chi041 = column(&batch, 2);

    // The normalized bridge has unit variance at every point.
    let v = variance(&chi02);
    assert!((v - 1.0).abs() < 0.005, "Var χ(0.2) = {v}");

    // Near the diagonal 1 − r(t, t+h) ≈ h/(2t(1−t)): at t = 0.40, h = 0.01
    // the correlation is ≈ 1 − 0.01/0.48.
    let r = correlation(&chi040, &chi041);
    let approx = 1.0 - 0.01 / (2.0 * 0.4 * 0.6);
    assert!(
        (r - approx).abs() < 0.002,
        "corr(χ(0.40), χ(0.41)) = {r}, local expansion gives {approx}"
    );
}

/// `B(t) = (1−t)·W(t/(1−t))` in law: the supremum of the plain bridge over a
/// grid must match, in distribution, the supremum of the time-changed
/// Brownian motion over the image grid.  Independent seeds on the two sides;
/// equality is tested on the mean and one tail probability at five combined
/// standard errors.
#[test]
fn bridge_matches_time_changed_brownian_motion_in_law() {
    let t_pts: Vec<f64> = (2..=10).map(|i| i as f64 * 0.05).collect(); // 0.10 … 0.50
    let s_pts: Vec<f64> = t_pts.iter().map(|&t| t / (1.0 - t)).collect();
    let t_grid = TimeGrid::from_points(t_pts.clone()).unwrap();
    let s_grid = TimeGrid::from_points(s_pts.clone()).unwrap();
    let n = 200_000;

    // Plain bridge suprema: undo the variance normalization of the sampler.
    let norms: Vec<f64> = t_pts.iter().map(|&t| (t * (1.0 - t)).sqrt()).collect();
    let bridge = sample_bridge(&t_grid, n, 21).unwrap();
    let sup_b: Vec<f64> = (0..n)
        .map(|i| {
            bridge
                .path(i)
                .iter()
                .zip(&norms)
                .map(|(x, nrm)| x * nrm)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();

    // Time-changed Brownian motion suprema: (1−t) = 1/(1+s).
    let scales: Vec<f64> = s_pts.iter().map(|&s| 1.0 / (1.0 + s)).collect();
    let bm = sample_bm(&s_grid, n, 22).unwrap();
    let sup_w: Vec<f64> = (0..n)
        .map(|i| {
            bm.path(i)
                .iter()
                .zip(&scales)
                .map(|(x, sc)| x * sc)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();

    let (m_b, m_w) = (mean(&sup_b), mean(&sup_w));
    let se = ((variance(&sup_b) + variance(&sup_w)) / n as f64).sqrt();
    assert!(
        (m_b - m_w).abs() < 5.0 * se,
        "E sup: bridge {m_b} vs time-changed BM {m_w} (5·SE = {})",
        5.0 * se
    );

    let tail = |sups: &[f64]| sups.iter().filter(|&&s| s > 0.3).count() as f64 / n as f64;
    let (p_b, p_w) = (tail(&sup_b), tail(&sup_w));
    let p_pool = 0.5 * (p_b + p_w);
    let se_p = (2.0 * p_pool * (1.0 - p_pool) / n as f64).sqrt();
    assert!(
        (p_b - p_w).abs() < 5.0 * se_p,
        "P(sup > 0.3): bridge {p_b} vs time-changed BM {p_w} (5·SE = {})",
        5.0 * se_p
    );
}

#[test]
fn fractional_brownian_motion_variance_and_increment_scaling() {
    let h = 0.75;
    let grid = TimeGrid::from_points(vec![0.5, 0.51, 1.0]).unwrap();
    let n = 300_000;
    let batch = sample_fbm(&grid, h, n, 31).unwrap();
    let x050 = column(&batch, 0);
    let x051 = column(&batch, 1);
    let x100 = column(&batch, 2);

    // Var B_H(t) = t^{2H}.
    for (t, xs) in [(0.5f64, &x050), (1.0, &x100)] {
        let want = t.powf(2.0 * h);
        let got = variance(xs);
        assert!(
            (got - want).abs() < 0.02 * want,
            "Var B_H({t}) = {got}, want {want}"
        );
    }

    // Increment scaling: 1 − corr(B_H(t), B_H(t+δ)) ≈ δ^{2H}/(2 t^{2H}) at
    // t = 0.5, δ = 0.01, up to the smooth next-order term (within 20%).
    let r = correlation(&x050, &x051);
    let lead = 0.01f64.powf(2.0 * h) / (2.0 * 0.5f64.powf(2.0 * h));
    let ratio = (1.0 - r) / lead;
    assert!(
        (0.8..1.2).contains(&ratio),
        "1 − corr = {} vs leading order {lead} (ratio {ratio})",
        1.0 - r
    );
}

#[test]
fn stationary_samplers_match_their_correlations() {
    let grid = TimeGrid::uniform(0.0, 1.0, 21).unwrap();
    let n = 200_000;

    // Ornstein–Uhlenbeck with rate 1 through the catalog component sampler:
    // corr over one grid step of 0.05 is e^{−0.05}.
    let ou = ChiSquareModel::ou(1.0, 1).unwrap();
    let batch = sample_component(ou.component(0), &grid, n, 41, 0).unwrap();
    let r = correlation(&column(&batch, 0), &column(&batch, 1));
    let want = (-0.05f64).exp();
    assert!((r - want).abs() < 0.005, "OU lag-0.05 corr = {r}, want {want}");

    // Triangular correlation r(τ) = max(0, 1 − |τ|) (Pólya class, a valid
    // covariance): corr at lag 0.3 is 0.7.
    let tri = sample_stationary(|tau| (1.0 - tau.abs()).max(0.0), &grid, n, 42).unwrap();
    let r = correlation(&column(&tri, 0), &column(&tri, 6));
    assert!((r - 0.7).abs() < 0.006, "triangular lag-0.3 corr = {r}");

    // The constant correlation r ≡ 1 is only positive semi-definite
    // (rank one); the factorization must accept it and produce paths that
    // are constant in t with a unit-variance level.
    let small = TimeGrid::uniform(0.0, 1.0, 5).unwrap();
    let flat = sample_stationary(|_| 1.0, &small, 20_000, 43).unwrap();
    let first = column(&flat, 0);
    for i in 0..flat.n_paths() {
        let row = flat.path(i);
        for &v in row {
            assert!(
                (v - row[0]).abs() < 1e-8,
                "rank-one path {i} is not constant: {row:?}"
            );
        }
    }
    let v = variance(&first);
    assert!((v - 1.0).abs() < 0.05, "rank-one level variance = {v}");
}

#[test]
fn chi_square_assembly_marginal_law_and_weights() {
    // Two independent unit-weight components of W²(t)/t at a fixed point
    // give an exact χ²₂ marginal.
    let model = ChiSquareModel::bessel(2).unwrap();
    let grid = TimeGrid::from_points(vec![0.5]).unwrap();
    let n = 1_000_000;
    let b0 = sample_component(model.component(0), &grid, n, 99, 0).unwrap();
    let b1 = sample_component(model.component(1), &grid, n, 99, 1).unwrap();
    let chi = chi_square_path(&model, &[b0.clone(), b1.clone()]).unwrap();

    let mut vals = column(&chi, 0);
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let law = ChiSquared::new(2.0).unwrap();
    let mut ks: f64 = 0.0;
    for (i, &x) in vals.iter().enumerate() {
        let f = law.cdf(x);
        ks = ks
            .max((f - i as f64 / n as f64).abs())
            .max(((i + 1) as f64 / n as f64 - f).abs());
    }
    assert!(ks < 0.002, "KS distance to χ²₂ = {ks}");

    // Weights enter as squares: b = (1, 1/2) has mean value 1 + 1/4.
    let weighted =
        ChiSquareModel::new(model.components().to_vec(), vec![1.0, 0.5], model.interval()).unwrap();
    let chi_w = chi_square_path(&weighted, &[b0, b1]).unwrap();
    let m = mean(&column(&chi_w, 0));
    assert!((m - 1.25).abs() < 0.0075, "weighted mean = {m}");

    // The supremum helper agrees with a by-hand fold on the same batch.
    let zero = TrendFunction::zero();
    let sups = sup_trend(&chi, &zero).unwrap();
    let by_hand = (0..n)
        .map(|i| chi.path(i)[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let reported = sups.sups.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    assert!((by_hand - reported).abs() == 0.0);
}
