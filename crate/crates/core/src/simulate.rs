//! Exact-in-distribution grid samplers and the drifted supremum functional.
//!
//! Every sampler here reproduces the *exact* joint law of its process on
//! the supplied grid — Gaussian increments for Brownian motion, the
//! `B(t) = W(t) − tW(1)` representation for the bridge, covariance
//! factorization (dense Cholesky, or circulant embedding of the stationary
//! increments on uniform grids) for fractional Brownian motion, and the
//! first-order autoregressive recursion for the Ornstein–Uhlenbeck
//! process.  There is no discretization error in the sampled vectors; the
//! only systematic gap versus the continuous-time supremum is the grid
//! itself, which the Monte Carlo layer quantifies by mesh refinement.
//!
//! Randomness is deterministic: a path batch is fully determined by
//! `(seed, stream, grid)`.  Streams let callers run independent components
//! and parallel path blocks without coordination.

use crate::error::{Error, Result};
use crate::model::integrand::CShapeEval;
use crate::model::{ChiSquareModel, Component, CorrKind, TrendFunction};
use crate::num::{adaptive, QuadOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

/// Largest values buffer a single batch may allocate (in `f64` entries).
const MAX_BATCH_ENTRIES: usize = 320_000_000;
/// Largest grid admitted to dense covariance factorization.
const MAX_DENSE_GRID: usize = 8192;
/// Uniform grids longer than this use circulant embedding instead of a
/// dense factor.
const CIRCULANT_THRESHOLD: usize = 64;

/// How a grid's points were laid out (kept for manifests and diagnostics).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum GridDesign {
    /// Equal spacing in `t`.
    Uniform,
    /// Geometric clustering of points toward one end.
    LogEnd,
    /// Equal spacing in the change of time `f`; `d` is the realized step.
    FUniform { d: f64 },
    /// Caller-supplied points.
    Explicit,
}

/// A strictly increasing set of time points with its design descriptor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeGrid {
    points: Vec<f64>,
    design: GridDesign,
}

impl TimeGrid {
    fn validated(points: Vec<f64>, design: GridDesign) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("a time grid needs at least one point"));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("time grid points must be finite"));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("time grid points must be strictly increasing"));
        }
        Ok(TimeGrid { points, design })
    }

    /// Grid from caller-supplied strictly increasing points.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        Self::validated(points, GridDesign::Explicit)
    }

    /// `n ≥ 2` equally spaced points covering `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("need finite lo < hi, got [{lo}, {hi}]")));
        }
        if n < 2 {
            return Err(Error::invalid("a uniform grid needs at least two points"));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        points[n - 1] = hi;
        Self::validated(points, GridDesign::Uniform)
    }

    /// `n ≥ 2` points on `[lo, hi]` clustered geometrically toward `hi`
    /// when `toward_hi`, else toward `lo`; `rate > 1` sets the ratio of
    /// the largest to the smallest gap.
    pub fn log_end(lo: f64, hi: f64, n: usize, toward_hi: bool, rate: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("need finite lo < hi, got [{lo}, {hi}]")));
        }
        if n < 2 {
            return Err(Error::invalid("a log-end grid needs at least two points"));
        }
        if !(rate > 1.0 && rate.is_finite()) {
            return Err(Error::invalid(format!("log-end rate must exceed 1, got {rate}")));
        }
        // Gaps shrink geometrically toward the clustered end: the mapped
        // profile s(x) = (1 − rate^{−x})/(1 − 1/rate) compresses uniform
        // fractions, with largest/smallest gap ratio equal to `rate`.
        let m = (n - 1) as f64;
        let profile = |x: f64| (1.0 - rate.powf(-x)) / (1.0 - 1.0 / rate);
        let mut points: Vec<f64> = (0..n)
            .map(|i| {
                let frac = i as f64 / m;
                if toward_hi {
                    // profile′ decreases, so gaps shrink as frac → 1.
                    lo + (hi - lo) * profile(frac)
                } else {
                    hi - (hi - lo) * profile(1.0 - frac)
                }
            })
            .collect();
        points[0] = lo;
        points[n - 1] = hi;
        Self::validated(points, GridDesign::LogEnd)
    }

    /// Points on `[lo, hi]` equally spaced in the model's change of time
    /// `f(t) = ∫ max_i C_i^{1/α_i}`, with step as close to `d` as divides
    /// the span evenly.  This is the natural clock for supremum detection:
    /// the process decorrelates at equal `f`-increments.
    pub fn f_uniform(model: &ChiSquareModel, lo: f64, hi: f64, d: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("need finite lo < hi, got [{lo}, {hi}]")));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::invalid(format!("f-uniform step must be positive, got {d}")));
        }
        let iv = model.interval();
        if lo < iv.lo() || hi > iv.hi() {
            return Err(Error::invalid(format!(
                "grid range [{lo}, {hi}] leaves the model interval [{}, {}]",
                iv.lo(),
                iv.hi()
            )));
        }
        let density = model_clock_density(model)?;
        let quad = QuadOptions::default();
        let total = adaptive(&density, lo, hi, &quad)?.value;
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::numeric(format!("degenerate change of time over [{lo}, {hi}]")));
        }
        let m = ((total / d).ceil() as usize).max(1);
        if m > 4_000_000 {
            return Err(Error::invalid(format!(
                "f-uniform step {d} would need {m} cells over [{lo}, {hi}]; widen the step"
            )));
        }
        let step = total / m as f64;
        let mut points = Vec::with_capacity(m + 1);
        points.push(lo);
        for _ in 0..m.saturating_sub(1) {
            let prev = *points.last().expect("non-empty");
            points.push(advance_in_t(&density, prev, hi, step, &quad)?);
        }
        points.push(hi);
        Self::validated(points, GridDesign::FUniform { d: step })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn design(&self) -> &GridDesign {
        &self.design
    }

    /// Short human/manifest descriptor.
    pub fn describe(&self) -> String {
        let (lo, hi) = (self.points[0], self.points[self.points.len() - 1]);
        let n = self.points.len();
        match &self.design {
            GridDesign::Uniform => format!("uniform[{lo:.6e},{hi:.6e}]x{n}"),
            GridDesign::LogEnd => format!("log-end[{lo:.6e},{hi:.6e}]x{n}"),
            GridDesign::FUniform { d } => format!("f-uniform(d={d:.6e})[{lo:.6e},{hi:.6e}]x{n}"),
            GridDesign::Explicit => format!("explicit[{lo:.6e},{hi:.6e}]x{n}"),
        }
    }

    /// Nested refinement: keeps every current point and inserts one point
    /// inside each gap — at the `f`-midpoint for f-uniform designs (so the
    /// step exactly halves), at the `t`-midpoint otherwise.  Shared points
    /// make mesh bias measurable per path under common random numbers.
    pub fn refine(&self, model: &ChiSquareModel) -> Result<Self> {
        let mut points = Vec::with_capacity(self.points.len() * 2 - 1);
        match &self.design {
            GridDesign::FUniform { d } => {
                let density = model_clock_density(model)?;
                let quad = QuadOptions::default();
                for w in self.points.windows(2) {
                    points.push(w[0]);
                    let mass = adaptive(&density, w[0], w[1], &quad)?.value;
                    points.push(advance_in_t(&density, w[0], w[1], mass / 2.0, &quad)?);
                }
                points.push(*self.points.last().expect("non-empty"));
                Self::validated(points, GridDesign::FUniform { d: d / 2.0 })
            }
            design => {
                for w in self.points.windows(2) {
                    points.push(w[0]);
                    points.push(0.5 * (w[0] + w[1]));
                }
                points.push(*self.points.last().expect("non-empty"));
                Self::validated(points, design.clone())
            }
        }
    }
}

/// `t`-space density of the model clock: `max_i C_i(t)^{1/α_i}`.
fn model_clock_density(model: &ChiSquareModel) -> Result<impl Fn(f64) -> f64> {
    let shapes: Vec<CShapeEval> = model
        .components()
        .iter()
        .map(|c| CShapeEval::new(c.variance(), c.kernel().alpha()))
        .collect::<Result<_>>()?;
    Ok(move |t: f64| shapes.iter().map(|s| s.at_t(t)).fold(f64::NEG_INFINITY, f64::max))
}

/// Next point `b ∈ (a, hi]` with `∫_a^b density = mass` (bracketed Newton).
fn advance_in_t<F: Fn(f64) -> f64>(density: &F, a: f64, hi: f64, mass: f64, quad: &QuadOptions) -> Result<f64> {
    let d_a = density(a);
    if !(d_a.is_finite() && d_a > 0.0) {
        return Err(Error::numeric(format!("clock density not positive at t = {a}")));
    }
    let mut w = (mass / d_a).min(hi - a);
    let mut lo = a;
    let (mut b, mut fb);
    loop {
        b = (a + w).min(hi);
        fb = adaptive(density, a, b, quad)?.value;
        if fb >= mass || b >= hi {
            break;
        }
        lo = b;
        w *= 2.0;
    }
    if fb < mass {
        return Ok(hi); // rounding: the remaining mass ends at the boundary
    }
    let (mut x, mut fx) = (b, fb);
    let mut hi_b = b;
    for _ in 0..60 {
        if (fx - mass).abs() <= 1e-11 * mass {
            return Ok(x);
        }
        let d = density(x);
        let mut next = if d.is_finite() && d > 0.0 { x - (fx - mass) / d } else { f64::NAN };
        if !(next.is_finite() && next > lo && next < hi_b) {
            next = 0.5 * (lo + hi_b);
        }
        let fnext = adaptive(density, a, next, quad)?.value;
        if fnext >= mass {
            hi_b = next;
        } else {
            lo = next;
        }
        x = next;
        fx = fnext;
        if (hi_b - lo) <= f64::EPSILON * hi_b.abs().max(1.0) {
            return Ok(x);
        }
    }
    Err(Error::numeric("equal-mass grid step did not converge"))
}

// ---------------------------------------------------------------------------
// Path batches.
// ---------------------------------------------------------------------------

/// A batch of sampled paths: `n_paths` rows over `grid.len()` columns.
#[derive(Clone, Debug)]
pub struct PathBatch {
    grid: TimeGrid,
    values: Vec<f64>,
    n_paths: usize,
    process: String,
    seed: u64,
    stream: u64,
}

impl PathBatch {
    fn allocate(grid: TimeGrid, n_paths: usize, process: &str, seed: u64, stream: u64) -> Result<Self> {
        if n_paths == 0 {
            return Err(Error::invalid("need at least one path"));
        }
        let entries = n_paths
            .checked_mul(grid.len())
            .filter(|&e| e <= MAX_BATCH_ENTRIES)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "batch of {n_paths} paths x {} points exceeds the in-memory budget; sample in blocks",
                    grid.len()
                ))
            })?;
        Ok(PathBatch {
            grid,
            values: vec![0.0; entries],
            n_paths,
            process: process.to_string(),
            seed,
            stream,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let w = self.grid.len();
        &self.values[i * w..(i + 1) * w]
    }

    fn path_mut(&mut self, i: usize) -> &mut [f64] {
        let w = self.grid.len();
        &mut self.values[i * w..(i + 1) * w]
    }

    pub fn process(&self) -> &str {
        &self.process
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// CSV dump (header row of times, one row per path) for small batches.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(
            &self
                .grid
                .points()
                .iter()
                .map(|t| format!("{t:.17e}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
        for i in 0..self.n_paths {
            out.push_str(
                &self
                    .path(i)
                    .iter()
                    .map(|v| format!("{v:.17e}"))
                    .collect::<Vec<_>>()
                    .join(","),
            );
            out.push('\n');
        }
        out
    }
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

// ---------------------------------------------------------------------------
// Samplers.
// ---------------------------------------------------------------------------

/// Standard Brownian motion on the grid (exact independent increments
/// from the origin; `t = 0` yields the value 0).
pub fn sample_bm(grid: &TimeGrid, n_paths: usize, seed: u64) -> Result<PathBatch> {
    sample_bm_stream(grid, n_paths, seed, 0)
}

fn sample_bm_stream(grid: &TimeGrid, n_paths: usize, seed: u64, stream: u64) -> Result<PathBatch> {
    if grid.points()[0] < 0.0 {
        return Err(Error::invalid("Brownian motion needs nonnegative times"));
    }
    let mut batch = PathBatch::allocate(grid.clone(), n_paths, "bm", seed, stream)?;
    let mut rng = rng_for(seed, stream);
    let sqrt_steps: Vec<f64> = std::iter::once(grid.points()[0])
        .chain(grid.points().windows(2).map(|w| w[1] - w[0]))
        .map(|dt| dt.sqrt())
        .collect();
    for i in 0..n_paths {
        let row = batch.path_mut(i);
        let mut cum = 0.0;
        for (j, s) in sqrt_steps.iter().enumerate() {
            cum += s * normal(&mut rng);
            row[j] = cum;
        }
    }
    Ok(batch)
}

/// Normalized Brownian bridge `B(t)/√(t(1−t))` with `B(t) = W(t) − tW(1)`
/// (exact joint law; unit variance at every grid point).
pub fn sample_bridge(grid: &TimeGrid, n_paths: usize, seed: u64) -> Result<PathBatch> {
    sample_bridge_stream(grid, n_paths, seed, 0)
}

fn sample_bridge_stream(grid: &TimeGrid, n_paths: usize, seed: u64, stream: u64) -> Result<PathBatch> {
    let pts = grid.points();
    if pts[0] <= 0.0 || pts[pts.len() - 1] >= 1.0 {
        return Err(Error::invalid("the normalized bridge needs a grid strictly inside (0, 1)"));
    }
    let mut batch = PathBatch::allocate(grid.clone(), n_paths, "bridge-normalized", seed, stream)?;
    let mut rng = rng_for(seed, stream);
    let mut sqrt_steps: Vec<f64> = std::iter::once(pts[0])
        .chain(pts.windows(2).map(|w| w[1] - w[0]))
        .map(|dt| dt.sqrt())
        .collect();
    sqrt_steps.push((1.0 - pts[pts.len() - 1]).sqrt()); // final step to t = 1
    let norms: Vec<f64> = pts.iter().map(|&t| (t * (1.0 - t)).sqrt()).collect();
    for i in 0..n_paths {
        let row = batch.path_mut(i);
        let mut cum = 0.0;
        for (j, s) in sqrt_steps.iter().enumerate() {
            cum += s * normal(&mut rng);
            if j < row.len() {
                row[j] = cum; // W(t_j)
            }
        }
        let w1 = cum;
        for (j, (&t, &nrm)) in pts.iter().zip(&norms).enumerate() {
            row[j] = (row[j] - t * w1) / nrm;
        }
    }
    Ok(batch)
}

/// Fractional Brownian motion with Hurst index `h` (exact joint law).
///
/// Grids of the form `{mesh, 2·mesh, …}` (optionally starting with 0) use
/// circulant embedding of the stationary increments; any other grid of at
/// most 8192 points uses a dense factorization of the covariance matrix,
/// built once per call.
pub fn sample_fbm(grid: &TimeGrid, h: f64, n_paths: usize, seed: u64) -> Result<PathBatch> {
    sample_fbm_stream(grid, h, n_paths, seed, 0)
}

fn sample_fbm_stream(grid: &TimeGrid, h: f64, n_paths: usize, seed: u64, stream: u64) -> Result<PathBatch> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::invalid(format!("Hurst index must lie in (0, 1), got {h}")));
    }
    if grid.points()[0] < 0.0 {
        return Err(Error::invalid("fractional Brownian motion needs nonnegative times"));
    }
    let process = format!("fbm(h={h})");
    let zero_head = grid.points()[0] == 0.0;
    let pos: Vec<f64> = if zero_head { grid.points()[1..].to_vec() } else { grid.points().to_vec() };
    if pos.is_empty() {
        let mut batch = PathBatch::allocate(grid.clone(), n_paths, &process, seed, stream)?;
        for i in 0..n_paths {
            batch.path_mut(i)[0] = 0.0;
        }
        return Ok(batch);
    }
    let mut batch = PathBatch::allocate(grid.clone(), n_paths, &process, seed, stream)?;
    let offset = usize::from(zero_head);
    if let Some(mesh) = uniform_from_mesh(&pos) {
        if pos.len() > CIRCULANT_THRESHOLD {
            sample_fgn_circulant(&mut batch, h, mesh, pos.len(), offset, seed, stream)?;
            return Ok(batch);
        }
    }
    if pos.len() > MAX_DENSE_GRID {
        return Err(Error::invalid(format!(
            "dense factorization is capped at {MAX_DENSE_GRID} points (grid has {}); \
             thin the grid or use a uniform grid eligible for circulant embedding",
            pos.len()
        )));
    }
    let n = pos.len();
    let mut cov = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cov[i * n + j] = fbm_cov(pos[i], pos[j], h);
        }
    }
    let l = factor_covariance(&cov, n)?;
    let mut rng = rng_for(seed, stream);
    let mut z = vec![0.0; n];
    for i in 0..n_paths {
        for zj in z.iter_mut() {
            *zj = normal(&mut rng);
        }
        let row = batch.path_mut(i);
        for r in 0..n {
            let mut acc = 0.0;
            for c in 0..=r {
                acc += l[r * n + c] * z[c];
            }
            row[offset + r] = acc;
        }
    }
    Ok(batch)
}

/// `Cov(B_H(s), B_H(t)) = (s^{2H} + t^{2H} − |t−s|^{2H}) / 2`.
pub fn fbm_cov(s: f64, t: f64, h: f64) -> f64 {
    0.5 * (s.powf(2.0 * h) + t.powf(2.0 * h) - (t - s).abs().powf(2.0 * h))
}

fn uniform_from_mesh(pos: &[f64]) -> Option<f64> {
    let mesh = pos[0];
    if mesh <= 0.0 {
        return None;
    }
    for (k, &t) in pos.iter().enumerate() {
        let expect = mesh * (k + 1) as f64;
        if (t - expect).abs() > 1e-9 * expect.max(mesh) {
            return None;
        }
    }
    Some(mesh)
}

/// Reusable exact fractional-Gaussian-noise generator (circulant
/// embedding): one plan + eigenvalue table, then `fill` per path.
///
/// Accepts `h ∈ (0, 1]` — `h = 1` is the degenerate perfectly correlated
/// noise (the embedding collapses to its zero-frequency mode), which the
/// Pickands estimator needs for `α = 2`.
pub(crate) struct FgnEngine {
    m: usize,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    /// `√(λ_k / 2m)` for the two self-conjugate frequencies (0 and m).
    w_real: [f64; 2],
    /// `√(λ_k / 4m)` for the paired frequencies `1..m`.
    w_pair: Vec<f64>,
}

impl FgnEngine {
    pub(crate) fn new(h: f64, mesh: f64, m: usize) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::invalid(format!("Hurst index must lie in (0, 1], got {h}")));
        }
        if !(mesh > 0.0 && mesh.is_finite()) {
            return Err(Error::invalid(format!("mesh must be positive, got {mesh}")));
        }
        if m < 2 {
            return Err(Error::invalid("circulant embedding needs at least two increments"));
        }
        let two_m = 2 * m;
        // Autocovariance of the increments at lags 0..=m.
        let scale = mesh.powf(2.0 * h);
        let gamma: Vec<f64> = (0..=m)
            .map(|k| {
                let k = k as f64;
                0.5 * scale * ((k + 1.0).powf(2.0 * h) - 2.0 * k.powf(2.0 * h) + (k - 1.0).abs().powf(2.0 * h))
            })
            .collect();
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(two_m);
        let mut first_row: Vec<Complex<f64>> = Vec::with_capacity(two_m);
        for k in 0..two_m {
            let lag = if k <= m { k } else { two_m - k };
            first_row.push(Complex::new(gamma[lag], 0.0));
        }
        fft.process(&mut first_row);
        let mut eig: Vec<f64> = first_row.iter().map(|c| c.re).collect();
        let max_eig = eig.iter().cloned().fold(0.0f64, f64::max);
        if eig.iter().any(|&l| l < -1e-8 * max_eig) {
            return Err(Error::numeric(
                "circulant embedding of the increment covariance is not nonnegative definite on this grid",
            ));
        }
        for l in eig.iter_mut() {
            if *l < 0.0 {
                *l = 0.0;
            }
        }
        let norm = two_m as f64;
        let w_real = [(eig[0] / norm).sqrt(), (eig[m] / norm).sqrt()];
        let w_pair: Vec<f64> = eig.iter().take(m).map(|&l| (l / (2.0 * norm)).sqrt()).collect();
        Ok(FgnEngine { m, fft, w_real, w_pair })
    }

    /// Working buffers sized for [`fill`](Self::fill) (per thread).
    pub(crate) fn buffers(&self) -> (Vec<Complex<f64>>, Vec<Complex<f64>>) {
        (
            vec![Complex::new(0.0, 0.0); 2 * self.m],
            vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()],
        )
    }

    /// One exact fGn path of `m` increments into `out[..m]`.
    pub(crate) fn fill(
        &self,
        rng: &mut ChaCha8Rng,
        buf: &mut [Complex<f64>],
        scratch: &mut [Complex<f64>],
        out: &mut [f64],
    ) {
        let m = self.m;
        let two_m = 2 * m;
        buf[0] = Complex::new(self.w_real[0] * normal(rng), 0.0);
        buf[m] = Complex::new(self.w_real[1] * normal(rng), 0.0);
        for k in 1..m {
            let a = normal(rng);
            let b = normal(rng);
            buf[k] = Complex::new(self.w_pair[k] * a, self.w_pair[k] * b);
            buf[two_m - k] = Complex::new(self.w_pair[k] * a, -(self.w_pair[k] * b));
        }
        self.fft.process_with_scratch(buf, scratch);
        for (o, c) in out.iter_mut().zip(buf.iter().take(m)) {
            *o = c.re;
        }
    }
}

/// Exact fractional Gaussian noise via circulant embedding; cumulative
/// sums fill fBm values at `mesh·k`, `k = 1..=m`.
fn sample_fgn_circulant(
    batch: &mut PathBatch,
    h: f64,
    mesh: f64,
    m: usize,
    offset: usize,
    seed: u64,
    stream: u64,
) -> Result<()> {
    let engine = FgnEngine::new(h, mesh, m)?;
    let (mut buf, mut scratch) = engine.buffers();
    let mut inc = vec![0.0; m];
    let mut rng = rng_for(seed, stream);
    for p in 0..batch.n_paths {
        engine.fill(&mut rng, &mut buf, &mut scratch, &mut inc);
        let row = batch.path_mut(p);
        let mut cum = 0.0;
        for k in 0..m {
            cum += inc[k];
            row[offset + k] = cum;
        }
    }
    Ok(())
}

/// Stationary unit-variance Gaussian process with correlation function
/// `r(lag)` via dense factorization (the catalog Ornstein–Uhlenbeck entry
/// is routed through the exact autoregressive recursion instead by
/// [`sample_component`]).
pub fn sample_stationary<R: Fn(f64) -> f64>(r: R, grid: &TimeGrid, n_paths: usize, seed: u64) -> Result<PathBatch> {
    let r0 = r(0.0);
    if (r0 - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!("correlation at lag 0 must be 1, got {r0}")));
    }
    let pts = grid.points();
    let n = pts.len();
    if n > MAX_DENSE_GRID {
        return Err(Error::invalid(format!(
            "dense factorization is capped at {MAX_DENSE_GRID} points (grid has {n}); thin the grid"
        )));
    }
    let mut cov = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let v = r((pts[i] - pts[j]).abs());
            if !v.is_finite() || v.abs() > 1.0 + 1e-12 {
                return Err(Error::invalid(format!(
                    "correlation must lie in [-1, 1]; got {v} at lag {}",
                    (pts[i] - pts[j]).abs()
                )));
            }
            cov[i * n + j] = v;
        }
    }
    let l = factor_covariance(&cov, n)?;
    let mut batch = PathBatch::allocate(grid.clone(), n_paths, "stationary", seed, 0)?;
    let mut rng = rng_for(seed, 0);
    let mut z = vec![0.0; n];
    for i in 0..n_paths {
        for zj in z.iter_mut() {
            *zj = normal(&mut rng);
        }
        let row = batch.path_mut(i);
        for rr in 0..n {
            let mut acc = 0.0;
            for c in 0..=rr {
                acc += l[rr * n + c] * z[c];
            }
            row[rr] = acc;
        }
    }
    Ok(batch)
}

/// Lower-triangular factor `L` with `LLᵀ = cov`, tolerant of exact
/// semidefiniteness (zero pivots pin their column), with one `+1e-12·I`
/// regularization retry on marginal failures.
fn factor_covariance(cov: &[f64], n: usize) -> Result<Vec<f64>> {
    let scale = (0..n).map(|i| cov[i * n + i]).fold(0.0f64, f64::max).max(1e-300);
    if let Some(l) = try_cholesky(cov, n, 1e-10 * scale) {
        return Ok(l);
    }
    let mut reg = cov.to_vec();
    for i in 0..n {
        reg[i * n + i] += 1e-12 * scale;
    }
    try_cholesky(&reg, n, 1e-10 * scale).ok_or_else(|| {
        Error::numeric(
            "covariance matrix is not positive semidefinite on this grid (even after \
             symmetric regularization); thin the grid near degenerate points",
        )
    })
}

fn try_cholesky(cov: &[f64], n: usize, tol: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = cov[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d < -tol {
            return None;
        }
        if d <= tol {
            // Exactly (numerically) linearly dependent coordinate: its
            // value is already determined by the previous columns.
            continue;
        }
        let dj = d.sqrt();
        l[j * n + j] = dj;
        for i in (j + 1)..n {
            let mut s = cov[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / dj;
        }
    }
    Some(l)
}

/// Exact Ornstein–Uhlenbeck (unit variance, correlation `e^{−λ·lag}`) via
/// the first-order autoregressive recursion.
fn sample_ou_stream(lambda: f64, grid: &TimeGrid, n_paths: usize, seed: u64, stream: u64) -> Result<PathBatch> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("OU rate must be positive, got {lambda}")));
    }
    let mut batch = PathBatch::allocate(grid.clone(), n_paths, &format!("ou({lambda})"), seed, stream)?;
    let rhos: Vec<f64> = grid.points().windows(2).map(|w| (-lambda * (w[1] - w[0])).exp()).collect();
    let noise: Vec<f64> = rhos.iter().map(|r| (1.0 - r * r).sqrt()).collect();
    let mut rng = rng_for(seed, stream);
    for i in 0..n_paths {
        let row = batch.path_mut(i);
        let mut x = normal(&mut rng);
        row[0] = x;
        for (j, (&r, &s)) in rhos.iter().zip(&noise).enumerate() {
            x = r * x + s * normal(&mut rng);
            row[j + 1] = x;
        }
    }
    Ok(batch)
}

/// Sample one model component (a unit-variance process with the
/// component's exact correlation) on the grid, using the dedicated exact
/// sampler for each catalog correlation kind.
pub fn sample_component(
    comp: &Component,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
    stream: u64,
) -> Result<PathBatch> {
    match comp.corr() {
        CorrKind::BridgeNorm => sample_bridge_stream(grid, n_paths, seed, stream),
        CorrKind::BmNorm => {
            if grid.points()[0] <= 0.0 {
                return Err(Error::invalid("the normalized Brownian motion needs strictly positive times"));
            }
            let mut batch = sample_bm_stream(grid, n_paths, seed, stream)?;
            let norms: Vec<f64> = grid.points().iter().map(|&t| t.sqrt()).collect();
            for i in 0..n_paths {
                let row = batch.path_mut(i);
                for (v, nrm) in row.iter_mut().zip(&norms) {
                    *v /= nrm;
                }
            }
            batch.process = "bm-normalized".into();
            Ok(batch)
        }
        CorrKind::FbmNorm { h } => {
            if grid.points()[0] <= 0.0 {
                return Err(Error::invalid(
                    "the normalized fractional Brownian motion needs strictly positive times",
                ));
            }
            let h = *h;
            let mut batch = sample_fbm_stream(grid, h, n_paths, seed, stream)?;
            let norms: Vec<f64> = grid.points().iter().map(|&t| t.powf(h)).collect();
            for i in 0..n_paths {
                let row = batch.path_mut(i);
                for (v, nrm) in row.iter_mut().zip(&norms) {
                    *v /= nrm;
                }
            }
            batch.process = format!("fbm-normalized(h={h})");
            Ok(batch)
        }
        CorrKind::OuStat { lambda } => sample_ou_stream(*lambda, grid, n_paths, seed, stream),
        CorrKind::StationaryCorr(r) => {
            let r = r.clone();
            let mut batch = sample_pair_corr(move |s, t| r((t - s).abs()), grid, n_paths, seed, stream)?;
            batch.process = "stationary".into();
            Ok(batch)
        }
        CorrKind::PairCorr(r) => {
            let r = r.clone();
            sample_pair_corr(move |s, t| r(s, t), grid, n_paths, seed, stream)
        }
        CorrKind::Unavailable => Err(Error::not_applicable(format!(
            "component `{}` carries no exact correlation; it cannot be simulated",
            comp.label()
        ))),
    }
}

fn sample_pair_corr<R: Fn(f64, f64) -> f64>(
    r: R,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
    stream: u64,
) -> Result<PathBatch> {
    let pts = grid.points();
    let n = pts.len();
    if n > MAX_DENSE_GRID {
        return Err(Error::invalid(format!(
            "dense factorization is capped at {MAX_DENSE_GRID} points (grid has {n}); thin the grid"
        )));
    }
    let mut cov = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let v = r(pts[i], pts[j]);
            if !v.is_finite() || v.abs() > 1.0 + 1e-12 {
                return Err(Error::invalid(format!(
                    "correlation must lie in [-1, 1]; got {v} at ({}, {})",
                    pts[i], pts[j]
                )));
            }
            cov[i * n + j] = v;
        }
    }
    let l = factor_covariance(&cov, n)?;
    let mut batch = PathBatch::allocate(grid.clone(), n_paths, "pair-correlation", seed, stream)?;
    let mut rng = rng_for(seed, stream);
    let mut z = vec![0.0; n];
    for i in 0..n_paths {
        for zj in z.iter_mut() {
            *zj = normal(&mut rng);
        }
        let row = batch.path_mut(i);
        for rr in 0..n {
            let mut acc = 0.0;
            for c in 0..=rr {
                acc += l[rr * n + c] * z[c];
            }
            row[rr] = acc;
        }
    }
    Ok(batch)
}

// ---------------------------------------------------------------------------
// Chi-square assembly and the drifted supremum.
// ---------------------------------------------------------------------------

/// `χ²_b(t) = Σ b_i² X_i²(t)` from one batch per component.
///
/// All batches must share the grid and path count and must come from
/// pairwise distinct `(seed, stream)` pairs (independence across
/// components).
pub fn chi_square_path(model: &ChiSquareModel, component_paths: &[PathBatch]) -> Result<PathBatch> {
    if component_paths.len() != model.n() {
        return Err(Error::invalid(format!(
            "model has {} components but {} batches were supplied",
            model.n(),
            component_paths.len()
        )));
    }
    let first = &component_paths[0];
    for b in component_paths.iter().skip(1) {
        if b.grid() != first.grid() {
            return Err(Error::invalid("component batches must share one grid"));
        }
        if b.n_paths() != first.n_paths() {
            return Err(Error::invalid("component batches must share the path count"));
        }
    }
    for (i, a) in component_paths.iter().enumerate() {
        for b in component_paths.iter().skip(i + 1) {
            if a.seed() == b.seed() && a.stream() == b.stream() {
                return Err(Error::invalid(
                    "component batches share a (seed, stream) pair; components must be independent",
                ));
            }
        }
    }
    let mut out = PathBatch::allocate(
        first.grid().clone(),
        first.n_paths(),
        "chi-square",
        first.seed(),
        first.stream(),
    )?;
    let w = first.grid().len();
    let weights = model.weights();
    for p in 0..first.n_paths() {
        let row = out.path_mut(p);
        for (b, batch) in weights.iter().zip(component_paths) {
            let src = batch.path(p);
            let b2 = b * b;
            for j in 0..w {
                row[j] += b2 * src[j] * src[j];
            }
        }
    }
    Ok(out)
}

/// Per-path suprema of `value − g(t)` over the grid, with the argmax index
/// histogram (grid-position diagnostics for the supremum location).
#[derive(Clone, Debug, Serialize)]
pub struct SupOutcome {
    pub sups: Vec<f64>,
    pub argmax_hist: Vec<u64>,
}

/// Discrete supremum of the drifted field along each path.
pub fn sup_trend(batch: &PathBatch, g: &TrendFunction) -> Result<SupOutcome> {
    let g_vals: Vec<f64> = batch.grid().points().iter().map(|&t| g.eval(t)).collect();
    if let Some(j) = g_vals.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "trend not evaluable at grid point t = {}",
            batch.grid().points()[j]
        )));
    }
    let mut sups = Vec::with_capacity(batch.n_paths());
    let mut hist = vec![0u64; batch.grid().len()];
    for p in 0..batch.n_paths() {
        let row = batch.path(p);
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0usize;
        for (j, (&v, &gv)) in row.iter().zip(&g_vals).enumerate() {
            let d = v - gv;
            if d > best {
                best = d;
                arg = j;
            }
        }
        sups.push(best);
        hist[arg] += 1;
    }
    Ok(SupOutcome { sups, argmax_hist: hist })
}

/// Default supremum-detection mesh for level `u`: a fifth of the smallest
/// decorrelation scale `q_i(u) = K_i⁻¹(u^{−1/2})` across components.
pub fn default_mesh(model: &ChiSquareModel, u: f64) -> Result<f64> {
    let mut q = f64::INFINITY;
    for comp in model.components() {
        q = q.min(comp.kernel().q_of_u(u)?);
    }
    Ok(q / 5.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LocalVariance, RegVarKernel};
    use std::sync::Arc;

    #[test]
    fn uniform_grid_covers_range() {
        let g = TimeGrid::uniform(0.25, 0.75, 11).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g.points()[0], 0.25);
        assert_eq!(g.points()[10], 0.75);
        assert!(TimeGrid::uniform(0.5, 0.5, 3).is_err());
        assert!(TimeGrid::from_points(vec![0.2, 0.2]).is_err());
    }

    #[test]
    fn f_uniform_steps_are_equal_in_f() {
        // Bridge clock density ½/(t(1−t)); masses between consecutive
        // points must agree to 1e-9.
        let model = ChiSquareModel::bridge();
        let g = TimeGrid::f_uniform(&model, 0.05, 0.95, 0.25).unwrap();
        let GridDesign::FUniform { d } = *g.design() else {
            panic!("wrong design")
        };
        let quad = QuadOptions::default();
        let dens = |t: f64| 0.5 / (t * (1.0 - t));
        for w in g.points().windows(2) {
            let mass = adaptive(&dens, w[0], w[1], &quad).unwrap().value;
            assert!((mass - d).abs() < 1e-9, "step {mass} vs {d}");
        }
        assert_eq!(g.points()[0], 0.05);
        assert_eq!(*g.points().last().unwrap(), 0.95);
    }

    #[test]
    fn f_uniform_matches_uniform_for_constant_clock() {
        let model = ChiSquareModel::ou(2.0, 1).unwrap();
        let g = TimeGrid::f_uniform(&model, 0.0, 1.0, 0.2).unwrap();
        // The OU local variance is constant 1 (the rate lives in the
        // kernel), so the clock is the identity: 5 equal cells.
        assert_eq!(g.len(), 6);
        for (i, &t) in g.points().iter().enumerate() {
            assert!((t - i as f64 / 5.0).abs() < 1e-9);
        }
    }

    #[test]
    fn refine_nests_the_coarse_grid() {
        let model = ChiSquareModel::bridge();
        let g = TimeGrid::f_uniform(&model, 0.1, 0.9, 0.3).unwrap();
        let f = g.refine(&model).unwrap();
        assert_eq!(f.len(), 2 * g.len() - 1);
        for (i, &t) in g.points().iter().enumerate() {
            assert_eq!(f.points()[2 * i], t, "coarse point {i} must survive refinement");
        }
        let GridDesign::FUniform { d: dc } = *g.design() else { panic!() };
        let GridDesign::FUniform { d: df } = *f.design() else { panic!() };
        assert!((df - dc / 2.0).abs() < 1e-15);
    }

    #[test]
    fn batches_are_reproducible_and_stream_separated() {
        let g = TimeGrid::uniform(0.1, 0.9, 17).unwrap();
        let a = sample_bm(&g, 50, 42).unwrap();
        let b = sample_bm(&g, 50, 42).unwrap();
        assert_eq!(a.path(49), b.path(49));
        let c = sample_bm_stream(&g, 50, 42, 1).unwrap();
        assert_ne!(a.path(0), c.path(0));
        let d = sample_bm(&g, 50, 43).unwrap();
        assert_ne!(a.path(0), d.path(0));
    }

    #[test]
    fn bridge_grid_must_stay_inside_unit_interval() {
        let g = TimeGrid::uniform(0.0, 0.9, 10).unwrap();
        assert!(sample_bridge(&g, 10, 1).is_err());
        let g = TimeGrid::uniform(0.1, 1.0, 10).unwrap();
        assert!(sample_bridge(&g, 10, 1).is_err());
    }

    #[test]
    fn fbm_half_reduces_to_brownian_covariance() {
        for (s, t) in [(0.2, 0.7), (0.5, 0.5), (0.1, 0.9)] {
            assert!((fbm_cov(s, t, 0.5) - s.min(t)).abs() <= 1e-12);
        }
    }

    #[test]
    fn degenerate_constant_correlation_is_rank_one() {
        let g = TimeGrid::uniform(0.0, 1.0, 8).unwrap();
        let batch = sample_stationary(|_| 1.0, &g, 5, 7).unwrap();
        for p in 0..5 {
            let row = batch.path(p);
            for &v in row {
                assert_eq!(v, row[0], "rank-one process must be constant per path");
            }
        }
    }

    #[test]
    fn non_psd_correlation_is_rejected() {
        let g = TimeGrid::uniform(0.0, 1.0, 12).unwrap();
        let err = sample_stationary(|lag| 1.0 - 3.0 * lag, &g, 5, 7);
        assert!(err.is_err());
    }

    #[test]
    fn circulant_and_dense_fbm_agree_in_law() {
        // Same uniform grid, two machineries: compare empirical second
        // moments of the circulant sampler against the analytic covariance
        // (the dense path is checked directly against the same formula).
        let h = 0.7;
        let n_pts = 96; // above the circulant threshold
        let mesh = 0.01;
        let pts: Vec<f64> = (1..=n_pts).map(|k| mesh * k as f64).collect();
        let g = TimeGrid::from_points(pts).unwrap();
        let n_paths = 40_000;
        let batch = sample_fbm(&g, h, n_paths, 11).unwrap();
        for &(i, j) in &[(0usize, 0usize), (10, 10), (95, 95), (0, 95), (10, 40)] {
            let (ti, tj) = (g.points()[i], g.points()[j]);
            let want = fbm_cov(ti, tj, h);
            let mut acc = 0.0;
            for p in 0..n_paths {
                acc += batch.path(p)[i] * batch.path(p)[j];
            }
            let got = acc / n_paths as f64;
            let se = ((fbm_cov(ti, ti, h) * fbm_cov(tj, tj, h) + want * want) / n_paths as f64).sqrt();
            assert!(
                (got - want).abs() <= 5.0 * se,
                "cov({ti},{tj}): got {got}, want {want}, se {se}"
            );
        }
    }

    #[test]
    fn chi_square_squares_single_component() {
        let model = ChiSquareModel::ou(1.0, 1).unwrap();
        let g = TimeGrid::uniform(0.0, 1.0, 9).unwrap();
        let x = sample_component(model.component(0), &g, 20, 3, 0).unwrap();
        let chi = chi_square_path(&model, std::slice::from_ref(&x)).unwrap();
        for p in 0..20 {
            for (a, b) in chi.path(p).iter().zip(x.path(p)) {
                assert!((a - b * b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn chi_square_rejects_mismatched_inputs() {
        let model = ChiSquareModel::bessel(2).unwrap();
        let g1 = TimeGrid::uniform(0.1, 0.9, 9).unwrap();
        let g2 = TimeGrid::uniform(0.1, 0.9, 10).unwrap();
        let a = sample_component(model.component(0), &g1, 10, 3, 0).unwrap();
        let b = sample_component(model.component(1), &g2, 10, 3, 1).unwrap();
        assert!(chi_square_path(&model, &[a.clone(), b]).is_err());
        // Same (seed, stream) on both components → dependence error.
        let c = sample_component(model.component(1), &g1, 10, 3, 0).unwrap();
        assert!(chi_square_path(&model, &[a, c]).is_err());
    }

    #[test]
    fn sup_trend_matches_hand_computation() {
        let g = TimeGrid::uniform(0.25, 0.75, 3).unwrap();
        let model = ChiSquareModel::ou(1.0, 1).unwrap();
        let batch = sample_component(model.component(0), &g, 30, 9, 0).unwrap();
        let zero = sup_trend(&batch, &TrendFunction::zero()).unwrap();
        for p in 0..30 {
            let want = batch.path(p).iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(zero.sups[p], want);
        }
        // Adding a constant to the trend shifts every supremum by −c.
        let c = 2.5;
        let shifted = sup_trend(&batch, &TrendFunction::constant(c).unwrap()).unwrap();
        for p in 0..30 {
            assert!((shifted.sups[p] - (zero.sups[p] - c)).abs() < 1e-12);
        }
        assert_eq!(zero.argmax_hist.iter().sum::<u64>(), 30);
    }

    #[test]
    fn ou_recursion_has_unit_variance_marginals() {
        let g = TimeGrid::uniform(0.0, 1.0, 21).unwrap();
        let n_paths = 50_000;
        let batch = sample_component(ChiSquareModel::ou(1.0, 1).unwrap().component(0), &g, n_paths, 5, 0).unwrap();
        for &j in &[0usize, 10, 20] {
            let mut acc = 0.0;
            for p in 0..n_paths {
                let v = batch.path(p)[j];
                acc += v * v;
            }
            let var = acc / n_paths as f64;
            // Var of the squared-normal mean: SE ≈ √(2/N).
            assert!((var - 1.0).abs() < 5.0 * (2.0 / n_paths as f64).sqrt(), "var {var} at {j}");
        }
    }

    #[test]
    fn unavailable_correlation_cannot_be_sampled() {
        let comp = Component::new(
            "custom",
            RegVarKernel::pure_power(1.0).unwrap(),
            LocalVariance::constant(1.0).unwrap(),
            CorrKind::Unavailable,
        );
        let g = TimeGrid::uniform(0.1, 0.9, 5).unwrap();
        assert!(matches!(
            sample_component(&comp, &g, 10, 1, 0),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn pair_correlation_sampler_respects_the_callable() {
        // r(s,t) = √(s/t) is the normalized-BM correlation: sample it via
        // the generic pairwise path and check second moments.
        let comp = Component::new(
            "pairwise-bm",
            RegVarKernel::pure_power(1.0).unwrap(),
            LocalVariance::power_shape(0.5, 1.0, 0.0).unwrap(),
            CorrKind::PairCorr(Arc::new(|s: f64, t: f64| {
                let (a, b) = if s <= t { (s, t) } else { (t, s) };
                (a / b).sqrt()
            })),
        );
        let g = TimeGrid::uniform(0.2, 0.8, 7).unwrap();
        let n_paths = 40_000;
        let batch = sample_component(&comp, &g, n_paths, 13, 0).unwrap();
        let (i, j) = (1usize, 5usize);
        let want = (g.points()[i] / g.points()[j]).sqrt();
        let mut acc = 0.0;
        for p in 0..n_paths {
            acc += batch.path(p)[i] * batch.path(p)[j];
        }
        let got = acc / n_paths as f64;
        let se = ((1.0 + want * want) / n_paths as f64).sqrt();
        assert!((got - want).abs() <= 5.0 * se, "got {got}, want {want}");
    }

    #[test]
    fn default_mesh_tracks_the_decorrelation_scale() {
        let model = ChiSquareModel::ou(1.0, 1).unwrap();
        // K²(h) = h, so q(u) = 1/u and the mesh is q/5.
        let d = default_mesh(&model, 10.0).unwrap();
        assert!((d - 0.02).abs() < 1e-12);
    }
}
