//! Variational denoising of nonnegative (count-derived) images.
//!
//! Two models over an observed image `f >= 0`:
//!
//! * total-variation: `E(u) = alpha * TV(u) + KL(u, f)`
//! * framelet: `E(u) = lambda * ||W_hi u||_1 + KL(u, f)`
//!
//! where `KL(u, f) = sum over u > 0 of (u - f log u)` is the Poisson
//! log-likelihood misfit, `TV` uses isotropic per-pixel gradient norms with
//! periodic forward differences, and `W` is a tight wavelet-frame analysis
//! from [`crate::framelet`] (`lambda` weights the high-pass bands; the
//! low-pass band is never penalized).
//!
//! Both are solved by augmented-Lagrangian operator splitting with a single
//! inner iteration: auxiliary variables `d ~ grad u` (or `Wu`) and `v ~ u`
//! absorb the nonsmooth terms, giving an isotropic (or scalar) shrink step, a
//! closed-form per-pixel prox of the KL term ([`kl_prox`]), and a quadratic
//! `u`-update — diagonalized by the 2-D DFT for TV, a pointwise average for
//! tight frames (`W^T W = I`). Iterations stop when the relative change
//! `||u_k - u_{k-1}|| / ||u_k||` drops to `rel_tol`.

use std::time::Instant;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec;
use crate::framelet::{decompose, reconstruct, FilterBank, FrameCoefficients};
use crate::image::Image2D;

/// Parameters shared by both denoising models.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Total-variation weight (TV model only); must be positive there.
    pub alpha: f64,
    /// High-pass band weight (framelet model only); nonnegative.
    pub lambda: f64,
    /// Augmented-Lagrangian penalty; the shrink threshold is `alpha/penalty`
    /// (or `lambda/penalty`) and the KL prox weight is `1/penalty`.
    pub penalty: f64,
    pub max_iters: usize,
    /// Relative-change stopping threshold.
    pub rel_tol: f64,
    /// Strictly positive floor applied to the returned image, so downstream
    /// logarithms stay finite.
    pub floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            alpha: 0.1,
            lambda: 0.1,
            penalty: 1.0,
            max_iters: 2000,
            rel_tol: 5e-5,
            floor: 1e-12,
        }
    }
}

impl SolverConfig {
    fn validate_common(&self) -> Result<()> {
        if !(self.penalty.is_finite() && self.penalty > 0.0) {
            return Err(Error::InvalidArgument("penalty must be positive".into()));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument("rel_tol must be positive".into()));
        }
        if !(self.floor.is_finite() && self.floor > 0.0) {
            return Err(Error::InvalidArgument("floor must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    fn validate_tv(&self) -> Result<()> {
        self.validate_common()?;
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidArgument("alpha must be positive".into()));
        }
        Ok(())
    }

    fn validate_framelet(&self) -> Result<()> {
        self.validate_common()?;
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidArgument("lambda must be nonnegative".into()));
        }
        Ok(())
    }
}

/// What a denoising run did.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Iterations actually performed.
    pub iterations: usize,
    /// Relative change at the last iteration.
    pub final_rel_change: f64,
    /// Whether the relative-change criterion was met (as opposed to running
    /// out of iterations).
    pub converged: bool,
    /// Model objective after each iteration; length equals `iterations`.
    pub objective_trace: Vec<f64>,
    /// Wall-clock duration of the solve.
    pub wall: std::time::Duration,
}

// ---- Differential operators -------------------------------------------------

/// Forward differences with periodic boundary: returns `(d/dx, d/dy)` where
/// `x` runs along columns and `y` along rows.
pub fn grad(u: &Image2D) -> (Image2D, Image2D) {
    let (m, n) = (u.rows(), u.cols());
    let mut gx = Image2D::zeros(m, n);
    let mut gy = Image2D::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let jn = if j + 1 == n { 0 } else { j + 1 };
            let im = if i + 1 == m { 0 } else { i + 1 };
            gx.set(i, j, u.get(i, jn) - u.get(i, j));
            gy.set(i, j, u.get(im, j) - u.get(i, j));
        }
    }
    (gx, gy)
}

/// Discrete divergence, the negative adjoint of [`grad`]:
/// `<grad u, p> = -<u, div p>` exactly (up to rounding).
pub fn div(px: &Image2D, py: &Image2D) -> Result<Image2D> {
    if px.rows() != py.rows() || px.cols() != py.cols() {
        return Err(Error::shape(
            format!("{}x{}", px.rows(), px.cols()),
            format!("{}x{}", py.rows(), py.cols()),
        ));
    }
    let (m, n) = (px.rows(), px.cols());
    let mut out = Image2D::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let jp = if j == 0 { n - 1 } else { j - 1 };
            let ip = if i == 0 { m - 1 } else { i - 1 };
            let vx = px.get(i, j) - px.get(i, jp);
            let vy = py.get(i, j) - py.get(ip, j);
            out.set(i, j, vx + vy);
        }
    }
    Ok(out)
}

/// Isotropic total variation: sum of Euclidean norms of per-pixel gradients.
pub fn tv(u: &Image2D) -> f64 {
    let (gx, gy) = grad(u);
    gx.as_slice()
        .iter()
        .zip(gy.as_slice())
        .map(|(&x, &y)| x.hypot(y))
        .sum()
}

/// Poisson misfit `sum over u > 0 of (u - f log u)`. Pixels with `u <= 0`
/// are outside the model domain and contribute nothing.
pub fn kl_objective(u: &Image2D, f: &Image2D) -> Result<f64> {
    if u.rows() != f.rows() || u.cols() != f.cols() {
        return Err(Error::shape(
            format!("{}x{}", f.rows(), f.cols()),
            format!("{}x{}", u.rows(), u.cols()),
        ));
    }
    Ok(u.as_slice()
        .iter()
        .zip(f.as_slice())
        .filter(|(&ui, _)| ui > 0.0)
        .map(|(&ui, &fi)| ui - fi * ui.ln())
        .sum())
}

/// Total-variation model objective `alpha * TV(u) + KL(u, f)`.
pub fn tv_objective(u: &Image2D, f: &Image2D, alpha: f64) -> Result<f64> {
    Ok(alpha * tv(u) + kl_objective(u, f)?)
}

/// Framelet model objective `lambda * sum_hi ||(Wu)_b||_1 + KL(u, f)`, where
/// the sum runs over the high-pass planes of a `levels`-deep decomposition.
pub fn framelet_objective(
    u: &Image2D,
    f: &Image2D,
    bank: &FilterBank,
    levels: usize,
    lambda: f64,
) -> Result<f64> {
    let coeffs = decompose(u, bank, levels)?;
    Ok(lambda * high_pass_l1(&coeffs) + kl_objective(u, f)?)
}

/// Sum of absolute values over every high-pass plane (band index nonzero);
/// low-pass planes at any level are never penalized.
fn high_pass_l1(coeffs: &FrameCoefficients) -> f64 {
    let bpl = coeffs.bands_per_level();
    coeffs
        .planes()
        .iter()
        .enumerate()
        .filter(|(idx, _)| idx % bpl != 0)
        .map(|(_, plane)| plane.as_slice().iter().map(|x| x.abs()).sum::<f64>())
        .sum()
}

// ---- Proximal maps ----------------------------------------------------------

/// Scalar soft threshold: `sign(x) * max(|x| - t, 0)`.
pub fn shrink_scalar(x: f64, t: f64) -> f64 {
    let mag = x.abs() - t;
    if mag > 0.0 {
        mag.copysign(x)
    } else {
        0.0
    }
}

/// Isotropic (vector) soft threshold of a gradient pair.
pub fn shrink_pair(x: (f64, f64), t: f64) -> (f64, f64) {
    let norm = x.0.hypot(x.1);
    if norm <= t || norm == 0.0 {
        (0.0, 0.0)
    } else {
        let scale = (norm - t) / norm;
        (x.0 * scale, x.1 * scale)
    }
}

/// Exact minimizer of `beta (u - f log u) + (u - z)^2 / 2` over `u > 0`
/// (for `f = 0` the log term vanishes and the minimum over `u >= 0` is
/// returned). This is the per-pixel data-term subproblem of both models.
pub fn kl_prox(z: f64, f: f64, beta: f64) -> Result<f64> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidArgument("beta must be positive".into()));
    }
    if !(f.is_finite() && f >= 0.0) {
        return Err(Error::InvalidArgument("f must be nonnegative".into()));
    }
    Ok(kl_prox_unchecked(z, f, beta))
}

/// The root `((z - beta) + sqrt((z - beta)^2 + 4 beta f)) / 2` of the
/// stationarity condition `beta (1 - f/u) + (u - z) = 0`, evaluated in the
/// cancellation-free form when `z < beta`.
fn kl_prox_unchecked(z: f64, f: f64, beta: f64) -> f64 {
    if f == 0.0 {
        return (z - beta).max(0.0);
    }
    let a = z - beta;
    let disc = (a * a + 4.0 * beta * f).sqrt();
    if a >= 0.0 {
        (a + disc) / 2.0
    } else {
        2.0 * beta * f / (disc - a)
    }
}

// ---- Periodic screened-Poisson solver ---------------------------------------

/// Solves `(I + grad^T grad) u = rhs` under periodic boundary conditions by
/// diagonalizing in the 2-D DFT basis; the eigenvalues are
/// `1 + 4 sin^2(pi k1 / M) + 4 sin^2(pi k2 / N)`.
struct ScreenedPoissonSolver {
    rows: usize,
    cols: usize,
    fwd_rows: Arc<dyn Fft<f64>>,
    inv_rows: Arc<dyn Fft<f64>>,
    fwd_cols: Arc<dyn Fft<f64>>,
    inv_cols: Arc<dyn Fft<f64>>,
    /// Reciprocal eigenvalues, row-major `rows x cols`.
    inv_eigen: Vec<f64>,
}

impl ScreenedPoissonSolver {
    fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd_cols = planner.plan_fft_forward(cols);
        let inv_cols = planner.plan_fft_inverse(cols);
        let fwd_rows = planner.plan_fft_forward(rows);
        let inv_rows = planner.plan_fft_inverse(rows);
        let mut inv_eigen = vec![0.0; rows * cols];
        for i in 0..rows {
            let sy = (std::f64::consts::PI * i as f64 / rows as f64).sin();
            for j in 0..cols {
                let sx = (std::f64::consts::PI * j as f64 / cols as f64).sin();
                inv_eigen[i * cols + j] = 1.0 / (1.0 + 4.0 * sx * sx + 4.0 * sy * sy);
            }
        }
        ScreenedPoissonSolver {
            rows,
            cols,
            fwd_rows,
            inv_rows,
            fwd_cols,
            inv_cols,
            inv_eigen,
        }
    }

    fn solve(&self, rhs: &Image2D) -> Image2D {
        let (m, n) = (self.rows, self.cols);
        debug_assert_eq!((rhs.rows(), rhs.cols()), (m, n));
        let mut buf: Vec<Complex64> = rhs
            .as_slice()
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        for row in buf.chunks_mut(n) {
            self.fwd_cols.process(row);
        }
        let mut t = transpose(&buf, m, n);
        for col in t.chunks_mut(m) {
            self.fwd_rows.process(col);
        }
        // `t` is column-major in the original indexing: entry (j, i).
        for j in 0..n {
            for i in 0..m {
                t[j * m + i] *= self.inv_eigen[i * n + j];
            }
        }
        for col in t.chunks_mut(m) {
            self.inv_rows.process(col);
        }
        let mut buf = transpose(&t, n, m);
        for row in buf.chunks_mut(n) {
            self.inv_cols.process(row);
        }
        let scale = 1.0 / (m as f64 * n as f64);
        let data: Vec<f64> = buf.iter().map(|c| c.re * scale).collect();
        Image2D::from_vec(m, n, data).expect("solver preserves shape")
    }
}

fn transpose(buf: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); buf.len()];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = buf[i * cols + j];
        }
    }
    out
}

// ---- Denoising drivers --------------------------------------------------------

fn validate_data(f: &Image2D) -> Result<()> {
    if f.has_non_finite() {
        return Err(Error::NonFinite("denoising input"));
    }
    if f.min() < 0.0 {
        return Err(Error::InvalidArgument(
            "denoising input must be nonnegative".into(),
        ));
    }
    Ok(())
}

/// Denoises `f` under the total-variation model. Returns the minimizer
/// estimate (clamped to the configured positive floor) and a run report.
pub fn denoise_tv(f: &Image2D, cfg: &SolverConfig) -> Result<(Image2D, SolveReport)> {
    cfg.validate_tv()?;
    validate_data(f)?;
    let start = Instant::now();
    let (m, n) = (f.rows(), f.cols());
    let solver = ScreenedPoissonSolver::new(m, n);
    let r = cfg.penalty;
    let thr = cfg.alpha / r;
    let beta = 1.0 / r;

    let mut u = f.clone();
    let (mut gx, mut gy) = grad(&u);
    let mut bx = Image2D::zeros(m, n);
    let mut by = Image2D::zeros(m, n);
    let mut bv = Image2D::zeros(m, n);
    let mut trace = Vec::new();
    let mut final_rel = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..cfg.max_iters {
        iterations += 1;
        // Shrink step on d ~ grad u.
        let pairs: Vec<(f64, f64)> = exec::map_indexed(m * n, |idx| {
            shrink_pair(
                (
                    gx.as_slice()[idx] + bx.as_slice()[idx],
                    gy.as_slice()[idx] + by.as_slice()[idx],
                ),
                thr,
            )
        });
        // KL prox on v ~ u.
        let v: Vec<f64> = exec::map_indexed(m * n, |idx| {
            kl_prox_unchecked(u.as_slice()[idx] + bv.as_slice()[idx], f.as_slice()[idx], beta)
        });
        // Quadratic u-update: (I + grad^T grad) u = (v - bv) - div(d - bd).
        let dbx = Image2D::from_vec(
            m,
            n,
            pairs
                .iter()
                .zip(bx.as_slice())
                .map(|(p, &b)| p.0 - b)
                .collect(),
        )?;
        let dby = Image2D::from_vec(
            m,
            n,
            pairs
                .iter()
                .zip(by.as_slice())
                .map(|(p, &b)| p.1 - b)
                .collect(),
        )?;
        let divd = div(&dbx, &dby)?;
        let rhs = Image2D::from_vec(
            m,
            n,
            (0..m * n)
                .map(|idx| v[idx] - bv.as_slice()[idx] - divd.as_slice()[idx])
                .collect(),
        )?;
        let u_new = solver.solve(&rhs);

        let diff = u_new.sub(&u)?.norm_l2();
        let rel = diff / u_new.norm_l2().max(f64::MIN_POSITIVE);
        final_rel = rel;

        // Dual updates with the fresh gradient (reused next iteration).
        let (gx_new, gy_new) = grad(&u_new);
        for idx in 0..m * n {
            bx.as_mut_slice()[idx] += gx_new.as_slice()[idx] - pairs[idx].0;
            by.as_mut_slice()[idx] += gy_new.as_slice()[idx] - pairs[idx].1;
            bv.as_mut_slice()[idx] += u_new.as_slice()[idx] - v[idx];
        }
        u = u_new;
        gx = gx_new;
        gy = gy_new;
        trace.push(tv_objective(&u, f, cfg.alpha)?);
        if rel <= cfg.rel_tol {
            converged = true;
            break;
        }
    }

    let out = u.map(|x| x.max(cfg.floor));
    Ok((
        out,
        SolveReport {
            iterations,
            final_rel_change: final_rel,
            converged,
            objective_trace: trace,
            wall: start.elapsed(),
        },
    ))
}

/// Denoises `f` under the framelet model with a `levels`-deep decomposition.
pub fn denoise_framelet(
    f: &Image2D,
    bank: &FilterBank,
    levels: usize,
    cfg: &SolverConfig,
) -> Result<(Image2D, SolveReport)> {
    cfg.validate_framelet()?;
    validate_data(f)?;
    let start = Instant::now();
    let (m, n) = (f.rows(), f.cols());
    let r = cfg.penalty;
    let thr = cfg.lambda / r;
    let beta = 1.0 / r;

    let mut u = f.clone();
    let mut coeffs = decompose(&u, bank, levels)?;
    let mut bd = coeffs.zeros_like();
    let mut bv = Image2D::zeros(m, n);
    let mut trace = Vec::new();
    let mut final_rel = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    let bpl = coeffs.bands_per_level();
    for _ in 0..cfg.max_iters {
        iterations += 1;
        // Band-wise shrink on d ~ Wu; the low-pass planes pass through.
        let mut d = coeffs.zip_with(&bd, |c, b| c + b)?;
        for (idx, plane) in d.planes_mut().iter_mut().enumerate() {
            let t = if idx % bpl == 0 { 0.0 } else { thr };
            for x in plane.as_mut_slice() {
                *x = shrink_scalar(*x, t);
            }
        }
        // KL prox on v ~ u.
        let v: Vec<f64> = exec::map_indexed(m * n, |idx| {
            kl_prox_unchecked(u.as_slice()[idx] + bv.as_slice()[idx], f.as_slice()[idx], beta)
        });
        // u-update: W^T W = I makes (I + W^T W) u = W^T(d - bd) + (v - bv)
        // a pointwise average.
        let dmb = d.zip_with(&bd, |di, bi| di - bi)?;
        let wt = reconstruct(&dmb, bank)?;
        let u_new = Image2D::from_vec(
            m,
            n,
            (0..m * n)
                .map(|idx| 0.5 * (wt.as_slice()[idx] + v[idx] - bv.as_slice()[idx]))
                .collect(),
        )?;

        let diff = u_new.sub(&u)?.norm_l2();
        let rel = diff / u_new.norm_l2().max(f64::MIN_POSITIVE);
        final_rel = rel;

        let coeffs_new = decompose(&u_new, bank, levels)?;
        bd = bd
            .zip_with(&coeffs_new.zip_with(&d, |c, di| c - di)?, |b, delta| b + delta)?;
        for idx in 0..m * n {
            bv.as_mut_slice()[idx] += u_new.as_slice()[idx] - v[idx];
        }
        u = u_new;
        coeffs = coeffs_new;
        trace.push(lambda_objective(&coeffs, &u, f, cfg.lambda)?);
        if rel <= cfg.rel_tol {
            converged = true;
            break;
        }
    }

    let out = u.map(|x| x.max(cfg.floor));
    Ok((
        out,
        SolveReport {
            iterations,
            final_rel_change: final_rel,
            converged,
            objective_trace: trace,
            wall: start.elapsed(),
        },
    ))
}

/// Framelet objective evaluated from an existing decomposition of `u`,
/// avoiding a redundant analysis pass inside the iteration loop.
fn lambda_objective(
    coeffs: &FrameCoefficients,
    u: &Image2D,
    f: &Image2D,
    lambda: f64,
) -> Result<f64> {
    Ok(lambda * high_pass_l1(coeffs) + kl_objective(u, f)?)
}
