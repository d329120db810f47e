//! Size distribution `𝒫(s)` and winding size distribution `𝒬(s)` over the
//! reduced size `s = n/N`.
//!
//! Two evaluation modes are provided. [`Mode::LargeN`] uses the delta-function
//! limit, where each perturbation strength `y` maps to a single size
//! `s = (1 - f^A(λ₀y))/2`. [`Mode::FiniteN`] keeps the Gaussian broadening of
//! width `σ² = (1 - f^A²)/(4N)` and integrates it against `h^R`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, gamma};

use crate::error::{Error, Result};
use crate::largeq::{f_a, f_a_derivative, h_r, integrate_against_h_r_rotated, ContourKind, LargeQParams};
use crate::quad::QuadConfig;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_431;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mode {
    LargeN,
    FiniteN { n: u32 },
}

/// Densities on a grid of reduced sizes at one instant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContinuousDistribution {
    pub s_grid: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<C64>,
    /// Real time, when the distribution was requested at a time rather than at a λ₀.
    pub t: Option<f64>,
    pub lambda0: f64,
    pub mode: Mode,
    pub params: LargeQParams,
}

/// Least-squares line through the unwrapped winding phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindingFit {
    pub intercept: f64,
    /// Radians per unit `s`.
    pub slope: f64,
    pub fit_window: (f64, f64),
    /// Root-mean-square deviation from the line, radians.
    pub residual: f64,
}

/// Grid layout for distribution tables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Uniform points on `[0, 1]`.
    pub points: usize,
    /// Extra points inside the large-N support, uniform in `u = y^{2Δ}`, which
    /// cluster toward the integrable edge singularity at `s_min`.
    pub edge_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 2001,
            edge_points: 20000,
        }
    }
}

impl GridSpec {
    pub fn uniform(points: usize) -> Self {
        Self {
            points,
            edge_points: 0,
        }
    }

    fn uniform_points(&self) -> Result<Vec<f64>> {
        if self.points < 2 {
            return Err(Error::domain("grid needs at least two points"));
        }
        let h = 1.0 / (self.points - 1) as f64;
        Ok((0..self.points).map(|i| i as f64 * h).collect())
    }
}

/// Support `[(1 - cos^{2Δ}(πv/2))/2, 1/2]` of the large-N distributions.
pub fn s_support(params: &LargeQParams) -> (f64, f64) {
    ((1.0 - params.cos_pow()) / 2.0, 0.5)
}

/// Perturbation strength `y` that the large-N map sends to size `s`:
/// `y = λ₀⁻¹ [cos(πv/2) (1-2s)^{-1/(2Δ)} - 1]`, the solution of
/// `f^A(λ₀y, -iβ/2) = 1 - 2s`.
pub fn y_of_s(s: f64, lambda0: f64, params: &LargeQParams) -> Result<f64> {
    let (lo, hi) = s_support(params);
    if !(s >= lo && s < hi) {
        return Err(Error::domain(format!("s = {s} outside the support [{lo}, {hi})")));
    }
    if !(lambda0 > 0.0) {
        return Err(Error::domain(format!("λ₀ must be positive, got {lambda0}")));
    }
    let y = (params.cos_half() * (1.0 - 2.0 * s).powf(-1.0 / (2.0 * params.delta)) - 1.0) / lambda0;
    // rounding can push the edge value a hair below zero
    Ok(y.max(0.0))
}

/// Large-N densities `(𝒫(s), 𝒬(s))` at a point strictly inside the support.
///
/// `𝒫 = 2 |∂_y f^A(λ₀y)|⁻¹ h^R(y, 0)` and
/// `𝒬 = 2 |∂_y f^A(λ₀y)|⁻¹ e^{-iκβ/4} h^R(e^{-iκβ/4} y, -iβ/2)`; the extra
/// `e^{-iκβ/4}` is the Jacobian of rotating the `y` contour so that the complex
/// propagator becomes real.
pub fn dist_large_n(s: f64, lambda0: f64, params: &LargeQParams) -> Result<(f64, C64)> {
    let (lo, _) = s_support(params);
    if s <= lo {
        return Err(Error::domain(format!(
            "s = {s} is at or below the support edge {lo}, where 𝒫 is singular or zero"
        )));
    }
    let y = y_of_s(s, lambda0, params)?;
    let tau = 0.5 * params.beta;
    let slope = (f_a_derivative(C64::new(lambda0 * y, 0.0), tau, 0.0, params)? * lambda0).norm();
    let jac = 2.0 / slope;
    let p = jac * h_r(C64::new(y, 0.0), 0.0, 0.0, params)?.re;
    let rot = params.winding_phase().conj();
    let q = jac * rot * h_r(rot * y, tau, 0.0, params)?;
    if p < f64::MIN_POSITIVE {
        // subnormal tails carry no relative precision
        return Ok((0.0, C64::new(0.0, 0.0)));
    }
    Ok((p, q))
}

/// `𝒬/𝒫 = exp(i sin(πv/2) y - iπvΔ)` in the large-N limit.
pub fn winding_ratio(s: f64, lambda0: f64, params: &LargeQParams) -> Result<C64> {
    let y = y_of_s(s, lambda0, params)?;
    Ok(C64::from_polar(1.0, winding_phase_at_y(y, params)))
}

fn winding_phase_at_y(y: f64, params: &LargeQParams) -> f64 {
    (0.5 * PI * params.v).sin() * y - PI * params.v * params.delta
}

/// Analytic `d arg 𝒬 / ds = sin(πv/2) dy/ds` from the large-N winding ratio.
///
/// The closed form extends below the support edge, which is how the `s → 0`
/// limit is taken.
pub fn winding_phase_slope(s: f64, lambda0: f64, params: &LargeQParams) -> Result<f64> {
    if !(s < 0.5) || !(lambda0 > 0.0) {
        return Err(Error::domain(format!("need s < 1/2 and λ₀ > 0, got s = {s}, λ₀ = {lambda0}")));
    }
    let dy_ds = params.cos_half() / (params.delta * lambda0)
        * (1.0 - 2.0 * s).powf(-1.0 / (2.0 * params.delta) - 1.0);
    Ok((0.5 * PI * params.v).sin() * dy_ds)
}

/// Early-time winding slope `q λ₀⁻¹ sin(πv)/2`.
pub fn winding_slope_early(params: &LargeQParams, lambda0: f64) -> Result<f64> {
    if !(lambda0 > 0.0) {
        return Err(Error::domain(format!("λ₀ must be positive, got {lambda0}")));
    }
    Ok(params.q() / lambda0 * (PI * params.v).sin() / 2.0)
}

/// Large-N distribution tabulated on a grid.
pub fn large_n_distribution(
    lambda0: f64,
    params: &LargeQParams,
    grid: &GridSpec,
) -> Result<ContinuousDistribution> {
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(Error::domain(format!("λ₀ must be positive and finite, got {lambda0}")));
    }
    let (lo, hi) = s_support(params);
    let mut s_grid = grid.uniform_points()?;
    if grid.edge_points > 0 {
        let two_d = 2.0 * params.delta;
        let u_max = (40.0 / params.cos_half()).powf(two_d);
        for k in 1..=grid.edge_points {
            let y = (u_max * k as f64 / grid.edge_points as f64).powf(1.0 / two_d);
            let f = f_a(C64::new(lambda0 * y, 0.0), 0.5 * params.beta, 0.0, params)?.re;
            let s = (1.0 - f) / 2.0;
            if s > lo && s < hi {
                s_grid.push(s);
            }
        }
        s_grid.sort_by(f64::total_cmp);
        s_grid.dedup();
    }
    let mut p = Vec::with_capacity(s_grid.len());
    let mut q = Vec::with_capacity(s_grid.len());
    for &s in &s_grid {
        if s > lo && s < hi {
            let (ps, qs) = dist_large_n(s, lambda0, params)?;
            p.push(ps);
            q.push(qs);
        } else {
            p.push(0.0);
            q.push(C64::new(0.0, 0.0));
        }
    }
    Ok(ContinuousDistribution {
        s_grid,
        p,
        q,
        t: None,
        lambda0,
        mode: Mode::LargeN,
        params: *params,
    })
}

/// Gaussian kernel of the finite-N inversion for one `y`:
/// returns `(mean, variance)` of the size for propagator `lambda`.
fn gaussian_moments(lambda: C64, y: f64, n: u32, params: &LargeQParams) -> Result<(C64, C64)> {
    let f = f_a(lambda * y, 0.5 * params.beta, 0.0, params)?;
    let mean = (1.0 - f) / 2.0;
    let var = (1.0 - f * f) / (4.0 * n as f64);
    if !(var.re > 0.0) {
        return Err(Error::NumericalDomain(format!(
            "Re σ² = {} ≤ 0 at y = {y}; the Gaussian inversion would change branch",
            var.re
        )));
    }
    Ok((mean, var))
}

fn gaussian(s: f64, mean: C64, var: C64) -> C64 {
    let d = s - mean;
    (-(d * d) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// One adaptive pass over the perturbation strength for every grid point.
///
/// With `rotate` set, the winding contour is integrated along
/// `y = e^{-iκβ/4} r`, where the propagator times `y` is real and so are the
/// Gaussian mean and variance. By analyticity of the integrand in the sector
/// this equals the real-axis integral, but it avoids the `exp((Im m)²/2σ²)`
/// growth the real axis develops at large N.
fn finite_n_pass(
    s_grid: &[f64],
    lambda0: f64,
    kind: ContourKind,
    params: &LargeQParams,
    n: u32,
    cfg: &QuadConfig,
    rotate: bool,
) -> Result<Vec<C64>> {
    let phase = kind.propagator_phase(params);
    let (lambda, rot) = if rotate {
        (C64::new(lambda0, 0.0), phase.conj())
    } else {
        (phase * lambda0, C64::new(1.0, 0.0))
    };
    let mut failure = None;
    let r = integrate_against_h_r_rotated(
        params,
        kind.tau12(params.beta),
        0.0,
        rot,
        s_grid.len(),
        cfg,
        |y, out| match gaussian_moments(lambda, y, n, params) {
            Ok((mean, var)) => {
                for (o, &s) in out.iter_mut().zip(s_grid) {
                    *o = gaussian(s, mean, var);
                }
            }
            Err(e) => {
                failure.get_or_insert(e);
                out.fill(C64::new(0.0, 0.0));
            }
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r.values)
}

// The kernel narrows like N^{-1/2}; start with enough panels to resolve it.
fn finite_n_config(n: u32) -> QuadConfig {
    let panels = 8 + 4 * (n as f64).sqrt().ceil() as usize;
    QuadConfig {
        initial_panels: panels,
        max_segments: panels + 4000,
        ..QuadConfig::with_tolerances(1e-11, 1e-10)
    }
}

fn check_n(n: u32) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("N must be at least 2, got {n}")));
    }
    Ok(())
}

/// Finite-N densities `(𝒫(s), 𝒬(s))` at a single size.
pub fn dist_finite_n(s: f64, lambda0: f64, params: &LargeQParams, n: u32) -> Result<(f64, C64)> {
    check_n(n)?;
    let cfg = finite_n_config(n);
    let p = finite_n_pass(&[s], lambda0, ContourKind::StandardSize, params, n, &cfg, true)?[0];
    let q = finite_n_pass(&[s], lambda0, ContourKind::WindingSize, params, n, &cfg, true)?[0];
    Ok((p.re, q))
}

/// Finite-N distribution on a uniform grid over `[0, 1]`; each density is one
/// adaptive pass over `y` shared by every grid point.
pub fn finite_n_distribution(
    lambda0: f64,
    params: &LargeQParams,
    n: u32,
    grid: &GridSpec,
) -> Result<ContinuousDistribution> {
    finite_n_on_grid(grid.uniform_points()?, lambda0, params, n)
}

/// Finite-N distribution on an arbitrary increasing grid of sizes, which may
/// extend past `[0, 1]` to capture the Gaussian tails.
pub fn finite_n_on_grid(
    s_grid: Vec<f64>,
    lambda0: f64,
    params: &LargeQParams,
    n: u32,
) -> Result<ContinuousDistribution> {
    check_n(n)?;
    if !(lambda0 >= 0.0 && lambda0.is_finite()) {
        return Err(Error::domain(format!("λ₀ must be finite and non-negative, got {lambda0}")));
    }
    if s_grid.len() < 2 || s_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("size grid must be strictly increasing with at least two points"));
    }
    let cfg = finite_n_config(n);
    let p = finite_n_pass(&s_grid, lambda0, ContourKind::StandardSize, params, n, &cfg, true)?
        .into_iter()
        .map(|z| z.re)
        .collect();
    let q = finite_n_pass(&s_grid, lambda0, ContourKind::WindingSize, params, n, &cfg, true)?;
    Ok(ContinuousDistribution {
        s_grid,
        p,
        q,
        t: None,
        lambda0,
        mode: Mode::FiniteN { n },
        params: *params,
    })
}

/// Finite-N distribution at real time `t`, with `λ₀ = C⁻¹e^{κt}`.
pub fn finite_n_distribution_at_time(
    t: f64,
    params: &LargeQParams,
    n: u32,
    grid: &GridSpec,
) -> Result<ContinuousDistribution> {
    let mut d = finite_n_distribution(params.lambda0(t)?, params, n, grid)?;
    d.t = Some(t);
    Ok(d)
}

/// `N (cos(πv/2)/λ₀)^{2Δ}`; the long-time winding formula needs this ≪ 1.
pub fn asymptotic_validity_ratio(lambda0: f64, params: &LargeQParams, n: u32) -> f64 {
    n as f64 * (params.cos_half() / lambda0).powf(2.0 * params.delta)
}

/// Long-time finite-N winding phase
///
/// `arg 𝒬 ≈ (2s-1) N/Γ(2Δ) (cos(πv/2) e^{-κt})^{2Δ}
///          [sin(πΔv)(κt - ψ(2Δ) - 2γ) - (πv/2) cos(πΔv)]`.
///
/// The prefactor `C` does not enter; see [`arg_q_asymptotic_lambda0`] for the
/// form in terms of `λ₀`, which coincides with this one at `C = 1`.
pub fn arg_q_asymptotic(s: f64, t: f64, params: &LargeQParams, n: u32) -> f64 {
    arg_q_asymptotic_from_log(s, params.kappa() * t, params, n)
}

/// Long-time winding phase with `κt` replaced by `ln λ₀`.
pub fn arg_q_asymptotic_lambda0(s: f64, lambda0: f64, params: &LargeQParams, n: u32) -> f64 {
    arg_q_asymptotic_from_log(s, lambda0.ln(), params, n)
}

fn arg_q_asymptotic_from_log(s: f64, log_lambda: f64, params: &LargeQParams, n: u32) -> f64 {
    let two_d = 2.0 * params.delta;
    let pv = PI * params.v;
    let amp = n as f64 / gamma(two_d) * (params.cos_half() * (-log_lambda).exp()).powf(two_d);
    let bracket = (pv * params.delta).sin() * (log_lambda - digamma(two_d) - 2.0 * EULER_GAMMA)
        - 0.5 * pv * (pv * params.delta).cos();
    (2.0 * s - 1.0) * amp * bracket
}

/// Unwrap a phase sequence by nearest-multiple-of-2π continuation.
pub fn unwrap_phases(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut prev: Option<f64> = None;
    for &ph in phases {
        let v = match prev {
            None => ph,
            Some(p) => ph + 2.0 * PI * ((p - ph) / (2.0 * PI)).round(),
        };
        out.push(v);
        prev = Some(v);
    }
    out
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, rms residual)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mx) * (xi - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum();
    (a, b, (ss / n).sqrt())
}

/// Fit a straight line to the unwrapped `arg 𝒬(s)` inside `window`.
pub fn fit_winding(dist: &ContinuousDistribution, window: (f64, f64)) -> Result<WindingFit> {
    let (w0, w1) = window;
    if !(0.0..=1.0).contains(&w0) || !(0.0..=1.0).contains(&w1) || w0 >= w1 {
        return Err(Error::domain(format!("fit window [{w0}, {w1}] must be an interval in [0, 1]")));
    }
    let idx: Vec<usize> = (0..dist.s_grid.len())
        .filter(|&i| dist.s_grid[i] >= w0 && dist.s_grid[i] <= w1)
        .collect();
    if idx.len() < 8 {
        return Err(Error::domain(format!(
            "fit window [{w0}, {w1}] holds {} grid points, need at least 8",
            idx.len()
        )));
    }
    if let Some(&i) = idx.iter().find(|&&i| !(dist.p[i] > 1e-12)) {
        return Err(Error::domain(format!(
            "𝒫 = {:e} at s = {} inside the fit window; the phase is not defined there",
            dist.p[i], dist.s_grid[i]
        )));
    }
    let s: Vec<f64> = idx.iter().map(|&i| dist.s_grid[i]).collect();
    let raw: Vec<f64> = idx.iter().map(|&i| dist.q[i].arg()).collect();
    let phase = unwrap_phases(&raw);
    let (intercept, slope, residual) = linear_fit(&s, &phase);
    Ok(WindingFit {
        intercept,
        slope,
        fit_window: window,
        residual,
    })
}

impl ContinuousDistribution {
    /// `∫ 𝒫 ds` over the grid.
    ///
    /// Finite-N mode uses the trapezoidal rule. In large-N mode `𝒫` is written
    /// as `(s - s_min)^{2Δ-1} g(s)`; the power is integrated exactly on each
    /// panel and `g` is interpolated linearly. Points outside the support are
    /// not interpolated across.
    pub fn normalization(&self) -> f64 {
        match self.mode {
            Mode::FiniteN { .. } => trapezoid(&self.s_grid, &self.p),
            Mode::LargeN => {
                let (lo, hi) = s_support(&self.params);
                let alpha = 2.0 * self.params.delta;
                let pts: Vec<(f64, f64)> = self
                    .s_grid
                    .iter()
                    .zip(&self.p)
                    .filter(|(s, _)| **s > lo && **s < hi)
                    .map(|(s, p)| {
                        let x = s - lo;
                        (x, p / x.powf(alpha - 1.0))
                    })
                    .collect();
                let Some(&(x1, g1)) = pts.first() else {
                    return 0.0;
                };
                let mut acc = g1 * x1.powf(alpha) / alpha;
                for w in pts.windows(2) {
                    let ((xa, ga), (xb, gb)) = (w[0], w[1]);
                    let m0 = (xb.powf(alpha) - xa.powf(alpha)) / alpha;
                    let m1 = (xb.powf(alpha + 1.0) - xa.powf(alpha + 1.0)) / (alpha + 1.0) - xa * m0;
                    acc += ga * m0 + (gb - ga) / (xb - xa) * m1;
                }
                acc
            }
        }
    }

    /// Trapezoidal `∫ 𝒬 ds` over the grid.
    pub fn q_integral(&self) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 1..self.s_grid.len() {
            acc += (self.q[i] + self.q[i - 1]) * 0.5 * (self.s_grid[i] - self.s_grid[i - 1]);
        }
        acc
    }

    /// Trapezoidal `∫ |𝒬| ds`.
    pub fn abs_q_integral(&self) -> f64 {
        let a: Vec<f64> = self.q.iter().map(|z| z.norm()).collect();
        trapezoid(&self.s_grid, &a)
    }

    /// Trapezoidal Laplace transform `∫_0^1 e^{-νs} 𝒫(s) ds`.
    pub fn laplace_p(&self, nu: f64) -> f64 {
        let w: Vec<f64> = self
            .s_grid
            .iter()
            .zip(&self.p)
            .map(|(s, p)| (-nu * s).exp() * p)
            .collect();
        trapezoid(&self.s_grid, &w)
    }

    /// Trapezoidal Laplace transform `∫_0^1 e^{-νs} 𝒬(s) ds`.
    pub fn laplace_q(&self, nu: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 1..self.s_grid.len() {
            let (s0, s1) = (self.s_grid[i - 1], self.s_grid[i]);
            acc += ((-nu * s0).exp() * self.q[i - 1] + (-nu * s1).exp() * self.q[i]) * 0.5 * (s1 - s0);
        }
        acc
    }

    /// Write the table `s, P, re_Q, im_Q, abs_Q, arg_Q` with a `#`-prefixed
    /// JSON metadata line.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        self.write_csv_with_meta(&self.metadata(), w)
    }

    /// Parameters and run data carried in every emitted table.
    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": crate::io::SCHEMA_VERSION,
            "mode": self.mode,
            "params": self.params,
            "t": self.t,
            "lambda0": self.lambda0,
            "kappa": self.params.kappa(),
            "scrambling_time": self.params.scrambling_time(),
        })
    }

    /// [`ContinuousDistribution::write_csv`] with caller-supplied metadata.
    pub fn write_csv_with_meta<W: std::io::Write>(&self, meta: &serde_json::Value, mut w: W) -> Result<()> {
        writeln!(w, "# {meta}")?;
        writeln!(w, "s,P,re_Q,im_Q,abs_Q,arg_Q")?;
        for i in 0..self.s_grid.len() {
            let q = self.q[i];
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                self.s_grid[i],
                self.p[i],
                q.re,
                q.im,
                q.norm(),
                q.arg()
            )?;
        }
        Ok(())
    }
}

pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (ys[0] + ys[1]) * (xs[1] - xs[0]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig_params() -> LargeQParams {
        LargeQParams::new(0.25, 0.6, 2.0 * PI, 18.0).unwrap()
    }

    #[test]
    fn support_examples() {
        let (lo, hi) = s_support(&fig_params());
        assert!((lo - 0.116_664).abs() < 1e-6);
        assert_eq!(hi, 0.5);
        let slow = LargeQParams::new(0.25, 1e-9, 1.0, 1.0).unwrap();
        assert!(s_support(&slow).0 < 1e-15);
        let thin = LargeQParams::new(1e-9, 0.6, 1.0, 1.0).unwrap();
        assert!(s_support(&thin).0 < 1e-9);
    }

    #[test]
    fn y_of_s_examples() {
        let p = fig_params();
        let (lo, _) = s_support(&p);
        assert!(y_of_s(lo, 1.0, &p).unwrap().abs() < 1e-14);
        let y = y_of_s(0.3, 1.0, &p).unwrap();
        assert!((y - 2.673_658).abs() < 1e-6);
        // inverts f^A(λ₀ y) = 1 - 2s
        let f = f_a(C64::new(y, 0.0), p.beta / 2.0, 0.0, &p).unwrap();
        assert!((f.re - 0.4).abs() < 1e-14);
        assert!(y_of_s(0.5 - 1e-9, 1.0, &p).unwrap() > 1e15);
        assert!(y_of_s(0.5, 1.0, &p).is_err());
        assert!(y_of_s(0.1, 1.0, &p).is_err());
    }

    #[test]
    fn modulus_identity_and_edge_phase() {
        let p = fig_params();
        let (lo, _) = s_support(&p);
        for &l0 in &[0.01, 1.0, 100.0] {
            for k in 1..400 {
                let s = lo + (0.5 - lo) * k as f64 / 400.0;
                let (pp, qq) = dist_large_n(s, l0, &p).unwrap();
                if pp > 0.0 {
                    assert!((qq.norm() - pp).abs() <= 1e-10 * pp);
                    let r = winding_ratio(s, l0, &p).unwrap();
                    assert!((qq / pp - r).norm() < 1e-10);
                }
            }
        }
        let r = winding_ratio(lo, 1.0, &p).unwrap();
        assert!((r.arg() + 0.471_239).abs() < 1e-6);
        let (pp, qq) = dist_large_n(lo + 1e-12, 1.0, &p).unwrap();
        assert!(((qq / pp).arg() + PI * 0.6 * 0.25).abs() < 1e-5);
    }

    #[test]
    fn winding_phase_increases_with_s() {
        let p = fig_params();
        let (lo, _) = s_support(&p);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..200 {
            let s = lo + (0.45 - lo) * k as f64 / 200.0;
            let y = y_of_s(s, 1.0, &p).unwrap();
            let ph = winding_phase_at_y(y, &p);
            assert!(ph > prev);
            prev = ph;
            assert!((winding_ratio(s, 1.0, &p).unwrap().norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn early_slope_examples() {
        let p = LargeQParams::new(0.25, 0.6, 2.0 * PI, 1.0).unwrap();
        let s1 = winding_slope_early(&p, 1.0).unwrap();
        assert!((s1 - 2.0 * (0.6 * PI).sin()).abs() < 1e-14);
        assert!((s1 - 1.902_113).abs() < 1e-6);
        assert!((winding_slope_early(&p, 2.0).unwrap() - s1 / 2.0).abs() < 1e-15);
        let fast = LargeQParams::new(0.25, 1.0 - 1e-9, 2.0 * PI, 1.0).unwrap();
        assert!(winding_slope_early(&fast, 1.0).unwrap() < 1e-7);
        for &l0 in &[0.01, 1.0, 100.0] {
            let a = winding_phase_slope(0.0, l0, &p).unwrap();
            let b = winding_slope_early(&p, l0).unwrap();
            assert!((a - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn large_n_normalization() {
        let p = fig_params();
        for &l0 in &[0.01, 1.0, 100.0] {
            let d = large_n_distribution(l0, &p, &GridSpec::default()).unwrap();
            let norm = d.normalization();
            assert!((norm - 1.0).abs() < 1e-6, "λ₀ = {l0}: {norm}");
            let (lo, hi) = s_support(&p);
            for (s, pp) in d.s_grid.iter().zip(&d.p) {
                assert!(*pp >= 0.0);
                if *s <= lo || *s >= hi {
                    assert_eq!(*pp, 0.0);
                }
            }
        }
    }

    #[test]
    fn finite_n_reduces_to_large_n() {
        let p = fig_params();
        let l0 = 1.0;
        let s = 0.3;
        let (pl, ql) = dist_large_n(s, l0, &p).unwrap();
        let mut prev = f64::INFINITY;
        for &n in &[1_000u32, 10_000, 1_000_000] {
            let (pf, qf) = dist_finite_n(s, l0, &p, n).unwrap();
            let err = ((pf - pl) / pl).abs().max((qf - ql).norm() / ql.norm());
            assert!(err < prev, "N = {n}: {err}");
            prev = err;
        }
        assert!(prev < 1e-3, "{prev}");
    }

    #[test]
    fn finite_n_total_mass_on_the_real_line() {
        // The Gaussian kernel integrates to one over all s, so the mass is
        // ∫h^R dy; tails outside [0, 1] are integrated by widening the grid.
        let p = fig_params();
        let lambda0 = p.lambda0(6.0).unwrap();
        let mut s_grid = Vec::new();
        for i in 0..=6000 {
            s_grid.push(-1.0 + 3.0 * i as f64 / 6000.0);
        }
        let cfg = finite_n_config(18);
        let pd = finite_n_pass(&s_grid, lambda0, ContourKind::StandardSize, &p, 18, &cfg, true).unwrap();
        let pr: Vec<f64> = pd.iter().map(|z| z.re).collect();
        assert!((trapezoid(&s_grid, &pr) - 1.0).abs() < 1e-8);
        let qd = finite_n_pass(&s_grid, lambda0, ContourKind::WindingSize, &p, 18, &cfg, true).unwrap();
        let mut acc = C64::new(0.0, 0.0);
        for i in 1..s_grid.len() {
            acc += (qd[i] + qd[i - 1]) * 0.5 * (s_grid[i] - s_grid[i - 1]);
        }
        assert!((acc - p.cos_pow()).norm() < 1e-8);
    }

    #[test]
    fn rotated_contour_matches_real_axis() {
        let p = fig_params();
        let s_grid: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
        let cfg = finite_n_config(18);
        for &t in &[0.1, 3.0, 9.0] {
            let l0 = p.lambda0(t).unwrap();
            let a = finite_n_pass(&s_grid, l0, ContourKind::WindingSize, &p, 18, &cfg, true).unwrap();
            let b = finite_n_pass(&s_grid, l0, ContourKind::WindingSize, &p, 18, &cfg, false).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-8, "t = {t}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn finite_n_phase_stays_finite_near_half() {
        let p = fig_params();
        let l0 = p.lambda0(12.0).unwrap();
        let (_, q) = dist_finite_n(0.5 - 1e-6, l0, &p, 18).unwrap();
        assert!(q.norm() > 0.0 && q.arg().is_finite());
    }

    #[test]
    fn finite_n_triangle_inequality() {
        let p = fig_params();
        let d = finite_n_distribution_at_time(6.0, &p, 18, &GridSpec::uniform(401)).unwrap();
        assert!(d.q_integral().norm() <= d.abs_q_integral() + 1e-12);
        assert!(d.abs_q_integral() <= 1.0);
        for (pp, qq) in d.p.iter().zip(&d.q) {
            assert!(*pp >= -1e-12);
            assert!(qq.norm() <= pp + 1e-9);
        }
    }

    #[test]
    fn rejects_small_n() {
        let p = fig_params();
        assert!(dist_finite_n(0.3, 1.0, &p, 1).is_err());
    }

    #[test]
    fn asymptotic_formula_in_time_and_lambda0_agree_at_unit_prefactor() {
        let p = LargeQParams::new(0.25, 0.6, 2.0 * PI, 1.0).unwrap();
        let t = 12.0;
        let (d, v, beta, n) = (0.25, 0.6, 2.0 * PI, 18.0);
        let printed = |s: f64| {
            (2.0 * s - 1.0) * n / gamma(2.0 * d)
                * ((PI * v / 2.0).cos() * (-2.0 * PI * t * v / beta).exp()).powf(2.0 * d)
                * ((PI * d * v).sin() * (2.0 * PI * t * v / beta - digamma(2.0 * d) - 2.0 * EULER_GAMMA)
                    - 0.5 * PI * v * (PI * d * v).cos())
        };
        let l0 = p.lambda0(t).unwrap();
        for &s in &[0.0, 0.2, 0.5, 0.9] {
            assert!((arg_q_asymptotic(s, t, &p, 18) - printed(s)).abs() < 1e-12);
            assert!((arg_q_asymptotic_lambda0(s, l0, &p, 18) - printed(s)).abs() < 1e-12);
        }
        assert_eq!(arg_q_asymptotic(0.5, t, &p, 18), 0.0);
        let a = arg_q_asymptotic(0.3, t, &p, 18);
        assert!((arg_q_asymptotic(0.7, t, &p, 18) + a).abs() < 1e-15);
    }

    #[test]
    fn fit_recovers_exact_line() {
        let p = fig_params();
        let s_grid: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
        let (a, b) = (0.4, 9.0);
        let d = ContinuousDistribution {
            q: s_grid.iter().map(|s| C64::from_polar(0.5, a + b * s)).collect(),
            p: vec![0.5; 101],
            s_grid,
            t: None,
            lambda0: 1.0,
            mode: Mode::FiniteN { n: 18 },
            params: p,
        };
        let fit = fit_winding(&d, (0.0, 1.0)).unwrap();
        assert!((fit.slope - b).abs() < 1e-10);
        assert!((fit.intercept - a).abs() < 1e-10);
        assert!(fit.residual < 1e-10);
        assert!(fit_winding(&d, (0.5, 0.55)).is_err());
    }

    #[test]
    fn large_n_phase_is_not_linear_in_s() {
        let p = fig_params();
        let d = large_n_distribution(100.0, &p, &GridSpec::uniform(2001)).unwrap();
        let fit = fit_winding(&d, (0.2, 0.45)).unwrap();
        // exact linearity would leave roundoff-level residuals
        assert!(fit.residual > 1e-3, "{fit:?}");
    }
}
