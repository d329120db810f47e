//! Laplace-transform generating functions `S_P(ν)`, `S_Q(ν)` and size moments.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dist::Mode;
use crate::error::{Error, Result};
use crate::largeq::{f_a, integrate_against_h_r, ContourKind, LargeQParams};
use crate::quad::QuadConfig;

/// One evaluation of a generating function.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GeneratingFunctionSample {
    pub nu: C64,
    pub t: Option<f64>,
    pub lambda0: f64,
    pub kind: ContourKind,
    pub value: C64,
    pub n: u32,
}

fn cfg() -> QuadConfig {
    QuadConfig::with_tolerances(1e-14, 1e-12)
}

fn check(nu: C64, n: u32) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("N must be at least 2, got {n}")));
    }
    if !(nu.norm() <= n as f64) {
        return Err(Error::domain(format!(
            "|ν| = {} exceeds N = {n}; the second-order expansion in ν/N is not valid",
            nu.norm()
        )));
    }
    Ok(())
}

/// `S(ν) = ∫dy h^R(y, T₁₂) exp(ν²/(8N) (1 - f²) - ν/2 (1 - f))` with
/// `f = f^A(λy, -iβ/2)`; the contour fixes `T₁₂` and the phase of `λ`.
pub fn gen_func(nu: C64, lambda0: f64, kind: ContourKind, params: &LargeQParams, n: u32) -> Result<C64> {
    check(nu, n)?;
    let lambda = kind.propagator_phase(params) * lambda0;
    let tau34 = kind.tau34(params.beta);
    let nn = n as f64;
    let mut failure = None;
    let r = integrate_against_h_r(params, kind.tau12(params.beta), 0.0, 1, &cfg(), |y, out| {
        match f_a(lambda * y, tau34, 0.0, params) {
            Ok(f) => out[0] = (nu * nu / (8.0 * nn) * (1.0 - f * f) - nu / 2.0 * (1.0 - f)).exp(),
            Err(e) => {
                failure.get_or_insert(e);
                out[0] = C64::new(0.0, 0.0);
            }
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(r.values[0]),
    }
}

/// [`gen_func`] at real time `t`, packaged with its inputs.
pub fn gen_func_sample(
    nu: C64,
    t: f64,
    kind: ContourKind,
    params: &LargeQParams,
    n: u32,
) -> Result<GeneratingFunctionSample> {
    let lambda0 = params.lambda0(t)?;
    Ok(GeneratingFunctionSample {
        nu,
        t: Some(t),
        lambda0,
        kind,
        value: gen_func(nu, lambda0, kind, params, n)?,
        n,
    })
}

/// Size of the neglected `ν³` term, `|ν|³ / (6N²)`.
pub fn nu_cubed_scale(nu: C64, n: u32) -> f64 {
    nu.norm().powi(3) / (6.0 * (n as f64).powi(2))
}

/// Raw moments `∫ s^k 𝒫(s) ds` (or with `𝒬`) for `k = 0..=k_max`.
///
/// For each `y` the size is Gaussian with mean `m = (1-f)/2` and variance
/// `σ² = (1-f²)/(4N)` (zero in large-N mode), so its moments are polynomials
/// in `m, σ²` that are then integrated against `h^R`.
pub fn size_moments(
    lambda0: f64,
    kind: ContourKind,
    params: &LargeQParams,
    mode: Mode,
    k_max: usize,
) -> Result<Vec<C64>> {
    if k_max > 4 {
        return Err(Error::domain(format!("moments are available up to k = 4, got {k_max}")));
    }
    let inv_n = match mode {
        Mode::LargeN => 0.0,
        Mode::FiniteN { n } if n >= 2 => 1.0 / n as f64,
        Mode::FiniteN { n } => return Err(Error::domain(format!("N must be at least 2, got {n}"))),
    };
    let lambda = kind.propagator_phase(params) * lambda0;
    let tau34 = kind.tau34(params.beta);
    let mut failure = None;
    let r = integrate_against_h_r(params, kind.tau12(params.beta), 0.0, k_max + 1, &cfg(), |y, out| {
        let f = match f_a(lambda * y, tau34, 0.0, params) {
            Ok(f) => f,
            Err(e) => {
                failure.get_or_insert(e);
                out.fill(C64::new(0.0, 0.0));
                return;
            }
        };
        let m = (1.0 - f) / 2.0;
        let v = (1.0 - f * f) * (inv_n / 4.0);
        let all = [
            C64::new(1.0, 0.0),
            m,
            m * m + v,
            m * m * m + 3.0 * m * v,
            m * m * m * m + 6.0 * m * m * v + 3.0 * v * v,
        ];
        out.copy_from_slice(&all[..out.len()]);
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(r.values),
    }
}

/// Moments from `(-d/dν)^k S(ν)` at `ν = 0` by central differences,
/// Richardson-extrapolated once.
///
/// `step` is the coarse step; `1e-4` suits `k ≤ 2`, higher orders need a
/// larger step to stay above roundoff.
pub fn moments_from_gen_func(
    lambda0: f64,
    kind: ContourKind,
    params: &LargeQParams,
    n: u32,
    k_max: usize,
    step: f64,
) -> Result<Vec<C64>> {
    if k_max > 4 {
        return Err(Error::domain(format!("moments are available up to k = 4, got {k_max}")));
    }
    let s = |x: f64| gen_func(C64::new(x, 0.0), lambda0, kind, params, n);
    let deriv = |k: usize, h: f64| -> Result<C64> {
        // central-difference stencils for derivatives 0..=4
        let (pts, w, pow): (&[f64], &[f64], i32) = match k {
            0 => (&[0.0], &[1.0], 0),
            1 => (&[-1.0, 1.0], &[-0.5, 0.5], 1),
            2 => (&[-1.0, 0.0, 1.0], &[1.0, -2.0, 1.0], 2),
            3 => (&[-2.0, -1.0, 1.0, 2.0], &[-0.5, 1.0, -1.0, 0.5], 3),
            _ => (&[-2.0, -1.0, 0.0, 1.0, 2.0], &[1.0, -4.0, 6.0, -4.0, 1.0], 4),
        };
        let mut acc = C64::new(0.0, 0.0);
        for (x, wi) in pts.iter().zip(w) {
            acc += s(x * h)? * *wi;
        }
        Ok(acc / h.powi(pow))
    };
    let mut out = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let coarse = deriv(k, step)?;
        let fine = deriv(k, step / 2.0)?;
        let d = if k == 0 { coarse } else { (4.0 * fine - coarse) / 3.0 };
        out.push(if k % 2 == 1 { -d } else { d });
    }
    Ok(out)
}
