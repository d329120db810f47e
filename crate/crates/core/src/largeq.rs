//! Large-q SYK scramblon ingredients: model parameters, the velocity
//! equation, the scramblon propagator and the closed-form vertex functions
//! `h^R` and `f^A`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::quad::{self, Integral, QuadConfig};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Solve `v = (βJ/π) cos(πv/2)` for `v ∈ (0, 1)`.
///
/// The residual `v - (βJ/π) cos(πv/2)` is strictly increasing on `[0, 1]`,
/// negative at 0 and equal to 1 at 1, so bisection always brackets the root.
/// The solve runs in the complementary variable `w = 1 - v`, where
/// `cos(πv/2) = sin(πw/2)` keeps full relative precision at strong coupling.
pub fn solve_velocity(beta_j: f64) -> Result<f64> {
    if !beta_j.is_finite() || beta_j <= 0.0 {
        return Err(Error::domain(format!("βJ must be finite and positive, got {beta_j}")));
    }
    let g = beta_j / PI;
    // residual as a function of w = 1 - v; decreasing in w
    let res = |w: f64| (1.0 - w) - g * (0.5 * PI * w).sin();
    let dres = |w: f64| -1.0 - g * 0.5 * PI * (0.5 * PI * w).cos();

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64); // res(lo) = 1 > 0, res(hi) = -g < 0
    while hi - lo > 1e-3 * hi.max(1e-300) && hi - lo > 1e-300 {
        let mid = 0.5 * (lo + hi);
        if res(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut w = 0.5 * (lo + hi);
    for _ in 0..100 {
        let step = res(w) / dres(w);
        let mut next = w - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if res(next) > 0.0 {
            lo = next;
        } else {
            hi = next;
        }
        let done = (next - w).abs() <= 4.0 * f64::EPSILON * next;
        w = next;
        if done {
            break;
        }
    }
    Ok(1.0 - w)
}

/// Residual of the velocity equation at `v`.
pub fn velocity_residual(v: f64, beta_j: f64) -> f64 {
    v - beta_j / PI * (0.5 * PI * v).cos()
}

/// Model and thermal parameters of the large-q SYK scramblon theory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LargeQParams {
    /// Δ = 1/q.
    pub delta: f64,
    /// Dimensionless velocity, `κ = 2πv/β`.
    pub v: f64,
    /// Inverse temperature.
    pub beta: f64,
    /// β𝒥 when the velocity was derived from the coupling.
    pub coupling_beta_j: Option<f64>,
    /// Scramblon prefactor `C` in `λ₀ = C⁻¹ e^{κt}`.
    pub prefactor_c: f64,
}

impl LargeQParams {
    pub fn new(delta: f64, v: f64, beta: f64, prefactor_c: f64) -> Result<Self> {
        let p = Self {
            delta,
            v,
            beta,
            coupling_beta_j: None,
            prefactor_c,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with `v` solved from β𝒥.
    pub fn from_coupling(delta: f64, beta_j: f64, beta: f64, prefactor_c: f64) -> Result<Self> {
        let v = solve_velocity(beta_j)?;
        let p = Self {
            delta,
            v,
            beta,
            coupling_beta_j: Some(beta_j),
            prefactor_c,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_prefactor(mut self, prefactor_c: f64) -> Result<Self> {
        self.prefactor_c = prefactor_c;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v > 0.0 && self.v < 1.0) {
            return Err(Error::domain(format!("velocity must lie in (0, 1), got {}", self.v)));
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(Error::domain(format!("Δ must lie in (0, 1/2], got {}", self.delta)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::domain(format!("β must be positive and finite, got {}", self.beta)));
        }
        if !(self.prefactor_c > 0.0 && self.prefactor_c.is_finite()) {
            return Err(Error::domain(format!(
                "prefactor C must be positive and finite, got {}",
                self.prefactor_c
            )));
        }
        if let Some(bj) = self.coupling_beta_j {
            // cos(πv/2) is only known to ~ulp(v), amplified by βJ/π.
            let tol = 1e-12 * (bj / PI).max(1.0);
            let r = velocity_residual(self.v, bj);
            if r.abs() > tol {
                return Err(Error::domain(format!(
                    "velocity {} does not solve the velocity equation for βJ = {bj} (residual {r:e})",
                    self.v
                )));
            }
        }
        Ok(())
    }

    pub fn q(&self) -> f64 {
        1.0 / self.delta
    }

    /// Lyapunov exponent `κ = 2πv/β`.
    pub fn kappa(&self) -> f64 {
        2.0 * PI * self.v / self.beta
    }

    /// `κβ/(2π)`, which is bounded by one.
    pub fn chaos_bound_ratio(&self) -> f64 {
        self.kappa() * self.beta / (2.0 * PI)
    }

    /// `t_sc = κ⁻¹ ln C`.
    pub fn scrambling_time(&self) -> f64 {
        self.prefactor_c.ln() / self.kappa()
    }

    /// `cos(πv/2)`.
    pub fn cos_half(&self) -> f64 {
        (0.5 * PI * self.v).cos()
    }

    /// `cos^{2Δ}(πv/2)`, the half-period two-point function.
    pub fn cos_pow(&self) -> f64 {
        self.cos_half().powf(2.0 * self.delta)
    }

    /// Phase `e^{iκβ/4} = e^{iπv/2}` acquired by the winding-contour propagator.
    pub fn winding_phase(&self) -> C64 {
        C64::from_polar(1.0, self.kappa() * self.beta / 4.0)
    }

    /// `λ₀ = C⁻¹ e^{κt}`.
    pub fn lambda0(&self, t: f64) -> Result<f64> {
        let exponent = self.kappa() * t - self.prefactor_c.ln();
        let l = exponent.exp();
        if !l.is_finite() {
            return Err(Error::Range(format!("λ₀ = exp({exponent}) overflows")));
        }
        Ok(l)
    }

    /// `a(T) = cos(πv(1/2 - iT/β))` with `T = t - iτ`.
    pub fn a_of(&self, tau: f64, t: f64) -> C64 {
        let big_t = C64::new(t, -tau);
        (PI * self.v * (0.5 - I * big_t / self.beta)).cos()
    }
}

/// The two imaginary-time configurations of the doubled Keldysh contour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContourKind {
    /// Generating function of the ordinary size distribution `P`.
    StandardSize,
    /// Generating function of the winding size distribution `Q`.
    WindingSize,
}

impl ContourKind {
    /// Imaginary time of `T₁₂`.
    pub fn tau12(self, beta: f64) -> f64 {
        match self {
            ContourKind::StandardSize => 0.0,
            ContourKind::WindingSize => 0.5 * beta,
        }
    }

    /// Imaginary time of `T₃₄`; the same for both contours.
    pub fn tau34(self, beta: f64) -> f64 {
        0.5 * beta
    }

    pub fn propagator_phase(self, params: &LargeQParams) -> C64 {
        match self {
            ContourKind::StandardSize => C64::new(1.0, 0.0),
            ContourKind::WindingSize => params.winding_phase(),
        }
    }
}

/// Scramblon propagator `λ = phase · λ₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScramblonPropagator {
    pub lambda0: f64,
    pub phase: C64,
    pub t: Option<f64>,
}

impl ScramblonPropagator {
    pub fn at_time(params: &LargeQParams, t: f64, kind: ContourKind) -> Result<Self> {
        Ok(Self {
            lambda0: params.lambda0(t)?,
            phase: kind.propagator_phase(params),
            t: Some(t),
        })
    }

    pub fn from_lambda0(params: &LargeQParams, lambda0: f64, kind: ContourKind) -> Result<Self> {
        if !(lambda0 >= 0.0 && lambda0.is_finite()) {
            return Err(Error::domain(format!("λ₀ must be finite and non-negative, got {lambda0}")));
        }
        Ok(Self {
            lambda0,
            phase: kind.propagator_phase(params),
            t: None,
        })
    }

    pub fn value(&self) -> C64 {
        self.phase * self.lambda0
    }
}

/// Retarded vertex distribution
/// `h^R(y, T) = y^{2Δ-1} cos^{2Δ}(πv/2) e^{-y a(T)} / Γ(2Δ)`, principal branch.
pub fn h_r(y: C64, tau12: f64, t12: f64, params: &LargeQParams) -> Result<C64> {
    let expo = 2.0 * params.delta - 1.0;
    if y == C64::new(0.0, 0.0) {
        if expo < 0.0 {
            return Err(Error::Singular(format!(
                "h^R has an integrable y^{expo} singularity at y = 0"
            )));
        }
        let val = if expo == 0.0 { params.cos_pow() / gamma(2.0 * params.delta) } else { 0.0 };
        return Ok(C64::new(val, 0.0));
    }
    let a = params.a_of(tau12, t12);
    Ok(y.powf(expo) * params.cos_pow() * (-y * a).exp() / gamma(2.0 * params.delta))
}

/// Advanced dressed two-point function
/// `f^A(z, T) = cos^{2Δ}(πv/2) (a(T) + z)^{-2Δ}`, principal branch.
pub fn f_a(z: C64, tau34: f64, t34: f64, params: &LargeQParams) -> Result<C64> {
    let base = f_a_base(z, tau34, t34, params)?;
    Ok(params.cos_pow() * base.powf(-2.0 * params.delta))
}

/// `∂_z f^A(z, T) = -2Δ cos^{2Δ}(πv/2) (a(T) + z)^{-2Δ-1}`.
pub fn f_a_derivative(z: C64, tau34: f64, t34: f64, params: &LargeQParams) -> Result<C64> {
    let base = f_a_base(z, tau34, t34, params)?;
    Ok(-2.0 * params.delta * params.cos_pow() * base.powf(-2.0 * params.delta - 1.0))
}

fn f_a_base(z: C64, tau34: f64, t34: f64, params: &LargeQParams) -> Result<C64> {
    let base = params.a_of(tau34, t34) + z;
    if base.im == 0.0 && base.re <= 0.0 {
        return Err(Error::BranchCut(format!(
            "f^A base a(T34) + z = {base} lies on the negative real axis (z = {z})"
        )));
    }
    Ok(base)
}

/// `Υ^{R,m}(T₁₂) = ∫_0^∞ y^m h^R(y, T₁₂) dy`
/// `= cos^{2Δ}(πv/2) Γ(2Δ+m)/Γ(2Δ) a(T₁₂)^{-(2Δ+m)}`.
pub fn vertex_moment(m: u32, tau12: f64, t12: f64, params: &LargeQParams) -> C64 {
    let two_d = 2.0 * params.delta;
    let ratio = (ln_gamma(two_d + m as f64) - ln_gamma(two_d)).exp();
    let a = params.a_of(tau12, t12);
    params.cos_pow() * ratio * a.powf(-(two_d + m as f64))
}

/// Integrate `∫_0^∞ h^R(y, T₁₂) g(y) dy` for a bounded `g`, writing `dim`
/// components.
///
/// The domain is cut where `e^{-Re a · y}` drops below `e^{-40}`, and the
/// `y^{2Δ-1}` endpoint is absorbed by the substitution `y = u^{1/(2Δ)}`.
pub fn integrate_against_h_r<G>(
    params: &LargeQParams,
    tau12: f64,
    t12: f64,
    dim: usize,
    cfg: &QuadConfig,
    g: G,
) -> Result<Integral>
where
    G: FnMut(f64, &mut [C64]),
{
    integrate_against_h_r_rotated(params, tau12, t12, C64::new(1.0, 0.0), dim, cfg, g)
}

/// `∫_0^∞ rot · h^R(rot·r, T₁₂) g(r) dr`, the same integral along the ray
/// `y = rot·r` with `|rot| = 1`. `g` receives the real ray parameter `r`.
pub fn integrate_against_h_r_rotated<G>(
    params: &LargeQParams,
    tau12: f64,
    t12: f64,
    rot: C64,
    dim: usize,
    cfg: &QuadConfig,
    mut g: G,
) -> Result<Integral>
where
    G: FnMut(f64, &mut [C64]),
{
    let rate = params.a_of(tau12, t12) * rot;
    if !(rate.re > 0.0) {
        return Err(Error::domain(format!("h^R does not decay along the ray: a(T12)·rot = {rate}")));
    }
    let y_max = 40.0 / rate.re;
    let two_d = 2.0 * params.delta;
    let pref = rot.powf(two_d) * params.cos_pow() / gamma(two_d);
    quad::integrate_power_weighted(two_d, y_max, dim, cfg, |r, out| {
        g(r, out);
        let w = pref * (-rate * r).exp();
        for o in out.iter_mut() {
            *o *= w;
        }
    })
}

/// Resummed OTOC `∫_0^∞ h^R(y, T₁₂) f^A(λy, T₃₄) dy`.
pub fn otoc(prop: &ScramblonPropagator, contour: ContourKind, params: &LargeQParams) -> Result<C64> {
    let lambda = prop.value();
    let tau12 = contour.tau12(params.beta);
    let tau34 = contour.tau34(params.beta);
    if prop.lambda0 == 0.0 {
        return Ok(vertex_moment(0, tau12, 0.0, params) * f_a(C64::new(0.0, 0.0), tau34, 0.0, params)?);
    }
    let mut failure = None;
    let r = integrate_against_h_r(params, tau12, 0.0, 1, &QuadConfig::default(), |y, out| {
        out[0] = match f_a(lambda * y, tau34, 0.0, params) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                C64::new(0.0, 0.0)
            }
        };
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r.values[0])
}
