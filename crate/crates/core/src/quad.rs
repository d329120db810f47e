//! Adaptive Gauss–Kronrod quadrature for complex, vector-valued integrands.
//!
//! The integrand writes `dim` complex values per abscissa into a caller
//! supplied buffer, so a whole grid of densities can be integrated in one
//! adaptive pass sharing the same subdivision.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

// 15-point Kronrod extension of the 7-point Gauss–Legendre rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and limits for [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
    /// Number of equal panels the interval is split into before adapting.
    pub initial_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_segments: 4000,
            initial_panels: 8,
        }
    }
}

impl QuadConfig {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

/// Result of an adaptive integration.
#[derive(Clone, Debug)]
pub struct Integral {
    pub values: Vec<C64>,
    /// Estimated absolute error (max-norm over components).
    pub error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    values: Vec<C64>,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn max_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn kronrod<F>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [C64]) -> Segment
where
    F: FnMut(f64, &mut [C64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = vec![C64::new(0.0, 0.0); dim];
    let mut gauss = vec![C64::new(0.0, 0.0); dim];

    f(center, buf);
    for k in 0..dim {
        kron[k] += buf[k] * WGK[7];
        gauss[k] += buf[k] * WG[3];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        f(center - dx, buf);
        for k in 0..dim {
            kron[k] += buf[k] * WGK[j];
            if j % 2 == 1 {
                gauss[k] += buf[k] * WG[j / 2];
            }
        }
        f(center + dx, buf);
        for k in 0..dim {
            kron[k] += buf[k] * WGK[j];
            if j % 2 == 1 {
                gauss[k] += buf[k] * WG[j / 2];
            }
        }
    }
    let mut error: f64 = 0.0;
    for k in 0..dim {
        kron[k] *= half;
        gauss[k] *= half;
        error = error.max((kron[k] - gauss[k]).norm());
    }
    // Guard against a Gauss/Kronrod coincidence hiding roundoff.
    let floor = 50.0 * f64::EPSILON * max_norm(&kron);
    Segment {
        a,
        b,
        values: kron,
        error: error.max(floor),
    }
}

/// Integrate a `dim`-component complex integrand over `[a, b]`.
///
/// Stops once the summed error estimate is below
/// `max(abs_tol, rel_tol * |I|)` where `|I|` is the max-norm of the current
/// estimate.
pub fn integrate<F>(mut f: F, a: f64, b: f64, dim: usize, cfg: &QuadConfig) -> Result<Integral>
where
    F: FnMut(f64, &mut [C64]),
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain(format!("integration bounds must be finite, got [{a}, {b}]")));
    }
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    let mut heap = BinaryHeap::new();
    let panels = cfg.initial_panels.max(1);
    let width = (b - a) / panels as f64;
    for p in 0..panels {
        let lo = a + width * p as f64;
        let hi = if p + 1 == panels { b } else { lo + width };
        heap.push(kronrod(&mut f, lo, hi, dim, &mut buf));
    }
    let mut evaluations = 15 * panels;

    loop {
        let mut total = vec![C64::new(0.0, 0.0); dim];
        let mut err = 0.0;
        for seg in heap.iter() {
            for (t, v) in total.iter_mut().zip(&seg.values) {
                *t += *v;
            }
            err += seg.error;
        }
        let target = cfg.abs_tol.max(cfg.rel_tol * max_norm(&total));
        if err <= target {
            return Ok(Integral {
                values: total,
                error: err,
                evaluations,
            });
        }
        if heap.len() >= cfg.max_segments {
            return Err(Error::Quadrature {
                achieved: err,
                requested: target,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval collapsed to adjacent floats.
            return Err(Error::Quadrature {
                achieved: err,
                requested: target,
            });
        }
        heap.push(kronrod(&mut f, worst.a, mid, dim, &mut buf));
        heap.push(kronrod(&mut f, mid, worst.b, dim, &mut buf));
        evaluations += 30;
    }
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F>(mut f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<(C64, f64)>
where
    F: FnMut(f64) -> C64,
{
    let r = integrate(|x, out: &mut [C64]| out[0] = f(x), a, b, 1, cfg)?;
    Ok((r.values[0], r.error))
}

/// `∫_0^{y_max} y^(alpha-1) g(y) dy` through the substitution `y = u^(1/alpha)`,
/// which turns the integrable power-law endpoint into a regular integrand:
/// `(1/alpha) ∫_0^{y_max^alpha} g(u^(1/alpha)) du`.
///
/// `g` is never evaluated at `y = 0` exactly.
pub fn integrate_power_weighted<F>(
    alpha: f64,
    y_max: f64,
    dim: usize,
    cfg: &QuadConfig,
    mut g: F,
) -> Result<Integral>
where
    F: FnMut(f64, &mut [C64]),
{
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("power-law exponent must be positive, got {alpha}")));
    }
    let u_max = y_max.powf(alpha);
    let inv = 1.0 / alpha;
    let mut r = integrate(
        |u, out: &mut [C64]| {
            let y = u.powf(inv);
            g(y, out);
        },
        0.0,
        u_max,
        dim,
        cfg,
    )?;
    for v in r.values.iter_mut() {
        *v *= inv;
    }
    r.error *= inv;
    Ok(r)
}
