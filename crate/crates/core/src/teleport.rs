//! Two-sided teleportation correlator
//! `F = ⟨TFD| e^{-igV} χ^R(t) e^{igV} χ^L(-t) |TFD⟩`.
//!
//! The doubled Hilbert space is a tensor product, so a state is a `d × d`
//! matrix `Ψ` with `(A_L ⊗ B_R) Ψ = A Ψ Bᵀ` and `|EPR⟩ = 1/√d`. The left
//! system carries `H_L = H*` and `χ^L = χ*`. The coupling is built from
//! `S_j = (Γᵀχ_jᵀ)_L (Γχ_j)_R`, which act on the state of an operator `O`,
//! `(1 ⊗ O)|EPR⟩`, as `O ↦ Γχ_j O χ_jΓ`: `+1` if `χ_j` is absent from a
//! Majorana string and `-1` if present. Hence `V = -Σ_j S_j` equals
//! `2n - N` on size-`n` strings.

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::ed::{build_majorana_ops, parity_operator, SizeDistribution, Spectrum};
use crate::error::{Error, Result};

/// Largest `N` for the exact doubled-space evaluation (dimension `2^N ≤ 4096`).
pub const MAX_EXACT_MAJORANAS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactDoubled,
    FromQ,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeleportResult {
    pub t: f64,
    pub g: f64,
    pub f: C64,
    pub v_expectation: f64,
    pub n: usize,
    pub method: Method,
}

/// `|F|(g)` over a grid and the location of its maximum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GScan {
    pub results: Vec<TeleportResult>,
    pub argmax: usize,
    pub g_peak: f64,
    pub peak_abs_f: f64,
}

/// `F = Σ_n e^{-ig⟨V⟩} e^{ig(2n-N)} Q(n)`.
pub fn teleport_from_q(dist: &SizeDistribution, g: f64, v_expectation: f64) -> TeleportResult {
    let n_tot = dist.n_majorana() as f64;
    let f = dist
        .q
        .iter()
        .enumerate()
        .map(|(n, q)| C64::from_polar(1.0, g * (2.0 * n as f64 - n_tot) - g * v_expectation) * q)
        .sum();
    TeleportResult {
        t: dist.t,
        g,
        f,
        v_expectation,
        n: dist.n_majorana(),
        method: Method::FromQ,
    }
}

/// [`teleport_from_q`] on each coupling in `g_grid`.
pub fn scan_g(dist: &SizeDistribution, g_grid: &[f64], v_expectation: f64) -> Result<GScan> {
    if g_grid.is_empty() || g_grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::domain("coupling grid must be non-empty and finite"));
    }
    let results: Vec<TeleportResult> = g_grid.iter().map(|&g| teleport_from_q(dist, g, v_expectation)).collect();
    let (argmax, peak) = results
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.f.norm()))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    Ok(GScan {
        g_peak: g_grid[argmax],
        peak_abs_f: peak,
        argmax,
        results,
    })
}

/// Precomputed doubled-space data for one Hamiltonian and temperature.
pub struct TeleportSystem {
    n: usize,
    spectrum: Spectrum,
    tfd: Mat<C64>,
    chis: Vec<Mat<C64>>,
    left: Vec<Mat<C64>>,
    right_t: Vec<Mat<C64>>,
    v_expectation: f64,
}

fn apply(a: &Mat<C64>, psi: &Mat<C64>, b_t: &Mat<C64>) -> Mat<C64> {
    a * psi * b_t
}

fn inner(a: &Mat<C64>, b: &Mat<C64>) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].conj() * b[(i, j)];
        }
    }
    acc
}

fn transpose(m: &Mat<C64>) -> Mat<C64> {
    m.transpose().to_owned()
}

fn conj(m: &Mat<C64>) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].conj())
}

impl TeleportSystem {
    /// Right Hamiltonian `h`; the left one is `h*`.
    pub fn new(h: &Mat<C64>, n: usize, beta: f64) -> Result<Self> {
        Self::with_left_hamiltonian(h, &conj(h), n, beta)
    }

    /// Explicit left Hamiltonian, which must equal `h_right*`.
    pub fn with_left_hamiltonian(h_right: &Mat<C64>, h_left: &Mat<C64>, n: usize, beta: f64) -> Result<Self> {
        if n > MAX_EXACT_MAJORANAS {
            return Err(Error::Guard(format!(
                "exact doubled-space evaluation needs N ≤ {MAX_EXACT_MAJORANAS}, got {n}"
            )));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::domain(format!("β must be finite and non-negative, got {beta}")));
        }
        let d = 1usize << (n / 2);
        if h_right.nrows() != d || h_right.ncols() != d || h_left.nrows() != d || h_left.ncols() != d {
            return Err(Error::domain(format!("Hamiltonians must be {d}×{d} for N = {n}")));
        }
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                dev = dev.max((h_left[(i, j)] - h_right[(i, j)].conj()).norm());
            }
        }
        if dev > 1e-12 {
            return Err(Error::domain(format!(
                "left Hamiltonian must be the complex conjugate of the right one (deviation {dev:e})"
            )));
        }
        let spectrum = Spectrum::new(h_right)?;
        let w = spectrum.sqrt_boltzmann(beta);
        let diag = Mat::from_fn(d, d, |a, b| if a == b { C64::new(w[a], 0.0) } else { C64::new(0.0, 0.0) });
        let tfd = transpose(&spectrum.from_eigenbasis(&diag));
        let chis = build_majorana_ops(n)?;
        let gamma = parity_operator(n)?;
        let gamma_t = transpose(&gamma);
        let left: Vec<Mat<C64>> = chis.iter().map(|c| &gamma_t * transpose(c)).collect();
        // (Γχ_j)ᵀ, the matrix that multiplies Ψ from the right
        let right_t: Vec<Mat<C64>> = chis.iter().map(|c| transpose(&(&gamma * c))).collect();
        let mut sys = Self {
            n,
            spectrum,
            tfd,
            chis,
            left,
            right_t,
            v_expectation: 0.0,
        };
        let v_tfd = sys.apply_v(&sys.tfd);
        sys.v_expectation = inner(&sys.tfd, &v_tfd).re;
        Ok(sys)
    }

    pub fn v_expectation(&self) -> f64 {
        self.v_expectation
    }

    pub fn tfd(&self) -> &Mat<C64> {
        &self.tfd
    }

    fn apply_s(&self, j: usize, psi: &Mat<C64>) -> Mat<C64> {
        apply(&self.left[j], psi, &self.right_t[j])
    }

    /// `V Ψ = -Σ_j S_j Ψ`.
    pub fn apply_v(&self, psi: &Mat<C64>) -> Mat<C64> {
        let d = psi.nrows();
        let mut out = Mat::<C64>::zeros(d, d);
        for j in 0..self.n {
            out -= self.apply_s(j, psi);
        }
        out
    }

    /// `e^{igV} Ψ = Π_j (cos g - i sin g S_j) Ψ`; the `S_j` commute and square to one.
    pub fn apply_exp_v(&self, g: f64, psi: &Mat<C64>) -> Mat<C64> {
        let (c, s) = (C64::new(g.cos(), 0.0), C64::new(0.0, -g.sin()));
        let mut cur = psi.clone();
        for j in 0..self.n {
            let sj = self.apply_s(j, &cur);
            cur = Mat::from_fn(cur.nrows(), cur.ncols(), |a, b| c * cur[(a, b)] + s * sj[(a, b)]);
        }
        cur
    }

    /// `χ_k(t) = e^{iHt} χ_k e^{-iHt}`.
    fn heisenberg(&self, k: usize, t: f64) -> Mat<C64> {
        let chi = self.spectrum.to_eigenbasis(&self.chis[k]);
        let e = &self.spectrum.energies;
        let d = e.len();
        let rot = Mat::from_fn(d, d, |a, b| C64::from_polar(1.0, (e[a] - e[b]) * t) * chi[(a, b)]);
        self.spectrum.from_eigenbasis(&rot)
    }

    /// `⟨TFD| e^{-igV} χ_k^R(t) e^{igV} χ_k^L(-t) |TFD⟩`.
    pub fn correlator(&self, t: f64, g: f64, k: usize) -> Result<TeleportResult> {
        if k >= self.n {
            return Err(Error::domain(format!("probe flavor {k} out of range for N = {}", self.n)));
        }
        let chi_t = self.heisenberg(k, t);
        let d = chi_t.nrows();
        let ident = Mat::from_fn(d, d, |a, b| if a == b { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        // χ^L(-t) = e^{-iH_L t} χ* e^{iH_L t} = (χ(t))*
        let psi = apply(&conj(&chi_t), &self.tfd, &ident);
        let psi = self.apply_exp_v(g, &psi);
        let psi = apply(&ident, &psi, &transpose(&chi_t));
        let psi = self.apply_exp_v(-g, &psi);
        Ok(TeleportResult {
            t,
            g,
            f: inner(&self.tfd, &psi),
            v_expectation: self.v_expectation,
            n: self.n,
            method: Method::ExactDoubled,
        })
    }
}

/// `⟨TFD| Σ_j V_j |TFD⟩` for right Hamiltonian `h`.
pub fn coupling_expectation(h: &Mat<C64>, beta: f64, n: usize) -> Result<f64> {
    Ok(TeleportSystem::new(h, n, beta)?.v_expectation())
}

/// Exact two-sided correlator for one Hamiltonian.
pub fn teleport_exact(h: &Mat<C64>, n: usize, beta: f64, t: f64, g: f64, k: usize) -> Result<TeleportResult> {
    TeleportSystem::new(h, n, beta)?.correlator(t, g, k)
}
