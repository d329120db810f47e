//! Exact diagonalization of small SYK systems and operator-size decomposition.
//!
//! Majoranas are Jordan–Wigner strings on `N/2` qubits (see [`pauli`]). The
//! dressed operator `M = √d ρ^{1/2} χ_k(t)` is expanded over the Hermitian
//! basis `i^{⌊n/2⌋} χ_{j1} ⋯ χ_{jn}` with a Walsh–Hadamard Pauli transform, and
//! the coefficients are binned by string length `n`.

pub mod pauli;

use std::time::Instant;

use faer::{Mat, Par, Side};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use pauli::{i_pow, majorana_strings, walsh_hadamard, MajoranaTable, PauliString};

pub use pauli::MAX_MAJORANAS;

/// SYK model and disorder-seed parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SykParams {
    pub n_majorana: usize,
    pub q: usize,
    pub script_j: f64,
    pub beta: f64,
    pub base_seed: u64,
}

impl SykParams {
    pub fn validate(&self) -> Result<()> {
        pauli::check_majorana_count(self.n_majorana)?;
        if self.q < 2 || self.q % 2 != 0 || self.q > self.n_majorana {
            return Err(Error::domain(format!(
                "q must be even with 2 ≤ q ≤ N, got q = {} for N = {}",
                self.q, self.n_majorana
            )));
        }
        if !(self.script_j.is_finite() && self.script_j >= 0.0) {
            return Err(Error::domain(format!("𝒥 must be finite and non-negative, got {}", self.script_j)));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::domain(format!("β must be finite and non-negative, got {}", self.beta)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1 << (self.n_majorana / 2)
    }

    /// `(q-1)! 𝒥² / (2q N^{q-1})`.
    pub fn coupling_variance(&self) -> f64 {
        let fact: f64 = (1..self.q).map(|k| k as f64).product();
        fact * self.script_j * self.script_j
            / (2.0 * self.q as f64 * (self.n_majorana as f64).powi(self.q as i32 - 1))
    }
}

/// Couplings `J_{j1…jq}` over strictly increasing index tuples, in
/// lexicographic order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingTensor {
    pub n: usize,
    pub q: usize,
    pub entries: Vec<(Vec<usize>, f64)>,
}

/// One size distribution `n ↦ (P(n), Q(n))` at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeDistribution {
    pub n_values: Vec<usize>,
    pub p: Vec<f64>,
    pub q: Vec<C64>,
    pub t: f64,
    pub beta: f64,
    pub seed: u64,
    /// Probed flavor, or `None` when averaged over all flavors.
    pub k_probe: Option<usize>,
}

impl SizeDistribution {
    pub fn total_p(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn total_q(&self) -> C64 {
        self.q.iter().sum()
    }

    pub fn n_majorana(&self) -> usize {
        self.n_values.len() - 1
    }
}

/// Which fermion is dressed and decomposed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    /// Zero-based flavor index.
    Flavor(usize),
    /// Average `P` and `Q` over all `N` flavors.
    AllFlavors,
}

/// Disorder-averaged output of [`run_ensemble`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub schema_version: u32,
    pub params: SykParams,
    pub probe: Probe,
    pub t_list: Vec<f64>,
    pub realization_seeds: Vec<u64>,
    /// `realizations[r][i]` is realization `r` at `t_list[i]`.
    pub realizations: Vec<Vec<SizeDistribution>>,
    /// Per realization, `⟨V⟩ = Σ_n (2n - N) P_1(n)` for the thermofield double.
    pub v_expectations: Vec<f64>,
    pub mean_p: Vec<Vec<f64>>,
    pub mean_q: Vec<Vec<C64>>,
    pub stderr_p: Vec<Vec<f64>>,
    /// Standard error of `Re Q` and `Im Q`.
    pub stderr_q: Vec<Vec<(f64, f64)>>,
    /// `arg` of the disorder-averaged `Q`.
    pub arg_mean_q: Vec<Vec<f64>>,
    /// Disorder average of `arg Q`, the alternative convention.
    pub mean_arg_q: Vec<Vec<f64>>,
    pub mean_v_expectation: f64,
}

impl EnsembleResult {
    /// Mean distribution at `t_list[i]` as a [`SizeDistribution`].
    pub fn mean_distribution(&self, i: usize) -> SizeDistribution {
        SizeDistribution {
            n_values: (0..=self.params.n_majorana).collect(),
            p: self.mean_p[i].clone(),
            q: self.mean_q[i].clone(),
            t: self.t_list[i],
            beta: self.params.beta,
            seed: self.params.base_seed,
            k_probe: match self.probe {
                Probe::Flavor(k) => Some(k),
                Probe::AllFlavors => None,
            },
        }
    }
}

fn pauli_to_dense(p: &PauliString, coeff: C64, d: usize, out: &mut Mat<C64>) {
    for c in 0..d {
        out[(c ^ p.x as usize, c)] += coeff * p.column_entry(c);
    }
}

/// Dense Jordan–Wigner Majorana matrices `χ_0 … χ_{N-1}`, each of dimension
/// `2^{N/2}`.
pub fn build_majorana_ops(n: usize) -> Result<Vec<Mat<C64>>> {
    let strings = majorana_strings(n)?;
    let d = 1usize << (n / 2);
    Ok(strings
        .iter()
        .map(|p| {
            let mut m = Mat::zeros(d, d);
            pauli_to_dense(p, C64::new(1.0, 0.0), d, &mut m);
            m
        })
        .collect())
}

/// Fermion parity `Γ = i^{N/2} χ_0 χ_1 ⋯ χ_{N-1}`.
pub fn parity_operator(n: usize) -> Result<Mat<C64>> {
    let chis = majorana_strings(n)?;
    let idx: Vec<usize> = (0..n).collect();
    let mut p = pauli::product(&chis, &idx);
    p.phase = (p.phase + (n / 2 % 4) as u8) % 4;
    let d = 1usize << (n / 2);
    let mut m = Mat::zeros(d, d);
    pauli_to_dense(&p, C64::new(1.0, 0.0), d, &mut m);
    Ok(m)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `index`; distinct indices give distinct seeds.
pub fn realization_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(base_seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

fn combinations(n: usize, q: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..q).collect();
    loop {
        out.push(cur.clone());
        let mut i = q;
        while i > 0 && cur[i - 1] == n - q + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for j in i..q {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Gaussian couplings of variance `(q-1)!𝒥²/(2qN^{q-1})`, deterministic in
/// `(base_seed, realization_index)`.
pub fn sample_couplings(params: &SykParams, realization_index: u64) -> Result<CouplingTensor> {
    params.validate()?;
    let seed = realization_seed(params.base_seed, realization_index);
    Ok(sample_couplings_with_seed(params, seed))
}

fn sample_couplings_with_seed(params: &SykParams, seed: u64) -> CouplingTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, params.coupling_variance().sqrt()).expect("finite variance");
    let entries = combinations(params.n_majorana, params.q)
        .into_iter()
        .map(|idx| (idx, normal.sample(&mut rng)))
        .collect();
    CouplingTensor {
        n: params.n_majorana,
        q: params.q,
        entries,
    }
}

/// `H = Σ J_{j1…jq} χ_{j1} ⋯ χ_{jq}`; for `q ≡ 2 (mod 4)` the strings are
/// anti-Hermitian and each term carries an extra `i`.
pub fn build_hamiltonian(couplings: &CouplingTensor) -> Result<Mat<C64>> {
    let chis = majorana_strings(couplings.n)?;
    let d = 1usize << (couplings.n / 2);
    let herm = if couplings.q % 4 == 2 { C64::new(0.0, 1.0) } else { C64::new(1.0, 0.0) };
    let mut h = Mat::zeros(d, d);
    for (idx, j) in &couplings.entries {
        if idx.len() != couplings.q || idx.iter().any(|&k| k >= couplings.n) {
            return Err(Error::domain(format!("coupling index tuple {idx:?} does not fit N = {}, q = {}", couplings.n, couplings.q)));
        }
        let p = pauli::product(&chis, idx);
        pauli_to_dense(&p, herm * *j, d, &mut h);
    }
    Ok(h)
}

/// Spectral data of a Hamiltonian, reused across times and probes.
pub struct Spectrum {
    pub energies: Vec<f64>,
    pub vectors: Mat<C64>,
}

impl Spectrum {
    pub fn new(h: &Mat<C64>) -> Result<Self> {
        let eig = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let s = eig.S().column_vector();
        let energies = (0..h.nrows()).map(|i| s[i].re).collect();
        Ok(Self {
            energies,
            vectors: eig.U().to_owned(),
        })
    }

    /// `e^{-β(E_a - E_min)/2} / √Z'`, the eigenvalues of `ρ^{1/2}`.
    pub fn sqrt_boltzmann(&self, beta: f64) -> Vec<f64> {
        let e0 = self.energies.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = self.energies.iter().map(|e| (-0.5 * beta * (e - e0)).exp()).collect();
        let z: f64 = w.iter().map(|x| x * x).sum();
        w.iter().map(|x| x / z.sqrt()).collect()
    }

    /// `U† A U`.
    pub fn to_eigenbasis(&self, a: &Mat<C64>) -> Mat<C64> {
        self.vectors.adjoint() * a * &self.vectors
    }

    /// `U A U†`.
    pub fn from_eigenbasis(&self, a: &Mat<C64>) -> Mat<C64> {
        &self.vectors * a * self.vectors.adjoint()
    }
}

/// `M = √d ρ^{1/2} χ(t)` with `χ(t) = e^{iHt} χ e^{-iHt}` and `Tr ρ = 1`, so that
/// `Tr(M†M)/d = 1`. `chi_eig` is `U† χ U`.
pub fn dressed_operator(spec: &Spectrum, chi_eig: &Mat<C64>, beta: f64, t: f64) -> Mat<C64> {
    let d = spec.energies.len();
    let w = spec.sqrt_boltzmann(beta);
    let scale = (d as f64).sqrt();
    let e = &spec.energies;
    let inner = Mat::from_fn(d, d, |a, b| {
        C64::from_polar(scale * w[a], (e[a] - e[b]) * t) * chi_eig[(a, b)]
    });
    spec.from_eigenbasis(&inner)
}

/// `√d ρ^{1/2}`, whose size distribution gives the thermofield-double
/// expectation of the size operator.
pub fn dressed_identity(spec: &Spectrum, beta: f64) -> Mat<C64> {
    let d = spec.energies.len();
    let w = spec.sqrt_boltzmann(beta);
    let scale = (d as f64).sqrt();
    let inner = Mat::from_fn(d, d, |a, b| {
        if a == b {
            C64::new(scale * w[a], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    spec.from_eigenbasis(&inner)
}

/// `(P(n), Q(n))` for `n = 0..=N`: `P = Σ|c_J|²`, `Q = Σ c_J²` over strings of
/// length `n`, with `c_J = Tr(B_J M)/d` on the Hermitian basis
/// `B_J = i^{⌊n/2⌋} χ_J`.
pub fn size_decompose(m: &Mat<C64>, table: &MajoranaTable) -> Result<(Vec<f64>, Vec<C64>)> {
    let d = 1usize << table.qubits();
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::domain(format!(
            "operator is {}×{}, expected {d}×{d}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = 2 * table.qubits();
    let mut p = vec![0.0; n + 1];
    let mut q = vec![C64::new(0.0, 0.0); n + 1];
    let mut w = vec![C64::new(0.0, 0.0); d];
    let inv_d = 1.0 / d as f64;
    for x in 0..d {
        for (c, wc) in w.iter_mut().enumerate() {
            *wc = m[(c ^ x, c)];
        }
        walsh_hadamard(&mut w);
        for (z, a) in w.iter().enumerate() {
            let (size, phase) = table.lookup(x, z);
            let coeff = i_pow((size / 2) as u8 + phase).conj() * *a * inv_d;
            p[size] += coeff.norm_sqr();
            q[size] += coeff * coeff;
        }
    }
    Ok((p, q))
}

/// Per-realization work shared by every time and probe.
struct Realization {
    spectrum: Spectrum,
    chi_eig: Vec<Mat<C64>>,
}

fn realize(params: &SykParams, seed: u64, chis: &[Mat<C64>], probes: &[usize]) -> Result<Realization> {
    let couplings = sample_couplings_with_seed(params, seed);
    let h = build_hamiltonian(&couplings)?;
    let spectrum = Spectrum::new(&h)?;
    let chi_eig = probes.iter().map(|&k| spectrum.to_eigenbasis(&chis[k])).collect();
    Ok(Realization { spectrum, chi_eig })
}

fn probe_indices(probe: Probe, n: usize) -> Result<Vec<usize>> {
    match probe {
        Probe::Flavor(k) if k < n => Ok(vec![k]),
        Probe::Flavor(k) => Err(Error::domain(format!("probe flavor {k} out of range for N = {n}"))),
        Probe::AllFlavors => Ok((0..n).collect()),
    }
}

/// Size distributions of one disorder realization at each time in `t_list`,
/// together with `⟨V⟩`.
pub fn realization_distributions(
    params: &SykParams,
    seed: u64,
    t_list: &[f64],
    probe: Probe,
    table: &MajoranaTable,
    chis: &[Mat<C64>],
) -> Result<(Vec<SizeDistribution>, f64)> {
    let probes = probe_indices(probe, params.n_majorana)?;
    let r = realize(params, seed, chis, &probes)?;
    let n = params.n_majorana;
    let mut out = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let mut p = vec![0.0; n + 1];
        let mut q = vec![C64::new(0.0, 0.0); n + 1];
        for chi in &r.chi_eig {
            let m = dressed_operator(&r.spectrum, chi, params.beta, t);
            let (pk, qk) = size_decompose(&m, table)?;
            for i in 0..=n {
                p[i] += pk[i];
                q[i] += qk[i];
            }
        }
        let inv = 1.0 / probes.len() as f64;
        p.iter_mut().for_each(|x| *x *= inv);
        q.iter_mut().for_each(|x| *x *= inv);
        out.push(SizeDistribution {
            n_values: (0..=n).collect(),
            p,
            q,
            t,
            beta: params.beta,
            seed,
            k_probe: match probe {
                Probe::Flavor(k) => Some(k),
                Probe::AllFlavors => None,
            },
        });
    }
    let (p1, _) = size_decompose(&dressed_identity(&r.spectrum, params.beta), table)?;
    let v = p1
        .iter()
        .enumerate()
        .map(|(k, pk)| (2.0 * k as f64 - n as f64) * pk)
        .sum();
    Ok((out, v))
}

/// Disorder ensemble over `realizations` seeds derived from `base_seed`.
///
/// Realizations run on a pool of `threads` workers (all cores when `None`);
/// results are assembled and reduced in realization order, so the output does
/// not depend on the worker count. Dense kernels run sequentially inside each
/// worker.
pub fn run_ensemble(
    params: &SykParams,
    t_list: &[f64],
    realizations: usize,
    probe: Probe,
    threads: Option<usize>,
) -> Result<EnsembleResult> {
    params.validate()?;
    if realizations == 0 {
        return Err(Error::domain("at least one realization is required"));
    }
    if t_list.iter().any(|t| !t.is_finite()) {
        return Err(Error::domain("times must be finite"));
    }
    faer::set_global_parallelism(Par::Seq);
    let table = MajoranaTable::new(params.n_majorana)?;
    let chis = build_majorana_ops(params.n_majorana)?;
    let seeds: Vec<u64> = (0..realizations as u64)
        .map(|i| realization_seed(params.base_seed, i))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::domain(format!("cannot build worker pool: {e}")))?;
    let start = Instant::now();
    let results: Vec<Result<(Vec<SizeDistribution>, f64)>> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| realization_distributions(params, seed, t_list, probe, &table, &chis))
            .collect()
    });
    let mut members = Vec::with_capacity(realizations);
    let mut v_expectations = Vec::with_capacity(realizations);
    for r in results {
        let (d, v) = r?;
        members.push(d);
        v_expectations.push(v);
    }
    log_timing(start);
    Ok(assemble(*params, probe, t_list.to_vec(), seeds, members, v_expectations))
}

fn log_timing(start: Instant) {
    if std::env::var_os("SIZE_WINDING_TIMING").is_some() {
        eprintln!("ensemble wall time: {:.3} s", start.elapsed().as_secs_f64());
    }
}

fn assemble(
    params: SykParams,
    probe: Probe,
    t_list: Vec<f64>,
    seeds: Vec<u64>,
    members: Vec<Vec<SizeDistribution>>,
    v_expectations: Vec<f64>,
) -> EnsembleResult {
    let n = params.n_majorana;
    let r = members.len() as f64;
    let mut mean_p = Vec::new();
    let mut mean_q = Vec::new();
    let mut stderr_p = Vec::new();
    let mut stderr_q = Vec::new();
    let mut arg_mean_q = Vec::new();
    let mut mean_arg_q = Vec::new();
    for i in 0..t_list.len() {
        let mut mp = vec![0.0; n + 1];
        let mut mq = vec![C64::new(0.0, 0.0); n + 1];
        let mut ma = vec![0.0; n + 1];
        for m in &members {
            for k in 0..=n {
                mp[k] += m[i].p[k];
                mq[k] += m[i].q[k];
                ma[k] += m[i].q[k].arg();
            }
        }
        mp.iter_mut().for_each(|x| *x /= r);
        mq.iter_mut().for_each(|x| *x /= r);
        ma.iter_mut().for_each(|x| *x /= r);
        let mut sp = vec![0.0; n + 1];
        let mut sq = vec![(0.0, 0.0); n + 1];
        if members.len() > 1 {
            for m in &members {
                for k in 0..=n {
                    sp[k] += (m[i].p[k] - mp[k]).powi(2);
                    let dq = m[i].q[k] - mq[k];
                    sq[k].0 += dq.re * dq.re;
                    sq[k].1 += dq.im * dq.im;
                }
            }
            let norm = r * (r - 1.0);
            sp.iter_mut().for_each(|x| *x = (*x / norm).sqrt());
            sq.iter_mut().for_each(|x| *x = ((x.0 / norm).sqrt(), (x.1 / norm).sqrt()));
        }
        arg_mean_q.push(mq.iter().map(|z| z.arg()).collect());
        mean_p.push(mp);
        mean_q.push(mq);
        stderr_p.push(sp);
        stderr_q.push(sq);
        mean_arg_q.push(ma);
    }
    let mean_v_expectation = v_expectations.iter().sum::<f64>() / r;
    EnsembleResult {
        schema_version: crate::io::SCHEMA_VERSION,
        params,
        probe,
        t_list,
        realization_seeds: seeds,
        realizations: members,
        v_expectations,
        mean_p,
        mean_q,
        stderr_p,
        stderr_q,
        arg_mean_q,
        mean_arg_q,
        mean_v_expectation,
    }
}

/// Least-squares slope of the unwrapped `arg Q(n)` over odd `n` in
/// `[n_lo, n_hi]`, in radians per unit `n`.
pub fn winding_slope_in_n(dist: &SizeDistribution, n_lo: usize, n_hi: usize) -> Result<f64> {
    let pts: Vec<usize> = (n_lo..=n_hi.min(dist.n_majorana()))
        .filter(|&n| n % 2 == 1 && dist.p[n] > 1e-12)
        .collect();
    if pts.len() < 2 {
        return Err(Error::domain(format!("fewer than two populated odd sizes in [{n_lo}, {n_hi}]")));
    }
    let x: Vec<f64> = pts.iter().map(|&n| n as f64).collect();
    let raw: Vec<f64> = pts.iter().map(|&n| dist.q[n].arg()).collect();
    let y = crate::dist::unwrap_phases(&raw);
    Ok(crate::dist::linear_fit(&x, &y).1)
}
