//! Pauli strings as bitmasks and the Jordan–Wigner map to Majorana strings.
//!
//! A string is `i^phase X^x Z^z` on `N/2` qubits, with qubit `j` on bit `j`.
//! Acting on a computational basis state, `X^x Z^z |c⟩ = (-1)^{|z∧c|} |c ⊕ x⟩`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest Majorana count accepted by dense constructions (`2^{N/2} ≤ 2^13`).
pub const MAX_MAJORANAS: usize = 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub x: u32,
    pub z: u32,
    /// Power of `i`, modulo 4.
    pub phase: u8,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0, phase: 0 };

    /// `(i^a X^{x1} Z^{z1})(i^b X^{x2} Z^{z2}) = i^{a+b} (-1)^{|z1∧x2|} X^{x1⊕x2} Z^{z1⊕z2}`.
    pub fn mul(self, rhs: PauliString) -> PauliString {
        let sign = if (self.z & rhs.x).count_ones() % 2 == 1 { 2 } else { 0 };
        PauliString {
            x: self.x ^ rhs.x,
            z: self.z ^ rhs.z,
            phase: (self.phase + rhs.phase + sign) % 4,
        }
    }

    /// Entry at `(c ⊕ x, c)`; every column has exactly one non-zero.
    #[inline]
    pub fn column_entry(&self, c: usize) -> C64 {
        let flip = (self.z as usize & c).count_ones() % 2 == 1;
        let v = i_pow(self.phase);
        if flip {
            -v
        } else {
            v
        }
    }
}

/// `i^k`.
#[inline]
pub fn i_pow(k: u8) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

pub(crate) fn check_majorana_count(n: usize) -> Result<()> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::domain(format!("the number of Majoranas must be even and positive, got {n}")));
    }
    if n > MAX_MAJORANAS {
        return Err(Error::Guard(format!(
            "N = {n} exceeds the dense limit N ≤ {MAX_MAJORANAS} (dimension 2^{})",
            n / 2
        )));
    }
    Ok(())
}

/// Jordan–Wigner Majoranas, zero-based: `χ_{2k} = Z_{<k} X_k`,
/// `χ_{2k+1} = Z_{<k} Y_k`.
pub fn majorana_strings(n: usize) -> Result<Vec<PauliString>> {
    check_majorana_count(n)?;
    let mut out = Vec::with_capacity(n);
    for k in 0..n / 2 {
        let lower = (1u32 << k) - 1;
        out.push(PauliString { x: 1 << k, z: lower, phase: 0 });
        // Y = i X Z
        out.push(PauliString { x: 1 << k, z: lower | (1 << k), phase: 1 });
    }
    Ok(out)
}

/// Ordered product `χ_{j1} χ_{j2} ⋯` of Majorana strings.
pub fn product(chis: &[PauliString], indices: &[usize]) -> PauliString {
    indices.iter().fold(PauliString::IDENTITY, |acc, &j| acc.mul(chis[j]))
}

/// For each Pauli string `X^x Z^z`, the Majorana string it is proportional to:
/// `χ_J = i^{phase} X^x Z^z` with `|J| = size`.
pub struct MajoranaTable {
    qubits: usize,
    size: Vec<u8>,
    phase: Vec<u8>,
}

impl MajoranaTable {
    pub fn new(n: usize) -> Result<Self> {
        let chis = majorana_strings(n)?;
        let qubits = n / 2;
        let total = 1usize << n;
        let mut size = vec![0u8; total];
        let mut phase = vec![0u8; total];
        let mut by_subset = vec![PauliString::IDENTITY; total];
        for j in 1..total {
            let hi = usize::BITS - 1 - j.leading_zeros();
            let p = by_subset[j ^ (1 << hi)].mul(chis[hi as usize]);
            by_subset[j] = p;
            let key = p.x as usize | ((p.z as usize) << qubits);
            size[key] = j.count_ones() as u8;
            phase[key] = p.phase;
        }
        Ok(Self { qubits, size, phase })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    /// `(size, phase)` of the Majorana string proportional to `X^x Z^z`.
    #[inline]
    pub fn lookup(&self, x: usize, z: usize) -> (usize, u8) {
        let key = x | (z << self.qubits);
        (self.size[key] as usize, self.phase[key])
    }
}

/// In-place unnormalized Walsh–Hadamard transform,
/// `a[z] ← Σ_c (-1)^{|z∧c|} a[c]`.
pub fn walsh_hadamard(a: &mut [C64]) {
    let n = a.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (u, v) = (a[i], a[i + h]);
                a[i] = u + v;
                a[i + h] = u - v;
            }
        }
        h *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(p: &PauliString, d: usize) -> Vec<C64> {
        let mut m = vec![C64::new(0.0, 0.0); d * d];
        for c in 0..d {
            m[(c ^ p.x as usize) * d + c] = p.column_entry(c);
        }
        m
    }

    fn matmul(a: &[C64], b: &[C64], d: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                for j in 0..d {
                    out[i * d + j] += a[i * d + k] * b[k * d + j];
                }
            }
        }
        out
    }

    #[test]
    fn product_rule_matches_dense_multiplication() {
        let d = 8;
        let strings: Vec<PauliString> = (0..64u32)
            .map(|k| PauliString { x: k & 7, z: (k >> 3) & 7, phase: (k % 4) as u8 })
            .collect();
        for a in &strings {
            for b in strings.iter().step_by(5) {
                let lhs = dense(&a.mul(*b), d);
                let rhs = matmul(&dense(a, d), &dense(b, d), d);
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn majoranas_anticommute() {
        for n in [2, 4, 6, 8] {
            let chis = majorana_strings(n).unwrap();
            for (i, a) in chis.iter().enumerate() {
                for (j, b) in chis.iter().enumerate() {
                    let ab = a.mul(*b);
                    let ba = b.mul(*a);
                    assert_eq!((ab.x, ab.z), (a.x ^ b.x, a.z ^ b.z));
                    if i == j {
                        assert_eq!(ab, PauliString::IDENTITY);
                    } else {
                        assert_eq!(ab.phase, (ba.phase + 2) % 4);
                    }
                }
            }
        }
    }

    #[test]
    fn table_is_a_bijection() {
        let n = 8;
        let t = MajoranaTable::new(n).unwrap();
        let mut counts = vec![0usize; n + 1];
        for x in 0..16 {
            for z in 0..16 {
                counts[t.lookup(x, z).0] += 1;
            }
        }
        let binom = [1, 8, 28, 56, 70, 56, 28, 8, 1];
        assert_eq!(counts, binom);
    }

    #[test]
    fn guards() {
        assert!(majorana_strings(3).is_err());
        assert!(majorana_strings(0).is_err());
        assert!(matches!(majorana_strings(28), Err(Error::Guard(_))));
    }

    #[test]
    fn walsh_hadamard_is_involutive_up_to_scale() {
        let mut a: Vec<C64> = (0..16).map(|k| C64::new(k as f64, -(k as f64) / 3.0)).collect();
        let orig = a.clone();
        walsh_hadamard(&mut a);
        walsh_hadamard(&mut a);
        for (x, y) in a.iter().zip(&orig) {
            assert!((x / 16.0 - y).norm() < 1e-12);
        }
    }
}
