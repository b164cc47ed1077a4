//! Brute-force references: dense statevectors, SRE by Pauli enumeration,
//! exact diagonalization of short Ising chains, and Clifford circuit states.

mod clifford;
mod ed;

pub use clifford::{apply_circuit_mps, apply_circuit_statevector, clifford_fixtures, random_clifford_circuit, CliffordGate};
pub use ed::{ed_ground_state, ising_apply, ising_matrix, ED_DENSE_LIMIT, ED_LIMIT};

use std::io::Write;

use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::tensor::{DenseTensor, C64, I, ONE, ZERO};

/// Largest chain for which the SRE is enumerated.
pub const SRE_LIMIT: usize = 12;
/// Largest chain for Pauli table dumps.
pub const DUMP_LIMIT: usize = 6;
const NORM_TOL: f64 = 1e-10;

/// Amplitudes of an `N`-qubit state; site 0 is the most significant bit.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n: usize,
    amps: Vec<C64>,
}

impl Statevector {
    /// Panics if `amps.len() != 2^n`.
    pub fn new(n: usize, amps: Vec<C64>) -> Self {
        assert_eq!(amps.len(), 1usize << n, "statevector length");
        Self { n, amps }
    }

    pub fn try_new(n: usize, amps: Vec<C64>) -> Result<Self> {
        if n >= 40 || amps.len() != 1usize << n {
            return Err(Error::dim(format!("{} amplitudes for {n} qubits", amps.len())));
        }
        if amps.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("statevector"));
        }
        Ok(Self { n, amps })
    }

    /// `|0…0⟩`.
    pub fn zero_state(n: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        Self { n, amps }
    }

    /// `⊗_k |v_k⟩`.
    pub fn product(locals: &[[C64; 2]]) -> Self {
        let mut amps = vec![ONE];
        for v in locals {
            amps = amps.iter().flat_map(|a| [a * v[0], a * v[1]]).collect();
        }
        Self { n: locals.len(), amps }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_squared(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Self {
        let f = self.norm_squared().sqrt().recip();
        Self {
            n: self.n,
            amps: self.amps.iter().map(|z| z * f).collect(),
        }
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|self⟩ ⊗ |other⟩`.
    pub fn kron(&self, other: &Self) -> Self {
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        Self {
            n: self.n + other.n,
            amps,
        }
    }

    /// Apply a 2×2 matrix to site `k`.
    pub fn apply_one_site(&self, u: &DenseTensor, k: usize) -> Result<Self> {
        if u.shape() != [2, 2] || k >= self.n {
            return Err(Error::dim("one-site gate shape or site"));
        }
        let bit = 1usize << (self.n - 1 - k);
        let g = u.data();
        let mut out = self.amps.clone();
        for b in 0..self.amps.len() {
            if b & bit == 0 {
                let (a0, a1) = (self.amps[b], self.amps[b | bit]);
                out[b] = g[0] * a0 + g[1] * a1;
                out[b | bit] = g[2] * a0 + g[3] * a1;
            }
        }
        Ok(Self { n: self.n, amps: out })
    }

    /// Apply a 4×4 matrix to sites `(k, k+1)`.
    pub fn apply_two_site(&self, g: &DenseTensor, k: usize) -> Result<Self> {
        if g.shape() != [4, 4] || k + 1 >= self.n {
            return Err(Error::dim("two-site gate shape or bond"));
        }
        let hi = 1usize << (self.n - 1 - k);
        let lo = hi >> 1;
        let g = g.data();
        let mut out = self.amps.clone();
        for b in 0..self.amps.len() {
            if b & (hi | lo) == 0 {
                let idx = [b, b | lo, b | hi, b | hi | lo];
                let v = idx.map(|i| self.amps[i]);
                for (r, &i) in idx.iter().enumerate() {
                    out[i] = (0..4).map(|c| g[r * 4 + c] * v[c]).sum();
                }
            }
        }
        Ok(Self { n: self.n, amps: out })
    }

    /// Reorder qubits: new site `k` is old site `perm[k]`.
    pub fn permute_sites(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.n];
        if perm.len() != self.n || perm.iter().any(|&p| p >= self.n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::dim("site permutation"));
        }
        let n = self.n;
        let amps = (0..self.amps.len())
            .map(|b| {
                let old = (0..n).fold(0usize, |acc, k| {
                    let bit = (b >> (n - 1 - k)) & 1;
                    acc | (bit << (n - 1 - perm[k]))
                });
                self.amps[old]
            })
            .collect();
        Ok(Self { n, amps })
    }

    /// `⟨ψ|P|ψ⟩` by bit-mask action: `X` flips, `Z` signs, `Y = iXZ`.
    pub fn expectation_pauli(&self, p: &PauliString) -> Result<f64> {
        if p.len() != self.n {
            return Err(Error::dim(format!("Pauli string of length {} on {} qubits", p.len(), self.n)));
        }
        let (x, z, ny) = p.masks();
        Ok(mask_expectation(&self.amps, x as usize, z as usize, ny))
    }

    fn check_normalized(&self) -> Result<()> {
        let nrm = self.norm_squared();
        if (nrm - 1.0).abs() > NORM_TOL {
            return Err(Error::Precondition(format!("state norm² = {nrm}, expected 1")));
        }
        Ok(())
    }
}

fn i_pow(k: u32) -> C64 {
    [ONE, I, -ONE, -I][(k % 4) as usize]
}

fn mask_expectation(amps: &[C64], x: usize, z: usize, ny: u32) -> f64 {
    let mut acc = ZERO;
    for (b, a) in amps.iter().enumerate() {
        let s = if (b & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        acc += amps[b ^ x].conj() * a * s;
    }
    (acc * i_pow(ny)).re
}

fn check_order(n: u32) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("Rényi index n = {n}; an integer n > 1 is required")));
    }
    Ok(())
}

fn guard(sv: &Statevector) -> Result<()> {
    if sv.n > SRE_LIMIT {
        return Err(Error::SizeGuard {
            what: "oracle sites",
            value: sv.n,
            limit: SRE_LIMIT,
        });
    }
    sv.check_normalized()
}

fn sre_from_moment(sum: f64, nq: usize, n: u32) -> f64 {
    (sum / (1u64 << nq) as f64).ln() / (1.0 - n as f64)
}

/// `M_n = (1 − n)^{-1} ln Σ_P ⟨P⟩^{2n} / 2^N`, evaluated string by string.
pub fn statevector_sre_direct(sv: &Statevector, n: u32) -> Result<f64> {
    check_order(n)?;
    guard(sv)?;
    let nq = sv.n;
    let total = 1usize << (2 * nq);
    let sum = crate::par::block_sum(total, 4096, |idx| {
        let p = PauliString::from_index(idx as u64, nq);
        let (x, z, ny) = p.masks();
        mask_expectation(&sv.amps, x as usize, z as usize, ny).powi(2 * n as i32)
    });
    Ok(sre_from_moment(sum, nq, n))
}

/// In-place Walsh–Hadamard transform.
fn walsh_hadamard(f: &mut [C64]) {
    let mut h = 1;
    while h < f.len() {
        for i in (0..f.len()).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (f[j], f[j + h]);
                f[j] = a + b;
                f[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// All `⟨P_{x,z}⟩` for one flip mask `x`, indexed by `z`.
fn expectations_for_flip(amps: &[C64], x: usize) -> Vec<f64> {
    let mut f: Vec<C64> = (0..amps.len()).map(|b| amps[b ^ x].conj() * amps[b]).collect();
    walsh_hadamard(&mut f);
    f.iter()
        .enumerate()
        .map(|(z, v)| (v * i_pow((x & z).count_ones())).re)
        .collect()
}

/// Same quantity as [`statevector_sre_direct`]. For each flip mask the
/// `2^N` sign patterns are summed at once with a Walsh–Hadamard transform.
pub fn statevector_sre(sv: &Statevector, n: u32) -> Result<f64> {
    check_order(n)?;
    guard(sv)?;
    let dim = sv.amps.len();
    let per_flip = crate::par::map_range(dim, |x| {
        expectations_for_flip(&sv.amps, x)
            .into_iter()
            .map(|e| e.powi(2 * n as i32))
            .sum::<f64>()
    });
    Ok(sre_from_moment(per_flip.into_iter().sum(), sv.n, n))
}

/// `index,pauli,expectation` for every Pauli string, `N ≤ 6`.
pub fn write_pauli_table(sv: &Statevector, w: &mut impl Write) -> Result<()> {
    if sv.n > DUMP_LIMIT {
        return Err(Error::SizeGuard {
            what: "Pauli table sites",
            value: sv.n,
            limit: DUMP_LIMIT,
        });
    }
    writeln!(w, "index,pauli,expectation")?;
    for idx in 0..1u64 << (2 * sv.n) {
        let p = PauliString::from_index(idx, sv.n);
        writeln!(w, "{idx},{p},{:.17e}", sv.expectation_pauli(&p)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
