//! Matrix product states of qubit chains.
//!
//! Site tensors have shape `(χ_left, 2, χ_right)`, so `A^s[a, b]` lives at
//! `(a * 2 + s) * χ_right + b`. Open chains absorb their boundary vectors
//! into the edge tensors and carry edge bonds of extent one; periodic chains
//! close the trace over the first bond.

mod fixtures;
pub mod gates;
mod io;

pub use fixtures::{
    ghz_state, ghz_state_with, product_bits, product_state, random_mps, random_real_mps, random_ti_tensor,
    t_state_vector, transfer_matrix,
};
pub use io::{read_mps, write_mps, write_pauli_csv, MPS_MAGIC};

use crate::error::{Error, Result};
use crate::oracle::Statevector;
use crate::pauli::{PauliString, PAULI};
use crate::tensor::{svd_truncate, zgemm, zgemm_strided, DenseTensor, C64, ONE, ZERO};

/// Physical dimension of every site.
pub const PHYS: usize = 2;

/// Largest chain converted to a dense statevector.
pub const STATEVECTOR_LIMIT: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// `S = |R⟩⟨L|`, absorbed into the edge tensors.
    Open,
    /// `S = 𝟙`.
    Periodic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mps {
    tensors: Vec<DenseTensor>,
    boundary: Boundary,
    translation_invariant: bool,
}

/// Orthogonality bookkeeping for a mixed-canonical MPS.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalForm {
    pub center: usize,
    pub left_orthogonal: Vec<bool>,
    pub right_orthogonal: Vec<bool>,
}

/// A scalar kept as `exp(log_abs) · phase` so long chains never under- or
/// overflow.
#[derive(Clone, Copy, Debug)]
pub struct LogScalar {
    pub log_abs: f64,
    pub phase: C64,
}

impl LogScalar {
    pub fn value(&self) -> C64 {
        self.phase * self.log_abs.exp()
    }
}

fn check_site(t: &DenseTensor, k: usize) -> Result<()> {
    if t.rank() != 3 || t.shape()[1] != PHYS {
        return Err(Error::dim(format!("site {k}: expected shape (χ, 2, χ'), got {:?}", t.shape())));
    }
    Ok(())
}

impl Mps {
    /// Open chain whose edge bonds already have extent one.
    pub fn open(tensors: Vec<DenseTensor>) -> Result<Self> {
        if tensors.is_empty() {
            return Err(Error::dim("empty chain"));
        }
        for (k, t) in tensors.iter().enumerate() {
            check_site(t, k)?;
        }
        for k in 1..tensors.len() {
            if tensors[k - 1].shape()[2] != tensors[k].shape()[0] {
                return Err(Error::dim(format!("bond {k} extents disagree")));
            }
        }
        if tensors[0].shape()[0] != 1 || tensors[tensors.len() - 1].shape()[2] != 1 {
            return Err(Error::dim("open chain edge bonds must have extent 1"));
        }
        Ok(Self {
            tensors,
            boundary: Boundary::Open,
            translation_invariant: false,
        })
    }

    /// Open chain `⟨L| A_1 … A_N |R⟩`; the boundary vectors are absorbed into
    /// the edge tensors.
    pub fn open_with_boundary(mut tensors: Vec<DenseTensor>, left: &[C64], right: &[C64]) -> Result<Self> {
        if tensors.is_empty() {
            return Err(Error::dim("empty chain"));
        }
        let first = &tensors[0];
        check_site(first, 0)?;
        if first.shape()[0] != left.len() {
            return Err(Error::dim("left boundary vector does not match the first bond"));
        }
        let l = DenseTensor::new(vec![1, left.len()], left.to_vec())?;
        let absorbed = crate::tensor::contract(&l, first, &[(1, 0)])?;
        tensors[0] = absorbed;
        let n = tensors.len();
        let last = &tensors[n - 1];
        check_site(last, n - 1)?;
        if last.shape()[2] != right.len() {
            return Err(Error::dim("right boundary vector does not match the last bond"));
        }
        let r = DenseTensor::new(vec![right.len(), 1], right.to_vec())?;
        tensors[n - 1] = crate::tensor::contract(last, &r, &[(2, 0)])?;
        Self::open(tensors)
    }

    pub fn periodic(tensors: Vec<DenseTensor>) -> Result<Self> {
        if tensors.is_empty() {
            return Err(Error::dim("empty chain"));
        }
        for (k, t) in tensors.iter().enumerate() {
            check_site(t, k)?;
        }
        let n = tensors.len();
        for k in 0..n {
            if tensors[k].shape()[2] != tensors[(k + 1) % n].shape()[0] {
                return Err(Error::dim(format!("bond {} extents disagree", (k + 1) % n)));
            }
        }
        Ok(Self {
            tensors,
            boundary: Boundary::Periodic,
            translation_invariant: false,
        })
    }

    /// Translation-invariant periodic chain generated by one tensor.
    pub fn uniform(a: &DenseTensor, n: usize) -> Result<Self> {
        check_site(a, 0)?;
        if a.shape()[0] != a.shape()[2] {
            return Err(Error::dim("translation-invariant tensor must be square in its bonds"));
        }
        if n == 0 {
            return Err(Error::dim("empty chain"));
        }
        let mut m = Self::periodic(vec![a.clone(); n])?;
        m.translation_invariant = true;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn tensors(&self) -> &[DenseTensor] {
        &self.tensors
    }

    pub fn tensor(&self, k: usize) -> &DenseTensor {
        &self.tensors[k]
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_translation_invariant(&self) -> bool {
        self.translation_invariant
    }

    /// Extents of bonds `0..=N` (bond `k` sits left of site `k`).
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut b: Vec<usize> = self.tensors.iter().map(|t| t.shape()[0]).collect();
        b.push(self.tensors[self.len() - 1].shape()[2]);
        b
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn is_real(&self) -> bool {
        self.tensors.iter().all(|t| t.is_real())
    }

    pub(crate) fn replace_tensors(&self, tensors: Vec<DenseTensor>) -> Result<Self> {
        match self.boundary {
            Boundary::Open => Self::open(tensors),
            Boundary::Periodic => {
                let mut m = Self::periodic(tensors)?;
                m.translation_invariant =
                    self.translation_invariant && m.tensors.windows(2).all(|w| w[0] == w[1]);
                Ok(m)
            }
        }
    }

    /// `⟨bra| O_1 ⊗ … ⊗ O_N |self⟩` with optional single-site operators.
    fn ladder(&self, bra: &Mps, ops: Option<&[[C64; 4]]>) -> Result<LogScalar> {
        if bra.len() != self.len() {
            return Err(Error::dim(format!("chains of length {} and {}", bra.len(), self.len())));
        }
        if bra.boundary != self.boundary {
            return Err(Error::dim("boundary conditions differ"));
        }
        let (mb0, mk0) = (bra.tensors[0].shape()[0], self.tensors[0].shape()[0]);
        // One environment per pair of starting bond indices; open chains
        // have exactly one.
        let mut envs: Vec<Vec<C64>> = Vec::with_capacity(mb0 * mk0);
        for p in 0..mb0 {
            for q in 0..mk0 {
                let mut e = vec![ZERO; mb0 * mk0];
                e[p * mk0 + q] = ONE;
                envs.push(e);
            }
        }
        let (mut mb, mut mk) = (mb0, mk0);
        let mut log_abs = 0.0;
        for k in 0..self.len() {
            let ak = &self.tensors[k];
            let ab = &bra.tensors[k];
            let (rk, rb) = (ak.shape()[2], ab.shape()[2]);
            let abc: Vec<C64> = ab.data().iter().map(|z| z.conj()).collect();
            for e in envs.iter_mut() {
                // x[a', (s, b)] = Σ_a E[a', a] A[a, s, b]
                let mut x = vec![ZERO; mb * PHYS * rk];
                zgemm(mb, mk, PHYS * rk, e, ak.data(), 0.0, &mut x);
                if let Some(ops) = ops {
                    let o = &ops[k];
                    if *o != PAULI[0] {
                        let mut y = vec![ZERO; x.len()];
                        for a in 0..mb {
                            for sp in 0..PHYS {
                                for s in 0..PHYS {
                                    let c = o[sp * PHYS + s];
                                    if c == ZERO {
                                        continue;
                                    }
                                    let src = &x[(a * PHYS + s) * rk..(a * PHYS + s + 1) * rk];
                                    let dst = &mut y[(a * PHYS + sp) * rk..(a * PHYS + sp + 1) * rk];
                                    dst.iter_mut().zip(src).for_each(|(d, v)| *d += c * v);
                                }
                            }
                        }
                        x = y;
                    }
                }
                // E'[b', b] = Σ_{a', s} conj(B[a', s, b']) x[a', s, b]
                let mut en = vec![ZERO; rb * rk];
                zgemm_strided(rb, mb * PHYS, rk, &abc, (1, rb), &x, (rk, 1), 0.0, &mut en, (rk, 1));
                *e = en;
            }
            mb = rb;
            mk = rk;
            let scale = envs
                .iter()
                .flat_map(|e| e.iter())
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            if scale == 0.0 {
                return Ok(LogScalar {
                    log_abs: f64::NEG_INFINITY,
                    phase: ONE,
                });
            }
            if !scale.is_finite() {
                return Err(Error::NonFinite("environment"));
            }
            envs.iter_mut().flat_map(|e| e.iter_mut()).for_each(|z| *z /= scale);
            log_abs += scale.ln();
        }
        // close the chain: Σ_{p, q} E^{(p,q)}[p, q] for periodic, the single
        // 1×1 entry for open chains.
        let mut total = ZERO;
        let mut idx = 0;
        for p in 0..mb0 {
            for q in 0..mk0 {
                total += envs[idx][p * mk + q];
                idx += 1;
            }
        }
        if total.norm() == 0.0 {
            return Ok(LogScalar {
                log_abs: f64::NEG_INFINITY,
                phase: ONE,
            });
        }
        Ok(LogScalar {
            log_abs: log_abs + total.norm().ln(),
            phase: total / total.norm(),
        })
    }

    /// `ln ⟨ψ|ψ⟩`.
    pub fn log_norm_squared(&self) -> f64 {
        self.ladder(self, None).expect("self ladder is well-formed").log_abs
    }

    /// `⟨ψ|ψ⟩`.
    pub fn norm_squared(&self) -> f64 {
        self.log_norm_squared().exp()
    }

    /// `⟨other|self⟩`.
    pub fn overlap(&self, other: &Mps) -> Result<LogScalar> {
        self.ladder(other, None)
    }

    /// Copy rescaled to unit norm; the factor is spread evenly over the
    /// sites so long chains stay in range.
    pub fn normalized(&self) -> Self {
        let lnn = self.log_norm_squared();
        let per_site = C64::new((-0.5 * lnn / self.len() as f64).exp(), 0.0);
        let mut m = self.clone();
        m.tensors.iter_mut().for_each(|t| t.scale_mut(per_site));
        m
    }

    /// `⟨ψ|P|ψ⟩` (not divided by the norm).
    pub fn expectation_pauli(&self, p: &PauliString) -> Result<f64> {
        if p.len() != self.len() {
            return Err(Error::dim(format!("Pauli string of length {} on {} sites", p.len(), self.len())));
        }
        let ops: Vec<[C64; 4]> = p.word().iter().map(|&a| PAULI[a as usize]).collect();
        let v = self.ladder(self, Some(&ops))?;
        Ok(v.value().re)
    }

    /// `⟨ψ|O_1 ⊗ … ⊗ O_N|ψ⟩` for arbitrary 2×2 operators (row-major).
    pub fn expectation_product(&self, ops: &[[C64; 4]]) -> Result<C64> {
        if ops.len() != self.len() {
            return Err(Error::dim("operator count differs from chain length"));
        }
        Ok(self.ladder(self, Some(ops))?.value())
    }

    /// Apply a single-qubit unitary to one site, or to every site when
    /// `site` is `None`.
    pub fn apply_one_site(&self, v: &DenseTensor, site: Option<usize>) -> Result<Self> {
        if v.shape() != [2, 2] {
            return Err(Error::dim("single-site gate must be 2×2"));
        }
        if !gates::is_unitary(v, 1e-8) {
            return Err(Error::Precondition("single-site gate is not unitary".into()));
        }
        if let Some(k) = site {
            if k >= self.len() {
                return Err(Error::dim(format!("site {k} on a chain of {}", self.len())));
            }
        }
        let tensors = self
            .tensors
            .iter()
            .enumerate()
            .map(|(k, t)| {
                if site.is_none_or(|s| s == k) {
                    let out = crate::tensor::contract(v, t, &[(1, 1)])?;
                    out.permute(&[1, 0, 2])
                } else {
                    Ok(t.clone())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        self.replace_tensors(tensors)
    }

    /// Apply a two-qubit gate on sites `(k, k+1)` and split the result with a
    /// truncated SVD. Returns the new state and the discarded weight.
    pub fn apply_two_site(&self, g: &DenseTensor, k: usize, max_chi: usize, cutoff: f64) -> Result<(Self, f64)> {
        if self.boundary != Boundary::Open {
            return Err(Error::Precondition("two-site gates need an open chain".into()));
        }
        if g.shape() != [4, 4] {
            return Err(Error::dim("two-site gate must be 4×4"));
        }
        if !gates::is_unitary(g, 1e-8) {
            return Err(Error::Precondition("two-site gate is not unitary".into()));
        }
        if k + 1 >= self.len() {
            return Err(Error::dim(format!("bond {k} on a chain of {}", self.len())));
        }
        let theta = crate::tensor::contract(&self.tensors[k], &self.tensors[k + 1], &[(2, 0)])?;
        let (cl, cr) = (theta.shape()[0], theta.shape()[3]);
        let g4 = g.clone().reshape(&[2, 2, 2, 2])?;
        let theta = crate::tensor::contract(&g4, &theta, &[(2, 1), (3, 2)])?.permute(&[2, 0, 1, 3])?;
        let (a, b, discarded) = split_two_site(theta, cl, cr, max_chi, cutoff)?;
        let mut tensors = self.tensors.clone();
        tensors[k] = a;
        tensors[k + 1] = b;
        Ok((Self::open(tensors)?, discarded))
    }

    /// Dense amplitudes, site 0 the most significant bit.
    pub fn to_statevector(&self) -> Result<Statevector> {
        let n = self.len();
        if n > STATEVECTOR_LIMIT {
            return Err(Error::SizeGuard {
                what: "statevector sites",
                value: n,
                limit: STATEVECTOR_LIMIT,
            });
        }
        let c0 = self.tensors[0].shape()[0];
        // rows: (p, s_1 … s_k) with p the starting bond index.
        let mut rows = c0;
        let mut cols = c0;
        let mut m = DenseTensor::identity(c0).into_data();
        for t in &self.tensors {
            let r = t.shape()[2];
            let mut next = vec![ZERO; rows * PHYS * r];
            zgemm(rows, cols, PHYS * r, &m, t.data(), 0.0, &mut next);
            rows *= PHYS;
            cols = r;
            m = next;
        }
        let dim = 1usize << n;
        let amps = (0..dim)
            .map(|x| (0..c0).map(|p| m[(p * dim + x) * cols + p]).sum())
            .collect();
        Ok(Statevector::new(n, amps))
    }

    /// Open-chain MPS from dense amplitudes by successive SVDs.
    pub fn from_statevector(sv: &Statevector, max_chi: usize, cutoff: f64) -> Result<Self> {
        let n = sv.n();
        let mut rest = DenseTensor::new(vec![1, sv.amplitudes().len()], sv.amplitudes().to_vec())?;
        let mut left = 1;
        let mut tensors = Vec::with_capacity(n);
        for k in 0..n {
            let remaining = 1usize << (n - k - 1);
            let mat = rest.reshape(&[left * PHYS, remaining])?;
            if k + 1 == n {
                tensors.push(mat.reshape(&[left, PHYS, 1])?);
                break;
            }
            let svd = svd_truncate(&mat, max_chi, cutoff)?;
            let r = svd.rank();
            tensors.push(svd.u.reshape(&[left, PHYS, r])?);
            let sv_mat = DenseTensor::from_fn(&[r, remaining], |ix| svd.v.get(ix) * svd.s[ix[0]]);
            rest = sv_mat;
            left = r;
        }
        Self::open(tensors)
    }

    /// `|self⟩ ⊗ |other⟩` as one open chain.
    pub fn tensor_product(&self, other: &Mps) -> Result<Self> {
        if self.boundary != Boundary::Open || other.boundary != Boundary::Open {
            return Err(Error::Precondition("tensor products are formed of open chains".into()));
        }
        let mut t = self.tensors.clone();
        t.extend(other.tensors.iter().cloned());
        Self::open(t)
    }

    /// Mixed-canonical form with orthogonality centre `center`.
    pub fn canonicalize(&self, center: usize) -> Result<(Self, CanonicalForm)> {
        if self.boundary != Boundary::Open {
            return Err(Error::Precondition("canonical forms need an open chain".into()));
        }
        let n = self.len();
        if center >= n {
            return Err(Error::dim(format!("centre {center} on a chain of {n}")));
        }
        let mut t = self.tensors.clone();
        for k in 0..center {
            let (cl, cr) = (t[k].shape()[0], t[k].shape()[2]);
            let svd = svd_truncate(&t[k].clone().reshape(&[cl * PHYS, cr])?, usize::MAX, 0.0)?;
            let r = svd.rank();
            t[k] = svd.u.reshape(&[cl, PHYS, r])?;
            let carry = DenseTensor::from_fn(&[r, cr], |ix| svd.v.get(ix) * svd.s[ix[0]]);
            t[k + 1] = crate::tensor::contract(&carry, &t[k + 1], &[(1, 0)])?;
        }
        for k in (center + 1..n).rev() {
            let (cl, cr) = (t[k].shape()[0], t[k].shape()[2]);
            let svd = svd_truncate(&t[k].clone().reshape(&[cl, PHYS * cr])?, usize::MAX, 0.0)?;
            let r = svd.rank();
            t[k] = svd.v.reshape(&[r, PHYS, cr])?;
            let carry = DenseTensor::from_fn(&[cl, r], |ix| svd.u.get(ix) * svd.s[ix[1]]);
            t[k - 1] = crate::tensor::contract(&t[k - 1], &carry, &[(2, 0)])?;
        }
        let form = CanonicalForm {
            center,
            left_orthogonal: (0..n).map(|k| k < center).collect(),
            right_orthogonal: (0..n).map(|k| k > center).collect(),
        };
        Ok((Self::open(t)?, form))
    }

    /// `Σ_s A^{s†} A^s = 𝟙` within `tol`.
    pub fn is_left_orthogonal(&self, k: usize, tol: f64) -> bool {
        let t = &self.tensors[k];
        let (cl, cr) = (t.shape()[0], t.shape()[2]);
        let m = t.clone().reshape(&[cl * PHYS, cr]).unwrap();
        let g = m.adjoint().unwrap().matmul(&m).unwrap();
        g.max_abs_diff(&DenseTensor::identity(cr)) <= tol
    }

    /// `Σ_s A^s A^{s†} = 𝟙` within `tol`.
    pub fn is_right_orthogonal(&self, k: usize, tol: f64) -> bool {
        let t = &self.tensors[k];
        let (cl, cr) = (t.shape()[0], t.shape()[2]);
        let m = t.clone().reshape(&[cl, PHYS * cr]).unwrap();
        let g = m.matmul(&m.adjoint().unwrap()).unwrap();
        g.max_abs_diff(&DenseTensor::identity(cl)) <= tol
    }
}

/// Split `theta (χl, 2, 2, χr)` into a left-orthogonal tensor and a
/// remainder carrying the singular values.
pub(crate) fn split_two_site(
    theta: DenseTensor,
    cl: usize,
    cr: usize,
    max_chi: usize,
    cutoff: f64,
) -> Result<(DenseTensor, DenseTensor, f64)> {
    let svd = svd_truncate(&theta.reshape(&[cl * PHYS, PHYS * cr])?, max_chi, cutoff)?;
    let r = svd.rank();
    let a = svd.u.reshape(&[cl, PHYS, r])?;
    let b = DenseTensor::from_fn(&[r, PHYS * cr], |ix| svd.v.get(ix) * svd.s[ix[0]]).reshape(&[r, PHYS, cr])?;
    Ok((a, b, svd.discarded_weight))
}

/// `|⟨a|b⟩|² / (⟨a|a⟩⟨b|b⟩)`.
pub fn fidelity(a: &Mps, b: &Mps) -> Result<f64> {
    let ov = b.overlap(a)?;
    Ok((2.0 * ov.log_abs - a.log_norm_squared() - b.log_norm_squared()).exp())
}
