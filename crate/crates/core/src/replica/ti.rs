//! Translation-invariant chains: transfer operators, the limit density and
//! the local probe.
//!
//! Transfer operators act on real Hermitian coordinates of left
//! environments, `x ↦ x T`; "left" eigenvectors are fixed points of this
//! flow and "right" ones of the transposed flow.

use std::sync::atomic::{AtomicU64, Ordering};

use super::ladder::{apply_identity_sector, apply_site, rescale, SiteMaps};
use super::{ReplicaVariant, SreResult};
use crate::error::{Error, Result};
use crate::mps::{transfer_matrix, PHYS};
use crate::tensor::{dominant_eig, eig_dense, eig_dense_with_vectors, DenseTensor, SpectralResult, C64, DENSE_EIG_LIMIT, ZERO};

/// Tolerance on `|λ₀(τ(A)) − 1|` accepted as normalized.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Eigenvector overlaps below this are reported as degenerate.
pub const OVERLAP_FLOOR: f64 = 1e-12;

const ARNOLDI_TOL: f64 = 1e-11;
const ARNOLDI_MAX_MATVECS: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransferKind {
    /// `τ(A)`, one copy.
    Single,
    /// `τ_Ψ = ⊗_c τ_c` over the `2n` copies.
    State,
    /// `τ_Φ`, the replica transfer with the Pauli sum.
    Replica,
}

/// A transfer operator with its spectrum computed at construction.
#[derive(Debug)]
pub struct TransferMatrix {
    kind: TransferKind,
    chi: usize,
    dim: usize,
    mask: Vec<bool>,
    maps: SiteMaps,
    spectrum: SpectralResult,
    flops: AtomicU64,
}

impl TransferMatrix {
    /// Build the operator of the given kind for tensor `a` (used as is, no
    /// normalization).
    pub fn new(a: &DenseTensor, n: usize, variant: ReplicaVariant, kind: TransferKind) -> Result<Self> {
        check_ti_tensor(a)?;
        let chi = a.shape()[0];
        let mask = match kind {
            TransferKind::Single => vec![false],
            _ => {
                ti_variant(variant, n)?;
                variant.conj_mask(n)
            }
        };
        let dim = (chi * chi).pow(mask.len() as u32);
        let maps = SiteMaps::new(a, mask.iter().any(|&c| c));
        let mut t = Self {
            kind,
            chi,
            dim,
            mask,
            maps,
            spectrum: SpectralResult {
                eigenvalues: vec![],
                right: None,
                left: None,
                gap_ratio: 0.0,
                iterations: 0,
                residual: 0.0,
            },
            flops: AtomicU64::new(0),
        };
        t.spectrum = if dim < DENSE_EIG_LIMIT {
            eig_dense_with_vectors(&t.to_dense()?)?
        } else {
            let mut s = dominant_eig(|x, y| t.apply_complex(x, y, false), dim, ARNOLDI_TOL, ARNOLDI_MAX_MATVECS)?;
            s.left = s.right.take();
            s
        };
        Ok(t)
    }

    pub fn kind(&self) -> TransferKind {
        self.kind
    }

    pub fn chi(&self) -> usize {
        self.chi
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn copies(&self) -> usize {
        self.mask.len()
    }

    pub fn spectrum(&self) -> &SpectralResult {
        &self.spectrum
    }

    /// Real multiply–adds spent in applications so far.
    pub fn flops(&self) -> u64 {
        self.flops.load(Ordering::Relaxed)
    }

    fn flow(&self, maps: &SiteMaps, x: &[f64]) -> Vec<f64> {
        let mut f = 0;
        let y = match self.kind {
            TransferKind::Replica => apply_site(x, maps, &self.mask, &mut f),
            _ => apply_identity_sector(x, maps, &self.mask, &mut f),
        };
        self.flops.fetch_add(f, Ordering::Relaxed);
        y
    }

    /// `x ↦ x T`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.flow(&self.maps, x)
    }

    /// `x ↦ T x`.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        self.flow(&self.maps.transposed(), x)
    }

    fn apply_complex(&self, x: &[C64], y: &mut [C64], transpose: bool) {
        let maps = if transpose { self.maps.transposed() } else { self.maps.clone() };
        let re: Vec<f64> = x.iter().map(|z| z.re).collect();
        let im: Vec<f64> = x.iter().map(|z| z.im).collect();
        let (yr, yi) = (self.flow(&maps, &re), self.flow(&maps, &im));
        for (k, out) in y.iter_mut().enumerate() {
            *out = C64::new(yr[k], yi[k]);
        }
    }

    /// Dense `T` with `(x T)_j = Σ_i x_i T_ij`.
    pub fn to_dense(&self) -> Result<DenseTensor> {
        if self.dim >= DENSE_EIG_LIMIT {
            return Err(Error::SizeGuard {
                what: "dense transfer dimension",
                value: self.dim,
                limit: DENSE_EIG_LIMIT - 1,
            });
        }
        let mut m = DenseTensor::zeros(&[self.dim, self.dim]);
        let mut e = vec![0.0; self.dim];
        for i in 0..self.dim {
            e[i] = 1.0;
            let row = self.apply(&e);
            e[i] = 0.0;
            for (j, v) in row.into_iter().enumerate() {
                m.data_mut()[i * self.dim + j] = C64::new(v, 0.0);
            }
        }
        Ok(m)
    }

    /// Leading left eigenvector as real coordinates.
    pub fn left_vector(&self) -> Vec<f64> {
        realify(self.spectrum.left.as_ref().expect("left eigenvector computed"), self.chi, self.copies())
    }

    /// Leading right eigenvector as real coordinates.
    pub fn right_vector(&self) -> Result<Vec<f64>> {
        let v = match &self.spectrum.right {
            Some(v) => v.clone(),
            None => {
                dominant_eig(|x, y| self.apply_complex(x, y, true), self.dim, ARNOLDI_TOL, ARNOLDI_MAX_MATVECS)?
                    .right
                    .expect("iterative solver returns a vector")
            }
        };
        Ok(realify(&v, self.chi, self.copies()))
    }
}

/// Strip the global phase of a real-coordinate eigenvector and fix its sign
/// so that the trace of the first copy factor read as a matrix is
/// nonnegative.
fn realify(v: &[C64], chi: usize, copies: usize) -> Vec<f64> {
    let big = v.iter().copied().fold(ZERO, |m, z| if z.norm() > m.norm() { z } else { m });
    let phase = if big.norm() > 0.0 { big.conj() / big.norm() } else { C64::new(1.0, 0.0) };
    let mut out: Vec<f64> = v.iter().map(|z| (z * phase).re).collect();
    let block = (chi * chi).pow(copies as u32 - 1);
    let trace: f64 = (0..chi)
        .map(|a| (0..block).map(|r| out[(a * chi + a) * block + r]).sum::<f64>())
        .sum();
    if trace < 0.0 {
        out.iter_mut().for_each(|x| *x = -*x);
    }
    out
}

fn check_ti_tensor(a: &DenseTensor) -> Result<()> {
    if a.rank() != 3 || a.shape()[1] != PHYS || a.shape()[0] != a.shape()[2] {
        return Err(Error::dim(format!("translation-invariant tensor of shape {:?}", a.shape())));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("translation-invariant tensor"));
    }
    Ok(())
}

fn ti_variant(variant: ReplicaVariant, n: usize) -> Result<()> {
    variant.check(n)?;
    if variant == ReplicaVariant::SymmetricCompressed {
        return Err(Error::UnsupportedVariant {
            n,
            variant: variant.name().into(),
            reason: "translation-invariant transfer operators use the conj or sym factor",
        });
    }
    Ok(())
}

/// Rescale `a` so that `λ₀(τ(A)) = 1`; errors when it is off by more than
/// [`NORMALIZATION_TOL`]. Returns the tensor and `ln λ₀` before rescaling.
fn normalize_ti(a: &DenseTensor) -> Result<(DenseTensor, f64)> {
    check_ti_tensor(a)?;
    let l0 = eig_dense(&transfer_matrix(a)?)?.leading().norm();
    if !(l0 > 0.0) || !l0.is_finite() {
        return Err(Error::Precondition(format!("transfer matrix has leading eigenvalue {l0}")));
    }
    if (l0 - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Normalization {
            eigenvalue: l0,
            suggested_factor: l0.sqrt().recip(),
        });
    }
    Ok((a.scale(C64::new(l0.sqrt().recip(), 0.0)), l0.ln()))
}

/// Limit density `m = ln λ₀(τ_Φ) / (1 − n)` of a normalized TI tensor.
pub fn ti_density(a: &DenseTensor, n: usize, variant: ReplicaVariant) -> Result<SreResult> {
    ti_variant(variant, n)?;
    let (a, log_state) = normalize_ti(a)?;
    let t = TransferMatrix::new(&a, n, variant, TransferKind::Replica)?;
    let eigs = t.spectrum();
    let l0 = eigs.leading();
    if eigs.is_near_degenerate() {
        log::warn!("replica transfer spectrum is nearly degenerate (gap ratio {:.9})", eigs.gap_ratio);
    }
    if !(l0.re > 0.0) {
        return Err(Error::Positivity(l0.re));
    }
    let log_replica = l0.norm().ln();
    Ok(SreResult {
        n,
        sites: None,
        chi: t.chi(),
        variant,
        sre: None,
        density: log_replica / (1.0 - n as f64),
        log_replica_norm: log_replica,
        log_state_norm: log_state,
        gap_ratio: Some(eigs.gap_ratio),
        flops: t.flops(),
    })
}

/// `ln Σ_k λ_k^N` for a spectrum sorted by descending modulus.
fn log_power_trace(vals: &[C64], sites: usize) -> Result<f64> {
    let top = vals[0].norm();
    let s: C64 = vals.iter().map(|&z| (z / top).powu(sites as u32)).sum();
    if !(s.re > 0.0) {
        return Err(Error::Positivity(s.re));
    }
    Ok(sites as f64 * top.ln() + s.re.ln())
}

/// SRE of the periodic chain `tr(A^{s₁} ⋯ A^{s_N})` for each requested
/// length, from the full spectra of `τ_Φ` and `τ(A)`.
pub fn finite_pbc_sre(a: &DenseTensor, n: usize, variant: ReplicaVariant, sizes: &[usize]) -> Result<Vec<SreResult>> {
    ti_variant(variant, n)?;
    let (a, _) = normalize_ti(a)?;
    let t = TransferMatrix::new(&a, n, variant, TransferKind::Replica)?;
    if t.dim() >= DENSE_EIG_LIMIT {
        return Err(Error::SizeGuard {
            what: "replica transfer dimension for the full spectrum",
            value: t.dim(),
            limit: DENSE_EIG_LIMIT - 1,
        });
    }
    let phi = &t.spectrum().eigenvalues;
    let tau = eig_dense(&transfer_matrix(&a)?)?.eigenvalues;
    sizes
        .iter()
        .map(|&sites| {
            if sites == 0 {
                return Err(Error::dim("empty chain"));
            }
            let log_replica = log_power_trace(phi, sites)?;
            let log_state = log_power_trace(&tau, sites)?;
            let m = (log_replica - 2.0 * n as f64 * log_state) / (1.0 - n as f64);
            Ok(SreResult {
                n,
                sites: Some(sites),
                chi: t.chi(),
                variant,
                sre: Some(m),
                density: m / sites as f64,
                log_replica_norm: log_replica,
                log_state_norm: log_state,
                gap_ratio: Some(t.spectrum().gap_ratio),
                flops: t.flops(),
            })
        })
        .collect()
}

fn kron_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Local probe `m_ℓ = (1 − n)⁻¹ ℓ⁻¹ ln[⟨L_Ψ| τ_Φ^ℓ |R_Ψ⟩ / ⟨L_Ψ|R_Ψ⟩]`.
///
/// `L_Ψ` and `R_Ψ` are the leading eigenvectors of `τ_Ψ`, built copy by
/// copy. Fails when `τ(A)` has a degenerate leading eigenvalue or when
/// `L_Ψ` is orthogonal to the leading right eigenvector of `τ_Φ`.
pub fn local_probe(a: &DenseTensor, n: usize, ell: usize, variant: ReplicaVariant) -> Result<f64> {
    ti_variant(variant, n)?;
    if ell == 0 {
        return Err(Error::Domain("probe length ℓ must be at least 1".into()));
    }
    let (a, _) = normalize_ti(a)?;
    let single = TransferMatrix::new(&a, n, variant, TransferKind::Single)?;
    if single.spectrum().is_near_degenerate() {
        return Err(Error::DegenerateSpectrum(single.spectrum().gap_ratio));
    }
    let conj = TransferMatrix::new(&a.conj(), n, variant, TransferKind::Single)?;
    let pair = |t: &TransferMatrix| -> Result<(Vec<f64>, Vec<f64>)> {
        let l = t.left_vector();
        let mut r = t.right_vector()?;
        let s = dot(&l, &r);
        if s.abs() < OVERLAP_FLOOR {
            return Err(Error::DegenerateOverlap(s.abs()));
        }
        r.iter_mut().for_each(|x| *x /= s);
        Ok((l, r))
    };
    // Conjugated copies see τ(A)*, which is τ(A*) on the same bond pair.
    let (lp, rp) = pair(&single)?;
    let (lc, rc) = pair(&conj)?;
    let mask = variant.conj_mask(n);
    let (mut big_l, mut big_r) = (vec![1.0], vec![1.0]);
    for &c in &mask {
        let (l, r) = if c { (&lc, &rc) } else { (&lp, &rp) };
        big_l = kron_vec(&big_l, l);
        big_r = kron_vec(&big_r, r);
    }

    let phi = TransferMatrix::new(&a, n, variant, TransferKind::Replica)?;
    let r_phi = phi.right_vector()?;
    let overlap = dot(&big_l, &r_phi).abs() / (dot(&big_l, &big_l) * dot(&r_phi, &r_phi)).sqrt();
    if overlap < OVERLAP_FLOOR {
        return Err(Error::DegenerateOverlap(overlap));
    }

    let mut x = big_l.clone();
    let mut log = 0.0;
    for _ in 0..ell {
        x = phi.apply(&x);
        log += rescale(&mut x).ok_or(Error::NonFinite("probe environment"))?;
    }
    let value = dot(&x, &big_r) / dot(&big_l, &big_r);
    if !(value > 0.0) {
        return Err(Error::Positivity(value));
    }
    Ok((log + value.ln()) / (ell as f64 * (1.0 - n as f64)))
}
