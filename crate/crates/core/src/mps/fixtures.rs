use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Mps, PHYS};
use crate::error::{Error, Result};
use crate::tensor::{eig_dense, DenseTensor, C64, ONE, ZERO};

/// Gap ratio above which a transfer spectrum counts as degenerate.
const NORMALITY_GAP: f64 = 1.0 - 1e-6;
const MAX_RESAMPLES: usize = 100;

/// `(|0⟩ + e^{iπ/4}|1⟩)/√2`.
pub fn t_state_vector() -> [C64; 2] {
    [C64::new(FRAC_1_SQRT_2, 0.0), C64::from_polar(FRAC_1_SQRT_2, FRAC_PI_4)]
}

/// χ = 1 open chain with the given local vectors.
pub fn product_state(locals: &[[C64; 2]]) -> Result<Mps> {
    if locals.is_empty() {
        return Err(Error::dim("empty chain"));
    }
    Mps::open(
        locals
            .iter()
            .map(|v| DenseTensor::new(vec![1, PHYS, 1], v.to_vec()).unwrap())
            .collect(),
    )
}

/// Computational basis product state; `bits[k]` is site `k`.
pub fn product_bits(bits: &[u8]) -> Result<Mps> {
    let locals: Vec<[C64; 2]> = bits
        .iter()
        .map(|&b| match b {
            0 => Ok([ONE, ZERO]),
            1 => Ok([ZERO, ONE]),
            _ => Err(Error::Domain(format!("bit value {b}"))),
        })
        .collect::<Result<_>>()?;
    product_state(&locals)
}

/// `c0 |0…0⟩ + c1 |1…1⟩` as a χ = 2 open chain.
pub fn ghz_state_with(n: usize, c0: C64, c1: C64) -> Result<Mps> {
    if n == 0 {
        return Err(Error::dim("empty chain"));
    }
    if n == 1 {
        return product_state(&[[c0, c1]]);
    }
    let mut tensors = Vec::with_capacity(n);
    let mut first = DenseTensor::zeros(&[1, PHYS, 2]);
    first.set(&[0, 0, 0], c0);
    first.set(&[0, 1, 1], c1);
    tensors.push(first);
    for _ in 1..n - 1 {
        let mut mid = DenseTensor::zeros(&[2, PHYS, 2]);
        mid.set(&[0, 0, 0], ONE);
        mid.set(&[1, 1, 1], ONE);
        tensors.push(mid);
    }
    let mut last = DenseTensor::zeros(&[2, PHYS, 1]);
    last.set(&[0, 0, 0], ONE);
    last.set(&[1, 1, 0], ONE);
    tensors.push(last);
    Mps::open(tensors)
}

/// `(|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz_state(n: usize) -> Result<Mps> {
    let a = C64::new(FRAC_1_SQRT_2, 0.0);
    ghz_state_with(n, a, a)
}

fn bond_profile(n: usize, chi: usize) -> Vec<usize> {
    // bond k sits left of site k; capped by the exact Schmidt rank
    (0..=n)
        .map(|k| {
            let cap = |m: usize| if m >= 63 { usize::MAX } else { 1usize << m };
            chi.min(cap(k)).min(cap(n - k))
        })
        .collect()
}

fn random_chain(n: usize, chi: usize, seed: u64, real: bool) -> Result<Mps> {
    if chi == 0 || n == 0 {
        return Err(Error::Precondition(format!("random_mps(N = {n}, χ = {chi})")));
    }
    let bonds = bond_profile(n, chi);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tensors = (0..n)
        .map(|k| {
            let shape = [bonds[k], PHYS, bonds[k + 1]];
            if real {
                DenseTensor::random_real(&shape, &mut rng)
            } else {
                DenseTensor::random(&shape, &mut rng)
            }
        })
        .collect();
    Ok(Mps::open(tensors)?.normalized())
}

/// Normalized open chain with complex Gaussian entries. Bond `k` has extent
/// `min(χ, 2^k, 2^{N−k})`.
pub fn random_mps(n: usize, chi: usize, seed: u64) -> Result<Mps> {
    random_chain(n, chi, seed, false)
}

/// As [`random_mps`] with real entries.
pub fn random_real_mps(n: usize, chi: usize, seed: u64) -> Result<Mps> {
    random_chain(n, chi, seed, true)
}

/// `τ(A) = Σ_s A^s ⊗ A^{s*}` as a `χ² × χ²` matrix, row index `(a, a')`.
pub fn transfer_matrix(a: &DenseTensor) -> Result<DenseTensor> {
    if a.rank() != 3 || a.shape()[1] != PHYS {
        return Err(Error::dim(format!("transfer matrix of shape {:?}", a.shape())));
    }
    let (cl, cr) = (a.shape()[0], a.shape()[2]);
    let mut t = DenseTensor::zeros(&[cl * cl, cr * cr]);
    for s in 0..PHYS {
        let m = DenseTensor::from_fn(&[cl, cr], |ix| a.get(&[ix[0], s, ix[1]]));
        let k = m.kron(&m.conj())?;
        t = t.add(&k)?;
    }
    Ok(t)
}

/// Random translation-invariant tensor `(χ, 2, χ)` normalized so that the
/// leading eigenvalue of `τ(A)` is one.
///
/// With `normality_check`, candidates whose transfer spectrum has
/// `|λ₁|/|λ₀| > 1 − 1e-6` are discarded and redrawn.
pub fn random_ti_tensor(chi: usize, seed: u64, normality_check: bool) -> Result<DenseTensor> {
    if chi == 0 {
        return Err(Error::Precondition("χ must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_RESAMPLES {
        let a = DenseTensor::random(&[chi, PHYS, chi], &mut rng);
        let eigs = eig_dense(&transfer_matrix(&a)?)?;
        if normality_check && eigs.gap_ratio > NORMALITY_GAP {
            continue;
        }
        let lead = eigs.eigenvalues[0].norm();
        if lead == 0.0 || !lead.is_finite() {
            continue;
        }
        return Ok(a.scale(C64::new(lead.sqrt().recip(), 0.0)));
    }
    Err(Error::Fixture(format!(
        "no normal χ = {chi} tensor after {MAX_RESAMPLES} draws"
    )))
}
