//! Pauli matrices, Pauli strings and the replica operators Λ⁽ⁿ⁾.
//!
//! Pauli labels are fixed throughout the crate as `0 = I, 1 = X, 2 = Y,
//! 3 = Z`.
//!
//! For Rényi index `n` the replica operator acts on `2n` qubit copies of one
//! site. Copy `0` is the most significant bit of the row/column index.
//!
//! * [`LambdaVariant::Conjugated`]: `Λ = ½ Σ_α (σ^α ⊗ σ^α*)^{⊗n}`; copies
//!   alternate between the state and its complex conjugate.
//! * [`LambdaVariant::Symmetric`]: `Λ = ½ Σ_α (σ^α)^{⊗2n}`; every copy holds
//!   the state itself. Only positive for even `n`.
//!
//! Both satisfy `Λ² = 2Λ`, so `Λ = Γ†Γ` with `Γ` built from the eigenvectors
//! of the eigenvalue-2 subspace.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{eigh, DenseTensor, C64, I, ONE, ZERO};

/// Eigenvalues at or above this count towards the rank of Λ.
pub const RANK_THRESHOLD: f64 = 1e-8;

/// 2×2 Pauli matrix `σ^α`.
pub fn pauli_matrix(alpha: usize) -> Result<DenseTensor> {
    let m = match alpha {
        0 => [ONE, ZERO, ZERO, ONE],
        1 => [ZERO, ONE, ONE, ZERO],
        2 => [ZERO, -I, I, ZERO],
        3 => [ONE, ZERO, ZERO, -ONE],
        _ => return Err(Error::Domain(format!("Pauli label {alpha} is not in 0..=3"))),
    };
    DenseTensor::new(vec![2, 2], m.to_vec())
}

/// Entries of `σ^α` as a plain array, row-major.
pub(crate) const PAULI: [[C64; 4]; 4] = [
    [ONE, ZERO, ZERO, ONE],
    [ZERO, ONE, ONE, ZERO],
    [ZERO, C64::new(0.0, -1.0), I, ZERO],
    [ONE, ZERO, ZERO, C64::new(-1.0, 0.0)],
];

/// A word over `{I, X, Y, Z}`, one letter per qubit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    word: Vec<u8>,
}

impl PauliString {
    pub fn new(word: Vec<u8>) -> Result<Self> {
        if let Some(&bad) = word.iter().find(|&&a| a > 3) {
            return Err(Error::Domain(format!("Pauli label {bad} is not in 0..=3")));
        }
        Ok(Self { word })
    }

    pub fn identity(n: usize) -> Self {
        Self { word: vec![0; n] }
    }

    /// The string whose base-4 digits (site 0 most significant) spell `index`.
    pub fn from_index(mut index: u64, n: usize) -> Self {
        let mut word = vec![0u8; n];
        for k in (0..n).rev() {
            word[k] = (index % 4) as u8;
            index /= 4;
        }
        Self { word }
    }

    pub fn index(&self) -> u64 {
        self.word.iter().fold(0u64, |acc, &a| acc * 4 + a as u64)
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn word(&self) -> &[u8] {
        &self.word
    }

    pub fn is_identity(&self) -> bool {
        self.word.iter().all(|&a| a == 0)
    }

    /// Bit masks `(x, z)` with site `k` at bit `n - 1 - k`, and the number of
    /// `Y` letters. `P = i^{#Y} X^x Z^z` up to ordering of the factors.
    pub fn masks(&self) -> (u64, u64, u32) {
        let n = self.word.len();
        let (mut x, mut z, mut ny) = (0u64, 0u64, 0u32);
        for (k, &a) in self.word.iter().enumerate() {
            let bit = 1u64 << (n - 1 - k);
            match a {
                1 => x |= bit,
                2 => {
                    x |= bit;
                    z |= bit;
                    ny += 1;
                }
                3 => z |= bit,
                _ => {}
            }
        }
        (x, z, ny)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &a in &self.word {
            f.write_str(["I", "X", "Y", "Z"][a as usize])?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let word = s
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(0),
                'X' => Ok(1),
                'Y' => Ok(2),
                'Z' => Ok(3),
                other => Err(Error::Domain(format!("'{other}' is not a Pauli letter"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Self { word })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaVariant {
    /// `½ Σ_α (σ^α ⊗ σ^α*)^{⊗n}`.
    Conjugated,
    /// `½ Σ_α (σ^α)^{⊗2n}`, even `n` only.
    Symmetric,
}

#[derive(Clone, Debug)]
pub struct LambdaOperator {
    pub n: usize,
    pub variant: LambdaVariant,
    /// `4^n × 4^n`.
    pub matrix: DenseTensor,
}

/// The single-copy factor used by copy `copy` of the replica product.
pub(crate) fn copy_is_conjugated(variant: LambdaVariant, copy: usize) -> bool {
    variant == LambdaVariant::Conjugated && copy % 2 == 1
}

pub fn build_lambda(n: usize, variant: LambdaVariant) -> Result<LambdaOperator> {
    if n < 2 {
        return Err(Error::Domain(format!("Rényi index must be an integer n > 1, got {n}")));
    }
    if variant == LambdaVariant::Symmetric && n % 2 == 1 {
        return Err(Error::UnsupportedVariant {
            n,
            variant: "symmetric".into(),
            reason: "not a positive operator for odd n",
        });
    }
    if n > 5 {
        return Err(Error::SizeGuard {
            what: "Rényi index",
            value: n,
            limit: 5,
        });
    }
    let dim = 1usize << (2 * n);
    let mut total = DenseTensor::zeros(&[dim, dim]);
    for alpha in 0..4 {
        let s = pauli_matrix(alpha)?;
        let mut term = DenseTensor::identity(1);
        for copy in 0..2 * n {
            let f = if copy_is_conjugated(variant, copy) { s.conj() } else { s.clone() };
            term = term.kron(&f)?;
        }
        total = total.add(&term)?;
    }
    Ok(LambdaOperator {
        n,
        variant,
        matrix: total.scale(C64::new(0.5, 0.0)),
    })
}

impl LambdaOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Numerical rank: eigenvalues at or above [`RANK_THRESHOLD`].
    pub fn numerical_rank(&self) -> Result<usize> {
        let (vals, _) = eigh(&self.matrix)?;
        Ok(vals.iter().filter(|&&v| v >= RANK_THRESHOLD).count())
    }

    /// Analytic rank `2^{2(n-1)}`.
    pub fn expected_rank(&self) -> usize {
        1 << (2 * (self.n - 1))
    }
}

/// `Γ` with `Γ†Γ = Λ`: one row per nonzero eigenvalue.
#[derive(Clone, Debug)]
pub struct GammaFactor {
    pub matrix: DenseTensor,
}

impl GammaFactor {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn gram(&self) -> DenseTensor {
        self.matrix.adjoint().unwrap().matmul(&self.matrix).unwrap()
    }
}

/// Factor a positive semidefinite matrix as `Γ†Γ`, keeping only the
/// eigenvectors with eigenvalue at least [`RANK_THRESHOLD`].
pub fn factor_psd(m: &DenseTensor) -> Result<GammaFactor> {
    let (vals, vecs) = eigh(m)?;
    if let Some(&neg) = vals.iter().find(|&&v| v < -RANK_THRESHOLD) {
        return Err(Error::Positivity(neg));
    }
    let dim = m.nrows();
    let kept: Vec<usize> = (0..dim).rev().filter(|&i| vals[i] >= RANK_THRESHOLD).collect();
    let matrix = DenseTensor::from_fn(&[kept.len().max(1), dim], |ix| {
        if kept.is_empty() {
            return ZERO;
        }
        let col = kept[ix[0]];
        vecs.get(&[ix[1], col]).conj() * vals[col].sqrt()
    });
    Ok(GammaFactor { matrix })
}

pub fn factor_gamma(lambda: &LambdaOperator) -> Result<GammaFactor> {
    factor_psd(&lambda.matrix)
}
