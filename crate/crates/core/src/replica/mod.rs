//! Stabilizer Rényi entropy from the norm of the `2n`-replica MPS.
//!
//! `⟨Φ|Φ⟩ = Σ_P ⟨ψ|P|ψ⟩^{2n} / 2^N` factorizes over sites, so it is the
//! norm of an MPS whose site tensors are `Γ · (A ⊗ A*)^{⊗n}` (or
//! `Γ · A^{⊗4}` for the symmetric `n = 2` factor).
//!
//! Copy index map (`c = 0 … 2n−1`, copy 0 slowest in every bond and
//! physical index):
//!
//! | variant   | copy `c` holds         |
//! |-----------|------------------------|
//! | `conj`    | `A` for even `c`, `A*` for odd `c` |
//! | `sym`     | `A` for all `c`        |
//!
//! In transfer operators every copy contributes an adjacent (ket, bra)
//! bond pair, so the identity-sector transfer is `⊗_c τ_c` with
//! `τ_c = τ(A)` or `τ(A)*`.

mod basis;
mod klein;
mod ladder;
mod tensors;
mod ti;


use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mps::{Boundary, Mps};
use crate::pauli::{build_lambda, copy_is_conjugated, factor_gamma, LambdaVariant};
use crate::tensor::DenseTensor;

pub use klein::{compressed_dim, klein_pi_dense, klein_projector, KleinProjector};
pub use tensors::{build_replica, ReplicaTensorSet, MATERIALIZE_LIMIT};

/// Largest compressed site tensor `sym-compressed` will form (entries);
/// admits χ ≤ 11.
pub const COMPRESSED_LIMIT: usize = 1 << 26;

/// Largest environment `conj` and `sym` will hold, `χ^{4n}` entries;
/// admits χ = 8 at n = 2 and χ = 4 at n = 3.
pub const LADDER_LIMIT: usize = 1 << 25;
pub use ti::{finite_pbc_sre, local_probe, ti_density, TransferKind, TransferMatrix};

use klein::{compressed_site, KleinEnv};
use ladder::{apply_site, rescale, SiteMaps};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReplicaVariant {
    #[serde(rename = "conj")]
    Conjugated,
    #[serde(rename = "sym")]
    Symmetric,
    #[serde(rename = "sym-compressed")]
    SymmetricCompressed,
}

impl ReplicaVariant {
    /// Compressed symmetric for `n = 2`, conjugated otherwise.
    pub fn default_for(n: usize) -> Self {
        if n == 2 {
            ReplicaVariant::SymmetricCompressed
        } else {
            ReplicaVariant::Conjugated
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ReplicaVariant::Conjugated => "conj",
            ReplicaVariant::Symmetric => "sym",
            ReplicaVariant::SymmetricCompressed => "sym-compressed",
        }
    }

    pub fn lambda_variant(self) -> LambdaVariant {
        match self {
            ReplicaVariant::Conjugated => LambdaVariant::Conjugated,
            _ => LambdaVariant::Symmetric,
        }
    }

    pub fn check(self, n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::Domain(format!("Rényi index must be an integer n ≥ 2, got {n}")));
        }
        if self != ReplicaVariant::Conjugated && n != 2 {
            return Err(Error::UnsupportedVariant {
                n,
                variant: self.name().into(),
                reason: "the symmetric factor is only used for n = 2",
            });
        }
        Ok(())
    }

    /// `Γ` with `Γ†Γ = Λ^(n)`, shape `(d^(n), 4^n)`.
    pub fn gamma(self, n: usize) -> Result<DenseTensor> {
        self.check(n)?;
        Ok(factor_gamma(&build_lambda(n, self.lambda_variant())?)?.matrix)
    }

    /// Which of the `2n` copies carry `A*`.
    pub fn conj_mask(self, n: usize) -> Vec<bool> {
        (0..2 * n).map(|c| copy_is_conjugated(self.lambda_variant(), c)).collect()
    }
}

impl fmt::Display for ReplicaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReplicaVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conj" | "conjugated" => Ok(ReplicaVariant::Conjugated),
            "sym" | "symmetric" => Ok(ReplicaVariant::Symmetric),
            "sym-compressed" | "compressed" => Ok(ReplicaVariant::SymmetricCompressed),
            _ => Err(Error::Config(format!(
                "unknown variant {s:?}; expected conj, sym or sym-compressed"
            ))),
        }
    }
}

/// Result of an SRE evaluation. All logarithms are natural.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SreResult {
    pub n: usize,
    /// Chain length; `None` for thermodynamic-limit densities.
    pub sites: Option<usize>,
    pub chi: usize,
    pub variant: ReplicaVariant,
    /// Total SRE `M`; `None` for densities.
    pub sre: Option<f64>,
    /// `M / N`, or the limit density for TI input.
    pub density: f64,
    /// `ln ⟨Φ|Φ⟩`, per site for TI input.
    pub log_replica_norm: f64,
    /// `ln ⟨ψ|ψ⟩`, per site for TI input.
    pub log_state_norm: f64,
    pub gap_ratio: Option<f64>,
    /// Real multiply–adds spent in the contraction.
    pub flops: u64,
}

pub const CSV_HEADER: &str = "n,N,chi,variant,M,m,log_replica_norm,log_state_norm,gap_ratio";

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SreResult {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.17e},{:.17e},{:.17e},{}",
            self.n,
            opt(self.sites),
            self.chi,
            self.variant,
            opt(self.sre.map(|m| format!("{m:.17e}"))),
            self.density,
            self.log_replica_norm,
            self.log_state_norm,
            opt(self.gap_ratio.map(|g| format!("{g:.17e}"))),
        )
    }
}

/// Write results as CSV with [`CSV_HEADER`].
pub fn write_sre_csv<W: Write>(mut w: W, rows: &[SreResult]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// `M^(n)` of an open chain.
///
/// `conj` and `sym` contract the replica norm matrix-free in real
/// coordinates; `sym-compressed` works on the Klein-invariant bond space.
pub fn sre(psi: &Mps, n: usize, variant: ReplicaVariant) -> Result<SreResult> {
    variant.check(n)?;
    if psi.boundary() != Boundary::Open {
        return Err(Error::Precondition(
            "periodic chains have no open replica boundary; use ti_density or finite_pbc_sre for translation-invariant input"
                .into(),
        ));
    }
    let log_state = psi.log_norm_squared();
    if !log_state.is_finite() {
        return Err(Error::Precondition("state has zero or non-finite norm".into()));
    }
    let mut flops = 0u64;
    let log_replica = match variant {
        ReplicaVariant::SymmetricCompressed => compressed_log_norm(psi, &variant.gamma(n)?, &mut flops)?,
        _ => factorized_log_norm(psi, &variant.conj_mask(n), &mut flops)?,
    };
    let sites = psi.len();
    let m = (log_replica - 2.0 * n as f64 * log_state) / (1.0 - n as f64);
    Ok(SreResult {
        n,
        sites: Some(sites),
        chi: psi.max_bond(),
        variant,
        sre: Some(m),
        density: m / sites as f64,
        log_replica_norm: log_replica,
        log_state_norm: log_state,
        gap_ratio: None,
        flops,
    })
}

fn finish_log(value: f64, log: f64) -> Result<f64> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::Positivity(value));
    }
    Ok(log + value.ln())
}

fn factorized_log_norm(psi: &Mps, mask: &[bool], flops: &mut u64) -> Result<f64> {
    let widest = psi.max_bond().checked_pow(2 * mask.len() as u32).unwrap_or(usize::MAX);
    if widest > LADDER_LIMIT {
        return Err(Error::SizeGuard {
            what: "replica environment entries",
            value: widest,
            limit: LADDER_LIMIT,
        });
    }
    let need_conj = mask.iter().any(|&c| c);
    let mut x = vec![1.0];
    let mut log = 0.0;
    for a in psi.tensors() {
        let maps = SiteMaps::new(a, need_conj);
        x = apply_site(&x, &maps, mask, flops);
        log += rescale(&mut x).ok_or(Error::NonFinite("replica environment"))?;
    }
    finish_log(x[0], log)
}

fn compressed_log_norm(psi: &Mps, gamma: &DenseTensor, flops: &mut u64) -> Result<f64> {
    for a in psi.tensors() {
        let size = compressed_dim(a.shape()[0]) * gamma.nrows() * compressed_dim(a.shape()[2]);
        if size > COMPRESSED_LIMIT {
            return Err(Error::SizeGuard {
                what: "compressed replica site entries",
                value: size,
                limit: COMPRESSED_LIMIT,
            });
        }
    }
    let mut projectors: HashMap<usize, KleinProjector> = HashMap::new();
    for b in psi.bond_dims() {
        projectors.entry(b).or_insert_with(|| klein_projector(b));
    }
    let mut env = KleinEnv::start();
    let mut log = 0.0;
    for a in psi.tensors() {
        let (ql, qr) = (&projectors[&a.shape()[0]], &projectors[&a.shape()[2]]);
        let site = compressed_site(a, gamma, ql, qr);
        env = env.step(&site, flops);
        log += env.rescale().ok_or(Error::NonFinite("compressed replica environment"))?;
    }
    finish_log(env.scalar().re, log)
}
