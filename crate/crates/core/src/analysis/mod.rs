//! Ground-state magic of the Ising chain: field sweeps, peak and
//! finite-size fits, data collapse, rotated bases and basis minimization.

mod collapse;
mod fit;
mod minimize;
mod pipeline;

#[cfg(test)]
mod tests;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{build_ising_mpo, dmrg, DmrgConfig, DmrgResult};
use crate::mps::{gates, Mps};
use crate::par;
use crate::replica::{sre, ReplicaVariant};
use crate::tensor::DenseTensor;

pub use collapse::{collapse, gamma_scan, Collapse, CollapsePoint, GammaScan};
pub use fit::{
    extract_linear, find_extremum, find_peak, fit_log, fit_power_offset, linear_fit, refine_extremum, Extremum,
    LinearDecomposition, LinearFit, Peak, PowerFit,
};
pub use minimize::{minimize_magic, MinimizeConfig, MinimizedMagic};
pub use pipeline::{run_experiment, ExperimentConfig, ExperimentSummary, MinimizationPlan, SCHEMA_VERSION};

/// A χ-convergence warning is raised above this `|m(χ) − m(χ−2)|`.
pub const CHI_TOLERANCE: f64 = 1e-6;

/// Local basis change applied to every site before the SRE.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BasisRotation {
    /// `α = 0`: no rotation at all, not even the global phase.
    Identity,
    X,
    Y,
    Z,
    /// `R_z(θ₁) R_y(θ₂) R_z(θ₃)`.
    Euler(f64, f64, f64),
}

impl BasisRotation {
    pub const AXES: [BasisRotation; 4] = [Self::Identity, Self::X, Self::Y, Self::Z];

    pub fn label(&self) -> String {
        match self {
            Self::Identity => "0".into(),
            Self::X => "x".into(),
            Self::Y => "y".into(),
            Self::Z => "z".into(),
            Self::Euler(a, b, c) => format!("euler:{a},{b},{c}"),
        }
    }

    /// The 2×2 unitary `V`; `None` for the identity.
    pub fn unitary(&self) -> Option<DenseTensor> {
        match *self {
            Self::Identity => None,
            Self::X => Some(gates::basis_rotation(1).expect("valid axis")),
            Self::Y => Some(gates::basis_rotation(2).expect("valid axis")),
            Self::Z => Some(gates::basis_rotation(3).expect("valid axis")),
            Self::Euler(a, b, c) => Some(gates::euler(a, b, c)),
        }
    }

    /// `V^{⊗N} |ψ⟩`.
    pub fn apply(&self, psi: &Mps) -> Result<Mps> {
        match self.unitary() {
            None => Ok(psi.clone()),
            Some(v) => psi.apply_one_site(&v, None),
        }
    }
}

impl fmt::Display for BasisRotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for BasisRotation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "0" | "id" | "identity" | "none" => Ok(Self::Identity),
            "x" => Ok(Self::X),
            "y" => Ok(Self::Y),
            "z" => Ok(Self::Z),
            other => {
                let angles = other
                    .strip_prefix("euler:")
                    .map(|rest| rest.split(',').map(|t| t.trim().parse::<f64>()).collect::<Vec<_>>());
                match angles.as_deref() {
                    Some([Ok(a), Ok(b), Ok(c)]) if [a, b, c].iter().all(|x| x.is_finite()) => {
                        Ok(Self::Euler(*a, *b, *c))
                    }
                    _ => Err(Error::Config(format!("unknown basis {s:?}; expected 0, x, y, z or euler:t1,t2,t3"))),
                }
            }
        }
    }
}

impl Serialize for BasisRotation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for BasisRotation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Settings shared by every point of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// DMRG bond dimension; overrides `dmrg.chi_max`.
    pub chi: usize,
    /// Rényi index.
    pub n: usize,
    /// `None` picks [`ReplicaVariant::default_for`].
    pub variant: Option<ReplicaVariant>,
    /// Also solve at `χ − 2` and flag points that moved by more than [`CHI_TOLERANCE`].
    pub check_chi: bool,
    pub dmrg: DmrgConfig,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            chi: 8,
            n: 2,
            variant: None,
            check_chi: false,
            dmrg: DmrgConfig::default(),
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn variant(&self) -> ReplicaVariant {
        self.variant.unwrap_or(ReplicaVariant::default_for(self.n))
    }

    pub fn validate(&self) -> Result<()> {
        if self.chi < 2 {
            return Err(Error::Config(format!("chi must be at least 2, got {}", self.chi)));
        }
        if self.check_chi && self.chi < 4 {
            return Err(Error::Config("check_chi needs chi ≥ 4".into()));
        }
        self.variant().check(self.n).map_err(|e| Error::Config(e.to_string()))?;
        self.dmrg.validate()
    }

    fn dmrg_at(&self, chi: usize, sites: usize, h: f64) -> DmrgConfig {
        DmrgConfig {
            chi_max: chi,
            seed: split_seed(self.seed, &[sites as u64, h.to_bits()]),
            ..self.dmrg.clone()
        }
    }
}

/// Deterministic child seed of `seed` for the task tagged `tags`
/// (splitmix64 finalizer over the tags).
pub fn split_seed(seed: u64, tags: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    tags.iter()
        .fold(mix(seed.wrapping_add(0x9e37_79b9_7f4a_7c15)), |acc, &t| mix(acc ^ mix(t.wrapping_add(0x9e37_79b9_7f4a_7c15))))
}

/// Ground state of the `sites`-site chain at field `h`, seeded from `cfg.seed`.
pub fn ground_state(h: f64, sites: usize, chi: usize, cfg: &SweepConfig) -> Result<DmrgResult> {
    dmrg(&build_ising_mpo(sites, h)?, &cfg.dmrg_at(chi, sites, h))
}

/// One point of a field sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub h: f64,
    pub sites: usize,
    pub chi: usize,
    pub n: usize,
    pub basis: BasisRotation,
    /// `M`.
    pub sre: f64,
    /// `m = M / N`.
    pub density: f64,
    pub energy: f64,
    pub dmrg_converged: bool,
    pub variance: f64,
    /// `|m(χ) − m(χ−2)|` when checked.
    pub chi_delta: Option<f64>,
}

impl SweepRecord {
    /// Set when the χ − 2 comparison exceeded [`CHI_TOLERANCE`].
    pub fn chi_unconverged(&self) -> bool {
        self.chi_delta.is_some_and(|d| d > CHI_TOLERANCE)
    }

    pub fn key(&self) -> (u64, usize, usize, String) {
        (self.h.to_bits(), self.sites, self.chi, self.basis.label())
    }
}

pub const SWEEP_HEADER: &str = "basis,N,h,chi,n,M,m,energy,variance,dmrg_converged,chi_delta,chi_unconverged";

pub fn write_sweep_csv<W: Write>(mut w: W, records: &[SweepRecord]) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{:.17e},{},{},{:.17e},{:.17e},{:.17e},{:.17e},{},{},{}",
            r.basis,
            r.sites,
            r.h,
            r.chi,
            r.n,
            r.sre,
            r.density,
            r.energy,
            r.variance,
            r.dmrg_converged,
            r.chi_delta.map(|d| format!("{d:.17e}")).unwrap_or_default(),
            r.chi_unconverged(),
        )?;
    }
    Ok(())
}

fn grids_ok(fields: &[f64], sizes: &[usize]) -> Result<()> {
    if fields.is_empty() || sizes.is_empty() {
        return Err(Error::Precondition("sweep grids must be non-empty".into()));
    }
    if let Some(h) = fields.iter().find(|h| !h.is_finite()) {
        return Err(Error::Domain(format!("field h = {h}")));
    }
    Ok(())
}

/// SRE density of the ground state on the grid `fields × sizes`, one
/// record per point and basis in the order `(size, field, basis)`.
///
/// Ground states are shared across bases; points run in parallel.
pub fn sweep_bases(fields: &[f64], sizes: &[usize], bases: &[BasisRotation], cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    grids_ok(fields, sizes)?;
    cfg.validate()?;
    let points: Vec<(usize, f64)> = sizes.iter().flat_map(|&n| fields.iter().map(move |&h| (n, h))).collect();
    let variant = cfg.variant();
    let out = par::map(&points, |&(sites, h)| -> Result<Vec<SweepRecord>> {
        let gs = ground_state(h, sites, cfg.chi, cfg)?;
        let coarse = if cfg.check_chi {
            Some(ground_state(h, sites, cfg.chi - 2, cfg)?)
        } else {
            None
        };
        bases
            .iter()
            .map(|basis| {
                let m = sre(&basis.apply(&gs.state)?, cfg.n, variant)?;
                let sre_val = m.sre.expect("finite chain");
                let density = sre_val / sites as f64;
                let chi_delta = match &coarse {
                    Some(c) => Some((sre(&basis.apply(&c.state)?, cfg.n, variant)?.sre.expect("finite chain") / sites as f64 - density).abs()),
                    None => None,
                };
                if !gs.converged {
                    log::warn!("DMRG unconverged at N = {sites}, h = {h}");
                }
                Ok(SweepRecord {
                    h,
                    sites,
                    chi: cfg.chi,
                    n: cfg.n,
                    basis: *basis,
                    sre: sre_val,
                    density,
                    energy: gs.energy,
                    dmrg_converged: gs.converged,
                    variance: gs.variance,
                    chi_delta,
                })
            })
            .collect()
    });
    Ok(out.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect())
}

/// Unrotated field sweep.
pub fn sweep_density(fields: &[f64], sizes: &[usize], cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    sweep_bases(fields, sizes, &[BasisRotation::Identity], cfg)
}

/// Field sweep in the basis `V^{⊗N}`.
pub fn rotated_sweep(fields: &[f64], sizes: &[usize], basis: BasisRotation, cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    sweep_bases(fields, sizes, &[basis], cfg)
}

/// Rotated-basis density at a single point; used for extremum refinement.
pub fn point_density(h: f64, sites: usize, basis: BasisRotation, cfg: &SweepConfig) -> Result<f64> {
    let gs = ground_state(h, sites, cfg.chi, cfg)?;
    Ok(sre(&basis.apply(&gs.state)?, cfg.n, cfg.variant())?.sre.expect("finite chain") / sites as f64)
}

/// `(h, m)` pairs for one size and basis, sorted by field.
pub fn curve(records: &[SweepRecord], sites: usize, basis: BasisRotation) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.sites == sites && r.basis == basis)
        .map(|r| (r.h, r.density))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts
}
