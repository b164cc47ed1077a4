//! Minimum SRE density over uniform single-qubit basis changes.

use std::f64::consts::PI;

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{split_seed, BasisRotation};
use crate::error::{Error, Result};
use crate::mps::Mps;
use crate::par;
use crate::replica::{sre, ReplicaVariant};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizeConfig {
    pub n: usize,
    pub variant: Option<ReplicaVariant>,
    pub restarts: usize,
    pub max_iters: u64,
    /// Simplex spread at which a restart stops.
    pub tol: f64,
    /// Edge of the initial simplex, radians.
    pub step: f64,
    pub seed: u64,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            n: 2,
            variant: None,
            restarts: 5,
            max_iters: 300,
            tol: 1e-10,
            step: 0.6,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizedMagic {
    /// Smallest density found.
    pub m_min: f64,
    /// Density in the original basis.
    pub m_unrotated: f64,
    /// Euler angles of the best `V`.
    pub angles: [f64; 3],
    pub evaluations: u64,
}

impl MinimizedMagic {
    pub fn basis(&self) -> BasisRotation {
        let [a, b, c] = self.angles;
        BasisRotation::Euler(a, b, c)
    }
}

struct Density<'a> {
    psi: &'a Mps,
    n: usize,
    variant: ReplicaVariant,
}

impl Density<'_> {
    fn at(&self, t: &[f64]) -> Result<f64> {
        let v = BasisRotation::Euler(t[0], t[1], t[2]).apply(self.psi)?;
        Ok(sre(&v, self.n, self.variant)?.sre.expect("finite chain") / self.psi.len() as f64)
    }
}

impl CostFunction for Density<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        self.at(p).map_err(|e| argmin::core::Error::msg(e.to_string()))
    }
}

/// Nelder–Mead over `V = R_z(θ₁) R_y(θ₂) R_z(θ₃)` applied to every site.
/// The first restart starts at `V = 𝟙`, the others at seeded random angles;
/// restarts run concurrently.
pub fn minimize_magic(psi: &Mps, cfg: &MinimizeConfig) -> Result<MinimizedMagic> {
    if cfg.restarts == 0 {
        return Err(Error::Config("restarts must be at least 1".into()));
    }
    let variant = cfg.variant.unwrap_or(ReplicaVariant::default_for(cfg.n));
    variant.check(cfg.n)?;
    let m_unrotated = sre(psi, cfg.n, variant)?.sre.expect("finite chain") / psi.len() as f64;
    let runs = par::map_range(cfg.restarts, |r| -> Result<(f64, Vec<f64>, u64)> {
        let start: Vec<f64> = if r == 0 {
            vec![0.0; 3]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(split_seed(cfg.seed, &[r as u64]));
            (0..3).map(|_| rng.random_range(-PI..PI)).collect()
        };
        let mut simplex = vec![start.clone()];
        for k in 0..3 {
            let mut v = start.clone();
            v[k] += cfg.step;
            simplex.push(v);
        }
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(cfg.tol)
            .map_err(|e| Error::Config(e.to_string()))?;
        let problem = Density { psi, n: cfg.n, variant };
        let res = Executor::new(problem, solver)
            .configure(|s| s.max_iters(cfg.max_iters))
            .run()
            .map_err(|e| Error::Precondition(format!("basis minimization failed: {e}")))?;
        let st = res.state();
        let evals = st.get_func_counts().values().sum();
        let best = st.best_param.clone().unwrap_or(start);
        Ok((st.best_cost, best, evals))
    });
    let mut out = MinimizedMagic {
        m_min: m_unrotated,
        m_unrotated,
        angles: [0.0; 3],
        evaluations: 0,
    };
    for run in runs {
        let (cost, angles, evals) = run?;
        out.evaluations += evals;
        if cost < out.m_min {
            out.m_min = cost;
            out.angles = [angles[0], angles[1], angles[2]];
        }
    }
    Ok(out)
}
