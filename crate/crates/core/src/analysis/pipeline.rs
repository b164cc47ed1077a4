//! Config-driven Ising experiment writing one CSV per table.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    curve, extract_linear, find_extremum, fit_log, fit_power_offset, gamma_scan, ground_state, minimize_magic,
    point_density, refine_extremum, sweep_bases, write_sweep_csv, BasisRotation, Extremum, MinimizeConfig, Peak,
    PowerFit, SweepConfig, SweepRecord,
};
use crate::error::{Error, Result};
use crate::ising::DmrgConfig;
use crate::par;
use crate::replica::ReplicaVariant;

pub const SCHEMA_VERSION: u32 = 1;

fn default_schema() -> u32 {
    SCHEMA_VERSION
}
fn default_chi() -> usize {
    8
}
fn default_n() -> usize {
    2
}
fn default_bases() -> Vec<BasisRotation> {
    vec![BasisRotation::Identity]
}
fn default_true() -> bool {
    true
}
fn default_delta() -> usize {
    4
}
fn default_gamma() -> f64 {
    0.85
}
fn default_nu() -> f64 {
    1.0
}
fn default_gammas() -> Vec<f64> {
    (0..=14).map(|k| 0.5 + 0.05 * k as f64).collect()
}

/// Ground-state basis minimization on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimizationPlan {
    pub sizes: Vec<usize>,
    pub fields: Vec<f64>,
    /// Bond dimension for these ground states; defaults to the sweep χ.
    #[serde(default)]
    pub chi: Option<usize>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_iters")]
    pub max_iters: u64,
}

fn default_restarts() -> usize {
    5
}
fn default_iters() -> u64 {
    300
}

/// Experiment description. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    /// Chain lengths.
    pub sizes: Vec<usize>,
    /// Transverse fields `h`.
    pub fields: Vec<f64>,
    #[serde(default = "default_chi")]
    pub chi: usize,
    /// Rényi index.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub variant: Option<ReplicaVariant>,
    #[serde(default)]
    pub check_chi: bool,
    #[serde(default)]
    pub dmrg: DmrgConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_bases")]
    pub bases: Vec<BasisRotation>,
    /// Golden-section refinement of every extremum with fresh DMRG runs.
    #[serde(default = "default_true")]
    pub refine: bool,
    /// Size offset for the `D_N`, `c_N` decomposition.
    #[serde(default = "default_delta")]
    pub delta_n: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default)]
    pub collapse_window: Option<(f64, f64)>,
    #[serde(default)]
    pub minimize: Option<MinimizationPlan>,
    /// Output directory; the command line may override it.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Parse and validate. Every unknown key is reported, nested ones as
    /// `dmrg.key` or `minimize.key`.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let unknown = unknown_keys(&value);
        if !unknown.is_empty() {
            return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        let cfg: Self = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            chi: self.chi,
            n: self.n,
            variant: self.variant,
            check_chi: self.check_chi,
            dmrg: self.dmrg.clone(),
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.sizes.is_empty() || self.fields.is_empty() || self.bases.is_empty() {
            return Err(Error::Config("sizes, fields and bases must be non-empty".into()));
        }
        if let Some(n) = self.sizes.iter().find(|&&n| n < 2) {
            return Err(Error::Config(format!("chain length {n} is below 2")));
        }
        if self.fields.iter().any(|h| !h.is_finite()) {
            return Err(Error::Config("fields must be finite".into()));
        }
        if !(self.nu > 0.0) || !self.gamma.is_finite() {
            return Err(Error::Config(format!("γ = {}, ν = {}", self.gamma, self.nu)));
        }
        if let Some(p) = &self.minimize {
            if p.sizes.is_empty() || p.fields.is_empty() || p.restarts == 0 {
                return Err(Error::Config("minimize needs sizes, fields and restarts ≥ 1".into()));
            }
            if p.chi.is_some_and(|c| c < 2) {
                return Err(Error::Config("minimize.chi must be at least 2".into()));
            }
        }
        self.sweep_config().validate()
    }
}

fn keys_of<T: Serialize>(sample: &T) -> Vec<String> {
    match serde_json::to_value(sample) {
        Ok(serde_json::Value::Object(m)) => m.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

fn unknown_keys(value: &serde_json::Value) -> Vec<String> {
    let Some(top) = value.as_object() else {
        return Vec::new();
    };
    let plan = MinimizationPlan {
        sizes: Vec::new(),
        fields: Vec::new(),
        chi: None,
        restarts: default_restarts(),
        max_iters: default_iters(),
    };
    let sample = ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        sizes: Vec::new(),
        fields: Vec::new(),
        chi: default_chi(),
        n: default_n(),
        variant: None,
        check_chi: false,
        dmrg: DmrgConfig::default(),
        seed: 0,
        bases: default_bases(),
        refine: true,
        delta_n: default_delta(),
        gamma: default_gamma(),
        nu: default_nu(),
        gammas: Vec::new(),
        collapse_window: None,
        minimize: Some(plan.clone()),
        out: None,
    };
    let mut out = Vec::new();
    let known = keys_of(&sample);
    for (k, v) in top {
        if !known.contains(k) {
            out.push(k.clone());
            continue;
        }
        let nested = match k.as_str() {
            "dmrg" => keys_of(&DmrgConfig::default()),
            "minimize" => keys_of(&plan),
            _ => continue,
        };
        if let Some(obj) = v.as_object() {
            out.extend(obj.keys().filter(|x| !nested.contains(x)).map(|x| format!("{k}.{x}")));
        }
    }
    out
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentSummary {
    pub records: Vec<SweepRecord>,
    /// `(basis label, N) → (kind, extremum)`.
    pub peaks: BTreeMap<(String, usize), (Extremum, Peak)>,
    /// `(basis label, quantity) → fit`.
    pub fits: BTreeMap<(String, String), PowerFit>,
    /// Points whose DMRG did not meet its tolerance.
    pub unconverged: usize,
    pub files: Vec<PathBuf>,
}

fn csv(dir: &Path, name: &str, files: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    files.push(path.clone());
    Ok(BufWriter::new(File::create(path)?))
}

/// Maximum if the grid has an interior maximum, otherwise an interior minimum.
fn locate(points: &[(f64, f64)]) -> Result<(Extremum, Peak)> {
    match find_extremum(points, Extremum::Max) {
        Ok(p) => Ok((Extremum::Max, p)),
        Err(Error::Bracket(h)) => find_extremum(points, Extremum::Min)
            .map(|p| (Extremum::Min, p))
            .map_err(|_| Error::Bracket(h)),
        Err(e) => Err(e),
    }
}

/// Run the full pipeline and write into `dir`:
/// `sweeps.csv`, `peaks.csv`, `fits.csv`, `fig1a_collapse.csv`,
/// `gamma_scan.csv`, `fig1bc_DN_cN.csv`, `fig2_bases.csv`,
/// `fig3_minmagic.csv` (with a minimization plan), `config.json` and
/// `VERSION`.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<ExperimentSummary> {
    cfg.validate()?;
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    {
        let mut w = csv(dir, "config.json", &mut files)?;
        serde_json::to_writer_pretty(&mut w, cfg)?;
        writeln!(w)?;
    }
    fs::write(dir.join("VERSION"), format!("mps-magic {}\n", env!("CARGO_PKG_VERSION")))?;
    files.push(dir.join("VERSION"));

    let scfg = cfg.sweep_config();
    let mut sizes = cfg.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    let records = sweep_bases(&cfg.fields, &sizes, &cfg.bases, &scfg)?;
    write_sweep_csv(csv(dir, "sweeps.csv", &mut files)?, &records)?;
    let unconverged = records.iter().filter(|r| !r.dmrg_converged).count();

    // extrema
    let jobs: Vec<(BasisRotation, usize)> = cfg.bases.iter().flat_map(|&b| sizes.iter().map(move |&n| (b, n))).collect();
    let found = par::map(&jobs, |&(basis, sites)| -> Result<Option<(Extremum, Peak)>> {
        let pts = curve(&records, sites, basis);
        let (kind, peak) = match locate(&pts) {
            Ok(x) => x,
            Err(e) => {
                log::warn!("no extremum for basis {basis}, N = {sites}: {e}");
                return Ok(None);
            }
        };
        if !cfg.refine {
            return Ok(Some((kind, peak)));
        }
        let refined = refine_extremum(&pts, &peak, kind, |h| point_density(h, sites, basis, &scfg))?;
        Ok(Some((kind, refined)))
    });
    let mut peaks = BTreeMap::new();
    let mut w = csv(dir, "peaks.csv", &mut files)?;
    writeln!(w, "basis,N,kind,h0,m0,bracket_lo,bracket_hi")?;
    for (&(basis, sites), res) in jobs.iter().zip(found) {
        if let Some((kind, p)) = res? {
            writeln!(
                w,
                "{basis},{sites},{},{:.17e},{:.17e},{:.17e},{:.17e}",
                if kind == Extremum::Max { "max" } else { "min" },
                p.h0,
                p.m0,
                p.bracket.0,
                p.bracket.1
            )?;
            peaks.insert((basis.label(), sites), (kind, p));
        }
    }
    drop(w);

    // D_N, c_N
    let mut w = csv(dir, "fig1bc_DN_cN.csv", &mut files)?;
    writeln!(w, "basis,N,delta_N,h,D_N,c_N")?;
    let mut c_ext: BTreeMap<String, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for &basis in &cfg.bases {
        for &sites in &sizes {
            let d = cfg.delta_n;
            if d >= sites || !sizes.contains(&(sites - d)) || !sizes.contains(&(sites + d)) {
                continue;
            }
            let get = |n: usize| curve(&records, n, basis);
            let (lo, mid, hi) = (get(sites - d), get(sites), get(sites + d));
            let mut c_curve = Vec::new();
            for ((a, b), c) in lo.iter().zip(&mid).zip(&hi) {
                let lin = extract_linear(sites, d, [a.1 * (sites - d) as f64, b.1 * sites as f64, c.1 * (sites + d) as f64])?;
                writeln!(w, "{basis},{sites},{d},{:.17e},{:.17e},{:.17e}", b.0, lin.d_n, lin.c_n)?;
                c_curve.push((b.0, lin.c_n));
            }
            if let Ok((_, p)) = locate(&c_curve) {
                c_ext.entry(basis.label()).or_default().push((sites as f64, p.h0, p.m0));
            }
        }
    }
    drop(w);

    // finite-size fits
    let mut fits = BTreeMap::new();
    let mut w = csv(dir, "fits.csv", &mut files)?;
    writeln!(w, "basis,quantity,model,c,eta,b,err_c,err_eta,err_b,rss")?;
    for &basis in &cfg.bases {
        let label = basis.label();
        let pts: Vec<(usize, Peak)> = sizes
            .iter()
            .filter_map(|&n| peaks.get(&(label.clone(), n)).map(|(_, p)| (n, *p)))
            .collect();
        if pts.len() >= 4 {
            for (q, sel) in [("h0", 0), ("m0", 1)] {
                let data: Vec<(f64, f64)> = pts.iter().map(|(n, p)| (*n as f64, if sel == 0 { p.h0 } else { p.m0 })).collect();
                match fit_power_offset(&data) {
                    Ok(f) => {
                        writeln!(
                            w,
                            "{label},{q},power,{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                            f.c, f.eta, f.b, f.errors[0], f.errors[1], f.errors[2], f.rss()
                        )?;
                        fits.insert((label.clone(), q.to_string()), f);
                    }
                    Err(e) => log::warn!("{q} fit for basis {label} failed: {e}"),
                }
            }
        }
        if let Some(ext) = c_ext.get(&label).filter(|e| e.len() >= 3) {
            let data: Vec<(f64, f64)> = ext.iter().map(|&(n, _, c)| (n, c)).collect();
            let (a, b) = fit_log(&data)?;
            writeln!(w, "{label},cN_extremum,log,{a:.17e},,{b:.17e},,,,")?;
        }
    }
    drop(w);

    // collapse of the unrotated data
    let base = cfg.bases.first().copied().unwrap_or(BasisRotation::Identity);
    let base_peaks: BTreeMap<usize, Peak> = peaks
        .iter()
        .filter(|((l, _), _)| *l == base.label())
        .map(|((_, n), (_, p))| (*n, *p))
        .collect();
    let samples: Vec<(usize, f64, f64)> = records
        .iter()
        .filter(|r| r.basis == base && base_peaks.contains_key(&r.sites))
        .map(|r| (r.sites, r.h, r.density))
        .collect();
    if base_peaks.len() >= 2 {
        let col = super::collapse(&samples, &base_peaks, cfg.gamma, cfg.nu, cfg.collapse_window)?;
        col.write_csv(csv(dir, "fig1a_collapse.csv", &mut files)?)?;
        let scan = gamma_scan(&samples, &base_peaks, &cfg.gammas, cfg.nu, cfg.collapse_window)?;
        let mut w = csv(dir, "gamma_scan.csv", &mut files)?;
        writeln!(w, "gamma,quality")?;
        for (g, q) in &scan.scores {
            writeln!(w, "{g:.17e},{q:.17e}")?;
        }
    } else {
        log::warn!("collapse skipped: fewer than two sizes with an extremum");
    }

    let mut w = csv(dir, "fig2_bases.csv", &mut files)?;
    writeln!(w, "basis,N,h,m")?;
    for r in &records {
        writeln!(w, "{},{},{:.17e},{:.17e}", r.basis, r.sites, r.h, r.density)?;
    }
    drop(w);

    if let Some(plan) = &cfg.minimize {
        let chi = plan.chi.unwrap_or(cfg.chi);
        let points: Vec<(usize, f64)> = plan.sizes.iter().flat_map(|&n| plan.fields.iter().map(move |&h| (n, h))).collect();
        let rows = par::map(&points, |&(sites, h)| -> Result<String> {
            let gs = ground_state(h, sites, chi, &scfg)?;
            let mcfg = MinimizeConfig {
                n: cfg.n,
                variant: cfg.variant,
                restarts: plan.restarts,
                max_iters: plan.max_iters,
                seed: super::split_seed(cfg.seed, &[sites as u64, h.to_bits(), 1]),
                ..MinimizeConfig::default()
            };
            let r = minimize_magic(&gs.state, &mcfg)?;
            Ok(format!(
                "{sites},{h:.17e},{chi},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                r.m_unrotated, r.m_min, r.angles[0], r.angles[1], r.angles[2]
            ))
        });
        let mut w = csv(dir, "fig3_minmagic.csv", &mut files)?;
        writeln!(w, "N,h,chi,m,m_min,theta1,theta2,theta3")?;
        for row in rows {
            writeln!(w, "{}", row?)?;
        }
    }

    Ok(ExperimentSummary {
        records,
        peaks,
        fits,
        unconverged,
        files,
    })
}
