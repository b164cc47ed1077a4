//! `mps-magic` command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mps_magic::analysis::{run_experiment, ExperimentConfig};
use mps_magic::mps::{read_mps, t_state_vector};
use mps_magic::oracle::{statevector_sre, Statevector};
use mps_magic::replica::{local_probe, sre, ti_density, write_sre_csv, ReplicaVariant};
use mps_magic::tensor::C64;
use mps_magic::{par, Error, Result};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "mps-magic", version, about = "Stabilizer Rényi entropies of matrix product states")]
struct Cli {
    /// Directory for tables, the resolved config and a version stamp.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Top-level seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Fixture {
    /// `(|0…0⟩ + |1…1⟩)/√2`, 3 sites unless `--sites` is given.
    Ghz,
    /// Product of `(|0⟩ + e^{iπ/4}|1⟩)/√2`, 1 site unless `--sites` is given.
    Tstate,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Brute-force SRE of a dense state vector.
    SreExact {
        /// Text file, one amplitude per line as `re im` or `re,im`; `#` starts a comment.
        #[arg(long, required_unless_present = "fixture", conflicts_with = "fixture")]
        state: Option<PathBuf>,
        #[arg(long, value_enum)]
        fixture: Option<Fixture>,
        #[arg(long)]
        sites: Option<usize>,
        /// Rényi index, an integer above 1.
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..))]
        n: u32,
    },
    /// Replica SRE of an open MPS file.
    SreMps {
        #[arg(long)]
        mps: PathBuf,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..))]
        n: u32,
        /// conj, sym or sym-compressed.
        #[arg(long)]
        variant: Option<ReplicaVariant>,
    },
    /// SRE density of a translation-invariant tensor and its local probes.
    TiDensity {
        /// MPS file holding a translation-invariant chain.
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..))]
        n: u32,
        /// conj or sym.
        #[arg(long)]
        variant: Option<ReplicaVariant>,
        #[arg(long, default_value_t = 16)]
        ell_max: usize,
    },
    /// Ising ground-state magic pipeline driven by a JSON config.
    Ising {
        #[arg(long, alias = "sweep")]
        config: PathBuf,
        #[arg(long)]
        chi: Option<usize>,
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
        n: Option<u32>,
        #[arg(long)]
        variant: Option<ReplicaVariant>,
    },
}

enum Failure {
    Lib(Error),
    /// Raised after all outputs are written when some DMRG runs did not converge.
    Unconverged(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Json(_) | Error::Format(_) | Error::Io(_) | Error::UnsupportedVariant { .. } => 2,
        Error::Convergence { .. } => 4,
        _ => 3,
    }
}

fn read_statevector(path: &Path) -> Result<Statevector> {
    let text = fs::read_to_string(path)?;
    let mut amps = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), k + 1)))
        };
        let z = match parts.as_slice() {
            [re] => C64::new(num(re)?, 0.0),
            [re, im] => C64::new(num(re)?, num(im)?),
            _ => return Err(Error::Format(format!("{}:{}: expected `re im`", path.display(), k + 1))),
        };
        amps.push(z);
    }
    if amps.len() < 2 || !amps.len().is_power_of_two() {
        return Err(Error::Format(format!("{} amplitudes is not a power of two", amps.len())));
    }
    Statevector::try_new(amps.len().trailing_zeros() as usize, amps)
}

fn fixture_state(f: Fixture, sites: Option<usize>) -> Result<Statevector> {
    match f {
        Fixture::Ghz => {
            let n = sites.unwrap_or(3);
            if n == 0 || n > 24 {
                return Err(Error::Config(format!("GHZ fixture needs 1 to 24 sites, got {n}")));
            }
            let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
            amps[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            amps[(1 << n) - 1] = amps[0];
            Statevector::try_new(n, amps)
        }
        Fixture::Tstate => {
            let n = sites.unwrap_or(1);
            if n == 0 || n > 24 {
                return Err(Error::Config(format!("T-state fixture needs 1 to 24 sites, got {n}")));
            }
            Ok(Statevector::product(&vec![t_state_vector(); n]))
        }
    }
}

fn stamp(dir: &Path, config: &Value) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(config)? + "\n")?;
    fs::write(dir.join("VERSION"), format!("mps-magic {}\n", env!("CARGO_PKG_VERSION")))?;
    Ok(())
}

fn show(x: f64) -> String {
    // keep "-0.000000" out of the output
    let x = if x.abs() < 5e-7 { 0.0 } else { x };
    format!("{x:.6}")
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    if let Some(k) = cli.threads {
        par::set_threads(k)?;
    }
    match cli.command {
        Command::SreExact { state, fixture, sites, n } => {
            let sv = match (&state, fixture) {
                (Some(path), _) => read_statevector(path)?,
                (None, Some(f)) => fixture_state(f, sites)?,
                (None, None) => return Err(Error::Config("pass --state or --fixture".into()).into()),
            };
            let m = statevector_sre(&sv, n)?;
            println!("M = {}", show(m));
            if let Some(dir) = &cli.out {
                let config = json!({
                    "command": "sre-exact",
                    "state": state,
                    "fixture": fixture.map(|f| format!("{f:?}").to_lowercase()),
                    "sites": sv.n(),
                    "n": n,
                });
                stamp(dir, &config)?;
                fs::write(dir.join("sre.csv"), format!("n,N,M,m\n{n},{},{m:.17e},{:.17e}\n", sv.n(), m / sv.n() as f64))?;
            }
        }
        Command::SreMps { mps, n, variant } => {
            let psi = read_mps(&mut fs::File::open(&mps)?)?;
            let n = n as usize;
            let variant = variant.unwrap_or(ReplicaVariant::default_for(n));
            let res = sre(&psi, n, variant)?;
            let mut text = Vec::new();
            write_sre_csv(&mut text, std::slice::from_ref(&res))?;
            print!("{}", String::from_utf8_lossy(&text));
            if let Some(dir) = &cli.out {
                stamp(dir, &json!({"command": "sre-mps", "mps": mps, "n": n, "variant": variant}))?;
                fs::write(dir.join("sre.csv"), &text)?;
            }
        }
        Command::TiDensity { tensor, n, variant, ell_max } => {
            let psi = read_mps(&mut fs::File::open(&tensor)?)?;
            if !psi.is_translation_invariant() {
                return Err(Error::Config(format!("{} is not a translation-invariant chain", tensor.display())).into());
            }
            let a = psi.tensor(0);
            let n = n as usize;
            let variant = variant.unwrap_or(ReplicaVariant::Conjugated);
            let res = ti_density(a, n, variant)?;
            println!("m = {}", show(res.density));
            let mut table = String::from("ell,m_ell,m_ell_minus_m\n");
            for ell in 1..=ell_max {
                let m_ell = local_probe(a, n, ell, variant)?;
                table += &format!("{ell},{m_ell:.17e},{:.17e}\n", m_ell - res.density);
            }
            print!("{table}");
            if let Some(dir) = &cli.out {
                let config = json!({
                    "command": "ti-density",
                    "tensor": tensor,
                    "n": n,
                    "variant": variant,
                    "ell_max": ell_max,
                });
                stamp(dir, &config)?;
                let mut text = Vec::new();
                write_sre_csv(&mut text, std::slice::from_ref(&res))?;
                fs::write(dir.join("ti_density.csv"), text)?;
                fs::write(dir.join("local_probe.csv"), table)?;
            }
        }
        Command::Ising { config, chi, n, variant } => {
            let mut cfg = ExperimentConfig::from_json(&fs::read_to_string(&config)?)?;
            if let Some(chi) = chi {
                cfg.chi = chi;
            }
            if let Some(n) = n {
                cfg.n = n as usize;
            }
            if variant.is_some() {
                cfg.variant = variant;
            }
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if cli.out.is_some() {
                cfg.out = cli.out.clone();
            }
            let Some(dir) = cfg.out.clone() else {
                return Err(Error::Config("no output directory; pass --out or set \"out\" in the config".into()).into());
            };
            cfg.validate()?;
            let summary = run_experiment(&cfg, &dir)?;
            for ((basis, sites), (kind, p)) in &summary.peaks {
                log::info!("basis {basis}, N = {sites}: {kind:?} at h = {:.6}, m = {:.6}", p.h0, p.m0);
            }
            println!("wrote {} files to {}", summary.files.len(), dir.display());
            if summary.unconverged > 0 {
                return Err(Failure::Unconverged(summary.unconverged));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Unconverged(k)) => {
            eprintln!("error: {k} DMRG runs did not converge; outputs are flagged in sweeps.csv");
            ExitCode::from(4)
        }
    }
}
