use std::collections::{BTreeMap, HashSet};

use proptest::prelude::*;

use super::*;
use crate::mps::{product_state, t_state_vector};
use crate::oracle::{ed_ground_state, statevector_sre};

fn small_cfg(chi: usize) -> SweepConfig {
    SweepConfig { chi, ..SweepConfig::default() }
}

#[test]
fn parabola_peak_is_exact() {
    let pts: Vec<(f64, f64)> = (0..30).map(|k| 0.8 + 0.01 * k as f64).map(|h| (h, 1.0 - (h - 0.97).powi(2))).collect();
    let p = find_peak(&pts).unwrap();
    assert!((p.h0 - 0.97).abs() < 1e-6, "{p:?}");
    assert!((p.m0 - 1.0).abs() < 1e-9);
    assert!(p.bracket.0 < p.h0 && p.h0 < p.bracket.1);
    // off-grid vertex
    let pts: Vec<(f64, f64)> = (0..9).map(|k| 0.9 + 0.02 * k as f64).map(|h| (h, 2.0 - 3.0 * (h - 0.9731).powi(2))).collect();
    assert!((find_peak(&pts).unwrap().h0 - 0.9731).abs() < 1e-9);
}

#[test]
fn monotone_data_has_no_bracket() {
    let pts: Vec<(f64, f64)> = (0..8).map(|k| (k as f64, k as f64 * 0.1)).collect();
    assert!(matches!(find_peak(&pts), Err(Error::Bracket(h)) if h == 7.0));
    let pts: Vec<(f64, f64)> = (0..8).map(|k| (k as f64, -(k as f64))).collect();
    assert!(matches!(find_peak(&pts), Err(Error::Bracket(h)) if h == 0.0));
    assert!(find_peak(&pts[..4]).is_err());
}

#[test]
fn minimum_search() {
    let pts: Vec<(f64, f64)> = (0..11).map(|k| 0.85 + 0.02 * k as f64).map(|h| (h, 0.1 + (h - 0.943).powi(2))).collect();
    let p = find_extremum(&pts, Extremum::Min).unwrap();
    assert!((p.h0 - 0.943).abs() < 1e-9);
    assert!(matches!(find_extremum(&pts, Extremum::Max), Err(Error::Bracket(_))));
}

#[test]
fn golden_refinement_narrows() {
    let f = |h: f64| 1.0 - (h - 0.9612).powi(2) + 0.3 * (h - 0.9612).powi(3);
    let pts: Vec<(f64, f64)> = (0..11).map(|k| 0.9 + 0.02 * k as f64).map(|h| (h, f(h))).collect();
    let coarse = find_peak(&pts).unwrap();
    let fine = refine_extremum(&pts, &coarse, Extremum::Max, |h| Ok(f(h))).unwrap();
    assert!(fine.bracket.1 - fine.bracket.0 < coarse.bracket.1 - coarse.bracket.0);
    assert!(fine.bracket.0 <= 0.9612 && 0.9612 <= fine.bracket.1);
    assert!((fine.h0 - 0.9612).abs() <= (coarse.h0 - 0.9612).abs() + 1e-12);
    assert!((fine.h0 - 0.9612).abs() < 1e-4);
}

#[test]
fn linear_decomposition_exact() {
    let m = |n: f64| 0.3 * n + 0.2;
    let lin = extract_linear(60, 4, [m(56.0), m(60.0), m(64.0)]).unwrap();
    assert!((lin.d_n - 0.3).abs() < 1e-12 && (lin.c_n - 0.2).abs() < 1e-10);
    let shifted = extract_linear(60, 4, [m(56.0) + 5.0, m(60.0) + 5.0, m(64.0) + 5.0]).unwrap();
    assert!((shifted.d_n - lin.d_n).abs() < 1e-12);
    assert!((shifted.c_n - lin.c_n - 5.0).abs() < 1e-10);
    assert!(extract_linear(4, 4, [0.0; 3]).is_err());
}

#[test]
fn classical_chain_has_no_linear_or_constant_magic() {
    let cfg = small_cfg(4);
    let recs = sweep_density(&[0.0], &[8, 12, 16], &cfg).unwrap();
    let m: Vec<f64> = recs.iter().map(|r| r.sre).collect();
    let lin = extract_linear(12, 4, [m[0], m[1], m[2]]).unwrap();
    assert!(lin.d_n.abs() < 1e-9 && lin.c_n.abs() < 1e-8, "{lin:?}");
}

#[test]
fn power_fit_recovers_exact_model() {
    let pts: Vec<(f64, f64)> = [20.0, 30.0, 40.0, 60.0, 80.0, 120.0].iter().map(|&n: &f64| (n, 2.0 / n + 0.5)).collect();
    let f = fit_power_offset(&pts).unwrap();
    assert!((f.c - 2.0).abs() < 1e-8 && (f.eta - 1.0).abs() < 1e-8 && (f.b - 0.5).abs() < 1e-8, "{f:?}");
    assert!(f.residuals.iter().all(|r| r.abs() < 1e-10));
    assert!(f.errors.iter().all(|e| e.is_finite() && *e < 1e-6));
}

#[test]
fn power_fit_errors() {
    let flat: Vec<(f64, f64)> = (1..=5).map(|k| (10.0 * k as f64, 0.3)).collect();
    assert!(matches!(fit_power_offset(&flat), Err(Error::DegenerateFit(_))));
    assert!(fit_power_offset(&flat[..3]).is_err());
    let unsorted = [(20.0, 1.0), (10.0, 1.1), (30.0, 0.9), (40.0, 0.8)];
    assert!(matches!(fit_power_offset(&unsorted), Err(Error::Precondition(_))));
}

#[test]
fn power_fit_error_bars_scale_with_noise() {
    let noise = [1e-4, -2e-4, 1.5e-4, -0.5e-4, 1e-4, -1e-4, 0.3e-4];
    let pts: Vec<(f64, f64)> = [20.0f64, 30.0, 40.0, 60.0, 80.0, 100.0, 120.0]
        .iter()
        .zip(noise)
        .map(|(&n, e)| (n, 1.5 * n.powf(-0.7) + 0.3 + e))
        .collect();
    let f = fit_power_offset(&pts).unwrap();
    assert!((f.b - 0.3).abs() < 5.0 * f.errors[2] + 1e-3, "{f:?}");
    assert!(f.errors.iter().all(|&e| e > 0.0));
}

#[test]
fn log_fit_exact() {
    let pts: Vec<(f64, f64)> = [10.0f64, 20.0, 40.0, 80.0].iter().map(|&n| (n, 2.0 * n.ln() + 1.0)).collect();
    let (a, b) = fit_log(&pts).unwrap();
    assert!((a - 2.0).abs() < 1e-10 && (b - 1.0).abs() < 1e-10);
    assert!(fit_log(&pts[..2]).is_err());
}

#[test]
fn collapse_of_identical_curves_is_perfect() {
    let mut samples = Vec::new();
    let mut peaks = BTreeMap::new();
    for n in [40usize, 60, 80] {
        let h0 = 1.0 - 0.5 / n as f64;
        let m0 = 0.3 - 0.2 / n as f64;
        peaks.insert(n, Peak { h0, m0, bracket: (h0 - 0.01, h0 + 0.01) });
        for k in 0..21 {
            let x = -2.0 + 0.2 * k as f64;
            let h = h0 + x / n as f64;
            samples.push((n, h, m0 - 0.1 * x * x * (n as f64).powf(-0.85)));
        }
    }
    let c = collapse(&samples, &peaks, 0.85, 1.0, None).unwrap();
    assert!(c.quality < 1e-12, "{}", c.quality);
    let scan = gamma_scan(&samples, &peaks, &[0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 1.0, 1.2], 1.0, None).unwrap();
    assert_eq!(scan.best, 0.85);
    assert!(scan.interval.0 <= 0.85 && scan.interval.1 >= 0.85);
    peaks.remove(&60);
    assert!(matches!(collapse(&samples, &peaks, 0.85, 1.0, None), Err(Error::IncompleteInput(_))));
}

#[test]
fn basis_labels_and_unitaries() {
    for b in BasisRotation::AXES {
        assert_eq!(b.label().parse::<BasisRotation>().unwrap(), b);
        let json = serde_json::to_string(&b).unwrap();
        assert_eq!(serde_json::from_str::<BasisRotation>(&json).unwrap(), b);
        if let Some(v) = b.unitary() {
            assert!(gates::is_unitary(&v, 1e-10));
        }
    }
    assert!(BasisRotation::Identity.unitary().is_none());
    let e: BasisRotation = "euler:0.1,0.2,0.3".parse().unwrap();
    assert_eq!(e, BasisRotation::Euler(0.1, 0.2, 0.3));
    assert!(gates::is_unitary(&e.unitary().unwrap(), 1e-10));
    assert!("w".parse::<BasisRotation>().is_err());
    assert!("euler:1,2".parse::<BasisRotation>().is_err());
    // V_y = cos(π/8) 𝟙 − i sin(π/8) σ^y
    let v = BasisRotation::Y.unitary().unwrap();
    let (c, s) = ((std::f64::consts::PI / 8.0).cos(), (std::f64::consts::PI / 8.0).sin());
    assert!((v.get(&[0, 0]).re - c).abs() < 1e-15 && (v.get(&[0, 1]).re + s).abs() < 1e-15);
    assert!((v.get(&[1, 0]).re - s).abs() < 1e-15 && (v.get(&[1, 1]).re - c).abs() < 1e-15);
}

#[test]
fn rotated_sre_matches_statevector() {
    let cfg = small_cfg(8);
    let gs = ground_state(0.94, 8, 8, &cfg).unwrap();
    let mut bases = BasisRotation::AXES.to_vec();
    bases.push(BasisRotation::Euler(0.3, -1.1, 2.0));
    for b in bases {
        let mps = sre(&b.apply(&gs.state).unwrap(), 2, ReplicaVariant::SymmetricCompressed).unwrap().sre.unwrap();
        let mut sv = gs.state.to_statevector().unwrap();
        if let Some(v) = b.unitary() {
            for k in 0..8 {
                sv = sv.apply_one_site(&v, k).unwrap();
            }
        }
        let exact = statevector_sre(&sv, 2).unwrap();
        assert!((mps - exact).abs() < 1e-8, "{b}: {mps} vs {exact}");
    }
}

#[test]
fn sweep_matches_exact_at_twelve_sites() {
    // χ = 10 is the smallest bond dimension within 1e-8 of the exact state
    let cfg = SweepConfig {
        chi: 10,
        dmrg: DmrgConfig { cutoff: 0.0, ..DmrgConfig::default() },
        ..SweepConfig::default()
    };
    let rec = &sweep_density(&[1.0], &[12], &cfg).unwrap()[0];
    let (_, sv) = ed_ground_state(12, 1.0).unwrap();
    let exact = statevector_sre(&sv, 2).unwrap() / 12.0;
    assert!((rec.density - exact).abs() < 1e-8, "{} vs {exact}", rec.density);
    assert!((rec.density - rec.sre / 12.0).abs() < 1e-12);
}

#[test]
fn identity_basis_reproduces_baseline() {
    let cfg = small_cfg(4);
    let fields = [0.5, 1.0, 1.5];
    let base = sweep_density(&fields, &[10, 14], &cfg).unwrap();
    let rot = rotated_sweep(&fields, &[10, 14], BasisRotation::Identity, &cfg).unwrap();
    assert_eq!(base, rot);
    let keys: HashSet<_> = base.iter().map(|r| r.key()).collect();
    assert_eq!(keys.len(), base.len());
    assert!(base.iter().all(|r| (r.density - r.sre / r.sites as f64).abs() < 1e-12));
}

#[test]
fn chi_check_flags_truncated_points() {
    let cfg = SweepConfig { chi: 4, check_chi: true, ..SweepConfig::default() };
    let recs = sweep_density(&[0.05, 1.0], &[24], &cfg).unwrap();
    assert!(recs.iter().all(|r| r.chi_delta.is_some()));
    // deep in the ordered phase χ = 2 is already exact
    assert!(!recs[0].chi_unconverged(), "{:?}", recs[0].chi_delta);
    assert!(recs[1].chi_unconverged(), "{:?}", recs[1].chi_delta);
    assert!(SweepConfig { chi: 3, check_chi: true, ..SweepConfig::default() }.validate().is_err());
}

#[test]
fn seeds_split_deterministically() {
    assert_eq!(split_seed(7, &[1, 2]), split_seed(7, &[1, 2]));
    assert_ne!(split_seed(7, &[1, 2]), split_seed(7, &[2, 1]));
    assert_ne!(split_seed(7, &[1]), split_seed(8, &[1]));
}

#[test]
fn t_state_magic_is_removable() {
    let psi = product_state(&vec![t_state_vector(); 4]).unwrap();
    let r = minimize_magic(&psi, &MinimizeConfig::default()).unwrap();
    assert!(r.m_min <= 1e-6, "{r:?}");
    assert!(r.m_unrotated > 0.1);
}

#[test]
fn minimization_absorbs_a_pre_rotation() {
    let gs = ground_state(0.7, 6, 4, &small_cfg(4)).unwrap().state;
    let cfg = MinimizeConfig::default();
    let a = minimize_magic(&gs, &cfg).unwrap();
    let rotated = BasisRotation::Euler(0.4, 1.3, -0.8).apply(&gs).unwrap();
    let b = minimize_magic(&rotated, &cfg).unwrap();
    assert!(a.m_min <= a.m_unrotated + 1e-12);
    assert!((a.m_min - b.m_min).abs() < 1e-6, "{} vs {}", a.m_min, b.m_min);
    assert!(minimize_magic(&gs, &MinimizeConfig { restarts: 0, ..cfg }).is_err());
}

fn tiny_experiment() -> ExperimentConfig {
    ExperimentConfig::from_json(
        r#"{
            "sizes": [8, 12, 16, 20],
            "fields": [0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3],
            "chi": 4,
            "bases": ["0", "y"],
            "seed": 11,
            "minimize": {"sizes": [6], "fields": [0.8, 1.0], "restarts": 2, "max_iters": 40}
        }"#,
    )
    .unwrap()
}

#[test]
fn experiment_is_byte_reproducible() {
    let cfg = tiny_experiment();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sa = run_experiment(&cfg, a.path()).unwrap();
    run_experiment(&cfg, b.path()).unwrap();
    for f in &sa.files {
        let name = f.file_name().unwrap();
        assert_eq!(std::fs::read(f).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name:?}");
    }
    for name in ["fig1a_collapse.csv", "fig1bc_DN_cN.csv", "fig2_bases.csv", "fig3_minmagic.csv", "config.json", "VERSION"] {
        assert!(a.path().join(name).exists(), "{name}");
    }
    let resolved: ExperimentConfig =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(resolved, cfg);
    assert!(sa.peaks.contains_key(&("0".to_string(), 20)));
}

#[test]
fn config_rejects_unknown_keys() {
    let err = ExperimentConfig::from_json(r#"{"sizes": [8], "fields": [1.0], "chii": 4}"#).unwrap_err();
    assert!(matches!(&err, Error::Config(m) if m.contains("chii")), "{err}");
    let err = ExperimentConfig::from_json(
        r#"{"sizes": [8], "fields": [1.0], "chii": 4, "seed": 1, "dmrg": {"sweepz": 3}, "minimize": {"sizes": [8], "fields": [1.0], "tol": 1}}"#,
    )
    .unwrap_err()
    .to_string();
    for key in ["chii", "dmrg.sweepz", "minimize.tol"] {
        assert!(err.contains(key), "{err}");
    }
    assert!(!err.contains("seed"));
    let full = serde_json::to_string(&ExperimentConfig::from_json(r#"{"sizes": [8], "fields": [1.0], "minimize": {"sizes": [8], "fields": [1.0]}}"#).unwrap()).unwrap();
    assert!(ExperimentConfig::from_json(&full).is_ok());
    assert!(ExperimentConfig::from_json(r#"{"sizes": [8], "fields": [1.0], "schema_version": 2}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"sizes": [], "fields": [1.0]}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"sizes": [8], "fields": [1.0], "bases": ["q"]}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn prop_power_fit_recovers_parameters(c in 0.2f64..3.0, sign in prop::bool::ANY, eta in 0.3f64..2.0, b in -1.0f64..1.0) {
        let c = if sign { c } else { -c };
        let pts: Vec<(f64, f64)> = [10.0f64, 16.0, 24.0, 32.0, 48.0, 64.0, 96.0, 128.0]
            .iter()
            .map(|&n| (n, c * n.powf(-eta) + b))
            .collect();
        let f = fit_power_offset(&pts).unwrap();
        prop_assert!((f.c - c).abs() < 1e-8, "{f:?}");
        prop_assert!((f.eta - eta).abs() < 1e-8, "{f:?}");
        prop_assert!((f.b - b).abs() < 1e-8, "{f:?}");
    }

    #[test]
    fn prop_linear_shift_invariance(m in prop::array::uniform3(-5.0f64..5.0), shift in -3.0f64..3.0) {
        let a = extract_linear(40, 4, m).unwrap();
        let b = extract_linear(40, 4, m.map(|x| x + shift)).unwrap();
        prop_assert!((a.d_n - b.d_n).abs() < 1e-12);
        prop_assert!((b.c_n - a.c_n - shift).abs() < 1e-9);
    }
}
