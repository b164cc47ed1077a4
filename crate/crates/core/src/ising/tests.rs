use super::*;
use crate::mps::product_state;
use crate::oracle::{ed_ground_state, ising_matrix};

fn dense_reference(n: usize, h: f64) -> Vec<f64> {
    ising_matrix(n, h).unwrap()
}

#[test]
fn two_site_mpo_by_hand() {
    let h = 0.7;
    let m = build_ising_mpo(2, h).unwrap().to_dense().unwrap();
    // basis |00⟩ |01⟩ |10⟩ |11⟩
    let want = [
        -2.0 * h, 0.0, 0.0, -1.0,
        0.0, 0.0, -1.0, 0.0,
        0.0, -1.0, 0.0, 0.0,
        -1.0, 0.0, 0.0, 2.0 * h,
    ];
    assert!(m.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-15), "{m:?}");
}

#[test]
fn mpo_matches_dense_hamiltonian() {
    for h in [1.0, 0.3] {
        let m = build_ising_mpo(6, h).unwrap().to_dense().unwrap();
        assert_eq!(m, dense_reference(6, h));
    }
}

#[test]
fn classical_bond_count() {
    let plus = [C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0); 2];
    for n in [2, 5, 9] {
        let psi = product_state(&vec![plus; n]).unwrap();
        let e = build_ising_mpo(n, 0.0).unwrap().expectation(&psi).unwrap();
        assert!((e.re + (n as f64 - 1.0)).abs() < 1e-12);
        assert!(e.im.abs() < 1e-14);
    }
}

#[test]
fn composed_mpo_squares() {
    let w = build_ising_mpo(4, 0.8).unwrap();
    let h = w.to_dense().unwrap();
    let h2 = w.compose(&w).unwrap().to_dense().unwrap();
    let dim = 16;
    for i in 0..dim {
        for j in 0..dim {
            let x: f64 = (0..dim).map(|k| h[i * dim + k] * h[k * dim + j]).sum();
            assert!((x - h2[i * dim + j]).abs() < 1e-12);
        }
    }
}

#[test]
fn dense_guard() {
    assert!(matches!(build_ising_mpo(13, 1.0).unwrap().to_dense(), Err(Error::SizeGuard { .. })));
    assert!(build_ising_mpo(1, 1.0).is_err());
}

#[test]
fn dmrg_matches_ed() {
    let cfg = DmrgConfig::default();
    let res = dmrg(&build_ising_mpo(12, 1.0).unwrap(), &cfg).unwrap();
    let (e, sv) = ed_ground_state(12, 1.0).unwrap();
    assert!(res.converged);
    assert!((res.energy - e).abs() < 1e-8, "{} vs {e}", res.energy);
    let ov = res.state.to_statevector().unwrap().inner(&sv).norm_sqr();
    assert!(ov > 1.0 - 1e-8, "fidelity {ov}");
    assert!(res.variance.abs() < 1e-8, "variance {}", res.variance);
}

#[test]
fn sweep_energies_do_not_increase() {
    let cfg = DmrgConfig { chi_max: 6, ..DmrgConfig::default() };
    let res = dmrg(&build_ising_mpo(24, 0.9).unwrap(), &cfg).unwrap();
    assert!(res.log.windows(2).all(|w| w[1].energy <= w[0].energy + 1e-10), "{:#?}", res.log);
    assert!(res.log.iter().all(|r| r.max_bond <= 6));
}

#[test]
fn zero_field_is_classical() {
    let res = dmrg(&build_ising_mpo(10, 0.0).unwrap(), &DmrgConfig::default()).unwrap();
    assert!((res.energy + 9.0).abs() < 1e-9);
    // symmetric cat state: ⟨Z_k Z_{k+1}⟩ irrelevant, ⟨X_0 X_9⟩ = 1
    let p: crate::pauli::PauliString = "XIIIIIIIIX".parse().unwrap();
    assert!((res.state.expectation_pauli(&p).unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn ground_state_has_even_parity() {
    let parity: crate::pauli::PauliString = "Z".repeat(10).parse().unwrap();
    for h in [0.0, 1e-3, 0.6] {
        let cfg = DmrgConfig { chi_max: 4, ..DmrgConfig::default() };
        let res = dmrg(&build_ising_mpo(10, h).unwrap(), &cfg).unwrap();
        assert!((res.state.expectation_pauli(&parity).unwrap() - 1.0).abs() < 1e-10, "h = {h}");
    }
}

#[test]
fn strong_field_is_paramagnetic() {
    let h = 10.0;
    let res = dmrg(&build_ising_mpo(20, h).unwrap(), &DmrgConfig::default()).unwrap();
    assert!((res.energy / 20.0 + h).abs() < 0.01 * h);
}

#[test]
fn fidelity_grows_with_bond_dimension() {
    let mpo = build_ising_mpo(12, 1.0).unwrap();
    let exact = dmrg(&mpo, &DmrgConfig::default()).unwrap().state;
    let fids: Vec<f64> = (2..=6)
        .map(|chi| fidelity(&dmrg(&mpo, &DmrgConfig { chi_max: chi, ..DmrgConfig::default() }).unwrap().state, &exact).unwrap())
        .collect();
    assert!(fids.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{fids:?}");
    assert!(fids.iter().all(|&f| f <= 1.0 + 1e-10));
}

#[test]
fn deterministic_runs() {
    let mpo = build_ising_mpo(16, 0.8).unwrap();
    let cfg = DmrgConfig { chi_max: 4, seed: 3, ..DmrgConfig::default() };
    let (a, b) = (dmrg(&mpo, &cfg).unwrap(), dmrg(&mpo, &cfg).unwrap());
    assert_eq!(a.log, b.log);
    assert_eq!(a.state.tensors(), b.state.tensors());
}

#[test]
fn convergence_csv() {
    let res = dmrg(&build_ising_mpo(6, 1.0).unwrap(), &DmrgConfig::default()).unwrap();
    let mut buf = Vec::new();
    write_convergence_csv(&mut buf, &res.log).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), CONVERGENCE_HEADER);
    assert_eq!(text.lines().count(), res.log.len() + 1);
}

#[test]
fn config_validation() {
    assert!(DmrgConfig { chi_max: 1, ..DmrgConfig::default() }.validate().is_err());
    assert!(DmrgConfig { cutoff: -1.0, ..DmrgConfig::default() }.validate().is_err());
    assert!(DmrgConfig { sweeps: 0, ..DmrgConfig::default() }.validate().is_err());
    let parsed: DmrgConfig = serde_json::from_str(r#"{"chi_max": 8}"#).unwrap();
    assert_eq!(parsed.chi_max, 8);
    assert_eq!(parsed.sweeps, 30);
    assert!(serde_json::from_str::<DmrgConfig>(r#"{"chimax": 8}"#).is_err());
}
