use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Statevector;
use crate::error::{Error, Result};
use crate::mps::{gates, product_bits, Mps};
use crate::tensor::DenseTensor;

/// One gate of a random Clifford circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CliffordGate {
    H(usize),
    S(usize),
    /// Control on the first site of the bond.
    Cnot(usize),
    /// Control on the second site of the bond.
    CnotReversed(usize),
}

fn random_layer(rng: &mut ChaCha8Rng, n: usize, layer: usize, out: &mut Vec<CliffordGate>) {
    for k in 0..n {
        match rng.random_range(0..3) {
            0 => out.push(CliffordGate::H(k)),
            1 => out.push(CliffordGate::S(k)),
            _ => {}
        }
    }
    // brickwork of entangling gates
    let mut k = layer % 2;
    while k + 1 < n {
        match rng.random_range(0..3) {
            0 => out.push(CliffordGate::Cnot(k)),
            1 => out.push(CliffordGate::CnotReversed(k)),
            _ => {}
        }
        k += 2;
    }
}

/// Random H/S/CNOT circuit of `depth` layers.
pub fn random_clifford_circuit(n: usize, depth: usize, seed: u64) -> Vec<CliffordGate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gates = Vec::new();
    for layer in 0..depth {
        random_layer(&mut rng, n, layer, &mut gates);
    }
    gates
}

fn gate_matrix(g: CliffordGate) -> (DenseTensor, usize, bool) {
    match g {
        CliffordGate::H(k) => (gates::hadamard(), k, false),
        CliffordGate::S(k) => (gates::s_gate(), k, false),
        CliffordGate::Cnot(k) => (gates::cnot(), k, true),
        CliffordGate::CnotReversed(k) => (gates::cnot_reversed(), k, true),
    }
}

/// Apply a gate list to an open-chain MPS with lossless splits.
pub fn apply_circuit_mps(mps: &Mps, circuit: &[CliffordGate]) -> Result<Mps> {
    let mut m = mps.clone();
    for &g in circuit {
        let (u, k, two) = gate_matrix(g);
        m = if two {
            m.apply_two_site(&u, k, usize::MAX, 1e-13)?.0
        } else {
            m.apply_one_site(&u, Some(k))?
        };
    }
    Ok(m)
}

pub fn apply_circuit_statevector(sv: &Statevector, circuit: &[CliffordGate]) -> Result<Statevector> {
    let mut s = sv.clone();
    for &g in circuit {
        let (u, k, two) = gate_matrix(g);
        s = if two { s.apply_two_site(&u, k)? } else { s.apply_one_site(&u, k)? };
    }
    Ok(s)
}

/// The state of a random Clifford circuit acting on `|0…0⟩`, as a
/// statevector and as an MPS.
pub fn clifford_fixtures(seed: u64, n: usize, depth: usize) -> Result<(Statevector, Mps)> {
    if n == 0 || n > super::SRE_LIMIT {
        return Err(Error::SizeGuard {
            what: "Clifford fixture sites",
            value: n,
            limit: super::SRE_LIMIT,
        });
    }
    let circuit = random_clifford_circuit(n, depth, seed);
    let sv = apply_circuit_statevector(&Statevector::zero_state(n), &circuit)?;
    let mps = apply_circuit_mps(&product_bits(&vec![0; n])?, &circuit)?;
    Ok((sv, mps))
}
