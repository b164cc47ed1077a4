use nalgebra::DMatrix;

use super::Statevector;
use crate::error::{Error, Result};
use crate::tensor::{lanczos_lowest, C64};

/// Largest chain diagonalized densely.
pub const ED_DENSE_LIMIT: usize = 10;
/// Largest chain accepted at all.
pub const ED_LIMIT: usize = 14;

fn check(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::dim(format!("Ising chain of {n} sites")));
    }
    if n > ED_LIMIT {
        return Err(Error::SizeGuard {
            what: "exact diagonalization sites",
            value: n,
            limit: ED_LIMIT,
        });
    }
    Ok(())
}

/// `y = H x` for `H = −Σ X_k X_{k+1} − h Σ Z_k` on an open chain.
pub fn ising_apply(n: usize, h: f64, x: &[f64], y: &mut [f64]) {
    for (b, yb) in y.iter_mut().enumerate() {
        let mut diag = 0.0;
        for k in 0..n {
            let bit = (b >> (n - 1 - k)) & 1;
            diag -= h * if bit == 0 { 1.0 } else { -1.0 };
        }
        let mut v = diag * x[b];
        for k in 0..n - 1 {
            let flip = 3usize << (n - 2 - k);
            v -= x[b ^ flip];
        }
        *yb = v;
    }
}

/// Dense row-major Ising Hamiltonian.
pub fn ising_matrix(n: usize, h: f64) -> Result<Vec<f64>> {
    check(n)?;
    let dim = 1usize << n;
    let mut m = vec![0.0; dim * dim];
    let mut e = vec![0.0; dim];
    let mut col = vec![0.0; dim];
    for c in 0..dim {
        e[c] = 1.0;
        ising_apply(n, h, &e, &mut col);
        e[c] = 0.0;
        for r in 0..dim {
            m[r * dim + c] = col[r];
        }
    }
    Ok(m)
}

/// Lowest eigenpair of the open Ising chain.
pub fn ed_ground_state(n: usize, h: f64) -> Result<(f64, Statevector)> {
    check(n)?;
    if !h.is_finite() {
        return Err(Error::Domain(format!("field h = {h}")));
    }
    let dim = 1usize << n;
    let (energy, vec) = if n <= ED_DENSE_LIMIT {
        let m = DMatrix::from_row_slice(dim, dim, &ising_matrix(n, h)?);
        let eig = m.symmetric_eigen();
        let (i, e) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        (e, eig.eigenvectors.column(i).iter().copied().collect::<Vec<f64>>())
    } else {
        // uniform start: overlaps the parity-even ground state
        let start = vec![1.0; dim];
        let r = lanczos_lowest(|x, y| ising_apply(n, h, x, y), &start, 60, 1e-11, 200)?;
        (r.value, r.vector)
    };
    // fix the sign so the largest component is positive
    let pivot = vec.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
    let s = if pivot < 0.0 { -1.0 } else { 1.0 };
    let amps = vec.iter().map(|&v| C64::new(s * v, 0.0)).collect();
    Ok((energy, Statevector::new(n, amps)))
}
