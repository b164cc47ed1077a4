//! Open transverse-field Ising chain `H = −Σ X_k X_{k+1} − h Σ Z_k`:
//! MPO, two-site DMRG and diagnostics.

mod dmrg;

#[cfg(test)]
mod tests;

use crate::error::{Error, Result};
use crate::mps::{Mps, PHYS};
use crate::tensor::{C64, ZERO};

pub use crate::mps::fidelity;
pub use dmrg::{dmrg, write_convergence_csv, DmrgConfig, DmrgResult, SweepLog, CONVERGENCE_HEADER};

/// Largest chain for which [`Mpo::to_dense`] is allowed.
pub const DENSE_MPO_LIMIT: usize = 12;

/// Matrix product operator with real site tensors `W[w, s, s', w']`
/// (`s` row, `s'` column of the local operator).
#[derive(Clone, Debug)]
pub struct Mpo {
    sites: Vec<Vec<f64>>,
    /// Bond extents `0..=N`; both edges are one.
    bonds: Vec<usize>,
}

const ID: [f64; 4] = [1.0, 0.0, 0.0, 1.0];
const X: [f64; 4] = [0.0, 1.0, 1.0, 0.0];
const Z: [f64; 4] = [1.0, 0.0, 0.0, -1.0];

/// Bond-3 MPO of the Ising chain. Bulk
/// ```text
/// W = | 𝟙    0   0 |
///     | X    0   0 |
///     | −hZ  −X  𝟙 |
/// ```
/// with the last row at the left edge and the first column at the right.
pub fn build_ising_mpo(n: usize, h: f64) -> Result<Mpo> {
    if n < 2 {
        return Err(Error::dim(format!("Ising chain of {n} sites")));
    }
    if !h.is_finite() {
        return Err(Error::Domain(format!("field h = {h}")));
    }
    let mut bulk = vec![[0.0; 4]; 9];
    let mut put = |w: usize, wp: usize, op: [f64; 4], c: f64| bulk[w * 3 + wp] = op.map(|x| c * x);
    put(0, 0, ID, 1.0);
    put(1, 0, X, 1.0);
    put(2, 0, Z, -h);
    put(2, 1, X, -1.0);
    put(2, 2, ID, 1.0);
    let site = |rows: &[usize], cols: &[usize]| {
        let mut t = vec![0.0; rows.len() * 4 * cols.len()];
        for (i, &w) in rows.iter().enumerate() {
            for (j, &wp) in cols.iter().enumerate() {
                for s in 0..2 {
                    for sp in 0..2 {
                        t[((i * 2 + s) * 2 + sp) * cols.len() + j] = bulk[w * 3 + wp][s * 2 + sp];
                    }
                }
            }
        }
        t
    };
    let all = [0, 1, 2];
    let mut sites = vec![site(&[2], &all)];
    for _ in 1..n - 1 {
        sites.push(site(&all, &all));
    }
    sites.push(site(&all, &[0]));
    let mut bonds = vec![1];
    bonds.extend(std::iter::repeat_n(3, n - 1));
    bonds.push(1);
    Ok(Mpo { sites, bonds })
}

impl Mpo {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn bond_dims(&self) -> &[usize] {
        &self.bonds
    }

    pub fn site(&self, k: usize) -> &[f64] {
        &self.sites[k]
    }

    fn at(&self, k: usize, w: usize, s: usize, sp: usize, wp: usize) -> f64 {
        self.sites[k][((w * PHYS + s) * PHYS + sp) * self.bonds[k + 1] + wp]
    }

    /// Operator product `self · other`, bond extents multiply.
    pub fn compose(&self, other: &Mpo) -> Result<Mpo> {
        if self.len() != other.len() {
            return Err(Error::dim("composing MPOs of different lengths"));
        }
        let mut sites = Vec::with_capacity(self.len());
        for k in 0..self.len() {
            let (al, ar) = (self.bonds[k], self.bonds[k + 1]);
            let (bl, br) = (other.bonds[k], other.bonds[k + 1]);
            let mut t = vec![0.0; al * bl * 4 * ar * br];
            for w1 in 0..al {
                for w2 in 0..bl {
                    for s in 0..2 {
                        for spp in 0..2 {
                            for v1 in 0..ar {
                                for v2 in 0..br {
                                    let x: f64 = (0..2)
                                        .map(|sp| self.at(k, w1, s, sp, v1) * other.at(k, w2, sp, spp, v2))
                                        .sum();
                                    t[((((w1 * bl + w2) * 2 + s) * 2 + spp) * ar + v1) * br + v2] = x;
                                }
                            }
                        }
                    }
                }
            }
            sites.push(t);
        }
        let bonds = self.bonds.iter().zip(&other.bonds).map(|(a, b)| a * b).collect();
        Ok(Mpo { sites, bonds })
    }

    /// Dense row-major matrix, site 0 the most significant bit.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        let n = self.len();
        if n > DENSE_MPO_LIMIT {
            return Err(Error::SizeGuard {
                what: "dense MPO sites",
                value: n,
                limit: DENSE_MPO_LIMIT,
            });
        }
        // acc[(row, col), w] over the sites so far
        let mut acc = vec![1.0];
        let mut dim = 1;
        for k in 0..n {
            let (wl, wr) = (self.bonds[k], self.bonds[k + 1]);
            let nd = dim * 2;
            let mut next = vec![0.0; nd * nd * wr];
            for r in 0..dim {
                for c in 0..dim {
                    for w in 0..wl {
                        let a = acc[(r * dim + c) * wl + w];
                        if a == 0.0 {
                            continue;
                        }
                        for s in 0..2 {
                            for sp in 0..2 {
                                for wp in 0..wr {
                                    next[((r * 2 + s) * nd + c * 2 + sp) * wr + wp] += a * self.at(k, w, s, sp, wp);
                                }
                            }
                        }
                    }
                }
            }
            acc = next;
            dim = nd;
        }
        Ok(acc)
    }

    /// `⟨ψ|W|ψ⟩ / ⟨ψ|ψ⟩`.
    pub fn expectation(&self, psi: &Mps) -> Result<C64> {
        if psi.len() != self.len() {
            return Err(Error::dim(format!("MPO of {} sites on a chain of {}", self.len(), psi.len())));
        }
        if psi.boundary() != crate::mps::Boundary::Open {
            return Err(Error::Precondition("MPO expectations need an open chain".into()));
        }
        let mut env = vec![C64::new(1.0, 0.0)];
        let mut log = 0.0;
        for (k, a) in psi.tensors().iter().enumerate() {
            let (cl, cr) = (a.shape()[0], a.shape()[2]);
            let (wl, wr) = (self.bonds[k], self.bonds[k + 1]);
            let at = |x: usize, s: usize, y: usize| a.data()[(x * 2 + s) * cr + y];
            // t1[a', w, s', b] = Σ_a env[a', w, a] A[a, s', b]
            let mut t1 = vec![ZERO; cl * wl * 2 * cr];
            for ap in 0..cl {
                for w in 0..wl {
                    for x in 0..cl {
                        let e = env[(ap * wl + w) * cl + x];
                        if e == ZERO {
                            continue;
                        }
                        for sp in 0..2 {
                            for y in 0..cr {
                                t1[((ap * wl + w) * 2 + sp) * cr + y] += e * at(x, sp, y);
                            }
                        }
                    }
                }
            }
            // t2[a', s, w', b] = Σ_{w, s'} W[w, s, s', w'] t1[a', w, s', b]
            let mut t2 = vec![ZERO; cl * 2 * wr * cr];
            for ap in 0..cl {
                for w in 0..wl {
                    for s in 0..2 {
                        for sp in 0..2 {
                            for wp in 0..wr {
                                let c = self.at(k, w, s, sp, wp);
                                if c == 0.0 {
                                    continue;
                                }
                                for y in 0..cr {
                                    t2[((ap * 2 + s) * wr + wp) * cr + y] += c * t1[((ap * wl + w) * 2 + sp) * cr + y];
                                }
                            }
                        }
                    }
                }
            }
            // env'[b', w', b] = Σ_{a', s} conj(A[a', s, b']) t2[a', s, w', b]
            let mut next = vec![ZERO; cr * wr * cr];
            for ap in 0..cl {
                for s in 0..2 {
                    for bp in 0..cr {
                        let c = at(ap, s, bp).conj();
                        if c == ZERO {
                            continue;
                        }
                        for wp in 0..wr {
                            for y in 0..cr {
                                next[(bp * wr + wp) * cr + y] += c * t2[((ap * 2 + s) * wr + wp) * cr + y];
                            }
                        }
                    }
                }
            }
            let scale = next.iter().fold(0.0f64, |m, z| m.max(z.norm()));
            if scale > 0.0 {
                next.iter_mut().for_each(|z| *z /= scale);
                log += scale.ln();
            }
            env = next;
        }
        let norm = psi.log_norm_squared();
        Ok(env[0] * (log - norm).exp())
    }

    /// `⟨H²⟩ − ⟨H⟩²` for a normalized or unnormalized state.
    pub fn variance(&self, psi: &Mps) -> Result<f64> {
        let e = self.expectation(psi)?.re;
        let e2 = self.compose(self)?.expectation(psi)?.re;
        Ok(e2 - e * e)
    }
}
