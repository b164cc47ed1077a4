//! Real two-site DMRG.

use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Mpo;
use crate::error::{Error, Result};
use crate::mps::Mps;
use crate::tensor::{dgemm, dgemm_strided, lanczos_lowest, DenseTensor, C64};

const KRYLOV: usize = 24;
const LOCAL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DmrgConfig {
    pub chi_max: usize,
    /// Relative singular-value cutoff.
    pub cutoff: f64,
    pub sweeps: usize,
    /// Stop when the sweep energy changes by less than this.
    pub tol: f64,
    /// Lanczos restarts allowed per local update.
    pub solver_restarts: usize,
    pub seed: u64,
}

impl Default for DmrgConfig {
    fn default() -> Self {
        Self {
            chi_max: 16,
            cutoff: 1e-12,
            sweeps: 30,
            tol: 1e-10,
            solver_restarts: 100,
            seed: 0,
        }
    }
}

impl DmrgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chi_max < 2 {
            return Err(Error::Config(format!("chi_max must be at least 2, got {}", self.chi_max)));
        }
        if !(self.cutoff >= 0.0) {
            return Err(Error::Config(format!("cutoff must be nonnegative, got {}", self.cutoff)));
        }
        if self.sweeps == 0 || self.solver_restarts == 0 {
            return Err(Error::Config("sweeps and solver_restarts must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepLog {
    pub sweep: usize,
    pub energy: f64,
    pub max_bond: usize,
    /// Largest discarded weight of the sweep.
    pub truncation_weight: f64,
}

#[derive(Clone, Debug)]
pub struct DmrgResult {
    pub energy: f64,
    /// Right-canonical with the orthogonality center on site 0.
    pub state: Mps,
    pub log: Vec<SweepLog>,
    pub converged: bool,
    pub variance: f64,
}

pub const CONVERGENCE_HEADER: &str = "sweep,energy,max_bond,truncation_weight";

pub fn write_convergence_csv<W: Write>(mut w: W, log: &[SweepLog]) -> Result<()> {
    writeln!(w, "{CONVERGENCE_HEADER}")?;
    for r in log {
        writeln!(w, "{},{:.17e},{},{:.17e}", r.sweep, r.energy, r.max_bond, r.truncation_weight)?;
    }
    Ok(())
}

/// Site tensor `(l, 2, r)` stored row-major.
#[derive(Clone, Debug)]
struct Site {
    l: usize,
    r: usize,
    data: Vec<f64>,
}

/// Random real χ = 2 chain of even parity: the bond index carries the
/// parity of everything to its left.
fn even_parity_start(n: usize, seed: u64) -> Vec<Site> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let l = if k == 0 { 1 } else { 2 };
            let r = if k == n - 1 { 1 } else { 2 };
            let mut data = vec![0.0; l * 2 * r];
            for p in 0..l {
                for s in 0..2 {
                    let q = p ^ s;
                    if q < r {
                        data[(p * 2 + s) * r + q] = rng.random_range(0.5..1.5);
                    }
                }
            }
            Site { l, r, data }
        })
        .collect()
}

struct Split {
    u: Vec<f64>,
    s: Vec<f64>,
    vt: Vec<f64>,
    /// Parity of everything left of each kept bond state.
    par: Vec<u8>,
    discarded: f64,
}

/// Truncated real SVD of a parity-even matrix, one block per parity;
/// singular values below `cutoff · ‖s‖` dropped. Entries joining rows and
/// columns of different parity are ignored.
fn split(m: &[f64], rows: &[u8], cols: &[u8], max_rank: usize, cutoff: f64) -> Split {
    let nc = cols.len();
    // (σ, parity, left vector, right vector)
    let mut triplets: Vec<(f64, u8, Vec<f64>, Vec<f64>)> = Vec::new();
    for p in 0..2u8 {
        let ri: Vec<usize> = (0..rows.len()).filter(|&i| rows[i] == p).collect();
        let ci: Vec<usize> = (0..nc).filter(|&j| cols[j] == p).collect();
        if ri.is_empty() || ci.is_empty() {
            continue;
        }
        let block = DMatrix::from_fn(ri.len(), ci.len(), |a, b| m[ri[a] * nc + ci[b]]);
        let svd = block.svd(true, true);
        let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
        for (k, &sigma) in svd.singular_values.iter().enumerate() {
            let mut left = vec![0.0; rows.len()];
            ri.iter().enumerate().for_each(|(a, &i)| left[i] = u[(a, k)]);
            let mut right = vec![0.0; nc];
            ci.iter().enumerate().for_each(|(b, &j)| right[j] = vt[(k, b)]);
            triplets.push((sigma, p, left, right));
        }
    }
    triplets.sort_by(|a, b| b.0.total_cmp(&a.0));
    let norm = triplets.iter().map(|t| t.0 * t.0).sum::<f64>().sqrt();
    let keep = triplets
        .iter()
        .take_while(|t| t.0 > cutoff * norm)
        .count()
        .clamp(1, max_rank);
    let discarded = triplets[keep..].iter().map(|t| t.0 * t.0).sum::<f64>() / (norm * norm).max(f64::MIN_POSITIVE);
    triplets.truncate(keep);
    Split {
        u: (0..rows.len()).flat_map(|i| triplets.iter().map(move |t| t.2[i])).collect(),
        s: triplets.iter().map(|t| t.0).collect(),
        vt: triplets.iter().flat_map(|t| t.3.iter().copied()).collect(),
        par: triplets.iter().map(|t| t.1).collect(),
        discarded,
    }
}

/// Parities of the row `(a, s)` and column `(s, b)` indices of a two-site
/// block, or of a single site when `two` is false.
fn labels(left: &[u8], right: &[u8], two: bool) -> (Vec<u8>, Vec<u8>) {
    let rows = if two {
        left.iter().flat_map(|&p| [p, p ^ 1]).collect()
    } else {
        left.to_vec()
    };
    let cols = [0u8, 1].iter().flat_map(|&s| right.iter().map(move |&p| p ^ s)).collect();
    (rows, cols)
}

fn project_even(v: &mut [f64], rows: &[u8], cols: &[u8]) {
    let nc = cols.len();
    for (i, x) in v.iter_mut().enumerate() {
        if rows[i / nc] != cols[i % nc] {
            *x = 0.0;
        }
    }
}

/// Environment `[bra, w, ket]`.
#[derive(Clone, Debug)]
struct Env {
    chi: usize,
    data: Vec<f64>,
}

impl Env {
    fn edge() -> Self {
        Self { chi: 1, data: vec![1.0] }
    }
}

fn w_at(mpo: &Mpo, k: usize) -> (usize, usize, &[f64]) {
    (mpo.bonds[k], mpo.bonds[k + 1], mpo.site(k))
}

/// Left environment through site `k`: `L'[b', w', b] = Σ A[a',s,b'] W[w,s,s',w'] A[a,s',b] L[a',w,a]`.
fn grow_left(env: &Env, a: &Site, mpo: &Mpo, k: usize) -> Env {
    let (wl, wr, w) = w_at(mpo, k);
    let (cl, cr) = (a.l, a.r);
    let mut t1 = vec![0.0; cl * wl * 2 * cr];
    dgemm(cl * wl, cl, 2 * cr, &env.data, &a.data, 0.0, &mut t1);
    let mut t2 = vec![0.0; cl * 2 * wr * cr];
    for ap in 0..cl {
        for x in 0..wl {
            for s in 0..2 {
                for sp in 0..2 {
                    for y in 0..wr {
                        let c = w[((x * 2 + s) * 2 + sp) * wr + y];
                        if c == 0.0 {
                            continue;
                        }
                        let src = &t1[((ap * wl + x) * 2 + sp) * cr..][..cr];
                        let dst = &mut t2[((ap * 2 + s) * wr + y) * cr..][..cr];
                        dst.iter_mut().zip(src).for_each(|(d, v)| *d += c * v);
                    }
                }
            }
        }
    }
    let mut out = vec![0.0; cr * wr * cr];
    dgemm_strided(cr, cl * 2, wr * cr, &a.data, (1, cr), &t2, (wr * cr, 1), 0.0, &mut out, (wr * cr, 1));
    Env { chi: cr, data: out }
}

/// Right environment through site `k`: `R'[a', w, a] = Σ B[a',s,b'] W[w,s,s',w'] B[a,s',b] R[b',w',b]`.
fn grow_right(env: &Env, b: &Site, mpo: &Mpo, k: usize) -> Env {
    let (wl, wr, w) = w_at(mpo, k);
    let (cl, cr) = (b.l, b.r);
    // t1[a, s', b', w'] = Σ_b B[a, s', b] R[b', w', b]
    let mut t1 = vec![0.0; cl * 2 * cr * wr];
    dgemm_strided(cl * 2, cr, cr * wr, &b.data, (cr, 1), &env.data, (1, cr), 0.0, &mut t1, (cr * wr, 1));
    // t2[w, a, s, b'] = Σ_{s', w'} W[w, s, s', w'] t1[a, s', b', w']
    let mut t2 = vec![0.0; wl * cl * 2 * cr];
    for x in 0..wl {
        for s in 0..2 {
            for sp in 0..2 {
                for y in 0..wr {
                    let c = w[((x * 2 + s) * 2 + sp) * wr + y];
                    if c == 0.0 {
                        continue;
                    }
                    for a in 0..cl {
                        for bp in 0..cr {
                            t2[((x * cl + a) * 2 + s) * cr + bp] += c * t1[((a * 2 + sp) * cr + bp) * wr + y];
                        }
                    }
                }
            }
        }
    }
    // R'[a', w, a] = Σ_{s, b'} B[a', s, b'] t2[w, a, s, b']
    let mut out = vec![0.0; cl * wl * cl];
    dgemm_strided(cl, 2 * cr, wl * cl, &b.data, (2 * cr, 1), &t2, (1, 2 * cr), 0.0, &mut out, (wl * cl, 1));
    Env { chi: cl, data: out }
}

/// Two-site effective Hamiltonian on `θ[a, s1, s2, b]`.
struct Effective<'a> {
    left: &'a Env,
    right: &'a Env,
    w1: (usize, usize, &'a [f64]),
    w2: (usize, usize, &'a [f64]),
}

impl Effective<'_> {
    fn apply(&self, theta: &[f64], out: &mut [f64]) {
        let (cl, cr) = (self.left.chi, self.right.chi);
        let (wa, wb, w1) = self.w1;
        let (_, wc, w2) = self.w2;
        // x1[al, w, s1, s2, b]
        let mut x1 = vec![0.0; cl * wa * 4 * cr];
        dgemm(cl * wa, cl, 4 * cr, &self.left.data, theta, 0.0, &mut x1);
        // x2[al, s1', w2, s2, b]
        let blk = 2 * cr;
        let mut x2 = vec![0.0; cl * 2 * wb * blk];
        for al in 0..cl {
            for w in 0..wa {
                for so in 0..2 {
                    for si in 0..2 {
                        for v in 0..wb {
                            let c = w1[((w * 2 + so) * 2 + si) * wb + v];
                            if c == 0.0 {
                                continue;
                            }
                            let src = &x1[((al * wa + w) * 2 + si) * blk..][..blk];
                            let dst = &mut x2[((al * 2 + so) * wb + v) * blk..][..blk];
                            dst.iter_mut().zip(src).for_each(|(d, x)| *d += c * x);
                        }
                    }
                }
            }
        }
        // x3[al, s1', s2', w3, b]
        let mut x3 = vec![0.0; cl * 4 * wc * cr];
        for p in 0..cl * 2 {
            for v in 0..wb {
                for so in 0..2 {
                    for si in 0..2 {
                        for u in 0..wc {
                            let c = w2[((v * 2 + so) * 2 + si) * wc + u];
                            if c == 0.0 {
                                continue;
                            }
                            let src = &x2[((p * wb + v) * 2 + si) * cr..][..cr];
                            let dst = &mut x3[((p * 2 + so) * wc + u) * cr..][..cr];
                            dst.iter_mut().zip(src).for_each(|(d, x)| *d += c * x);
                        }
                    }
                }
            }
        }
        // out[al, s1', s2', br] = Σ_{w3, b} x3[.., w3, b] R[br, w3, b]
        let k = wc * cr;
        dgemm_strided(cl * 4, k, cr, &x3, (k, 1), &self.right.data, (1, k), 0.0, out, (cr, 1));
    }
}

fn recompose(sp: &Split, rows: usize, cols: usize) -> Vec<f64> {
    let k = sp.s.len();
    let us: Vec<f64> = (0..rows * k).map(|i| sp.u[i] * sp.s[i % k]).collect();
    let mut out = vec![0.0; rows * cols];
    dgemm(rows, k, cols, &us, &sp.vt, 0.0, &mut out);
    out
}

fn rayleigh(heff: &Effective, theta: &[f64]) -> f64 {
    let mut h = vec![0.0; theta.len()];
    heff.apply(theta, &mut h);
    let num: f64 = theta.iter().zip(&h).map(|(a, b)| a * b).sum();
    num / theta.iter().map(|x| x * x).sum::<f64>()
}

fn to_mps(sites: &[Site]) -> Result<Mps> {
    let tensors = sites
        .iter()
        .map(|s| DenseTensor::new(vec![s.l, 2, s.r], s.data.iter().map(|&x| C64::new(x, 0.0)).collect()))
        .collect::<Result<Vec<_>>>()?;
    Mps::open(tensors)
}

/// Ground state of `mpo` by two-site DMRG from an even-parity random start.
///
/// A run that exhausts `cfg.sweeps` without meeting `cfg.tol` is returned
/// with `converged = false`.
pub fn dmrg(mpo: &Mpo, cfg: &DmrgConfig) -> Result<DmrgResult> {
    cfg.validate()?;
    let n = mpo.len();
    if n < 2 {
        return Err(Error::dim("DMRG needs at least two sites"));
    }
    let mut sites = even_parity_start(n, cfg.seed);
    // bond k separates sites k − 1 and k
    let mut par: Vec<Vec<u8>> = (0..=n).map(|k| if k == 0 || k == n { vec![0] } else { vec![0, 1] }).collect();

    // Right-canonicalize, center on site 0.
    for k in (1..n).rev() {
        let (l, r) = (sites[k].l, sites[k].r);
        let (rows, cols) = labels(&par[k], &par[k + 1], false);
        let sp = split(&sites[k].data, &rows, &cols, usize::MAX, 0.0);
        let kept = sp.s.len();
        par[k] = sp.par;
        sites[k] = Site { l: kept, r, data: sp.vt };
        let us: Vec<f64> = (0..l * kept).map(|i| sp.u[i] * sp.s[i % kept]).collect();
        let prev = &sites[k - 1];
        let mut data = vec![0.0; prev.l * 2 * kept];
        dgemm(prev.l * 2, l, kept, &prev.data, &us, 0.0, &mut data);
        sites[k - 1] = Site { l: prev.l, r: kept, data };
    }
    let nrm = sites[0].data.iter().map(|x| x * x).sum::<f64>().sqrt();
    sites[0].data.iter_mut().for_each(|x| *x /= nrm);

    let mut left: Vec<Env> = vec![Env::edge(); n + 1];
    let mut right: Vec<Env> = vec![Env::edge(); n + 1];
    for k in (1..n).rev() {
        right[k] = grow_right(&right[k + 1], &sites[k], mpo, k);
    }

    let mut log = Vec::new();
    let mut energy = f64::INFINITY;
    let mut converged = false;
    for sweep in 1..=cfg.sweeps {
        let mut trunc = 0.0f64;
        let bonds: Vec<(usize, bool)> = (0..n - 1).map(|k| (k, true)).chain((0..n - 1).rev().map(|k| (k, false))).collect();
        for (k, rightward) in bonds {
            let (a, b) = (&sites[k], &sites[k + 1]);
            let (cl, cr, mid) = (a.l, b.r, a.r);
            let mut theta = vec![0.0; cl * 2 * 2 * cr];
            dgemm(cl * 2, mid, 2 * cr, &a.data, &b.data, 0.0, &mut theta);
            let heff = Effective {
                left: &left[k],
                right: &right[k + 2],
                w1: w_at(mpo, k),
                w2: w_at(mpo, k + 1),
            };
            let (rows, cols) = labels(&par[k], &par[k + 2], true);
            project_even(&mut theta, &rows, &cols);
            let apply = |x: &[f64], y: &mut [f64]| {
                heff.apply(x, y);
                project_even(y, &rows, &cols);
            };
            let res = lanczos_lowest(apply, &theta, KRYLOV, LOCAL_TOL, cfg.solver_restarts)?;
            let mut sp = split(&res.vector, &rows, &cols, cfg.chi_max, cfg.cutoff);
            // Truncation may undo the local gain; the incoming θ already fits.
            if rayleigh(&heff, &recompose(&sp, cl * 2, 2 * cr)) > rayleigh(&heff, &theta) {
                sp = split(&theta, &rows, &cols, mid, 0.0);
                sp.discarded = 0.0;
            }
            par[k + 1] = std::mem::take(&mut sp.par);
            trunc = trunc.max(sp.discarded);
            let kept = sp.s.len();
            if rightward {
                sites[k] = Site { l: cl, r: kept, data: sp.u };
                let data = (0..kept * 2 * cr).map(|i| sp.vt[i] * sp.s[i / (2 * cr)]).collect();
                sites[k + 1] = Site { l: kept, r: cr, data };
                left[k + 1] = grow_left(&left[k], &sites[k], mpo, k);
            } else {
                let data = (0..cl * 2 * kept).map(|i| sp.u[i] * sp.s[i % kept]).collect();
                sites[k] = Site { l: cl, r: kept, data };
                sites[k + 1] = Site { l: kept, r: cr, data: sp.vt };
                right[k + 1] = grow_right(&right[k + 2], &sites[k + 1], mpo, k + 1);
            }
        }
        // ⟨ψ|H|ψ⟩ of the truncated state; the center is on site 0
        let top = grow_right(&right[1], &sites[0], mpo, 0);
        let nrm: f64 = sites[0].data.iter().map(|x| x * x).sum();
        let e = top.data[0] / nrm;
        let max_bond = sites.iter().map(|s| s.r).max().unwrap_or(1);
        log.push(SweepLog {
            sweep,
            energy: e,
            max_bond,
            truncation_weight: trunc,
        });
        log::debug!("sweep {sweep}: E = {e:.14}, χ = {max_bond}, discarded {trunc:.2e}");
        let delta = (energy - e).abs();
        energy = e;
        if delta < cfg.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("DMRG did not reach tol {} in {} sweeps", cfg.tol, cfg.sweeps);
    }
    let nrm = sites[0].data.iter().map(|x| x * x).sum::<f64>().sqrt();
    sites[0].data.iter_mut().for_each(|x| *x /= nrm);
    let state = to_mps(&sites)?;
    let variance = mpo.variance(&state)?;
    Ok(DmrgResult {
        energy,
        state,
        log,
        converged,
        variance,
    })
}
