//! Klein-group compression of the four-copy bond space.
//!
//! The group `{𝟙, S₁₂S₃₄, S₁₃S₂₄, S₁₄S₂₃}` permutes the four bond indices
//! `(a₀, a₁, a₂, a₃)`. Its invariant subspace has dimension
//! `χ̃ = χ²(χ² + 3)/4`; `Q` maps onto it with one row per orbit.

use crate::error::Result;
use crate::tensor::{dgemm, dgemm_strided, zgemm, zgemm_strided, DenseTensor, C64, ZERO};

/// `χ²(χ² + 3)/4`.
pub fn compressed_dim(chi: usize) -> usize {
    chi * chi * (chi * chi + 3) / 4
}

fn klein_images(chi: usize, x: usize) -> [usize; 4] {
    let a = [x / (chi * chi * chi), (x / (chi * chi)) % chi, (x / chi) % chi, x % chi];
    let flat = |p: [usize; 4]| ((p[0] * chi + p[1]) * chi + p[2]) * chi + p[3];
    [
        x,
        flat([a[1], a[0], a[3], a[2]]),
        flat([a[2], a[3], a[0], a[1]]),
        flat([a[3], a[2], a[1], a[0]]),
    ]
}

/// Sparse isometry `Q` (`χ̃ × χ⁴`) onto the Klein-invariant subspace.
#[derive(Clone, Debug)]
pub struct KleinProjector {
    chi: usize,
    /// Orbit members as flat tuple indices, ascending; the first is the
    /// representative.
    orbits: Vec<Vec<usize>>,
}

pub fn klein_projector(chi: usize) -> KleinProjector {
    assert!(chi >= 1, "bond dimension must be positive");
    let total = chi.pow(4);
    let mut seen = vec![false; total];
    let mut orbits = Vec::with_capacity(compressed_dim(chi));
    for x in 0..total {
        if seen[x] {
            continue;
        }
        let mut members = klein_images(chi, x).to_vec();
        members.sort_unstable();
        members.dedup();
        for &m in &members {
            seen[m] = true;
        }
        orbits.push(members);
    }
    KleinProjector { chi, orbits }
}

impl KleinProjector {
    pub fn chi(&self) -> usize {
        self.chi
    }

    /// Compressed dimension `χ̃`.
    pub fn dim(&self) -> usize {
        self.orbits.len()
    }

    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    pub fn max_row_nnz(&self) -> usize {
        self.orbits.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `Q v`.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.orbits
            .iter()
            .map(|o| {
                let w = (o.len() as f64).sqrt().recip();
                o.iter().map(|&x| v[x]).sum::<C64>() * w
            })
            .collect()
    }

    /// `Q† w`.
    pub fn apply_adjoint(&self, w: &[C64]) -> Vec<C64> {
        let mut v = vec![ZERO; self.chi.pow(4)];
        for (o, &c) in self.orbits.iter().zip(w) {
            let f = c * (o.len() as f64).sqrt().recip();
            for &x in o {
                v[x] += f;
            }
        }
        v
    }

    /// Dense `Q`, for checks on small χ.
    pub fn to_dense(&self) -> DenseTensor {
        let mut q = DenseTensor::zeros(&[self.dim(), self.chi.pow(4)]);
        for (r, o) in self.orbits.iter().enumerate() {
            let w = C64::new((o.len() as f64).sqrt().recip(), 0.0);
            for &x in o {
                q.set(&[r, x], w);
            }
        }
        q
    }
}

/// Dense `Π = ¼(𝟙 + S₁₂S₃₄ + S₁₃S₂₄ + S₁₄S₂₃)` on `χ⁴`, for checks.
pub fn klein_pi_dense(chi: usize) -> DenseTensor {
    let total = chi.pow(4);
    let mut p = DenseTensor::zeros(&[total, total]);
    for x in 0..total {
        for y in klein_images(chi, x) {
            let v = p.get(&[y, x]);
            p.set(&[y, x], v + C64::new(0.25, 0.0));
        }
    }
    p
}

/// The four compressed site matrices `C_r = Q_l B̃_r Q_r†` (`χ̃_l × χ̃_r`).
pub(crate) enum CompressedSite {
    Real { rows: usize, cols: usize, c: Vec<Vec<f64>> },
    Complex { rows: usize, cols: usize, c: Vec<Vec<C64>> },
}

/// Build the compressed site tensor from `A` and the symmetric-variant
/// factor `Γ` (`d × 16`).
///
/// `B̃_r` commutes with the Klein action, so
/// `C_r[o, o'] = √(|o|/|o'|) Σ_{y ∈ o'} B̃_r[rep(o), y]`.
pub(crate) fn compressed_site(
    a: &DenseTensor,
    gamma: &DenseTensor,
    ql: &KleinProjector,
    qr: &KleinProjector,
) -> CompressedSite {
    let (cl, cr) = (a.shape()[0], a.shape()[2]);
    let d = gamma.nrows();
    let real = a.is_real() && gamma.is_real();
    let at = |x: usize, s: usize, y: usize| a.data()[(x * 2 + s) * cr + y];
    let (rows, cols) = (ql.dim(), qr.dim());
    let ntuple = cr.pow(4);
    let mut out = vec![vec![ZERO; rows * cols]; d];
    let mut w = Vec::with_capacity(d * ntuple);
    let mut next = Vec::with_capacity(d * ntuple);
    for (o, orbit) in ql.orbits().iter().enumerate() {
        let x = orbit[0];
        let xa = [x / (cl * cl * cl), (x / (cl * cl)) % cl, (x / cl) % cl, x % cl];
        // w[r, s_0 … s_c, y_{c+1} … y_3], contracting copies 3, 2, 1, 0
        w.clear();
        w.extend_from_slice(gamma.data());
        for c in (0..4).rev() {
            let pre = d << c;
            let suf = cr.pow(3 - c as u32);
            next.clear();
            next.resize(pre * cr * suf, ZERO);
            for p in 0..pre {
                for sc in 0..2 {
                    let src = &w[(p * 2 + sc) * suf..(p * 2 + sc + 1) * suf];
                    for yc in 0..cr {
                        let f = at(xa[c], sc, yc);
                        if f == ZERO {
                            continue;
                        }
                        let dst = &mut next[(p * cr + yc) * suf..(p * cr + yc + 1) * suf];
                        dst.iter_mut().zip(src).for_each(|(t, v)| *t += f * v);
                    }
                }
            }
            std::mem::swap(&mut w, &mut next);
        }
        let lo = (orbit.len() as f64).sqrt();
        for (op, morb) in qr.orbits().iter().enumerate() {
            let f = lo / (morb.len() as f64).sqrt();
            for r in 0..d {
                let sum: C64 = morb.iter().map(|&y| w[r * ntuple + y]).sum();
                out[r][o * cols + op] = sum * f;
            }
        }
    }
    if real {
        CompressedSite::Real {
            rows,
            cols,
            c: out.into_iter().map(|m| m.into_iter().map(|z| z.re).collect()).collect(),
        }
    } else {
        CompressedSite::Complex { rows, cols, c: out }
    }
}

/// Compressed environment, real while every site so far was real.
pub(crate) enum KleinEnv {
    Real(Vec<f64>),
    Complex(Vec<C64>),
}

impl KleinEnv {
    pub fn start() -> Self {
        KleinEnv::Real(vec![1.0])
    }

    /// `E' = Σ_r C_r† E C_r`.
    pub fn step(self, site: &CompressedSite, flops: &mut u64) -> Self {
        match (self, site) {
            (KleinEnv::Real(e), CompressedSite::Real { rows, cols, c }) => {
                let (m, n) = (*rows, *cols);
                let mut out = vec![0.0; n * n];
                let mut tmp = vec![0.0; m * n];
                for cr in c {
                    dgemm(m, m, n, &e, cr, 0.0, &mut tmp);
                    dgemm_strided(n, m, n, cr, (1, n), &tmp, (n, 1), 1.0, &mut out, (n, 1));
                    *flops += (m * m * n + n * m * n) as u64;
                }
                KleinEnv::Real(out)
            }
            (env, site) => {
                let e: Vec<C64> = match env {
                    KleinEnv::Real(v) => v.into_iter().map(|x| C64::new(x, 0.0)).collect(),
                    KleinEnv::Complex(v) => v,
                };
                let (m, n, c): (usize, usize, Vec<Vec<C64>>) = match site {
                    CompressedSite::Complex { rows, cols, c } => (*rows, *cols, c.clone()),
                    CompressedSite::Real { rows, cols, c } => (
                        *rows,
                        *cols,
                        c.iter().map(|v| v.iter().map(|&x| C64::new(x, 0.0)).collect()).collect(),
                    ),
                };
                let mut out = vec![ZERO; n * n];
                let mut tmp = vec![ZERO; m * n];
                for cr in &c {
                    zgemm(m, m, n, &e, cr, 0.0, &mut tmp);
                    let adj: Vec<C64> = (0..n * m).map(|i| cr[(i % m) * n + i / m].conj()).collect();
                    zgemm_strided(n, m, n, &adj, (m, 1), &tmp, (n, 1), 1.0, &mut out, (n, 1));
                    *flops += 4 * (m * m * n + n * m * n) as u64;
                }
                KleinEnv::Complex(out)
            }
        }
    }

    /// Rescale by the largest magnitude; returns the log of the factor.
    pub fn rescale(&mut self) -> Option<f64> {
        let s = match self {
            KleinEnv::Real(v) => v.iter().fold(0.0f64, |m, x| m.max(x.abs())),
            KleinEnv::Complex(v) => v.iter().fold(0.0f64, |m, x| m.max(x.norm())),
        };
        if s == 0.0 || !s.is_finite() {
            return None;
        }
        match self {
            KleinEnv::Real(v) => v.iter_mut().for_each(|x| *x /= s),
            KleinEnv::Complex(v) => v.iter_mut().for_each(|x| *x /= s),
        }
        Some(s.ln())
    }

    pub fn scalar(&self) -> C64 {
        match self {
            KleinEnv::Real(v) => C64::new(v[0], 0.0),
            KleinEnv::Complex(v) => v[0],
        }
    }
}

/// Materialize `C_r` as a `(χ̃_l, d, χ̃_r)` tensor.
pub(crate) fn compressed_tensor(site: &CompressedSite) -> Result<DenseTensor> {
    let (rows, cols, c): (usize, usize, Vec<Vec<C64>>) = match site {
        CompressedSite::Real { rows, cols, c } => (
            *rows,
            *cols,
            c.iter().map(|v| v.iter().map(|&x| C64::new(x, 0.0)).collect()).collect(),
        ),
        CompressedSite::Complex { rows, cols, c } => (*rows, *cols, c.clone()),
    };
    let d = c.len();
    Ok(DenseTensor::from_fn(&[rows, d, cols], |ix| c[ix[1]][ix[0] * cols + ix[2]]))
}
