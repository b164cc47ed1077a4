//! Matrix-free replica transfer: `E' = ½ Σ_α (⊗_c R_{α,c}) E`.
//!
//! The environment is a real tensor with one χ²-dimensional leg per copy,
//! copy 0 slowest. Each leg holds a (bra, ket) bond pair in the Hermitian
//! coordinates of [`super::basis`].

use super::basis::real_copy_transfer;
use crate::tensor::{dgemm_strided, DenseTensor};

/// Real single-copy maps for one site, for plain and conjugated copies.
#[derive(Clone, Debug)]
pub(crate) struct SiteMaps {
    pub dl: usize,
    pub dr: usize,
    /// `[α] → χ_l² × χ_r²`.
    pub plain: [Vec<f64>; 4],
    pub conj: Option<[Vec<f64>; 4]>,
}

impl SiteMaps {
    pub fn new(a: &DenseTensor, need_conj: bool) -> Self {
        let (cl, cr) = (a.shape()[0], a.shape()[2]);
        Self {
            dl: cl * cl,
            dr: cr * cr,
            plain: std::array::from_fn(|al| real_copy_transfer(a, al, false)),
            conj: need_conj.then(|| std::array::from_fn(|al| real_copy_transfer(a, al, true))),
        }
    }

    fn map(&self, alpha: usize, conj: bool) -> &[f64] {
        if conj {
            &self.conj.as_ref().expect("conjugated maps built")[alpha]
        } else {
            &self.plain[alpha]
        }
    }
}

/// Contract the slowest leg with `r` (`dl × dr`) and move it to the fastest
/// position: `out[rest, j] = Σ_i x[i, rest] r[i, j]`.
fn rotate_contract(x: &[f64], dl: usize, dr: usize, r: &[f64], out: &mut Vec<f64>, flops: &mut u64) {
    let rest = x.len() / dl;
    out.clear();
    out.resize(rest * dr, 0.0);
    dgemm_strided(rest, dl, dr, x, (1, rest), r, (dr, 1), 0.0, out, (dr, 1));
    *flops += (rest * dl * dr) as u64;
}

/// `(⊗_c R_{α,c}) x` for one Pauli label; legs return to their original
/// order after the `copies` rotations.
pub(crate) fn apply_alpha(x: &[f64], maps: &SiteMaps, alpha: usize, conj_mask: &[bool], flops: &mut u64) -> Vec<f64> {
    let mut cur = x.to_vec();
    let mut next = Vec::new();
    for &c in conj_mask {
        rotate_contract(&cur, maps.dl, maps.dr, maps.map(alpha, c), &mut next, flops);
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// One site of the replica ladder: `½ Σ_α (⊗_c R_{α,c}) x`.
pub(crate) fn apply_site(x: &[f64], maps: &SiteMaps, conj_mask: &[bool], flops: &mut u64) -> Vec<f64> {
    let parts = crate::par::map_range(4, |alpha| {
        let mut f = 0u64;
        let y = apply_alpha(x, maps, alpha, conj_mask, &mut f);
        (y, f)
    });
    let mut out = vec![0.0; parts[0].0.len()];
    for (y, f) in parts {
        *flops += f;
        out.iter_mut().zip(&y).for_each(|(o, v)| *o += 0.5 * v);
    }
    out
}

/// Identity-sector transfer `(⊗_c R_{0,c}) x` (no Pauli sum, no ½).
pub(crate) fn apply_identity_sector(x: &[f64], maps: &SiteMaps, conj_mask: &[bool], flops: &mut u64) -> Vec<f64> {
    apply_alpha(x, maps, 0, conj_mask, flops)
}

/// Rescale `x` by its largest magnitude and return the log of the factor.
pub(crate) fn rescale(x: &mut [f64]) -> Option<f64> {
    let s = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if s == 0.0 || !s.is_finite() {
        return None;
    }
    x.iter_mut().for_each(|v| *v /= s);
    Some(s.ln())
}

impl SiteMaps {
    /// Maps of the transposed transfer, for right eigenvectors.
    pub fn transposed(&self) -> Self {
        let t = |m: &Vec<f64>| {
            let mut out = vec![0.0; m.len()];
            for i in 0..self.dl {
                for j in 0..self.dr {
                    out[j * self.dl + i] = m[i * self.dr + j];
                }
            }
            out
        };
        Self {
            dl: self.dr,
            dr: self.dl,
            plain: std::array::from_fn(|al| t(&self.plain[al])),
            conj: self.conj.as_ref().map(|c| std::array::from_fn(|al| t(&c[al]))),
        }
    }
}
