//! Real coordinates for bra–ket bond pairs.
//!
//! A bond pair `(a', a)` carries a χ×χ matrix `E[a', a]`. Every single-copy
//! transfer `E ↦ Σ σ_{ss'} A^{s†} E A^{s'}` maps Hermitian matrices to
//! Hermitian matrices, so in an orthonormal Hermitian basis it is a real
//! χ_l² × χ_r² matrix. The basis element labelled `(a, b)` is
//! `E_aa` for `a = b`, `(E_ab + E_ba)/√2` for `a < b` and
//! `i(E_ab − E_ba)/√2` for `a > b`.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::pauli::PAULI;
use crate::tensor::{DenseTensor, C64, ZERO};

/// Nonzero entries `(a*χ + b, value)` of basis element `idx`.
pub(crate) fn herm_entries(chi: usize, idx: usize) -> ([(usize, C64); 2], usize) {
    let (a, b) = (idx / chi, idx % chi);
    let h = FRAC_1_SQRT_2;
    if a == b {
        ([(a * chi + a, C64::new(1.0, 0.0)), (0, ZERO)], 1)
    } else if a < b {
        ([(a * chi + b, C64::new(h, 0.0)), (b * chi + a, C64::new(h, 0.0))], 2)
    } else {
        ([(a * chi + b, C64::new(0.0, h)), (b * chi + a, C64::new(0.0, -h))], 2)
    }
}

/// Hermitian matrix `Σ_i x_i h_i` from real coordinates.
#[cfg(test)]
pub(crate) fn from_coords(chi: usize, x: &[f64]) -> DenseTensor {
    let mut m = DenseTensor::zeros(&[chi, chi]);
    for (i, &xi) in x.iter().enumerate() {
        let (e, k) = herm_entries(chi, i);
        for &(p, v) in &e[..k] {
            m.data_mut()[p] += v * xi;
        }
    }
    m
}

/// Real coordinates `⟨h_i, E⟩` of a Hermitian matrix.
#[cfg(test)]
pub(crate) fn to_coords(chi: usize, e: &[C64]) -> Vec<f64> {
    (0..chi * chi)
        .map(|i| {
            let (h, k) = herm_entries(chi, i);
            h[..k].iter().map(|&(p, v)| (v.conj() * e[p]).re).sum()
        })
        .collect()
}

/// Complex single-copy transfer for Pauli `alpha`:
/// `M[(a', a), (b', b)] = Σ_{s,s'} σ[s, s'] conj(A[a', s, b']) A[a, s', b]`,
/// conjugated entrywise for conjugated copies.
pub(crate) fn copy_transfer(a: &DenseTensor, alpha: usize, conj: bool) -> Vec<C64> {
    let (cl, cr) = (a.shape()[0], a.shape()[2]);
    let (dl, dr) = (cl * cl, cr * cr);
    let sigma = PAULI[alpha];
    let at = |x: usize, s: usize, y: usize| a.data()[(x * 2 + s) * cr + y];
    let mut m = vec![ZERO; dl * dr];
    for s in 0..2 {
        for sp in 0..2 {
            let c = sigma[s * 2 + sp];
            if c == ZERO {
                continue;
            }
            for ap in 0..cl {
                for bp in 0..cr {
                    let u = c * at(ap, s, bp).conj();
                    if u == ZERO {
                        continue;
                    }
                    for x in 0..cl {
                        let row = (ap * cl + x) * dr + bp * cr;
                        for y in 0..cr {
                            m[row + y] += u * at(x, sp, y);
                        }
                    }
                }
            }
        }
    }
    if conj {
        m.iter_mut().for_each(|z| *z = z.conj());
    }
    m
}

/// The real form `R = H_l M H_r^†` of [`copy_transfer`], row-major
/// `χ_l² × χ_r²`.
pub(crate) fn real_copy_transfer(a: &DenseTensor, alpha: usize, conj: bool) -> Vec<f64> {
    let (cl, cr) = (a.shape()[0], a.shape()[2]);
    let (dl, dr) = (cl * cl, cr * cr);
    let m = copy_transfer(a, alpha, conj);
    let mut r = vec![0.0; dl * dr];
    for i in 0..dl {
        let (hi, ki) = herm_entries(cl, i);
        for j in 0..dr {
            let (hj, kj) = herm_entries(cr, j);
            let mut acc = ZERO;
            for &(p, u) in &hi[..ki] {
                for &(q, v) in &hj[..kj] {
                    acc += u * m[p * dr + q] * v.conj();
                }
            }
            r[i * dr + j] = acc.re;
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn basis_is_orthonormal() {
        let chi = 3;
        for i in 0..9 {
            for j in 0..9 {
                let (hi, ki) = herm_entries(chi, i);
                let (hj, kj) = herm_entries(chi, j);
                let mut ip = ZERO;
                for &(p, u) in &hi[..ki] {
                    for &(q, v) in &hj[..kj] {
                        if p == q {
                            ip += u.conj() * v;
                        }
                    }
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - C64::new(want, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn coordinates_round_trip() {
        let x: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
        let m = from_coords(4, &x);
        assert!(m.max_abs_diff(&m.adjoint().unwrap()) < 1e-15);
        let back = to_coords(4, m.data());
        assert!(x.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn real_form_reproduces_complex_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = DenseTensor::random(&[2, 2, 3], &mut rng);
        let x: Vec<f64> = (0..4).map(|i| 0.3 + i as f64).collect();
        let e = from_coords(2, &x);
        for alpha in 0..4 {
            for conj in [false, true] {
                let m = copy_transfer(&a, alpha, conj);
                // E' = vec(E) · M
                let mut ep = vec![ZERO; 9];
                for p in 0..4 {
                    for q in 0..9 {
                        ep[q] += e.data()[p] * m[p * 9 + q];
                    }
                }
                let r = real_copy_transfer(&a, alpha, conj);
                let xr: Vec<f64> = (0..9).map(|j| (0..4).map(|i| x[i] * r[i * 9 + j]).sum()).collect();
                let back = from_coords(3, &xr);
                let epm = DenseTensor::new(vec![3, 3], ep).unwrap();
                assert!(back.max_abs_diff(&epm) < 1e-13, "alpha {alpha} conj {conj}");
            }
        }
    }
}
