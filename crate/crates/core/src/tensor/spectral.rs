//! Eigenvalue problems for (generally non-Hermitian) transfer operators.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::to_na;
use super::{DenseTensor, C64, ZERO};
use crate::error::{Error, Result};

/// Dense eigensolvers are used below this dimension, matrix-free iteration
/// above it.
pub const DENSE_EIG_LIMIT: usize = 4096;

/// Gap ratios above this are reported as a degenerate leading eigenvalue.
pub const DEGENERACY_THRESHOLD: f64 = 1.0 - 1e-6;

const KRYLOV_DIM: usize = 24;

#[derive(Clone, Debug)]
pub struct SpectralResult {
    /// Sorted by descending modulus. Dense solvers return the full spectrum,
    /// the iterative solver its converged Ritz values.
    pub eigenvalues: Vec<C64>,
    /// Right eigenvector of the leading eigenvalue, unit 2-norm.
    pub right: Option<Vec<C64>>,
    /// Left eigenvector `l` with `Σ_i l_i M_ij = λ₀ l_j`, unit 2-norm.
    pub left: Option<Vec<C64>>,
    /// `|λ₁| / |λ₀|`, zero when only one eigenvalue is known.
    pub gap_ratio: f64,
    /// Matrix-vector products spent (zero for dense solvers).
    pub iterations: usize,
    /// `‖M v − λ₀ v‖` for the returned right eigenvector, if any.
    pub residual: f64,
}

impl SpectralResult {
    pub fn leading(&self) -> C64 {
        self.eigenvalues[0]
    }

    pub fn is_near_degenerate(&self) -> bool {
        self.gap_ratio > DEGENERACY_THRESHOLD
    }
}

fn sort_by_modulus(vals: &mut [C64]) {
    vals.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
}

fn gap_ratio(vals: &[C64]) -> f64 {
    match vals {
        [l0, l1, ..] if l0.norm() > 0.0 => l1.norm() / l0.norm(),
        _ => 0.0,
    }
}

fn check_square(m: &DenseTensor) -> Result<usize> {
    if m.rank() != 2 || m.nrows() != m.ncols() {
        return Err(Error::dim(format!("eigenproblem for shape {:?}", m.shape())));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("eigenproblem input"));
    }
    Ok(m.nrows())
}

/// All eigenvalues, through the real solver when the matrix is real.
fn schur_eigenvalues(a: &DMatrix<C64>) -> Result<Vec<C64>> {
    let n = a.nrows();
    if n == 1 {
        return Ok(vec![a[(0, 0)]]);
    }
    let vals = if a.iter().all(|z| z.im == 0.0) {
        faer::Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)].re).eigenvalues()
    } else {
        faer::Mat::<C64>::from_fn(n, n, |i, j| a[(i, j)]).eigenvalues()
    };
    vals.map_err(|e| {
        log::error!("dense eigensolver failed: {e:?}");
        Error::Convergence {
            iterations: 0,
            residual: f64::NAN,
            estimate: C64::new(f64::NAN, 0.0),
        }
    })
}

/// Full spectrum of a square matrix.
pub fn eig_dense(m: &DenseTensor) -> Result<SpectralResult> {
    check_square(m)?;
    let mut vals = schur_eigenvalues(&to_na(m))?;
    sort_by_modulus(&mut vals);
    Ok(SpectralResult {
        gap_ratio: gap_ratio(&vals),
        eigenvalues: vals,
        right: None,
        left: None,
        iterations: 0,
        residual: 0.0,
    })
}

/// Inverse iteration for the eigenvector of `a` closest to `shift`.
fn inverse_iteration(a: &DMatrix<C64>, lambda: C64) -> Vec<C64> {
    let n = a.nrows();
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let shift = lambda + C64::new(1e-11 * scale, 1e-11 * scale);
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] -= shift;
    }
    let lu = shifted.lu();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = nalgebra::DVector::from_fn(n, |_, _| C64::new(rng.random_range(0.5..1.5), 0.0));
    for _ in 0..3 {
        match lu.solve(&x) {
            Some(y) if y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
                let nrm = y.norm();
                if nrm == 0.0 {
                    break;
                }
                x = y / C64::new(nrm, 0.0);
            }
            _ => break,
        }
    }
    let nrm = x.norm();
    x.iter().map(|z| z / nrm).collect()
}

fn residual_of(a: &DMatrix<C64>, lambda: C64, v: &[C64]) -> f64 {
    let x = nalgebra::DVector::from_column_slice(v);
    (a * &x - x * lambda).norm()
}

/// Full spectrum plus left and right eigenvectors of the leading eigenvalue.
pub fn eig_dense_with_vectors(m: &DenseTensor) -> Result<SpectralResult> {
    let mut res = eig_dense(m)?;
    let a = to_na(m);
    let l0 = res.eigenvalues[0];
    let right = inverse_iteration(&a, l0);
    let at = a.transpose();
    let left = inverse_iteration(&at, l0);
    res.residual = residual_of(&a, l0, &right);
    res.right = Some(right);
    res.left = Some(left);
    Ok(res)
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Leading eigenpair of a matrix-free linear map by explicitly restarted
/// Arnoldi iteration.
///
/// `apply(x, y)` must overwrite `y` with `M x`. Convergence means
/// `‖M v − λ₀ v‖ ≤ tol` for the unit-norm Ritz vector `v`. For the left
/// eigenvector pass the transposed map.
pub fn dominant_eig<F>(apply: F, dim: usize, tol: f64, max_iter: usize) -> Result<SpectralResult>
where
    F: Fn(&[C64], &mut [C64]),
{
    if dim == 0 {
        return Err(Error::dim("dominant_eig on an empty space"));
    }
    let kmax = KRYLOV_DIM.min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<C64> = (0..dim).map(|_| C64::new(rng.random_range(0.5..1.5), 0.0)).collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|z| *z /= nx);

    let mut matvecs = 0usize;
    let mut best = (f64::INFINITY, ZERO);
    let mut w = vec![ZERO; dim];
    loop {
        // Arnoldi factorisation started from the current Ritz vector.
        let mut basis: Vec<Vec<C64>> = vec![x.clone()];
        let mut h = DMatrix::<C64>::zeros(kmax + 1, kmax);
        let mut k = kmax;
        for j in 0..kmax {
            apply(&basis[j], &mut w);
            matvecs += 1;
            for _pass in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let c = dot(q, &w);
                    h[(i, j)] += c;
                    w.iter_mut().zip(q).for_each(|(wv, qv)| *wv -= c * qv);
                }
            }
            let beta = norm(&w);
            h[(j + 1, j)] = C64::new(beta, 0.0);
            if beta <= 1e-13 * (1.0 + h[(j, j)].norm()) || j + 1 == dim {
                k = j + 1;
                break;
            }
            basis.push(w.iter().map(|z| z / beta).collect());
        }
        let hk = h.view((0, 0), (k, k)).into_owned();
        let mut ritz = schur_eigenvalues(&hk)?;
        sort_by_modulus(&mut ritz);
        let y = inverse_iteration(&hk, ritz[0]);
        let mut v = vec![ZERO; dim];
        for (yi, q) in y.iter().zip(&basis) {
            v.iter_mut().zip(q).for_each(|(vv, qv)| *vv += yi * qv);
        }
        let nv = norm(&v);
        v.iter_mut().for_each(|z| *z /= nv);
        apply(&v, &mut w);
        matvecs += 1;
        let lambda = dot(&v, &w);
        let res = w.iter().zip(&v).map(|(a, b)| (a - lambda * b).norm_sqr()).sum::<f64>().sqrt();
        if res < best.0 {
            best = (res, lambda);
        }
        if res <= tol {
            ritz[0] = lambda;
            let gr = gap_ratio(&ritz);
            if gr > DEGENERACY_THRESHOLD {
                log::warn!("leading eigenvalue {lambda} is nearly degenerate (gap ratio {gr:.9})");
            }
            return Ok(SpectralResult {
                eigenvalues: ritz,
                right: Some(v),
                left: None,
                gap_ratio: gr,
                iterations: matvecs,
                residual: res,
            });
        }
        if matvecs >= max_iter {
            return Err(Error::Convergence {
                iterations: matvecs,
                residual: best.0,
                estimate: best.1,
            });
        }
        x = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ONE;

    fn diag(vals: &[f64]) -> DenseTensor {
        let n = vals.len();
        DenseTensor::from_fn(&[n, n], |ix| if ix[0] == ix[1] { C64::new(vals[ix[0]], 0.0) } else { ZERO })
    }

    fn matvec(m: &DenseTensor) -> impl Fn(&[C64], &mut [C64]) + '_ {
        move |x, y| y.copy_from_slice(&m.apply(x).unwrap())
    }

    #[test]
    fn dense_diagonal() {
        let r = eig_dense(&diag(&[1.0, 2.0])).unwrap();
        assert!((r.eigenvalues[0] - 2.0).norm() < 1e-14);
        assert!((r.eigenvalues[1] - 1.0).norm() < 1e-14);
        assert!((r.gap_ratio - 0.5).abs() < 1e-14);
    }

    #[test]
    fn dense_swap_matrix() {
        let x = DenseTensor::matrix(&[&[ZERO, ONE], &[ONE, ZERO]]).unwrap();
        let r = eig_dense(&x).unwrap();
        let mut re: Vec<f64> = r.eigenvalues.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 1.0).abs() < 1e-14 && (re[1] - 1.0).abs() < 1e-14);
        assert!(r.is_near_degenerate());
    }

    #[test]
    fn dense_trace_identity() {
        use rand::SeedableRng;
        let m = DenseTensor::random(&[6, 6], &mut ChaCha8Rng::seed_from_u64(5));
        let r = eig_dense_with_vectors(&m).unwrap();
        let sum: C64 = r.eigenvalues.iter().sum();
        assert!((sum - m.trace().unwrap()).norm() <= 1e-10 * m.frobenius_norm());
        assert!(r.residual < 1e-9 * m.frobenius_norm());
        // left eigenvector: l^T M = λ l^T
        let l = r.left.unwrap();
        let lt_m: Vec<C64> = (0..6).map(|j| (0..6).map(|i| l[i] * m.get(&[i, j])).sum()).collect();
        let err: f64 = lt_m.iter().zip(&l).map(|(a, b)| (a - r.eigenvalues[0] * b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9 * m.frobenius_norm());
    }

    #[test]
    fn dense_rejects_non_square() {
        assert!(matches!(eig_dense(&DenseTensor::zeros(&[2, 3])), Err(Error::Dimension(_))));
    }

    #[test]
    fn power_on_diagonal() {
        let m = diag(&[3.0, 1.0, 0.0]);
        let r = dominant_eig(matvec(&m), 3, 1e-10, 500).unwrap();
        assert!((r.leading() - 3.0).norm() < 1e-10);
    }

    #[test]
    fn perron_root_of_column_stochastic() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 7;
        let mut m = DenseTensor::from_fn(&[n, n], |_| C64::new(rng.random_range(0.1..1.0), 0.0));
        for j in 0..n {
            let s: f64 = (0..n).map(|i| m.get(&[i, j]).re).sum();
            for i in 0..n {
                let v = m.get(&[i, j]) / s;
                m.set(&[i, j], v);
            }
        }
        let r = dominant_eig(matvec(&m), n, 1e-11, 1000).unwrap();
        assert!((r.leading() - 1.0).norm() < 1e-10);
    }

    #[test]
    fn iterative_agrees_with_dense() {
        use rand::SeedableRng;
        let m = DenseTensor::random(&[40, 40], &mut ChaCha8Rng::seed_from_u64(21));
        let dense = eig_dense(&m).unwrap();
        let it = dominant_eig(matvec(&m), 40, 1e-10, 20_000).unwrap();
        assert!((dense.leading() - it.leading()).norm() < 1e-8);
    }

    #[test]
    fn non_convergence_carries_estimate() {
        use rand::SeedableRng;
        let m = DenseTensor::random(&[60, 60], &mut ChaCha8Rng::seed_from_u64(4));
        match dominant_eig(matvec(&m), 60, 1e-300, 30) {
            Err(Error::Convergence { estimate, iterations, .. }) => {
                assert!(estimate.norm() > 0.0);
                assert!(iterations >= 30);
            }
            other => panic!("expected a convergence error, got {other:?}"),
        }
    }
}
