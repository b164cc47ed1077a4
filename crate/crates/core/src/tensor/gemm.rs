//! Thin safe wrappers over the `matrixmultiply` kernels.
//!
//! All matrices are row-major and contiguous unless a stride is given
//! explicitly.

use num_complex::Complex64;

/// `c <- a * b + beta * c` for row-major `a: m x k`, `b: k x n`, `c: m x n`.
pub fn zgemm(m: usize, k: usize, n: usize, a: &[Complex64], b: &[Complex64], beta: f64, c: &mut [Complex64]) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c[..m * n].iter_mut().for_each(|x| *x *= beta);
        return;
    }
    // SAFETY: Complex64 is repr(C) {re, im}, layout-identical to [f64; 2];
    // bounds were checked above for the contiguous row-major strides.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            k as isize,
            1,
            b.as_ptr() as *const [f64; 2],
            n as isize,
            1,
            [beta, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            n as isize,
            1,
        );
    }
}

/// Strided complex product `c <- a * b + beta * c`.
///
/// # Safety contract
/// The caller guarantees every index `i*rs + j*cs` touched for the given
/// shapes lies inside the corresponding slice; this is re-checked here.
#[allow(clippy::too_many_arguments)]
pub fn zgemm_strided(
    m: usize,
    k: usize,
    n: usize,
    a: &[Complex64],
    (rsa, csa): (usize, usize),
    b: &[Complex64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [Complex64],
    (rsc, csc): (usize, usize),
) {
    if m == 0 || n == 0 || k == 0 {
        if k == 0 {
            for i in 0..m {
                for j in 0..n {
                    c[i * rsc + j * csc] *= beta;
                }
            }
        }
        return;
    }
    assert!((m - 1) * rsa + (k - 1) * csa < a.len());
    assert!((k - 1) * rsb + (n - 1) * csb < b.len());
    assert!((m - 1) * rsc + (n - 1) * csc < c.len());
    // SAFETY: extents checked above; layout as in `zgemm`.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            rsa as isize,
            csa as isize,
            b.as_ptr() as *const [f64; 2],
            rsb as isize,
            csb as isize,
            [beta, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            rsc as isize,
            csc as isize,
        );
    }
}

/// Real counterpart of [`zgemm_strided`].
#[allow(clippy::too_many_arguments)]
pub fn dgemm_strided(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
    (rsc, csc): (usize, usize),
) {
    if m == 0 || n == 0 || k == 0 {
        if k == 0 {
            for i in 0..m {
                for j in 0..n {
                    c[i * rsc + j * csc] *= beta;
                }
            }
        }
        return;
    }
    assert!((m - 1) * rsa + (k - 1) * csa < a.len());
    assert!((k - 1) * rsb + (n - 1) * csb < b.len());
    assert!((m - 1) * rsc + (n - 1) * csc < c.len());
    // SAFETY: extents checked above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}

/// Row-major real product `c <- a * b + beta * c`.
pub fn dgemm(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    dgemm_strided(m, k, n, a, (k, 1), b, (n, 1), beta, c, (n, 1));
}
