use nalgebra::DMatrix;

use super::{DenseTensor, C64};
use crate::error::{Error, Result};

pub(crate) fn to_na(m: &DenseTensor) -> DMatrix<C64> {
    DMatrix::from_row_slice(m.nrows(), m.ncols(), m.data())
}

pub(crate) fn from_na(m: &DMatrix<C64>) -> DenseTensor {
    DenseTensor::from_fn(&[m.nrows(), m.ncols()], |ix| m[(ix[0], ix[1])])
}

/// Output of [`svd_truncate`]: `m ≈ u · diag(s) · v`.
#[derive(Clone, Debug)]
pub struct TruncatedSvd {
    /// `rows x kept`, orthonormal columns.
    pub u: DenseTensor,
    /// Descending singular values that survived truncation.
    pub s: Vec<f64>,
    /// `kept x cols`, orthonormal rows.
    pub v: DenseTensor,
    /// Sum of squares of the dropped singular values.
    pub discarded_weight: f64,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `u · diag(s) · v`.
    pub fn reconstruct(&self) -> DenseTensor {
        let us = DenseTensor::from_fn(self.u.shape(), |ix| self.u.get(ix) * self.s[ix[1]]);
        us.matmul(&self.v).expect("consistent svd factors")
    }
}

/// Truncated singular value decomposition of a matrix.
///
/// Singular values below `cutoff · ‖S‖₂` are dropped, and at most `max_rank`
/// are kept (never fewer than one).
pub fn svd_truncate(m: &DenseTensor, max_rank: usize, cutoff: f64) -> Result<TruncatedSvd> {
    if m.rank() != 2 {
        return Err(Error::dim(format!("svd of a rank-{} tensor", m.rank())));
    }
    if max_rank == 0 || cutoff.is_nan() || cutoff < 0.0 {
        return Err(Error::Precondition(format!("svd_truncate(max_rank = {max_rank}, cutoff = {cutoff})")));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("svd input"));
    }
    let (rows, cols) = (m.nrows(), m.ncols());
    let svd = to_na(m).svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let norm = sv.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = cutoff * norm;
    let mut keep = order
        .iter()
        .take_while(|&&i| sv[i] >= threshold && (cutoff == 0.0 || sv[i] > 0.0))
        .count()
        .min(max_rank);
    keep = keep.max(1);
    let discarded_weight = order[keep..].iter().map(|&i| sv[i] * sv[i]).sum();
    let kept = &order[..keep];
    let u_out = DenseTensor::from_fn(&[rows, keep], |ix| u[(ix[0], kept[ix[1]])]);
    let v_out = DenseTensor::from_fn(&[keep, cols], |ix| vt[(kept[ix[0]], ix[1])]);
    Ok(TruncatedSvd {
        u: u_out,
        s: kept.iter().map(|&i| sv[i]).collect(),
        v: v_out,
        discarded_weight,
    })
}

/// Eigendecomposition of a Hermitian matrix. Eigenvalues ascend; the
/// eigenvectors are the columns of the returned matrix, and are real when
/// the input is real.
pub fn eigh(m: &DenseTensor) -> Result<(Vec<f64>, DenseTensor)> {
    if m.rank() != 2 || m.nrows() != m.ncols() {
        return Err(Error::dim(format!("eigh of shape {:?}", m.shape())));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("eigh input"));
    }
    let n = m.nrows();
    let (vals, vecs): (Vec<f64>, DMatrix<C64>) = if m.is_real() {
        let a = DMatrix::from_fn(n, n, |i, j| 0.5 * (m.data()[i * n + j].re + m.data()[j * n + i].re));
        let eig = a.symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors.map(|x| C64::new(x, 0.0)))
    } else {
        let a = to_na(m);
        let herm = (&a + a.adjoint()) * C64::new(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let sorted = order.iter().map(|&i| vals[i]).collect();
    let vecs = DenseTensor::from_fn(&[n, n], |ix| vecs[(ix[0], order[ix[1]])]);
    Ok((sorted, vecs))
}

/// Inverse of a square matrix.
pub fn inverse(m: &DenseTensor) -> Result<DenseTensor> {
    if m.rank() != 2 || m.nrows() != m.ncols() {
        return Err(Error::dim(format!("inverse of shape {:?}", m.shape())));
    }
    to_na(m)
        .try_inverse()
        .map(|inv| from_na(&inv))
        .ok_or_else(|| Error::Precondition("matrix is singular".into()))
}
