use nalgebra::DMatrix;

use super::C64;
use crate::error::{Error, Result};

/// Lowest eigenpair of a real symmetric operator.
#[derive(Clone, Debug)]
pub struct LanczosResult {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Restarted Lanczos with full reorthogonalization.
///
/// Each cycle builds a Krylov space of at most `krylov` vectors from the
/// current Ritz vector; the loop stops once `‖Hx − θx‖ ≤ tol`.
pub fn lanczos_lowest<F>(apply: F, start: &[f64], krylov: usize, tol: f64, max_restarts: usize) -> Result<LanczosResult>
where
    F: Fn(&[f64], &mut [f64]),
{
    let dim = start.len();
    if dim == 0 {
        return Err(Error::dim("empty Lanczos start vector"));
    }
    let mut x = start.to_vec();
    if normalize(&mut x) == 0.0 || !x.iter().all(|v| v.is_finite()) {
        x = (0..dim).map(|i| 1.0 + (i as f64 * 0.618_033_988_75).fract()).collect();
        normalize(&mut x);
    }
    let kmax = krylov.clamp(1, dim);
    let mut hx = vec![0.0; dim];
    let mut iterations = 0;
    let mut best = (f64::INFINITY, f64::INFINITY);
    for _ in 0..=max_restarts {
        let mut basis: Vec<Vec<f64>> = vec![x.clone()];
        let mut alpha = Vec::with_capacity(kmax);
        let mut beta: Vec<f64> = Vec::with_capacity(kmax);
        let mut w = vec![0.0; dim];
        for j in 0..kmax {
            apply(&basis[j], &mut w);
            iterations += 1;
            let a = dot(&basis[j], &w);
            alpha.push(a);
            if j + 1 == kmax {
                break;
            }
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
                }
            }
            let b = normalize(&mut w);
            if b <= 1e-13 * a.abs().max(1.0) {
                break;
            }
            beta.push(b);
            basis.push(w.clone());
        }
        let k = alpha.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = t.symmetric_eigen();
        let (imin, _) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty spectrum");
        x.iter_mut().for_each(|v| *v = 0.0);
        for (i, q) in basis.iter().enumerate() {
            let c = eig.eigenvectors[(i, imin)];
            x.iter_mut().zip(q).for_each(|(xi, qi)| *xi += c * qi);
        }
        normalize(&mut x);
        apply(&x, &mut hx);
        iterations += 1;
        let value = dot(&x, &hx);
        let residual = hx.iter().zip(&x).map(|(h, v)| (h - value * v).powi(2)).sum::<f64>().sqrt();
        best = (value, residual);
        if residual <= tol || k == dim {
            return Ok(LanczosResult {
                value,
                vector: x,
                iterations,
                residual,
            });
        }
    }
    Err(Error::Convergence {
        iterations,
        residual: best.1,
        estimate: C64::new(best.0, 0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_lowest() {
        let d = [3.0, -2.0, 5.0, 0.5];
        let r = lanczos_lowest(
            |v, out| out.iter_mut().zip(v).zip(&d).for_each(|((o, x), di)| *o = di * x),
            &[1.0; 4],
            10,
            1e-12,
            5,
        )
        .unwrap();
        assert!((r.value + 2.0).abs() < 1e-12);
        assert!((r.vector[1].abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn random_symmetric_matches_dense() {
        let n = 80;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut m = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        m = &m + m.transpose();
        let exact = m.clone().symmetric_eigen().eigenvalues.min();
        let start: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let r = lanczos_lowest(
            |v, out| {
                let y = &m * nalgebra::DVector::from_column_slice(v);
                out.copy_from_slice(y.as_slice());
            },
            &start,
            30,
            1e-10,
            200,
        )
        .unwrap();
        assert!((r.value - exact).abs() < 1e-9, "{} vs {exact}", r.value);
        assert!(r.residual <= 1e-10);
    }

    #[test]
    fn zero_start_is_replaced() {
        let r = lanczos_lowest(|v, out| out.copy_from_slice(v), &[0.0; 3], 4, 1e-12, 2).unwrap();
        assert!((r.value - 1.0).abs() < 1e-14);
    }
}
