//! Peak location and finite-size fits.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{storage::Owned, DVector, Dyn, Matrix3, Vector3, U3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extremum {
    Max,
    Min,
}

impl Extremum {
    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Extremum::Max => a > b,
            Extremum::Min => a < b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub h0: f64,
    pub m0: f64,
    /// Interval known to contain the extremum.
    pub bracket: (f64, f64),
}

/// Vertex of the parabola through three points with distinct abscissae.
fn parabola_vertex(p: [(f64, f64); 3]) -> Option<(f64, f64)> {
    let [(x0, y0), (x1, y1), (x2, y2)] = p;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if a == 0.0 || !a.is_finite() {
        return None;
    }
    let b = d01 - a * (x0 + x1);
    let xv = -b / (2.0 * a);
    let yv = y1 + (xv - x1) * (d01 + a * (xv - x0));
    Some((xv, yv))
}

fn sorted(points: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    if points.iter().any(|(h, m)| !h.is_finite() || !m.is_finite()) {
        return Err(Error::Domain("non-finite sweep point".into()));
    }
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0));
    if p.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Precondition("duplicate field values".into()));
    }
    Ok(p)
}

/// Interior extremum of sampled `(h, m)` data, refined by the parabola
/// through the best grid point and its neighbours.
pub fn find_extremum(points: &[(f64, f64)], kind: Extremum) -> Result<Peak> {
    if points.len() < 5 {
        return Err(Error::Precondition(format!("need at least 5 grid points, got {}", points.len())));
    }
    let p = sorted(points)?;
    let best = (1..p.len()).fold(0, |b, i| if kind.better(p[i].1, p[b].1) { i } else { b });
    if best == 0 || best == p.len() - 1 {
        return Err(Error::Bracket(p[best].0));
    }
    let bracket = (p[best - 1].0, p[best + 1].0);
    let (h0, m0) = match parabola_vertex([p[best - 1], p[best], p[best + 1]]) {
        Some((x, y)) if x > bracket.0 && x < bracket.1 => (x, y),
        _ => p[best],
    };
    Ok(Peak { h0, m0, bracket })
}

/// [`find_extremum`] for a maximum.
pub fn find_peak(points: &[(f64, f64)]) -> Result<Peak> {
    find_extremum(points, Extremum::Max)
}

/// One golden-section narrowing of `peak.bracket` with two fresh
/// evaluations of `f`, followed by a parabolic step through the best of
/// all known points. `points` are the grid samples the peak came from.
pub fn refine_extremum<F>(points: &[(f64, f64)], peak: &Peak, kind: Extremum, f: F) -> Result<Peak>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (a, b) = peak.bracket;
    let c = b - inv_phi * (b - a);
    let d = a + inv_phi * (b - a);
    let (fc, fd) = (f(c)?, f(d)?);
    let bracket = if kind.better(fc, fd) { (a, d) } else { (c, b) };
    let mut all = sorted(points)?;
    all.retain(|&(h, _)| h >= a && h <= b);
    all.extend([(c, fc), (d, fd)]);
    let all = sorted(&all)?;
    let best = (1..all.len()).fold(0, |bi, i| if kind.better(all[i].1, all[bi].1) { i } else { bi });
    let mid = best.clamp(1, all.len() - 2);
    let (h0, m0) = match parabola_vertex([all[mid - 1], all[mid], all[mid + 1]]) {
        Some((x, y)) if x >= bracket.0 && x <= bracket.1 && !kind.better(all[best].1, y) => (x, y),
        _ => all[best],
    };
    Ok(Peak { h0, m0, bracket })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_err: f64,
    pub intercept_err: f64,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::dim("x and y differ in length"));
    }
    if x.len() < 2 {
        return Err(Error::Precondition("need at least two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let s2 = if x.len() > 2 { rss / (n - 2.0) } else { 0.0 };
    Ok(LinearFit {
        slope,
        intercept,
        slope_err: (s2 / sxx).sqrt(),
        intercept_err: (s2 * (1.0 / n + mx * mx / sxx)).sqrt(),
    })
}

/// `M ≈ D_N·N + c_N` from the sizes `N − δN, N, N + δN`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearDecomposition {
    pub sites: usize,
    pub delta: usize,
    pub d_n: f64,
    pub c_n: f64,
}

pub fn extract_linear(sites: usize, delta: usize, m: [f64; 3]) -> Result<LinearDecomposition> {
    if delta == 0 || delta >= sites {
        return Err(Error::Domain(format!("δN = {delta} for N = {sites}")));
    }
    let (lo, mid, hi) = ((sites - delta) as f64, sites as f64, (sites + delta) as f64);
    let fit = linear_fit(&[lo, mid, hi], &m)?;
    Ok(LinearDecomposition {
        sites,
        delta,
        d_n: fit.slope,
        c_n: fit.intercept,
    })
}

/// `y = a ln N + b`; returns `(a, b)`.
pub fn fit_log(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(Error::Precondition(format!("need at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|&(n, _)| !(n > 0.0)) {
        return Err(Error::Domain("logarithm of a non-positive size".into()));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let f = linear_fit(&x, &y)?;
    Ok((f.slope, f.intercept))
}

/// `y = c N^{−η} + b` with standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub c: f64,
    pub eta: f64,
    pub b: f64,
    /// Standard errors of `(c, η, b)`.
    pub errors: [f64; 3],
    pub residuals: Vec<f64>,
}

impl PowerFit {
    pub fn eval(&self, n: f64) -> f64 {
        self.c * n.powf(-self.eta) + self.b
    }

    pub fn rss(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum()
    }
}

struct PowerProblem<'a> {
    ln_n: &'a [f64],
    y: &'a [f64],
    p: Vector3<f64>,
}

impl LeastSquaresProblem<f64, Dyn, U3> for PowerProblem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, U3>;
    type ParameterStorage = Owned<f64, U3>;

    fn set_params(&mut self, p: &Vector3<f64>) {
        self.p = *p;
    }

    fn params(&self) -> Vector3<f64> {
        self.p
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let (c, eta, b) = (self.p[0], self.p[1], self.p[2]);
        Some(DVector::from_iterator(
            self.y.len(),
            self.ln_n.iter().zip(self.y).map(|(l, y)| c * (-eta * l).exp() + b - y),
        ))
    }

    fn jacobian(&self) -> Option<nalgebra::OMatrix<f64, Dyn, U3>> {
        let (c, eta) = (self.p[0], self.p[1]);
        let mut j = nalgebra::OMatrix::<f64, Dyn, U3>::zeros(self.y.len());
        for (i, l) in self.ln_n.iter().enumerate() {
            let e = (-eta * l).exp();
            j[(i, 0)] = e;
            j[(i, 1)] = -c * l * e;
            j[(i, 2)] = 1.0;
        }
        Some(j)
    }
}

/// Levenberg–Marquardt fit of `y = c N^{−η} + b`, started from
/// `η ∈ {0.5, 1, 1.5}` with `(c, b)` solved linearly for each start.
pub fn fit_power_offset(points: &[(f64, f64)]) -> Result<PowerFit> {
    if points.len() < 4 {
        return Err(Error::Precondition(format!("need at least 4 points, got {}", points.len())));
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) || points[0].0 <= 0.0 {
        return Err(Error::Precondition("sizes must be positive and strictly increasing".into()));
    }
    if points.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::Domain("non-finite fit input".into()));
    }
    let ln_n: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let lm = LevenbergMarquardt::new()
        .with_ftol(f64::EPSILON)
        .with_xtol(f64::EPSILON)
        .with_gtol(0.0)
        .with_patience(400);
    let mut best: Option<(f64, Vector3<f64>)> = None;
    for eta0 in [0.5, 1.0, 1.5] {
        let x: Vec<f64> = ln_n.iter().map(|l| (-eta0 * l).exp()).collect();
        let Ok(lin) = linear_fit(&x, &y) else { continue };
        let problem = PowerProblem {
            ln_n: &ln_n,
            y: &y,
            p: Vector3::new(lin.slope, eta0, lin.intercept),
        };
        let (done, report) = lm.minimize(problem);
        let rss = 2.0 * report.objective_function;
        log::debug!("power fit from η = {eta0}: {:?}, rss {rss:.3e}", report.termination);
        if report.termination.was_usage_issue() || !rss.is_finite() || !done.p.iter().all(|v| v.is_finite()) {
            continue;
        }
        if best.as_ref().is_none_or(|(r, _)| rss < *r) {
            best = Some((rss, done.p));
        }
    }
    let (rss, p) = best.ok_or_else(|| Error::DegenerateFit("no start converged".into()))?;
    let problem = PowerProblem { ln_n: &ln_n, y: &y, p };
    let j = problem.jacobian().expect("analytic jacobian");
    let jtj: Matrix3<f64> = j.transpose() * &j;
    let sv = jtj.singular_values();
    if !(sv.min() > 3.0 * f64::EPSILON * sv.max()) {
        return Err(Error::DegenerateFit("Jacobian is rank deficient".into()));
    }
    let cov = jtj
        .try_inverse()
        .filter(|c| c.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::DegenerateFit("singular Jacobian at the optimum".into()))?;
    let dof = (points.len() - 3) as f64;
    let s2 = rss / dof;
    let errors = [0, 1, 2].map(|i| (s2 * cov[(i, i)]).abs().sqrt());
    let residuals = problem.residuals().expect("finite").iter().copied().collect();
    Ok(PowerFit {
        c: p[0],
        eta: p[1],
        b: p[2],
        errors,
        residuals,
    })
}
