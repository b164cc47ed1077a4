//! Finite-size data collapse `x = (h − h₀(N)) N^{1/ν}`, `y = (m − m₀(N)) N^γ`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::Peak;
use crate::error::{Error, Result};

/// Samples per pairwise comparison window.
const WINDOW_SAMPLES: usize = 201;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapsePoint {
    pub sites: usize,
    pub h: f64,
    pub m: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Collapse {
    pub gamma: f64,
    pub nu: f64,
    pub points: Vec<CollapsePoint>,
    /// Mean pairwise relative L² distance of the rescaled curves; 0 is perfect.
    pub quality: f64,
}

pub const COLLAPSE_HEADER: &str = "N,h,m,x,y";

impl Collapse {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{COLLAPSE_HEADER}")?;
        for p in &self.points {
            writeln!(w, "{},{:.17e},{:.17e},{:.17e},{:.17e}", p.sites, p.h, p.m, p.x, p.y)?;
        }
        Ok(())
    }
}

fn interp(curve: &[(f64, f64)], x: f64) -> f64 {
    let i = curve.partition_point(|p| p.0 < x).clamp(1, curve.len() - 1);
    let ((x0, y0), (x1, y1)) = (curve[i - 1], curve[i]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Distance of two curves on their common window, relative to their RMS
/// magnitude there so that the score does not scale with `N^γ`.
fn pair_distance(a: &[(f64, f64)], b: &[(f64, f64)]) -> Option<f64> {
    let lo = a[0].0.max(b[0].0);
    let hi = a[a.len() - 1].0.min(b[b.len() - 1].0);
    if !(hi > lo) {
        return None;
    }
    let (mut diff, mut size) = (0.0, 0.0);
    for k in 0..WINDOW_SAMPLES {
        let x = lo + (hi - lo) * k as f64 / (WINDOW_SAMPLES - 1) as f64;
        let (ya, yb) = (interp(a, x), interp(b, x));
        diff += (ya - yb).powi(2);
        size += 0.5 * (ya * ya + yb * yb);
    }
    Some(if size > 0.0 { (diff / size).sqrt() } else { 0.0 })
}

/// Rescale `(N, h, m)` samples with the given peaks and score the collapse.
///
/// `window` clips the rescaled abscissa before scoring.
pub fn collapse(
    samples: &[(usize, f64, f64)],
    peaks: &BTreeMap<usize, Peak>,
    gamma: f64,
    nu: f64,
    window: Option<(f64, f64)>,
) -> Result<Collapse> {
    if !(nu > 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!("γ = {gamma}, ν = {nu}")));
    }
    let mut curves: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    let mut points = Vec::with_capacity(samples.len());
    for &(sites, h, m) in samples {
        let peak = peaks
            .get(&sites)
            .ok_or_else(|| Error::IncompleteInput(format!("no peak for N = {sites}")))?;
        let nf = sites as f64;
        let x = (h - peak.h0) * nf.powf(1.0 / nu);
        let y = (m - peak.m0) * nf.powf(gamma);
        points.push(CollapsePoint { sites, h, m, x, y });
        if window.is_none_or(|(lo, hi)| x >= lo && x <= hi) {
            curves.entry(sites).or_default().push((x, y));
        }
    }
    let curves: Vec<Vec<(f64, f64)>> = curves
        .into_values()
        .map(|mut c| {
            c.sort_by(|a, b| a.0.total_cmp(&b.0));
            c
        })
        .filter(|c| c.len() >= 2)
        .collect();
    if curves.len() < 2 {
        return Err(Error::IncompleteInput("collapse needs at least two sizes with two points each".into()));
    }
    let mut dists = Vec::new();
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            dists.extend(pair_distance(&curves[i], &curves[j]));
        }
    }
    if dists.is_empty() {
        return Err(Error::IncompleteInput("rescaled curves do not overlap".into()));
    }
    let quality = dists.iter().sum::<f64>() / dists.len() as f64;
    Ok(Collapse { gamma, nu, points, quality })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaScan {
    /// `(γ, quality)` for every scanned value.
    pub scores: Vec<(f64, f64)>,
    pub best: f64,
    /// Neighbouring grid values around `best`.
    pub interval: (f64, f64),
}

/// Collapse quality over a grid of `γ` at fixed `ν`.
pub fn gamma_scan(
    samples: &[(usize, f64, f64)],
    peaks: &BTreeMap<usize, Peak>,
    gammas: &[f64],
    nu: f64,
    window: Option<(f64, f64)>,
) -> Result<GammaScan> {
    if gammas.is_empty() {
        return Err(Error::Precondition("empty γ grid".into()));
    }
    let mut grid = gammas.to_vec();
    grid.sort_by(f64::total_cmp);
    let scores = grid
        .iter()
        .map(|&g| Ok((g, collapse(samples, peaks, g, nu, window)?.quality)))
        .collect::<Result<Vec<_>>>()?;
    let i = (0..scores.len()).fold(0, |b, i| if scores[i].1 < scores[b].1 { i } else { b });
    let interval = (scores[i.saturating_sub(1)].0, scores[(i + 1).min(scores.len() - 1)].0);
    Ok(GammaScan {
        best: scores[i].0,
        scores,
        interval,
    })
}
