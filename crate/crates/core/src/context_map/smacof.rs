//! SMACOF stress majorization in two dimensions.

use rand::Rng;
use rayon::prelude::*;

use super::{FusedDistanceMatrix, PointLabel};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmacofParams {
    pub seed: u64,
    pub max_iter: usize,
    pub eps: f64,
    /// Independent random starts; the lowest final stress wins.
    pub n_init: usize,
}

impl Default for SmacofParams {
    fn default() -> Self {
        SmacofParams {
            seed: 0,
            max_iter: 300,
            eps: 1e-6,
            n_init: 8,
        }
    }
}

/// Result of embedding a bare dissimilarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub coords: Vec<[f64; 2]>,
    pub stress: f64,
    pub iterations: usize,
    /// Stress of the initial configuration followed by the stress after each
    /// Guttman transform.
    pub stress_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection2D {
    pub coords: Vec<[f64; 2]>,
    pub stress: f64,
    pub iterations: usize,
    pub stress_trace: Vec<f64>,
    pub labels: Vec<PointLabel>,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    (dx * dx + dy * dy).sqrt()
}

fn check_targets(delta: &[f64], n: usize) -> Result<f64> {
    if delta.len() != n * n {
        return Err(Error::Shape {
            expected: n * n,
            got: delta.len(),
        });
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = delta[i * n + j];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Input(format!("dissimilarity ({i}, {j}) is {v}")));
            }
            if v != delta[j * n + i] {
                return Err(Error::Input(format!("dissimilarity ({i}, {j}) is not symmetric")));
            }
            if j > i {
                total += v * v;
            }
        }
    }
    Ok(total)
}

/// Stress-1: sqrt(sum (delta_ij - d_ij)^2 / sum delta_ij^2) over pairs i < j.
/// Zero when every target distance is zero.
pub fn normalized_stress(delta: &[f64], coords: &[[f64; 2]]) -> Result<f64> {
    let n = coords.len();
    let denom = check_targets(delta, n)?;
    Ok(stress_with(delta, coords, denom))
}

fn stress_with(delta: &[f64], coords: &[[f64; 2]], denom: f64) -> f64 {
    if denom == 0.0 {
        return 0.0;
    }
    let n = coords.len();
    let raw: f64 = (0..n)
        .into_par_iter()
        .with_min_len(32)
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    let r = delta[i * n + j] - dist(coords[i], coords[j]);
                    r * r
                })
                .sum::<f64>()
        })
        .sum();
    (raw / denom).sqrt()
}

/// Stress of `x` together with its Guttman transform, sharing one pass over
/// the pairwise distances.
fn step(delta: &[f64], x: &[[f64; 2]], denom: f64) -> (f64, Vec<[f64; 2]>) {
    let n = x.len();
    let rows: Vec<(f64, [f64; 2])> = x
        .par_iter()
        .with_min_len(32)
        .enumerate()
        .map(|(i, &xi)| {
            let mut raw = 0.0;
            let mut acc = [0.0; 2];
            for (j, &xj) in x.iter().enumerate() {
                if i == j {
                    continue;
                }
                let t = delta[i * n + j];
                let d = dist(xi, xj);
                raw += (t - d) * (t - d);
                let ratio = if d > 0.0 { t / d } else { 0.0 };
                acc[0] += ratio * (xi[0] - xj[0]);
                acc[1] += ratio * (xi[1] - xj[1]);
            }
            (raw, [acc[0] / n as f64, acc[1] / n as f64])
        })
        .collect();
    let raw: f64 = rows.iter().map(|r| r.0).sum::<f64>() / 2.0;
    let stress = if denom == 0.0 { 0.0 } else { (raw / denom).sqrt() };
    (stress, rows.into_iter().map(|r| r.1).collect())
}

/// Embeds an `n`×`n` symmetric dissimilarity matrix (row-major) in the plane.
/// Each start is a seeded uniform configuration in the unit square; start `k`
/// draws from stream `k` of `seed`.
pub fn smacof(delta: &[f64], n: usize, params: &SmacofParams) -> Result<Embedding> {
    if params.max_iter == 0 || params.n_init == 0 {
        return Err(Error::Config("max_iter and n_init must be at least 1".into()));
    }
    if !(params.eps > 0.0) {
        return Err(Error::Config(format!("eps must be positive, got {}", params.eps)));
    }
    if n == 0 {
        return Err(Error::Input("nothing to embed".into()));
    }
    let denom = check_targets(delta, n)?;
    let mut best: Option<Embedding> = None;
    for start in 0..params.n_init {
        let e = single_start(delta, n, denom, params, start as u64);
        if best.as_ref().is_none_or(|b| e.stress < b.stress) {
            best = Some(e);
        }
    }
    Ok(best.expect("n_init >= 1"))
}

fn single_start(delta: &[f64], n: usize, denom: f64, params: &SmacofParams, start: u64) -> Embedding {
    let mut r = rng::seeded_stream(params.seed, start);
    let mut x: Vec<[f64; 2]> = (0..n).map(|_| [r.random::<f64>(), r.random::<f64>()]).collect();
    let (mut stress, mut next) = step(delta, &x, denom);
    let mut trace = vec![stress];
    let mut iterations = 0;
    while iterations < params.max_iter && stress > 0.0 {
        x = next;
        iterations += 1;
        let (s, after) = step(delta, &x, denom);
        trace.push(s);
        let decrease = (stress - s) / stress;
        stress = s;
        next = after;
        if decrease < params.eps {
            break;
        }
    }
    Embedding {
        coords: x,
        stress,
        iterations,
        stress_trace: trace,
    }
}

pub fn smacof_embed(m: &FusedDistanceMatrix, params: &SmacofParams) -> Result<Projection2D> {
    let e = smacof(&m.distances, m.size(), params)?;
    Ok(Projection2D {
        coords: e.coords,
        stress: e.stress,
        iterations: e.iterations,
        stress_trace: e.stress_trace,
        labels: m.labels.clone(),
    })
}
