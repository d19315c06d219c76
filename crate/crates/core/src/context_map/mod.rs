//! Data context maps: data rows and variables placed in one 2D scatter so
//! that proximity reflects correlation.
//!
//! The fused matrix stacks `N` data points and `d` variables. Data-data
//! entries are Euclidean distances between rows, variable-variable entries
//! come from pairwise Pearson correlation, and data-variable entries are
//! distances between a row (min-max rescaled to `[0, 1]`) and the unit
//! vector of the variable. Each block is divided by its own maximum.

mod plot;
mod smacof;

use rand::seq::index;
use rayon::prelude::*;

pub use plot::{emit_projection, read_projection_csv, ProjectionRow};
pub use smacof::{normalized_stress, smacof, smacof_embed, Embedding, Projection2D, SmacofParams};

use crate::error::{Error, Result};
use crate::gaze_data::Dataset;
use crate::matrix::squared_distance;
use crate::preprocess::mean_std;
use crate::rng;

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Size {
            requested: 2,
            available: x.len(),
        });
    }
    let (mx, sx) = mean_std(x.iter().copied());
    let (my, sy) = mean_std(y.iter().copied());
    if !(sx > 0.0) || !(sy > 0.0) {
        return Err(Error::DegenerateFeature("constant input".into()));
    }
    let cov = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / x.len() as f64;
    Ok((cov / (sx * sy)).clamp(-1.0, 1.0))
}

/// Map from correlation to variable-variable distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrelationDistance {
    /// 1 - |r|: anti-correlated variables sit together.
    #[default]
    Absolute,
    /// (1 - r) / 2
    Signed,
}

impl CorrelationDistance {
    pub fn apply(self, r: f64) -> f64 {
        match self {
            CorrelationDistance::Absolute => 1.0 - r.abs(),
            CorrelationDistance::Signed => (1.0 - r) / 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointKind {
    Data,
    Variable,
}

impl PointKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointKind::Data => "data",
            PointKind::Variable => "variable",
        }
    }
}

/// Kind plus display name: the task name for data points, the feature name
/// for variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointLabel {
    pub kind: PointKind,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedDistanceMatrix {
    /// (N+d)^2 entries, row-major. Indices `0..N` are data points.
    pub distances: Vec<f64>,
    pub n_data: usize,
    pub n_vars: usize,
    /// Divisors applied to the data-data, variable-variable and
    /// data-variable blocks.
    pub block_scales: [f64; 3],
    pub labels: Vec<PointLabel>,
}

impl FusedDistanceMatrix {
    pub fn size(&self) -> usize {
        self.n_data + self.n_vars
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.distances[i * self.size() + j]
    }
}

fn correlation_matrix(ds: &Dataset) -> Result<Vec<Vec<f64>>> {
    let d = ds.n_features();
    let cols: Vec<Vec<f64>> = (0..d).map(|j| ds.rows().column(j)).collect();
    let mut corr = vec![vec![1.0; d]; d];
    for a in 0..d {
        for b in a + 1..d {
            let r = pearson(&cols[a], &cols[b]).map_err(|e| match e {
                Error::DegenerateFeature(_) => {
                    let bad = if mean_std(cols[a].iter().copied()).1 > 0.0 { b } else { a };
                    Error::DegenerateFeature(ds.feature_names()[bad].clone())
                }
                other => other,
            })?;
            corr[a][b] = r;
            corr[b][a] = r;
        }
    }
    Ok(corr)
}

pub fn build_fused_matrix(ds: &Dataset, mapping: CorrelationDistance) -> Result<FusedDistanceMatrix> {
    let n = ds.len();
    let d = ds.n_features();
    if n < 2 || d < 2 {
        return Err(Error::Size {
            requested: 2,
            available: n.min(d),
        });
    }
    let corr = correlation_matrix(ds)?;
    let size = n + d;

    let mins: Vec<f64> = (0..d).map(|j| ds.rows().column(j).into_iter().fold(f64::INFINITY, f64::min)).collect();
    let maxs: Vec<f64> = (0..d).map(|j| ds.rows().column(j).into_iter().fold(f64::NEG_INFINITY, f64::max)).collect();
    let rescaled: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            ds.row(i)
                .iter()
                .enumerate()
                .map(|(j, v)| (v - mins[j]) / (maxs[j] - mins[j]))
                .collect()
        })
        .collect();

    let mut m = vec![0.0; size * size];
    m.par_chunks_mut(size).enumerate().for_each(|(i, row)| {
        if i < n {
            for j in 0..n {
                row[j] = squared_distance(ds.row(i), ds.row(j)).sqrt();
            }
            let norm2: f64 = rescaled[i].iter().map(|v| v * v).sum();
            for v in 0..d {
                row[n + v] = (norm2 - 2.0 * rescaled[i][v] + 1.0).max(0.0).sqrt();
            }
        } else {
            let a = i - n;
            for j in 0..n {
                let norm2: f64 = rescaled[j].iter().map(|v| v * v).sum();
                row[j] = (norm2 - 2.0 * rescaled[j][a] + 1.0).max(0.0).sqrt();
            }
            for b in 0..d {
                // Rounding in r would otherwise leave a ~1e-16 entry that
                // block scaling blows up to 1.
                let dist = mapping.apply(corr[a][b]);
                row[n + b] = if a == b || dist < 1e-12 { 0.0 } else { dist };
            }
        }
    });

    let block = |i: usize, j: usize| match (i < n, j < n) {
        (true, true) => 0,
        (false, false) => 1,
        _ => 2,
    };
    let mut scales = [0.0f64; 3];
    for i in 0..size {
        for j in 0..size {
            let b = block(i, j);
            scales[b] = scales[b].max(m[i * size + j]);
        }
    }
    for i in 0..size {
        for j in 0..size {
            let s = scales[block(i, j)];
            if s > 0.0 {
                m[i * size + j] /= s;
            }
        }
    }

    let labels = (0..n)
        .map(|i| PointLabel {
            kind: PointKind::Data,
            name: ds.label_set().name(ds.labels()[i]).to_string(),
        })
        .chain(ds.feature_names().iter().map(|f| PointLabel {
            kind: PointKind::Variable,
            name: f.clone(),
        }))
        .collect();
    Ok(FusedDistanceMatrix {
        distances: m,
        n_data: n,
        n_vars: d,
        block_scales: scales,
        labels,
    })
}

/// Features ranked by mean absolute correlation with the others, least
/// correlated first; the `k` lowest are returned. Equal scores keep dataset
/// column order.
pub fn select_features(ds: &Dataset, k: usize) -> Result<Vec<String>> {
    let d = ds.n_features();
    if k == 0 || k > d {
        return Err(Error::Size {
            requested: k,
            available: d,
        });
    }
    let corr = correlation_matrix(ds)?;
    let score = |a: usize| {
        if d == 1 {
            0.0
        } else {
            (0..d).filter(|&b| b != a).map(|b| corr[a][b].abs()).sum::<f64>() / (d - 1) as f64
        }
    };
    let scores: Vec<f64> = (0..d).map(score).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    Ok(order.into_iter().take(k).map(|j| ds.feature_names()[j].clone()).collect())
}

/// Uniform random subset of at most `max_rows` rows, original order kept.
pub fn subsample_rows(ds: &Dataset, max_rows: usize, seed: u64) -> Dataset {
    if ds.len() <= max_rows {
        return ds.clone();
    }
    let mut picked = index::sample(&mut rng::seeded(seed), ds.len(), max_rows).into_vec();
    picked.sort_unstable();
    ds.subset(&picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaze_data::{LabelSet, TaskLabel};
    use crate::matrix::Matrix;
    use rand_distr::{Distribution, StandardNormal};

    fn ds(cols: &[Vec<f64>], names: &[&str]) -> Dataset {
        let n = cols[0].len();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        Dataset::from_labeled_rows(
            names.iter().map(|s| s.to_string()).collect(),
            Matrix::from_rows(&rows).unwrap(),
            vec![TaskLabel::new(0); n],
            LabelSet::default(),
        )
        .unwrap()
    }

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut r = rng::seeded(seed);
        (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
    }

    #[test]
    fn pearson_examples() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        // cov = 1.25 * ... : sum of centered products 4, sum of squares 5 each.
        assert!((pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
        assert!(matches!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::DegenerateFeature(_))));
    }

    #[test]
    fn fused_matrix_blocks() {
        let a = vec![1.0, 1.0, 3.0, 0.0];
        let b = vec![2.0, 2.0, 6.0, 0.0];
        let m = build_fused_matrix(&ds(&[a, b], &["a", "b"]), CorrelationDistance::Absolute).unwrap();
        assert_eq!(m.size(), 6);
        assert_eq!(m.get(0, 1), 0.0, "identical rows");
        assert!(m.get(4, 5).abs() < 1e-12, "perfectly correlated variables");
        for i in 0..6 {
            assert_eq!(m.get(i, i), 0.0);
            for j in 0..6 {
                assert_eq!(m.get(i, j), m.get(j, i));
                assert!((0.0..=1.0).contains(&m.get(i, j)));
            }
        }
    }

    #[test]
    fn row_at_unit_vector_touches_its_variable() {
        // Row 0 rescales to (1, 0), which coincides with e_1.
        let m = build_fused_matrix(
            &ds(&[vec![4.0, 0.0, 2.0], vec![0.0, 5.0, 1.0]], &["x", "y"]),
            CorrelationDistance::Absolute,
        )
        .unwrap();
        assert_eq!(m.get(0, 3), 0.0);
        assert!(m.get(0, 4) > 0.0);
    }

    #[test]
    fn constant_column_named() {
        let err = build_fused_matrix(&ds(&[vec![1.0, 2.0], vec![3.0, 3.0]], &["ok", "flat"]), Default::default())
            .unwrap_err();
        assert!(matches!(err, Error::DegenerateFeature(ref n) if n == "flat"), "{err}");
    }

    #[test]
    fn duplicate_pupil_excluded() {
        let lp = noise(1, 200);
        let cols = vec![noise(2, 200), noise(3, 200), noise(4, 200), noise(5, 200), lp.clone(), lp];
        let names = ["lx_pix", "ly_pix", "lx_href", "ly_href", "lp", "rp"];
        let picked = select_features(&ds(&cols, &names), 5).unwrap();
        assert_eq!(picked.len(), 5);
        assert!(!picked.contains(&"rp".to_string()));
        assert!(picked.contains(&"lp".to_string()));
    }

    #[test]
    fn k_equals_d_ranks_all() {
        let cols = vec![noise(7, 50), noise(8, 50), noise(9, 50)];
        let picked = select_features(&ds(&cols, &["a", "b", "c"]), 3).unwrap();
        let mut sorted = picked.clone();
        sorted.sort();
        assert_eq!(sorted, vec!["a", "b", "c"]);
    }

    #[test]
    fn independent_pair_beats_duplicate() {
        let a = noise(11, 300);
        let cols = vec![a.clone(), noise(12, 300), a];
        let picked = select_features(&ds(&cols, &["a", "b", "dup"]), 2).unwrap();
        assert_eq!(picked, vec!["b", "a"]);
    }

    #[test]
    fn subsample_caps_rows() {
        let d = ds(&[noise(1, 50), noise(2, 50)], &["a", "b"]);
        assert_eq!(subsample_rows(&d, 20, 0).len(), 20);
        assert_eq!(subsample_rows(&d, 80, 0).len(), 50);
    }
}
