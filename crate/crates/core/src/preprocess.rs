//! Blink removal, z-score standardization, and stratified subsampling.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::gaze_data::{largest_remainder, Dataset, GazeSample, Trial};
use crate::matrix::Matrix;
use crate::rng;

/// A sample survives when every measurement is finite and both pupils are
/// open (pupil diameter above zero).
pub fn keeps_sample(s: &GazeSample) -> bool {
    s.is_valid() && s.lp.is_some_and(|p| p > 0.0) && s.rp.is_some_and(|p| p > 0.0)
}

/// Removes blink and incomplete samples. Trials may come back empty.
pub fn drop_invalid(trials: Vec<Trial>) -> Vec<Trial> {
    trials
        .into_iter()
        .map(|mut t| {
            t.samples.retain(keeps_sample);
            t
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScale {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

/// Per-feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationParams {
    pub features: Vec<FeatureScale>,
}

impl StandardizationParams {
    pub fn feature_names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn standardize_row(&self, row: &mut [f64]) {
        for (v, f) in row.iter_mut().zip(&self.features) {
            *v = (*v - f.mean) / f.std;
        }
    }

    fn check_names(&self, names: &[String]) -> Result<()> {
        if names.len() != self.features.len() || !names.iter().zip(self.feature_names()).all(|(a, b)| a == b) {
            return Err(Error::Config(format!(
                "feature mismatch: standardizer has [{}], data has [{}]",
                self.feature_names().collect::<Vec<_>>().join(", "),
                names.join(", ")
            )));
        }
        Ok(())
    }
}

/// Mean and population std of one column. Two passes, with the mean corrected
/// by the residual sum so that large offsets do not leak into the z-scores.
pub(crate) fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mut mean = values.clone().sum::<f64>() / n;
    mean += values.clone().map(|v| v - mean).sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn fit_standardizer(ds: &Dataset) -> Result<StandardizationParams> {
    if ds.len() < 2 {
        return Err(Error::Size {
            requested: 2,
            available: ds.len(),
        });
    }
    let rows = ds.rows();
    let features = ds
        .feature_names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let (mean, std) = mean_std((0..rows.rows()).map(|i| rows.get(i, j)));
            if !(std > 1e-12 * mean.abs().max(1.0)) {
                return Err(Error::DegenerateFeature(name.clone()));
            }
            Ok(FeatureScale {
                name: name.clone(),
                mean,
                std,
            })
        })
        .collect::<Result<_>>()?;
    Ok(StandardizationParams { features })
}

pub fn apply_standardizer(params: &StandardizationParams, ds: &Dataset) -> Result<Dataset> {
    params.check_names(ds.feature_names())?;
    let mut rows: Matrix = ds.rows().clone();
    for i in 0..rows.rows() {
        params.standardize_row(rows.row_mut(i));
    }
    Ok(ds.with_rows(rows))
}

/// Draws `target_n` rows without replacement, keeping class proportions
/// (largest-remainder rounding). Output order is shuffled.
pub fn stratified_sample(ds: &Dataset, target_n: usize, seed: u64) -> Result<Dataset> {
    let n = ds.len();
    if target_n == 0 || target_n > n {
        return Err(Error::Size {
            requested: target_n,
            available: n,
        });
    }
    let counts = ds.class_counts();
    let quotas: Vec<f64> = counts.iter().map(|&c| target_n as f64 * c as f64 / n as f64).collect();
    let want = largest_remainder(&quotas, target_n);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(seed));
    let mut taken = vec![0usize; counts.len()];
    let picked: Vec<usize> = order
        .into_iter()
        .filter(|&i| {
            let c = ds.labels()[i].index();
            let keep = taken[c] < want[c];
            taken[c] += keep as usize;
            keep
        })
        .collect();
    Ok(ds.subset(&picked))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaze_data::{LabelSet, TaskLabel};
    use proptest::prelude::*;

    fn column_ds(cols: &[Vec<f64>]) -> Dataset {
        let n = cols[0].len();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        Dataset::from_labeled_rows(
            (0..cols.len()).map(|j| format!("f{j}")).collect(),
            Matrix::from_rows(&rows).unwrap(),
            vec![TaskLabel::new(0); n],
            LabelSet::default(),
        )
        .unwrap()
    }

    fn trial(samples: Vec<GazeSample>) -> Trial {
        Trial {
            user_id: "u".into(),
            task: TaskLabel::new(0),
            samples,
        }
    }

    #[test]
    fn closed_pupil_dropped() {
        let mut samples: Vec<_> = (0..5).map(|i| GazeSample::new(i, [1.0, 1.0, 1.0, 1.0, 3.0, 3.0])).collect();
        samples[2].lp = Some(0.0);
        let out = drop_invalid(vec![trial(samples)]);
        assert_eq!(out[0].samples.len(), 4);
        assert!(out[0].samples.iter().all(|s| s.time_ms != 2));
    }

    #[test]
    fn valid_trial_unchanged() {
        let samples: Vec<_> = (0..5).map(|i| GazeSample::new(i, [1.0, 1.0, 1.0, 1.0, 3.0, 3.0])).collect();
        let t = trial(samples);
        assert_eq!(drop_invalid(vec![t.clone()]), vec![t]);
    }

    #[test]
    fn missing_rp_dropped() {
        let mut s = GazeSample::new(0, [1.0, 1.0, 1.0, 1.0, 3.0, 3.0]);
        s.rp = None;
        assert!(drop_invalid(vec![trial(vec![s])])[0].samples.is_empty());
    }

    #[test]
    fn fit_column_two_four_six() {
        let ds = column_ds(&[vec![2.0, 4.0, 6.0]]);
        let p = fit_standardizer(&ds).unwrap();
        assert_eq!(p.features[0].mean, 4.0);
        assert!((p.features[0].std - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((p.features[0].std - 1.63299).abs() < 1e-5);
        let z = apply_standardizer(&p, &ds).unwrap();
        let expect = [-1.22474, 0.0, 1.22474];
        for (got, want) in z.rows().column(0).iter().zip(expect) {
            assert!((got - want).abs() < 1e-5, "{got} vs {want}");
        }
    }

    #[test]
    fn constant_column_is_degenerate() {
        let ds = column_ds(&[vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]]);
        match fit_standardizer(&ds).unwrap_err() {
            Error::DegenerateFeature(name) => assert_eq!(name, "f1"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn columns_fit_independently() {
        let a = vec![1.0, 5.0, 2.0, 8.0];
        let b = vec![-3.0, 0.5, 0.25, 9.0];
        let ab = fit_standardizer(&column_ds(&[a.clone(), b.clone()])).unwrap();
        let ba = fit_standardizer(&column_ds(&[b, a])).unwrap();
        assert_eq!(ab.features[0].mean, ba.features[1].mean);
        assert_eq!(ab.features[0].std, ba.features[1].std);
        assert_eq!(ab.features[1].std, ba.features[0].std);
    }

    #[test]
    fn mean_maps_to_zero_and_test_mean_nonzero() {
        let train = column_ds(&[vec![1.0, 2.0, 3.0, 4.0]]);
        let p = fit_standardizer(&train).unwrap();
        let mut row = [p.features[0].mean];
        p.standardize_row(&mut row);
        assert_eq!(row[0], 0.0);
        let test = column_ds(&[vec![10.0, 11.0]]);
        let z = apply_standardizer(&p, &test).unwrap();
        assert!(z.rows().column(0).iter().sum::<f64>().abs() > 1.0);
    }

    #[test]
    fn name_mismatch_rejected() {
        let p = fit_standardizer(&column_ds(&[vec![1.0, 2.0]])).unwrap();
        let other = column_ds(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert!(matches!(apply_standardizer(&p, &other), Err(Error::Config(_))));
    }

    fn balanced(n_per: usize) -> Dataset {
        let n = 4 * n_per;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let labels = (0..n).map(|i| TaskLabel::new(i % 4)).collect();
        Dataset::from_labeled_rows(vec!["x".into()], Matrix::from_rows(&rows).unwrap(), labels, LabelSet::default())
            .unwrap()
    }

    #[test]
    fn sample_forty_of_balanced_hundred() {
        let s = stratified_sample(&balanced(25), 40, 3).unwrap();
        assert_eq!(s.class_counts(), vec![10, 10, 10, 10]);
        let mut xs: Vec<f64> = s.rows().column(0);
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        assert_eq!(xs.len(), 40);
    }

    #[test]
    fn full_sample_is_permutation() {
        let ds = balanced(5);
        let s = stratified_sample(&ds, 20, 11).unwrap();
        let mut xs = s.rows().column(0);
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, ds.rows().column(0));
        assert!(matches!(stratified_sample(&ds, 21, 0), Err(Error::Size { .. })));
    }

    #[test]
    fn drop_invalid_idempotent() {
        let mut samples: Vec<_> = (0..6).map(|i| GazeSample::new(i, [1.0, 1.0, 1.0, 1.0, 3.0, 3.0])).collect();
        samples[1].rp = Some(-1.0);
        samples[4].lx_pix = None;
        let once = drop_invalid(vec![trial(samples)]);
        assert_eq!(drop_invalid(once.clone()), once);
    }

    proptest! {
        #[test]
        fn zscores_are_standard(col in proptest::collection::vec(-1e3f64..1e3, 3..200)) {
            let ds = column_ds(&[col]);
            prop_assume!(fit_standardizer(&ds).is_ok());
            let p = fit_standardizer(&ds).unwrap();
            let z = apply_standardizer(&p, &ds).unwrap().rows().column(0);
            let (m, s) = mean_std(z.iter().copied());
            prop_assert!(m.abs() < 1e-9);
            prop_assert!((s - 1.0).abs() < 1e-9);
        }

        #[test]
        fn standardization_is_affine_invariant(
            col in proptest::collection::vec(-100f64..100.0, 3..100),
            a in prop_oneof![0.01f64..100.0, -100.0f64..-0.01],
            b in -1e4f64..1e4,
        ) {
            let ds = column_ds(std::slice::from_ref(&col));
            prop_assume!(fit_standardizer(&ds).is_ok());
            let z1 = apply_standardizer(&fit_standardizer(&ds).unwrap(), &ds).unwrap().rows().column(0);
            let shifted = column_ds(&[col.iter().map(|x| a * x + b).collect()]);
            let z2 = apply_standardizer(&fit_standardizer(&shifted).unwrap(), &shifted).unwrap().rows().column(0);
            let sign = a.signum();
            for (x, y) in z1.iter().zip(&z2) {
                prop_assert!((sign * x - y).abs() < 1e-9, "{} vs {}", x, y);
            }
        }
    }
}
