//! Seeded train/validation/test partitioning with largest-remainder
//! apportionment of per-class counts.

use rand::seq::SliceRandom;

use super::{Dataset, TaskLabel};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub validation_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.15,
            validation_fraction: 0.15,
            seed: 0,
            stratified: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let in_range = |f: f64| f > 0.0 && f < 1.0;
        if !in_range(self.test_fraction) || !in_range(self.validation_fraction) {
            return Err(Error::Config(format!(
                "split fractions must lie in (0, 1), got test={} validation={}",
                self.test_fraction, self.validation_fraction
            )));
        }
        if self.test_fraction + self.validation_fraction >= 1.0 {
            return Err(Error::Config("test + validation fractions must be below 1".into()));
        }
        Ok(())
    }

    fn train_fraction(&self) -> f64 {
        1.0 - self.test_fraction - self.validation_fraction
    }
}

/// Unit of partitioning: single rows, or whole trials (all rows of a trial
/// land in the same split).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitMode {
    #[default]
    Rows,
    Trials,
}

/// Disjoint index sets covering `0..n`, each in shuffled order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

// Quotas like 0.15 * 20 = 3.0000000000000004 must floor to 3.
fn snap(q: f64) -> f64 {
    let r = q.round();
    if (q - r).abs() < 1e-9 {
        r
    } else {
        q
    }
}

/// Hamilton apportionment: floors first, then the leftover units go to the
/// largest fractional remainders, earlier index first on ties.
pub fn largest_remainder(quotas: &[f64], total: usize) -> Vec<usize> {
    let quotas: Vec<f64> = quotas.iter().map(|&q| snap(q.max(0.0))).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Per-class (test, validation) counts such that every split's count is
/// within one unit of its exact share for every class.
fn stratified_counts(class_totals: &[usize], spec: &SplitSpec) -> (Vec<usize>, Vec<usize>) {
    let n: usize = class_totals.iter().sum();
    let test_quota: Vec<f64> = class_totals.iter().map(|&c| spec.test_fraction * c as f64).collect();
    let test = largest_remainder(&test_quota, snap(spec.test_fraction * n as f64).round() as usize);

    // Validation counts are constrained by both their own quota and the
    // train quota left over after the test draw.
    let mut lo = Vec::with_capacity(class_totals.len());
    let mut hi = Vec::with_capacity(class_totals.len());
    let mut val_quota = Vec::with_capacity(class_totals.len());
    for (&c, &t) in class_totals.iter().zip(&test) {
        let b = snap(spec.validation_fraction * c as f64);
        let tr = snap(spec.train_fraction() * c as f64);
        let rest = (c - t) as f64;
        let l = b.floor().max(rest - tr.ceil()).max(0.0);
        let h = b.ceil().min(rest - tr.floor()).min(rest);
        let (l, h) = if l <= h { (l, h) } else { (b.round().min(rest), b.round().min(rest)) };
        lo.push(l as usize);
        hi.push(h as usize);
        val_quota.push(b);
    }
    let target = snap(spec.validation_fraction * n as f64).round() as usize;
    let mut val = lo.clone();
    let mut order: Vec<usize> = (0..class_totals.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = val_quota[a] - lo[a] as f64;
        let rb = val_quota[b] - lo[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut missing = target.saturating_sub(val.iter().sum());
    for &i in &order {
        if missing == 0 {
            break;
        }
        if val[i] < hi[i] {
            val[i] += 1;
            missing -= 1;
        }
    }
    (test, val)
}

/// Partitions `labels.len()` units. Stratified mode apportions each class
/// separately; otherwise the shuffled order is cut at the rounded totals.
pub fn partition_indices(labels: &[TaskLabel], n_classes: usize, spec: &SplitSpec) -> Result<Partition> {
    spec.validate()?;
    let n = labels.len();
    let mut class_totals = vec![0usize; n_classes];
    for l in labels {
        if l.index() >= n_classes {
            return Err(Error::Label(format!("label {} outside {n_classes} classes", l.index())));
        }
        class_totals[l.index()] += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(spec.seed));

    let mut part = Partition::default();
    if spec.stratified {
        let present = class_totals.iter().filter(|&&c| c > 0).count();
        if n < present {
            return Err(Error::Size {
                requested: present,
                available: n,
            });
        }
        let (test, val) = stratified_counts(&class_totals, spec);
        let mut seen = vec![0usize; n_classes];
        for i in order {
            let c = labels[i].index();
            let k = seen[c];
            seen[c] += 1;
            if k < test[c] {
                part.test.push(i);
            } else if k < test[c] + val[c] {
                part.validation.push(i);
            } else {
                part.train.push(i);
            }
        }
    } else {
        let n_test = (snap(spec.test_fraction * n as f64).round() as usize).min(n);
        let n_val = (snap(spec.validation_fraction * n as f64).round() as usize).min(n - n_test);
        part.test = order[..n_test].to_vec();
        part.validation = order[n_test..n_test + n_val].to_vec();
        part.train = order[n_test + n_val..].to_vec();
    }
    Ok(part)
}

/// Row partition derived from partitioning the trials that own rows.
pub fn partition_trials(ds: &Dataset, spec: &SplitSpec) -> Result<Partition> {
    let mut owned = vec![false; ds.trials().len()];
    for &t in ds.trial_ids() {
        owned[t] = true;
    }
    let units: Vec<usize> = (0..owned.len()).filter(|&t| owned[t]).collect();
    let unit_labels: Vec<TaskLabel> = units.iter().map(|&t| ds.trials()[t].task).collect();
    let unit_part = partition_indices(&unit_labels, ds.label_set().len(), spec)?;

    let mut rows_of = vec![Vec::new(); ds.trials().len()];
    for (row, &t) in ds.trial_ids().iter().enumerate() {
        rows_of[t].push(row);
    }
    let expand = |ids: &[usize]| -> Vec<usize> { ids.iter().flat_map(|&u| rows_of[units[u]].iter().copied()).collect() };
    Ok(Partition {
        train: expand(&unit_part.train),
        validation: expand(&unit_part.validation),
        test: expand(&unit_part.test),
    })
}

/// Shuffles and splits into (train, validation, test).
pub fn shuffle_split(ds: &Dataset, spec: &SplitSpec, mode: SplitMode) -> Result<(Dataset, Dataset, Dataset)> {
    let part = match mode {
        SplitMode::Rows => partition_indices(ds.labels(), ds.label_set().len(), spec)?,
        SplitMode::Trials => partition_trials(ds, spec)?,
    };
    Ok((ds.subset(&part.train), ds.subset(&part.validation), ds.subset(&part.test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(counts: &[usize]) -> Vec<TaskLabel> {
        counts
            .iter()
            .enumerate()
            .flat_map(|(c, &k)| std::iter::repeat_n(TaskLabel::new(c), k))
            .collect()
    }

    fn per_class(idx: &[usize], labels: &[TaskLabel], k: usize) -> Vec<usize> {
        let mut c = vec![0; k];
        for &i in idx {
            c[labels[i].index()] += 1;
        }
        c
    }

    #[test]
    fn balanced_hundred_apportions_remainders_in_label_order() {
        let labels = labels(&[25, 25, 25, 25]);
        let spec = SplitSpec {
            seed: 9,
            ..Default::default()
        };
        let p = partition_indices(&labels, 4, &spec).unwrap();
        assert_eq!(p.test.len(), 15);
        assert_eq!(per_class(&p.test, &labels, 4), vec![4, 4, 4, 3]);
        assert_eq!(p.validation.len(), 15);
        assert_eq!(p.train.len(), 70);
    }

    #[test]
    fn single_class_twenty() {
        let labels = labels(&[20]);
        let p = partition_indices(&labels, 1, &SplitSpec::default()).unwrap();
        assert_eq!((p.test.len(), p.validation.len(), p.train.len()), (3, 3, 14));
        let p = partition_indices(
            &labels,
            1,
            &SplitSpec {
                stratified: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!((p.test.len(), p.validation.len(), p.train.len()), (3, 3, 14));
    }

    #[test]
    fn same_seed_same_partition() {
        let labels = labels(&[30, 17, 5, 48]);
        let spec = SplitSpec {
            seed: 1234,
            ..Default::default()
        };
        assert_eq!(
            partition_indices(&labels, 4, &spec).unwrap(),
            partition_indices(&labels, 4, &spec).unwrap()
        );
        let other = SplitSpec { seed: 1235, ..spec };
        assert_ne!(
            partition_indices(&labels, 4, &spec).unwrap(),
            partition_indices(&labels, 4, &other).unwrap()
        );
    }

    #[test]
    fn bad_fractions_rejected() {
        let labels = labels(&[10]);
        for (t, v) in [(0.0, 0.1), (0.5, 0.5), (1.2, 0.1), (0.1, -0.1)] {
            let spec = SplitSpec {
                test_fraction: t,
                validation_fraction: v,
                ..Default::default()
            };
            assert!(matches!(partition_indices(&labels, 1, &spec), Err(Error::Config(_))));
        }
    }

    #[test]
    fn largest_remainder_basics() {
        assert_eq!(largest_remainder(&[3.75, 3.75, 3.75, 3.75], 15), vec![4, 4, 4, 3]);
        assert_eq!(largest_remainder(&[1.2, 2.7, 0.1], 4), vec![1, 3, 0]);
        assert_eq!(largest_remainder(&[2.0, 3.0], 5), vec![2, 3]);
    }

    proptest! {
        #[test]
        fn stratified_partition_properties(
            counts in proptest::collection::vec(0usize..60, 1..6),
            seed in any::<u64>(),
            t in 0.05f64..0.45,
            v in 0.05f64..0.45,
        ) {
            let labels = labels(&counts);
            prop_assume!(!labels.is_empty());
            let spec = SplitSpec { test_fraction: t, validation_fraction: v, seed, stratified: true };
            let p = partition_indices(&labels, counts.len(), &spec).unwrap();
            let mut all: Vec<usize> = p.train.iter().chain(&p.validation).chain(&p.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
            for (idx, f) in [(&p.test, t), (&p.validation, v), (&p.train, 1.0 - t - v)] {
                let got = per_class(idx, &labels, counts.len());
                for (c, &total) in counts.iter().enumerate() {
                    prop_assert!((got[c] as f64 - f * total as f64).abs() <= 1.0 + 1e-9);
                }
            }
        }
    }
}
