//! Eye-movement recordings: samples, trials, task labels, and the flat
//! [`Dataset`] every learner consumes.

mod ingest;
mod split;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use ingest::{
    ingest_trial, load_manifest, read_manifest, write_manifest, write_trial_csv, ManifestEntry,
    MANIFEST_HEADER, TRIAL_HEADER,
};
pub use split::{
    largest_remainder, partition_indices, partition_trials, shuffle_split, Partition, SplitMode,
    SplitSpec,
};

/// A gaze measurement column. Time is carried on [`GazeSample`] separately and
/// is never a feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    LxPix,
    LyPix,
    LxHref,
    LyHref,
    Lp,
    Rp,
}

impl Field {
    pub const ALL: [Field; 6] = [
        Field::LxPix,
        Field::LyPix,
        Field::LxHref,
        Field::LyHref,
        Field::Lp,
        Field::Rp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::LxPix => "lx_pix",
            Field::LyPix => "ly_pix",
            Field::LxHref => "lx_href",
            Field::LyHref => "ly_href",
            Field::Lp => "lp",
            Field::Rp => "rp",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Field::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown feature `{s}`")))
    }
}

/// The five least mutually correlated measurements, the default feature set.
pub const DEFAULT_FEATURES: [Field; 5] = [Field::LxPix, Field::LyPix, Field::LxHref, Field::LyHref, Field::Lp];

/// One timestamped reading. `None` marks a missing or unparseable value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GazeSample {
    pub time_ms: u64,
    pub lx_pix: Option<f64>,
    pub ly_pix: Option<f64>,
    pub lx_href: Option<f64>,
    pub ly_href: Option<f64>,
    pub lp: Option<f64>,
    pub rp: Option<f64>,
}

impl GazeSample {
    /// A fully observed sample; non-finite values become missing.
    pub fn new(time_ms: u64, values: [f64; 6]) -> Self {
        let mut s = GazeSample {
            time_ms,
            ..Default::default()
        };
        for (field, v) in Field::ALL.into_iter().zip(values) {
            s.set(field, Some(v));
        }
        s
    }

    pub fn get(&self, field: Field) -> Option<f64> {
        match field {
            Field::LxPix => self.lx_pix,
            Field::LyPix => self.ly_pix,
            Field::LxHref => self.lx_href,
            Field::LyHref => self.ly_href,
            Field::Lp => self.lp,
            Field::Rp => self.rp,
        }
    }

    pub fn set(&mut self, field: Field, value: Option<f64>) {
        let value = value.filter(|v| v.is_finite());
        match field {
            Field::LxPix => self.lx_pix = value,
            Field::LyPix => self.ly_pix = value,
            Field::LxHref => self.lx_href = value,
            Field::LyHref => self.ly_href = value,
            Field::Lp => self.lp = value,
            Field::Rp => self.rp = value,
        }
    }

    /// All measurements present and finite.
    pub fn is_valid(&self) -> bool {
        Field::ALL
            .into_iter()
            .all(|f| self.get(f).is_some_and(f64::is_finite))
    }
}

/// Index of a task within a [`LabelSet`]. Ordering follows the label set and
/// is used for every tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TaskLabel(usize);

impl TaskLabel {
    pub const fn new(index: usize) -> Self {
        TaskLabel(index)
    }

    #[inline]
    pub const fn index(self) -> usize {
        self.0
    }
}

/// Ordered, duplicate-free set of task names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    names: Vec<String>,
}

impl Default for LabelSet {
    fn default() -> Self {
        LabelSet {
            names: ["Blank", "Waldo", "Natural", "Puzzle"].map(String::from).to_vec(),
        }
    }
}

impl LabelSet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::Config("label set is empty".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || n.chars().any(|c| c.is_whitespace() || c == ',') {
                return Err(Error::Config(format!("invalid label name `{n}`")));
            }
            if names[..i].contains(n) {
                return Err(Error::Config(format!("duplicate label `{n}`")));
            }
        }
        Ok(LabelSet { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, label: TaskLabel) -> &str {
        &self.names[label.0]
    }

    /// Exact match first, then ASCII case-insensitive.
    pub fn parse(&self, name: &str) -> Option<TaskLabel> {
        let name = name.trim();
        self.names
            .iter()
            .position(|n| n == name)
            .or_else(|| self.names.iter().position(|n| n.eq_ignore_ascii_case(name)))
            .map(TaskLabel)
    }

    pub fn labels(&self) -> impl Iterator<Item = TaskLabel> {
        (0..self.names.len()).map(TaskLabel)
    }
}

/// One user performing one task.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub user_id: String,
    pub task: TaskLabel,
    pub samples: Vec<GazeSample>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub user_id: String,
    pub task: TaskLabel,
}

/// Feature matrix with one task label and one source trial per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    rows: Matrix,
    labels: Vec<TaskLabel>,
    trial_ids: Vec<usize>,
    trials: Vec<TrialRecord>,
    label_set: LabelSet,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        rows: Matrix,
        labels: Vec<TaskLabel>,
        trial_ids: Vec<usize>,
        trials: Vec<TrialRecord>,
        label_set: LabelSet,
    ) -> Result<Self> {
        let n = rows.rows();
        if labels.len() != n || trial_ids.len() != n {
            return Err(Error::Shape {
                expected: n,
                got: if labels.len() != n { labels.len() } else { trial_ids.len() },
            });
        }
        if feature_names.len() != rows.cols() {
            return Err(Error::Shape {
                expected: rows.cols(),
                got: feature_names.len(),
            });
        }
        if rows.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite feature value".into()));
        }
        for (&label, &tid) in labels.iter().zip(&trial_ids) {
            if label.index() >= label_set.len() {
                return Err(Error::Label(format!("label index {} outside label set", label.index())));
            }
            let rec = trials
                .get(tid)
                .ok_or_else(|| Error::Data(format!("row refers to unknown trial {tid}")))?;
            if rec.task != label {
                return Err(Error::Label(format!("trial {tid} has rows with differing labels")));
            }
        }
        Ok(Dataset {
            feature_names,
            rows,
            labels,
            trial_ids,
            trials,
            label_set,
        })
    }

    /// Every row is its own trial. Convenient for data without trial structure.
    pub fn from_labeled_rows(
        feature_names: Vec<String>,
        rows: Matrix,
        labels: Vec<TaskLabel>,
        label_set: LabelSet,
    ) -> Result<Self> {
        let trial_ids = (0..labels.len()).collect();
        let trials = labels
            .iter()
            .enumerate()
            .map(|(i, &task)| TrialRecord {
                user_id: format!("row{i}"),
                task,
            })
            .collect();
        Dataset::new(feature_names, rows, labels, trial_ids, trials, label_set)
    }

    pub fn len(&self) -> usize {
        self.rows.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_features(&self) -> usize {
        self.rows.cols()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn rows(&self) -> &Matrix {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.rows.row(i)
    }

    pub fn labels(&self) -> &[TaskLabel] {
        &self.labels
    }

    pub fn trial_ids(&self) -> &[usize] {
        &self.trial_ids
    }

    pub fn trials(&self) -> &[TrialRecord] {
        &self.trials
    }

    pub fn label_set(&self) -> &LabelSet {
        &self.label_set
    }

    /// Row count per class, indexed by label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.label_set.len()];
        for l in &self.labels {
            counts[l.index()] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order. Trial records are shared unchanged.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            rows: self.rows.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            trial_ids: indices.iter().map(|&i| self.trial_ids[i]).collect(),
            trials: self.trials.clone(),
            label_set: self.label_set.clone(),
        }
    }

    /// Same labels and trials over a transformed feature matrix.
    pub(crate) fn with_rows(&self, rows: Matrix) -> Dataset {
        debug_assert_eq!(rows.rows(), self.len());
        Dataset {
            rows,
            ..self.clone()
        }
    }
}

/// Flattens trials into a [`Dataset`], one row per sample whose requested
/// features are all present. Trial ids follow input order, so trials that
/// contribute no rows still own an id.
pub fn merge_and_label<S: AsRef<str>>(trials: &[Trial], features: &[S], label_set: &LabelSet) -> Result<Dataset> {
    if trials.is_empty() {
        return Err(Error::EmptyDataset("no trials to merge".into()));
    }
    let mut fields = Vec::with_capacity(features.len());
    for name in features {
        let name = name.as_ref();
        if name.trim().eq_ignore_ascii_case("time") {
            continue;
        }
        let field: Field = name.parse()?;
        if fields.contains(&field) {
            return Err(Error::Config(format!("feature `{name}` requested twice")));
        }
        fields.push(field);
    }
    if fields.is_empty() {
        return Err(Error::Config("no features selected".into()));
    }

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut trial_ids = Vec::new();
    let mut records = Vec::with_capacity(trials.len());
    for (tid, trial) in trials.iter().enumerate() {
        if trial.task.index() >= label_set.len() {
            return Err(Error::Label(format!(
                "trial of user `{}` has a task outside the label set",
                trial.user_id
            )));
        }
        records.push(TrialRecord {
            user_id: trial.user_id.clone(),
            task: trial.task,
        });
        for s in &trial.samples {
            let values: Option<Vec<f64>> = fields.iter().map(|&f| s.get(f)).collect();
            if let Some(values) = values {
                data.extend(values);
                labels.push(trial.task);
                trial_ids.push(tid);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset("no valid samples in any trial".into()));
    }
    let rows = Matrix::from_vec(labels.len(), fields.len(), data)?;
    Dataset::new(
        fields.iter().map(|f| f.name().to_string()).collect(),
        rows,
        labels,
        trial_ids,
        records,
        label_set.clone(),
    )
}
