//! Per-sample and per-trial evaluation, confusion matrices, and reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaze_data::{Dataset, LabelSet, TaskLabel};

/// Anything that maps one feature row to a task.
pub trait Classifier: Sync {
    fn n_features(&self) -> usize;
    fn predict_row(&self, x: &[f64]) -> Result<TaskLabel>;
}

impl Classifier for crate::svm::OvrSvmModel {
    fn n_features(&self) -> usize {
        crate::svm::OvrSvmModel::n_features(self)
    }

    fn predict_row(&self, x: &[f64]) -> Result<TaskLabel> {
        self.predict(x).map(|(label, _)| label)
    }
}

impl Classifier for crate::boosting::AdaBoostModel {
    fn n_features(&self) -> usize {
        crate::boosting::AdaBoostModel::n_features(self)
    }

    fn predict_row(&self, x: &[f64]) -> Result<TaskLabel> {
        self.predict(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Level {
    Sample,
    #[default]
    Trial,
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Level::Sample => "sample",
            Level::Trial => "trial",
        })
    }
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>) -> Self {
        let k = classes.len();
        ConfusionMatrix {
            classes,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn record(&mut self, truth: TaskLabel, predicted: TaskLabel) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Parses the `true,predicted,count` CSV written by [`render_report`].
    pub fn from_csv(path: impl AsRef<Path>, labels: &LabelSet) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::schema(path, None, e.to_string()))?;
        let mut m = ConfusionMatrix::new(labels.names().to_vec());
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::schema(path, Some(i + 1), e.to_string()))?;
            let parse_label = |s: &str| {
                labels
                    .parse(s)
                    .ok_or_else(|| Error::schema(path, Some(i + 1), format!("unknown class `{s}`")))
            };
            let t = parse_label(&rec[0])?;
            let p = parse_label(&rec[1])?;
            let c: u64 = rec[2]
                .trim()
                .parse()
                .map_err(|_| Error::schema(path, Some(i + 1), "bad count"))?;
            m.counts[t.index()][p.index()] = c;
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub level: Level,
    pub matrix: ConfusionMatrix,
    pub accuracy: f64,
    pub n_units: usize,
}

/// Most frequent label; the earliest label wins ties.
pub fn mode_label(predictions: &[TaskLabel]) -> Result<TaskLabel> {
    let mut counts: BTreeMap<TaskLabel, usize> = BTreeMap::new();
    for &p in predictions {
        *counts.entry(p).or_default() += 1;
    }
    let mut best: Option<(TaskLabel, usize)> = None;
    for (label, c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((label, c));
        }
    }
    best.map(|(l, _)| l)
        .ok_or_else(|| Error::Input("cannot take the mode of no predictions".into()))
}

pub fn predict_rows(model: &dyn Classifier, ds: &Dataset) -> Result<Vec<TaskLabel>> {
    if ds.n_features() != model.n_features() {
        return Err(Error::Shape {
            expected: model.n_features(),
            got: ds.n_features(),
        });
    }
    (0..ds.len())
        .into_par_iter()
        .map(|i| model.predict_row(ds.row(i)))
        .collect()
}

/// Scores precomputed per-row predictions at the requested level.
pub fn score_predictions(predictions: &[TaskLabel], ds: &Dataset, level: Level) -> Result<EvalReport> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset("nothing to evaluate".into()));
    }
    if predictions.len() != ds.len() {
        return Err(Error::Shape {
            expected: ds.len(),
            got: predictions.len(),
        });
    }
    let mut matrix = ConfusionMatrix::new(ds.label_set().names().to_vec());
    match level {
        Level::Sample => {
            for (&t, &p) in ds.labels().iter().zip(predictions) {
                matrix.record(t, p);
            }
        }
        Level::Trial => {
            let mut per_trial: BTreeMap<usize, Vec<TaskLabel>> = BTreeMap::new();
            for (&tid, &p) in ds.trial_ids().iter().zip(predictions) {
                per_trial.entry(tid).or_default().push(p);
            }
            for (tid, preds) in per_trial {
                matrix.record(ds.trials()[tid].task, mode_label(&preds)?);
            }
        }
    }
    let n_units = matrix.total() as usize;
    Ok(EvalReport {
        level,
        accuracy: matrix.trace() as f64 / n_units as f64,
        matrix,
        n_units,
    })
}

pub fn evaluate(model: &dyn Classifier, ds: &Dataset, level: Level) -> Result<EvalReport> {
    let predictions = predict_rows(model, ds)?;
    score_predictions(&predictions, ds, level)
}

impl EvalReport {
    /// Aligned plain-text rendering with accuracy to three decimals.
    pub fn to_text(&self) -> String {
        let names = &self.matrix.classes;
        let width = names
            .iter()
            .map(String::len)
            .chain(self.matrix.counts.iter().flatten().map(|c| c.to_string().len()))
            .chain(["true\\pred".len()])
            .max()
            .unwrap_or(1);
        let mut out = String::new();
        let _ = writeln!(out, "level: {}", self.level);
        let _ = writeln!(out, "units: {}", self.n_units);
        let _ = writeln!(out, "accuracy: {:.3}", self.accuracy);
        let _ = write!(out, "{:>width$}", "true\\pred");
        for n in names {
            let _ = write!(out, "  {n:>width$}");
        }
        out.push('\n');
        for (n, row) in names.iter().zip(&self.matrix.counts) {
            let _ = write!(out, "{n:>width$}");
            for c in row {
                let _ = write!(out, "  {c:>width$}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("true,predicted,count\n");
        for (t, row) in self.matrix.classes.iter().zip(&self.matrix.counts) {
            for (p, c) in self.matrix.classes.iter().zip(row) {
                let _ = writeln!(out, "{t},{p},{c}");
            }
        }
        out
    }
}

/// Writes `<path>` as text and a sibling `.csv`. Returns the CSV path.
pub fn render_report(report: &EvalReport, path: impl AsRef<Path>) -> Result<PathBuf> {
    let path = path.as_ref();
    let csv_path = if path.extension().is_some_and(|e| e == "csv") {
        path.with_extension("report.csv")
    } else {
        path.with_extension("csv")
    };
    std::fs::write(path, report.to_text()).map_err(|e| Error::io(path, e))?;
    std::fs::write(&csv_path, report.to_csv()).map_err(|e| Error::io(&csv_path, e))?;
    Ok(csv_path)
}
