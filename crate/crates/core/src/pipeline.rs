//! End-to-end training and prediction: ingest, blink removal, merge, split,
//! standardize, train, evaluate.

use std::path::Path;

use serde::Deserialize;

use crate::boosting::{train_adaboost, AdaBoostParams, VoteMode};
use crate::error::{Error, Result};
use crate::eval::{evaluate, mode_label, EvalReport, Level};
use crate::gaze_data::{
    load_manifest, merge_and_label, shuffle_split, Dataset, LabelSet, SplitMode, SplitSpec, TaskLabel, Trial,
    DEFAULT_FEATURES,
};
use crate::model_file::{ModelFile, ModelPayload};
use crate::preprocess::{apply_standardizer, drop_invalid, fit_standardizer, stratified_sample};
use crate::svm::{scale_gamma, train_ovr, Kernel, SmoParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Svm,
    #[default]
    AdaBoost,
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svm" => Ok(ClassifierKind::Svm),
            "adaboost" => Ok(ClassifierKind::AdaBoost),
            _ => Err(Error::Config(format!("unknown classifier `{s}` (expected svm or adaboost)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    #[default]
    Rbf,
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelKind::Linear),
            "rbf" => Ok(KernelKind::Rbf),
            _ => Err(Error::Config(format!("unknown kernel `{s}` (expected rbf or linear)"))),
        }
    }
}

/// RBF width: the "scale" heuristic computed from training rows, or fixed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(try_from = "GammaRepr")]
pub enum Gamma {
    #[default]
    Scale,
    Value(f64),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GammaRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<GammaRepr> for Gamma {
    type Error = Error;

    fn try_from(r: GammaRepr) -> Result<Self> {
        match r {
            GammaRepr::Number(v) => Ok(Gamma::Value(v)),
            GammaRepr::Text(s) => s.parse(),
        }
    }
}

impl std::str::FromStr for Gamma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("scale") {
            return Ok(Gamma::Scale);
        }
        s.parse()
            .map(Gamma::Value)
            .map_err(|_| Error::Config(format!("gamma must be `scale` or a number, got `{s}`")))
    }
}

/// Every knob of a training run. Deserializes from TOML with all fields
/// optional.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub labels: Vec<String>,
    pub features: Vec<String>,
    pub classifier: ClassifierKind,
    pub c: f64,
    pub kernel: KernelKind,
    pub gamma: Gamma,
    pub tol: f64,
    /// SVMs train on a stratified sample of at most this many rows; 0 keeps
    /// every training row.
    pub svm_max_rows: usize,
    pub n_estimators: usize,
    pub max_depth: usize,
    pub resample: bool,
    pub unweighted_vote: bool,
    pub test_fraction: f64,
    pub validation_fraction: f64,
    pub stratified: bool,
    pub split_by_trial: bool,
    /// Fit the standardizer on all rows before splitting.
    pub paper_order: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            labels: LabelSet::default().names().to_vec(),
            features: DEFAULT_FEATURES.iter().map(|f| f.name().to_string()).collect(),
            classifier: ClassifierKind::AdaBoost,
            c: 1000.0,
            kernel: KernelKind::Rbf,
            gamma: Gamma::Scale,
            tol: 1e-3,
            svm_max_rows: 2000,
            n_estimators: 100,
            max_depth: 6,
            resample: false,
            unweighted_vote: false,
            test_fraction: 0.15,
            validation_fraction: 0.15,
            stratified: true,
            split_by_trial: false,
            paper_order: false,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn label_set(&self) -> Result<LabelSet> {
        LabelSet::new(self.labels.iter().cloned())
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            test_fraction: self.test_fraction,
            validation_fraction: self.validation_fraction,
            seed: self.seed,
            stratified: self.stratified,
        }
    }

    pub fn split_mode(&self) -> SplitMode {
        if self.split_by_trial {
            SplitMode::Trials
        } else {
            SplitMode::Rows
        }
    }

    pub fn adaboost_params(&self) -> AdaBoostParams {
        AdaBoostParams {
            n_estimators: self.n_estimators,
            max_depth: self.max_depth,
            resample: self.resample,
            seed: self.seed,
            vote: if self.unweighted_vote {
                VoteMode::Unweighted
            } else {
                VoteMode::Weighted
            },
        }
    }

    /// SMO parameters for a given (standardized) training set, resolving the
    /// "scale" gamma against it.
    pub fn smo_params(&self, train: &Dataset) -> Result<SmoParams> {
        let kernel = match (self.kernel, self.gamma) {
            (KernelKind::Linear, _) => Kernel::Linear,
            (KernelKind::Rbf, Gamma::Value(g)) => Kernel::rbf(g)?,
            (KernelKind::Rbf, Gamma::Scale) => Kernel::rbf(scale_gamma(train.rows())?)?,
        };
        Ok(SmoParams {
            c: self.c,
            kernel,
            tol: self.tol,
            ..Default::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.label_set()?;
        self.split_spec().validate()?;
        if self.features.is_empty() {
            return Err(Error::Config("no features selected".into()));
        }
        if self.n_estimators == 0 || self.max_depth == 0 {
            return Err(Error::Config("n_estimators and max_depth must be positive".into()));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if let Gamma::Value(g) = self.gamma {
            Kernel::rbf(g)?;
        }
        Ok(())
    }
}

/// Reads a manifest, drops blinks and incomplete samples, and flattens the
/// trials over the configured features.
pub fn load_dataset(manifest: impl AsRef<Path>, cfg: &RunConfig) -> Result<Dataset> {
    let labels = cfg.label_set()?;
    let trials = drop_invalid(load_manifest(manifest, &labels)?);
    merge_and_label(&trials, &cfg.features, &labels)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelFile,
    pub train: EvalReport,
    pub validation: EvalReport,
    pub test: EvalReport,
    /// Rows the classifier was actually fitted on.
    pub fitted_rows: usize,
}

/// Splits, standardizes, trains and scores. Reports use `level`.
pub fn train_on_dataset(ds: &Dataset, cfg: &RunConfig, level: Level) -> Result<TrainOutcome> {
    cfg.validate()?;
    let (standardizer, train, validation, test) = if cfg.paper_order {
        let standardizer = fit_standardizer(ds)?;
        let all = apply_standardizer(&standardizer, ds)?;
        let (train, validation, test) = shuffle_split(&all, &cfg.split_spec(), cfg.split_mode())?;
        (standardizer, train, validation, test)
    } else {
        let (train, validation, test) = shuffle_split(ds, &cfg.split_spec(), cfg.split_mode())?;
        let standardizer = fit_standardizer(&train)?;
        (
            standardizer.clone(),
            apply_standardizer(&standardizer, &train)?,
            apply_standardizer(&standardizer, &validation)?,
            apply_standardizer(&standardizer, &test)?,
        )
    };
    for (name, part) in [("train", &train), ("validation", &validation), ("test", &test)] {
        if part.is_empty() {
            return Err(Error::EmptyDataset(format!("{name} split has no rows")));
        }
    }

    let (payload, fitted_rows) = match cfg.classifier {
        ClassifierKind::AdaBoost => (ModelPayload::AdaBoost(train_adaboost(&train, &cfg.adaboost_params())?), train.len()),
        ClassifierKind::Svm => {
            let fit = if cfg.svm_max_rows > 0 && train.len() > cfg.svm_max_rows {
                stratified_sample(&train, cfg.svm_max_rows, cfg.seed)?
            } else {
                train.clone()
            };
            let params = cfg.smo_params(&fit)?;
            (ModelPayload::Svm(train_ovr(&fit, &params)?), fit.len())
        }
    };
    let model = ModelFile {
        label_set: ds.label_set().clone(),
        standardizer,
        payload,
    };
    let score = |part: &Dataset| evaluate(model.payload.classifier(), part, level);
    Ok(TrainOutcome {
        train: score(&train)?,
        validation: score(&validation)?,
        test: score(&test)?,
        fitted_rows,
        model,
    })
}

pub fn train_from_manifest(manifest: impl AsRef<Path>, cfg: &RunConfig, level: Level) -> Result<TrainOutcome> {
    cfg.validate()?;
    train_on_dataset(&load_dataset(manifest, cfg)?, cfg, level)
}

/// Applies a saved model to every trial of a manifest.
pub fn evaluate_manifest(model: &ModelFile, manifest: impl AsRef<Path>, level: Level) -> Result<EvalReport> {
    let trials = drop_invalid(load_manifest(manifest, &model.label_set)?);
    let ds = merge_and_label(&trials, &model.feature_names(), &model.label_set)?;
    let ds = apply_standardizer(&model.standardizer, &ds)?;
    evaluate(model.payload.classifier(), &ds, level)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialPrediction {
    pub label: TaskLabel,
    /// Samples predicted as each class, in label order.
    pub tally: Vec<usize>,
}

/// Classifies every valid sample of a trial and takes the mode.
pub fn predict_trial(model: &ModelFile, trial: &Trial) -> Result<TrialPrediction> {
    let features = model.feature_names();
    let kept = drop_invalid(vec![trial.clone()]);
    if kept[0].samples.is_empty() {
        return Err(Error::Input("no valid samples".into()));
    }
    let ds = merge_and_label(&kept, &features, &model.label_set).map_err(|e| match e {
        Error::EmptyDataset(_) => Error::Input("no valid samples".into()),
        other => other,
    })?;
    let ds = apply_standardizer(&model.standardizer, &ds)?;
    let preds = crate::eval::predict_rows(model.payload.classifier(), &ds)?;
    let mut tally = vec![0; model.label_set.len()];
    for p in &preds {
        tally[p.index()] += 1;
    }
    Ok(TrialPrediction {
        label: mode_label(&preds)?,
        tally,
    })
}
