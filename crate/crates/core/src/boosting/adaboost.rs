use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use super::tree::{train_tree_presorted, DecisionTreeModel, SortedColumns};
use crate::error::{Error, Result};
use crate::gaze_data::{Dataset, TaskLabel};
use crate::matrix::Matrix;
use crate::rng;

/// Voting weight given to a learner with zero weighted error.
pub const MAX_LOG_BETA: f64 = 27.631021115928547; // ln(1e12)

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VoteMode {
    /// Each learner votes with ln(beta_k).
    #[default]
    Weighted,
    Unweighted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaBoostParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    /// Train each tree on a seeded weighted bootstrap instead of the weights.
    pub resample: bool,
    pub seed: u64,
    pub vote: VoteMode,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        AdaBoostParams {
            n_estimators: 100,
            max_depth: 6,
            resample: false,
            seed: 0,
            vote: VoteMode::Weighted,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaBoostModel {
    pub learners: Vec<DecisionTreeModel>,
    pub log_betas: Vec<f64>,
    pub classes: Vec<TaskLabel>,
    pub vote: VoteMode,
}

/// Bookkeeping for one boosting round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundStats {
    /// Weighted error of the round's tree under the round's probabilities.
    pub error: f64,
    /// `None` when the tree was discarded (error >= 0.5).
    pub log_beta: Option<f64>,
    /// Sum and minimum of the probability vector after the update.
    pub prob_sum: f64,
    pub prob_min: f64,
}

impl AdaBoostModel {
    pub fn n_features(&self) -> usize {
        self.learners.first().map_or(0, |t| t.n_features())
    }

    pub fn votes(&self, x: &[f64]) -> Vec<f64> {
        let mut votes = vec![0.0; self.classes.len()];
        for (tree, &lb) in self.learners.iter().zip(&self.log_betas) {
            let w = match self.vote {
                VoteMode::Weighted => lb,
                VoteMode::Unweighted => 1.0,
            };
            votes[tree.predict(x).index()] += w;
        }
        votes
    }

    /// Class with the largest vote; the earlier class wins ties.
    pub fn predict(&self, x: &[f64]) -> Result<TaskLabel> {
        if self.learners.is_empty() {
            return Err(Error::Model("empty ensemble".into()));
        }
        if x.len() != self.n_features() {
            return Err(Error::Shape {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        Ok(self.classes[crate::svm::argmax(&self.votes(x))])
    }
}

pub fn predict_adaboost(model: &AdaBoostModel, x: &[f64]) -> Result<TaskLabel> {
    model.predict(x)
}

pub fn train_adaboost(ds: &Dataset, params: &AdaBoostParams) -> Result<AdaBoostModel> {
    train_adaboost_traced(ds.rows(), ds.labels(), ds.label_set().len(), params).map(|(m, _)| m)
}

/// AdaBoost.M1 with multiplicative reweighting of misclassified rows by
/// beta = (1 - err) / err. Training stops early on a perfect learner
/// (kept, vote capped at [`MAX_LOG_BETA`]) or one no better than chance
/// (discarded).
pub fn train_adaboost_traced(
    x: &Matrix,
    y: &[TaskLabel],
    n_classes: usize,
    params: &AdaBoostParams,
) -> Result<(AdaBoostModel, Vec<RoundStats>)> {
    let n = x.rows();
    if params.n_estimators == 0 {
        return Err(Error::Config("n_estimators must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::EmptyDataset("no training rows".into()));
    }
    let mut present = vec![false; n_classes];
    for l in y {
        *present
            .get_mut(l.index())
            .ok_or_else(|| Error::Label(format!("label {} outside {n_classes} classes", l.index())))? = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::Label("boosting needs at least two classes".into()));
    }

    let sorted = SortedColumns::new(x);
    let mut rng = rng::seeded(params.seed);
    let mut probs = vec![1.0 / n as f64; n];
    let mut learners = Vec::new();
    let mut log_betas = Vec::new();
    let mut trace = Vec::new();

    for round in 0..params.n_estimators {
        let train_weights = if params.resample {
            let dist = WeightedIndex::new(&probs).map_err(|e| Error::Weight(e.to_string()))?;
            let mut w = vec![0.0; n];
            for _ in 0..n {
                w[dist.sample(&mut rng)] += 1.0 / n as f64;
            }
            w
        } else {
            probs.clone()
        };
        let tree = train_tree_presorted(x, &sorted, y, &train_weights, n_classes, params.max_depth)?;
        let wrong: Vec<bool> = (0..n).map(|i| tree.predict(x.row(i)) != y[i]).collect();
        let error: f64 = probs.iter().zip(&wrong).filter(|(_, &w)| w).map(|(p, _)| p).sum();

        if error <= 0.0 {
            learners.push(tree);
            log_betas.push(MAX_LOG_BETA);
            trace.push(RoundStats {
                error,
                log_beta: Some(MAX_LOG_BETA),
                prob_sum: probs.iter().sum(),
                prob_min: probs.iter().copied().fold(f64::INFINITY, f64::min),
            });
            break;
        }
        if error >= 0.5 {
            if round == 0 {
                return Err(Error::Training(format!(
                    "first learner has weighted error {error:.6}, not better than chance"
                )));
            }
            trace.push(RoundStats {
                error,
                log_beta: None,
                prob_sum: probs.iter().sum(),
                prob_min: probs.iter().copied().fold(f64::INFINITY, f64::min),
            });
            break;
        }

        let beta = (1.0 - error) / error;
        for (p, &w) in probs.iter_mut().zip(&wrong) {
            if w {
                *p *= beta;
            }
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);

        learners.push(tree);
        log_betas.push(beta.ln());
        trace.push(RoundStats {
            error,
            log_beta: Some(beta.ln()),
            prob_sum: probs.iter().sum(),
            prob_min: probs.iter().copied().fold(f64::INFINITY, f64::min),
        });
    }

    Ok((
        AdaBoostModel {
            learners,
            log_betas,
            classes: (0..n_classes).map(TaskLabel::new).collect(),
            vote: params.vote,
        },
        trace,
    ))
}
