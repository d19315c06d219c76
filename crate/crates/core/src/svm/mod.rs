//! Soft-margin support vector machines trained with SMO, composed
//! one-vs-rest for multiclass problems.
//!
//! The primal being solved is the standard one,
//! min 1/2 w'w + C sum(slack) subject to y_j (w'phi(x_j) + b) >= 1 - slack_j;
//! the dual is solved so that the RBF kernel can be used.

mod kernel;
mod smo;

use rayon::prelude::*;

pub use kernel::{scale_gamma, Kernel};
pub use smo::{dual_objective, solve_dual, SmoParams, SmoSolution, WorkingSet};

use crate::error::{Error, Result};
use crate::gaze_data::{Dataset, TaskLabel};
use crate::matrix::Matrix;

/// Binary decision function f(x) = sum_i alpha_i y_i K(sv_i, x) + b.
/// Only vectors with a non-zero multiplier are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvmModel {
    pub support_vectors: Matrix,
    pub alphas_signed: Vec<f64>,
    pub bias: f64,
    pub kernel: Kernel,
    pub c: f64,
}

impl BinarySvmModel {
    pub fn from_solution(x: &Matrix, y: &[f64], sol: &SmoSolution, params: &SmoParams) -> Self {
        let keep: Vec<usize> = (0..y.len()).filter(|&i| sol.alphas[i] > 0.0).collect();
        BinarySvmModel {
            support_vectors: x.select_rows(&keep),
            alphas_signed: keep.iter().map(|&i| sol.alphas[i] * y[i]).collect(),
            bias: sol.bias,
            kernel: params.kernel,
            c: params.c,
        }
    }

    pub fn n_features(&self) -> usize {
        self.support_vectors.cols()
    }

    #[inline]
    pub fn decision_unchecked(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter_rows()
            .zip(&self.alphas_signed)
            .map(|(sv, &a)| a * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() && !self.alphas_signed.is_empty() {
            return Err(Error::Shape {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        Ok(self.decision_unchecked(x))
    }
}

/// Trains one binary machine; `y` holds +1/-1 targets.
pub fn train_binary(x: &Matrix, y: &[f64], params: &SmoParams) -> Result<BinarySvmModel> {
    let sol = solve_dual(x, y, params)?;
    Ok(BinarySvmModel::from_solution(x, y, &sol, params))
}

/// One machine per class, class `i` positive against all others.
#[derive(Debug, Clone, PartialEq)]
pub struct OvrSvmModel {
    pub classes: Vec<TaskLabel>,
    pub machines: Vec<BinarySvmModel>,
}

impl OvrSvmModel {
    pub fn n_features(&self) -> usize {
        self.machines[0].n_features()
    }

    /// Argmax of the per-class decision values; the earlier class wins ties.
    pub fn predict(&self, x: &[f64]) -> Result<(TaskLabel, Vec<f64>)> {
        let values = self
            .machines
            .iter()
            .map(|m| m.decision(x))
            .collect::<Result<Vec<_>>>()?;
        Ok((self.classes[argmax(&values)], values))
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn predict_ovr(model: &OvrSvmModel, x: &[f64]) -> Result<(TaskLabel, Vec<f64>)> {
    model.predict(x)
}

/// Trains every class's machine on the full row set, in parallel. With the
/// random-pair solver each machine gets its own seed derived from the class.
pub fn train_ovr(ds: &Dataset, params: &SmoParams) -> Result<OvrSvmModel> {
    let classes: Vec<TaskLabel> = ds.label_set().labels().collect();
    if classes.len() < 2 {
        return Err(Error::Label("one-vs-rest needs at least two classes".into()));
    }
    let counts = ds.class_counts();
    if let Some(empty) = classes.iter().find(|c| counts[c.index()] == 0) {
        return Err(Error::Label(format!(
            "class `{}` has no rows",
            ds.label_set().name(*empty)
        )));
    }
    let machines = classes
        .par_iter()
        .map(|&class| {
            let y: Vec<f64> = ds
                .labels()
                .iter()
                .map(|&l| if l == class { 1.0 } else { -1.0 })
                .collect();
            let mut p = *params;
            if let WorkingSet::RandomPair { max_passes, seed } = p.working_set {
                p.working_set = WorkingSet::RandomPair {
                    max_passes,
                    seed: seed.wrapping_add(class.index() as u64),
                };
            }
            train_binary(ds.rows(), &y, &p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OvrSvmModel { classes, machines })
}
