//! Sequential minimal optimization for the soft-margin SVM dual
//!
//!   max  sum(a) - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//!   s.t. 0 <= a_i <= C,  sum(a_i y_i) = 0
//!
//! The default working set is the maximal violating pair with second-order
//! selection of the partner index, which stops once the KKT gap drops below
//! `tol`. The seeded random-partner variant is the classic simplified SMO.

use rand::Rng;

use super::kernel::{Kernel, KernelRows};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WorkingSet {
    SecondOrder,
    /// Random second index; stops after `max_passes` sweeps without change.
    RandomPair { max_passes: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoParams {
    pub c: f64,
    pub kernel: Kernel,
    pub tol: f64,
    pub working_set: WorkingSet,
    /// Hard cap on pair updates.
    pub max_iter: usize,
    /// Largest training set for which the full Gram matrix is precomputed.
    pub gram_cache_limit: usize,
}

impl Default for SmoParams {
    fn default() -> Self {
        SmoParams {
            c: 1000.0,
            kernel: Kernel::Rbf { gamma: 1.0 },
            tol: 1e-3,
            working_set: WorkingSet::SecondOrder,
            max_iter: 10_000_000,
            gram_cache_limit: 20_000,
        }
    }
}

impl SmoParams {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if let Kernel::Rbf { gamma } = self.kernel {
            Kernel::rbf(gamma)?;
        }
        Ok(())
    }
}

/// Full dual solution over all training points.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn check_inputs(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::Shape {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if x.rows() < 2 {
        return Err(Error::Size {
            requested: 2,
            available: x.rows(),
        });
    }
    if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(Error::Label(format!("binary targets must be +1 or -1, got {bad}")));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::Label("both classes must be present".into()));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite feature value".into()));
    }
    Ok(())
}

/// Bias from the per-point optimal offsets `v_i = y_i - sum_j a_j y_j K_ij`:
/// the mean over free vectors, else the midpoint of the interval the bound
/// vectors allow.
fn bias(alphas: &[f64], y: &[f64], margin_no_bias: &[f64], c: f64) -> f64 {
    let (mut free_sum, mut free_n) = (0.0, 0usize);
    let (mut lb, mut ub) = (f64::NEG_INFINITY, f64::INFINITY);
    for ((&a, &yi), &g) in alphas.iter().zip(y).zip(margin_no_bias) {
        let v = yi - g;
        if a > 0.0 && a < c {
            free_sum += v;
            free_n += 1;
        } else if (a <= 0.0) == (yi > 0.0) {
            // a = 0 with y = +1, or a = C with y = -1: need b >= v
            lb = lb.max(v);
        } else {
            ub = ub.min(v);
        }
    }
    if free_n > 0 {
        free_sum / free_n as f64
    } else {
        match (lb.is_finite(), ub.is_finite()) {
            (true, true) => 0.5 * (lb + ub),
            (true, false) => lb,
            (false, true) => ub,
            (false, false) => 0.0,
        }
    }
}

/// sum_j a_j y_j K(x_i, x_j) for every i, from scratch.
fn margins_without_bias(rows: &KernelRows<'_>, alphas: &[f64], y: &[f64]) -> Vec<f64> {
    let n = alphas.len();
    let mut out = vec![0.0; n];
    let mut buf = Vec::new();
    for j in (0..n).filter(|&j| alphas[j] > 0.0) {
        let kj = rows.row(j, &mut buf);
        let s = alphas[j] * y[j];
        for (o, &k) in out.iter_mut().zip(kj) {
            *o += s * k;
        }
    }
    out
}

pub fn solve_dual(x: &Matrix, y: &[f64], params: &SmoParams) -> Result<SmoSolution> {
    params.validate()?;
    check_inputs(x, y)?;
    let rows = KernelRows::new(x, params.kernel, params.gram_cache_limit);
    match params.working_set {
        WorkingSet::SecondOrder => Ok(second_order(&rows, y, params)),
        WorkingSet::RandomPair { max_passes, seed } => Ok(random_pair(&rows, y, params, max_passes, seed)),
    }
}

/// Index pair violating optimality most, or `None` when the KKT gap is
/// below `tol`. `grad` is the gradient of the minimization form
/// 1/2 a'Qa - e'a.
fn select_pair(rows: &KernelRows<'_>, y: &[f64], alphas: &[f64], grad: &[f64], c: f64, tol: f64, buf: &mut Vec<f64>) -> Option<(usize, usize)> {
    let n = y.len();
    let mut gmax = f64::NEG_INFINITY;
    let mut i_sel = None;
    for t in 0..n {
        let in_up = if y[t] > 0.0 { alphas[t] < c } else { alphas[t] > 0.0 };
        if in_up {
            let v = -y[t] * grad[t];
            if v > gmax {
                gmax = v;
                i_sel = Some(t);
            }
        }
    }
    let i = i_sel?;
    let ki = rows.row(i, buf);
    let kii = ki[i];

    let mut gmax2 = f64::NEG_INFINITY;
    let mut obj_min = f64::INFINITY;
    let mut j_sel = None;
    for t in 0..n {
        let in_low = if y[t] > 0.0 { alphas[t] > 0.0 } else { alphas[t] < c };
        if !in_low {
            continue;
        }
        let yg = y[t] * grad[t];
        gmax2 = gmax2.max(yg);
        let grad_diff = gmax + yg;
        if grad_diff > 0.0 {
            let quad = kii + rows.diag(t) - 2.0 * ki[t];
            let quad = if quad > 0.0 { quad } else { TAU };
            let obj = -(grad_diff * grad_diff) / quad;
            if obj < obj_min {
                obj_min = obj;
                j_sel = Some(t);
            }
        }
    }
    if gmax + gmax2 < tol {
        return None;
    }
    j_sel.map(|j| (i, j))
}

fn second_order(rows: &KernelRows<'_>, y: &[f64], params: &SmoParams) -> SmoSolution {
    let n = y.len();
    let c = params.c;
    let mut alphas = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let (mut bi, mut bj, mut bsel) = (Vec::new(), Vec::new(), Vec::new());
    let mut iterations = 0;
    let mut converged = false;
    // A converged run is re-verified against a gradient rebuilt from scratch,
    // since incremental updates drift.
    let mut refreshes = 0;

    while iterations < params.max_iter {
        let Some((i, j)) = select_pair(rows, y, &alphas, &grad, c, params.tol, &mut bsel) else {
            let g = margins_without_bias(rows, &alphas, y);
            for t in 0..n {
                grad[t] = y[t] * g[t] - 1.0;
            }
            refreshes += 1;
            if select_pair(rows, y, &alphas, &grad, c, params.tol, &mut bsel).is_none() {
                converged = true;
                break;
            }
            if refreshes > 3 {
                break;
            }
            continue;
        };
        iterations += 1;

        let ki = rows.row(i, &mut bi);
        let kj = rows.row(j, &mut bj);
        let (old_i, old_j) = (alphas[i], alphas[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        let quad = ki[i] + kj[j] - 2.0 * ki[j];
        let quad = if quad > 0.0 { quad } else { TAU };

        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alphas[i] = ai;
        alphas[j] = aj;

        let di = (ai - old_i) * y[i];
        let dj = (aj - old_j) * y[j];
        for t in 0..n {
            // Q_ti = y_t y_i K_ti
            grad[t] += y[t] * (ki[t] * di + kj[t] * dj);
        }
    }

    let g = margins_without_bias(rows, &alphas, y);
    SmoSolution {
        bias: bias(&alphas, y, &g, c),
        alphas,
        iterations,
        converged,
    }
}

fn random_pair(rows: &KernelRows<'_>, y: &[f64], params: &SmoParams, max_passes: usize, seed: u64) -> SmoSolution {
    let n = y.len();
    let c = params.c;
    let tol = params.tol;
    let mut rng = rng::seeded(seed);
    let mut alphas = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut b = 0.0;
    let (mut bi, mut bj) = (Vec::new(), Vec::new());
    let mut passes = 0;
    let mut iterations = 0;

    while passes < max_passes && iterations < params.max_iter {
        let mut changed = 0;
        for i in 0..n {
            let ei = g[i] + b - y[i];
            let violates = (y[i] * ei < -tol && alphas[i] < c) || (y[i] * ei > tol && alphas[i] > 0.0);
            if !violates {
                continue;
            }
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let ej = g[j] + b - y[j];
            let (old_i, old_j) = (alphas[i], alphas[j]);
            let (lo, hi) = if y[i] != y[j] {
                ((old_j - old_i).max(0.0), (c + old_j - old_i).min(c))
            } else {
                ((old_i + old_j - c).max(0.0), (old_i + old_j).min(c))
            };
            if lo >= hi {
                continue;
            }
            let ki = rows.row(i, &mut bi);
            let kj = rows.row(j, &mut bj);
            let eta = 2.0 * ki[j] - ki[i] - kj[j];
            if eta >= 0.0 {
                continue;
            }
            let aj = (old_j - y[j] * (ei - ej) / eta).clamp(lo, hi);
            if (aj - old_j).abs() < 1e-5 {
                continue;
            }
            let ai = old_i + y[i] * y[j] * (old_j - aj);
            alphas[i] = ai;
            alphas[j] = aj;

            let di = y[i] * (ai - old_i);
            let dj = y[j] * (aj - old_j);
            let b1 = b - ei - di * ki[i] - dj * ki[j];
            let b2 = b - ej - di * ki[j] - dj * kj[j];
            b = if ai > 0.0 && ai < c {
                b1
            } else if aj > 0.0 && aj < c {
                b2
            } else {
                0.5 * (b1 + b2)
            };
            for t in 0..n {
                g[t] += di * ki[t] + dj * kj[t];
            }
            changed += 1;
            iterations += 1;
        }
        passes = if changed == 0 { passes + 1 } else { 0 };
    }

    for a in &mut alphas {
        if *a < 1e-14 * c {
            *a = 0.0;
        } else if *a > c * (1.0 - 1e-14) {
            *a = c;
        }
    }
    let g = margins_without_bias(rows, &alphas, y);
    SmoSolution {
        bias: bias(&alphas, y, &g, c),
        alphas,
        iterations,
        converged: passes >= max_passes,
    }
}

/// Dual objective sum(a) - 1/2 a'Qa.
pub fn dual_objective(x: &Matrix, y: &[f64], alphas: &[f64], kernel: Kernel) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if alphas[j] != 0.0 {
                quad += alphas[i] * alphas[j] * y[i] * y[j] * kernel.eval(x.row(i), x.row(j));
            }
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(c: f64) -> SmoParams {
        SmoParams {
            c,
            kernel: Kernel::Linear,
            ..Default::default()
        }
    }

    #[test]
    fn two_symmetric_points() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        let sol = solve_dual(&x, &[1.0, -1.0], &linear(1000.0)).unwrap();
        assert!(sol.converged);
        assert!((sol.alphas[0] - 0.5).abs() < 1e-9);
        assert!((sol.alphas[1] - 0.5).abs() < 1e-9);
        assert!(sol.bias.abs() < 1e-9);
    }

    #[test]
    fn single_class_rejected() {
        let x = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        assert!(matches!(solve_dual(&x, &[1.0, 1.0], &linear(1.0)), Err(Error::Label(_))));
    }

    #[test]
    fn non_finite_rejected() {
        let x = Matrix::from_rows(&[[1.0], [f64::INFINITY]]).unwrap();
        assert!(matches!(solve_dual(&x, &[1.0, -1.0], &linear(1.0)), Err(Error::Data(_))));
    }

    #[test]
    fn random_pair_solves_separable_set() {
        let x = Matrix::from_rows(&[[2.0, 2.0], [3.0, 1.0], [-2.0, -1.0], [-1.0, -3.0]]).unwrap();
        let y = [1.0, 1.0, -1.0, -1.0];
        let params = SmoParams {
            working_set: WorkingSet::RandomPair { max_passes: 10, seed: 5 },
            ..linear(10.0)
        };
        let a = solve_dual(&x, &y, &params).unwrap();
        let b = solve_dual(&x, &y, &params).unwrap();
        assert_eq!(a, b);
        let exact = solve_dual(&x, &y, &linear(10.0)).unwrap();
        let oa = dual_objective(&x, &y, &a.alphas, Kernel::Linear);
        let ob = dual_objective(&x, &y, &exact.alphas, Kernel::Linear);
        assert!((oa - ob).abs() < 1e-2, "{oa} vs {ob}");
    }

    #[test]
    fn bias_without_free_vectors_is_interval_midpoint() {
        // both at C: point 0 (y=+1) needs b <= 1, point 1 (y=-1) needs b >= -3
        let b = bias(&[1.0, 1.0], &[1.0, -1.0], &[0.0, 2.0], 1.0);
        assert_eq!(b, -1.0);
    }
}
