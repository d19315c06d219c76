use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{dot, squared_distance, Matrix};
use crate::preprocess::mean_std;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    /// exp(-gamma * ||x - y||^2)
    Rbf {
        gamma: f64,
    },
}

impl Kernel {
    pub fn rbf(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!("rbf gamma must be positive, got {gamma}")));
        }
        Ok(Kernel::Rbf { gamma })
    }

    /// Unchecked evaluation; callers guarantee equal lengths.
    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(x, y),
            Kernel::Rbf { gamma } => (-gamma * squared_distance(x, y)).exp(),
        }
    }

    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::Shape {
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(self.eval(x, y))
    }
}

/// The "scale" heuristic: 1 / (d * mean per-column population variance).
pub fn scale_gamma(x: &Matrix) -> Result<f64> {
    let d = x.cols();
    if d == 0 || x.rows() < 2 {
        return Err(Error::Size {
            requested: 2,
            available: x.rows(),
        });
    }
    let mean_var = (0..d)
        .map(|j| {
            let (_, s) = mean_std((0..x.rows()).map(|i| x.get(i, j)));
            s * s
        })
        .sum::<f64>()
        / d as f64;
    if !(mean_var > 0.0) {
        return Err(Error::DegenerateFeature("all features".into()));
    }
    Ok(1.0 / (d as f64 * mean_var))
}

/// Kernel rows for the solver: the full Gram matrix when it fits under the
/// cache limit, otherwise computed on demand.
pub(crate) enum KernelRows<'a> {
    Full { n: usize, gram: Vec<f64> },
    OnDemand { x: &'a Matrix, kernel: Kernel },
}

impl<'a> KernelRows<'a> {
    pub(crate) fn new(x: &'a Matrix, kernel: Kernel, cache_limit: usize) -> Self {
        let n = x.rows();
        if n <= cache_limit {
            let mut gram = vec![0.0; n * n];
            gram.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
                let xi = x.row(i);
                for (j, g) in row.iter_mut().enumerate() {
                    *g = kernel.eval(xi, x.row(j));
                }
            });
            KernelRows::Full { n, gram }
        } else {
            KernelRows::OnDemand { x, kernel }
        }
    }

    /// Row `i` of the kernel matrix, written into `buf` unless cached.
    pub(crate) fn row<'b>(&'b self, i: usize, buf: &'b mut Vec<f64>) -> &'b [f64] {
        match self {
            KernelRows::Full { n, gram } => &gram[i * n..(i + 1) * n],
            KernelRows::OnDemand { x, kernel } => {
                buf.clear();
                let xi = x.row(i);
                buf.extend(x.iter_rows().map(|xj| kernel.eval(xi, xj)));
                buf
            }
        }
    }

    pub(crate) fn diag(&self, i: usize) -> f64 {
        match self {
            KernelRows::Full { n, gram } => gram[i * n + i],
            KernelRows::OnDemand { x, kernel } => kernel.eval(x.row(i), x.row(i)),
        }
    }
}
