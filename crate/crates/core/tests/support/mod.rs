//! Reference implementations used only as test oracles. None of these share
//! code with the library.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

pub fn dual_value(q: &DMatrix<f64>, alpha: &DVector<f64>) -> f64 {
    alpha.sum() - 0.5 * (alpha.transpose() * q * alpha)[(0, 0)]
}

/// Maximum of the soft-margin dual found by enumerating every assignment of
/// each multiplier to {0, free, C}. For a fixed assignment the free
/// multipliers solve the stationarity system
/// `Q_FF a_F + nu y_F = 1 - Q_FC C`, `y_F' a_F = -y_C' C`, and the best
/// feasible candidate is the global optimum. Needs a positive definite `q`.
pub fn brute_force_dual(k: &DMatrix<f64>, y: &[f64], c: f64) -> f64 {
    let n = y.len();
    assert!(n <= 10, "3^n enumeration");
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * k[(i, j)]);
    let mut best = f64::NEG_INFINITY;
    let mut status = vec![0u8; n];
    for code in 0..3usize.pow(n as u32) {
        let mut v = code;
        for s in status.iter_mut() {
            *s = (v % 3) as u8;
            v /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| status[i] == 1).collect();
        let mut alpha = DVector::from_fn(n, |i, _| if status[i] == 2 { c } else { 0.0 });
        if !free.is_empty() {
            let m = free.len();
            let mut a = DMatrix::zeros(m + 1, m + 1);
            let mut rhs = DVector::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[(r, s)] = q[(i, j)];
                }
                a[(r, m)] = y[i];
                a[(m, r)] = y[i];
                rhs[r] = 1.0 - (0..n).filter(|&j| status[j] == 2).map(|j| q[(i, j)] * c).sum::<f64>();
            }
            rhs[m] = -(0..n).filter(|&j| status[j] == 2).map(|j| y[j] * c).sum::<f64>();
            let Some(sol) = a.lu().solve(&rhs) else {
                continue;
            };
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r];
            }
        }
        let feasible = alpha.iter().all(|&a| (-1e-10..=c + 1e-10).contains(&a))
            && alpha.iter().zip(y).map(|(a, y)| a * y).sum::<f64>().abs() <= 1e-9;
        if feasible {
            best = best.max(dual_value(&q, &alpha));
        }
    }
    best
}

fn leaf_error(idx: &[usize], y: &[usize], w: &[f64], k: usize) -> f64 {
    let mut cw = vec![0.0; k];
    for &i in idx {
        cw[y[i]] += w[i];
    }
    cw.iter().sum::<f64>() - cw.iter().copied().fold(0.0, f64::max)
}

fn candidate_splits(idx: &[usize], x: &[Vec<f64>]) -> Vec<(usize, f64, Vec<usize>, Vec<usize>)> {
    let mut out = Vec::new();
    for f in 0..x.first().map_or(0, Vec::len) {
        let mut vals: Vec<f64> = idx.iter().map(|&i| x[i][f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = w[0] + (w[1] - w[0]) / 2.0;
            let t = if t < w[1] { t } else { w[0] };
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][f] <= t);
            out.push((f, t, l, r));
        }
    }
    out
}

/// Smallest weighted training error over every threshold tree of depth at
/// most `depth` whose leaves predict their weighted majority.
pub fn min_error_tree(x: &[Vec<f64>], y: &[usize], w: &[f64], k: usize, depth: usize) -> f64 {
    fn go(idx: &[usize], x: &[Vec<f64>], y: &[usize], w: &[f64], k: usize, depth: usize) -> f64 {
        let mut best = leaf_error(idx, y, w, k);
        if depth > 0 {
            for (_, _, l, r) in candidate_splits(idx, x) {
                best = best.min(go(&l, x, y, w, k, depth - 1) + go(&r, x, y, w, k, depth - 1));
            }
        }
        best
    }
    go(&(0..y.len()).collect::<Vec<_>>(), x, y, w, k, depth)
}

/// Tree as nested enum, grown greedily by recomputing weighted Gini from
/// scratch for every candidate.
#[derive(Debug, Clone, PartialEq)]
pub enum GreedyTree {
    Leaf(usize),
    Split(usize, f64, Box<GreedyTree>, Box<GreedyTree>),
}

impl GreedyTree {
    pub fn predict(&self, x: &[f64]) -> usize {
        match self {
            GreedyTree::Leaf(c) => *c,
            GreedyTree::Split(f, t, l, r) => {
                if x[*f] <= *t {
                    l.predict(x)
                } else {
                    r.predict(x)
                }
            }
        }
    }
}

fn gini_times_weight(idx: &[usize], y: &[usize], w: &[f64], k: usize) -> f64 {
    let mut cw = vec![0.0; k];
    for &i in idx {
        cw[y[i]] += w[i];
    }
    let total: f64 = cw.iter().sum();
    if total <= 0.0 {
        0.0
    } else {
        total * (1.0 - cw.iter().map(|c| (c / total) * (c / total)).sum::<f64>())
    }
}

fn weighted_majority(idx: &[usize], y: &[usize], w: &[f64], k: usize) -> usize {
    let mut cw = vec![0.0; k];
    let mut cnt = vec![0usize; k];
    for &i in idx {
        cw[y[i]] += w[i];
        cnt[y[i]] += 1;
    }
    let by_weight = cw.iter().sum::<f64>() > 0.0;
    let mut best = 0;
    for c in 1..k {
        let better = if by_weight { cw[c] > cw[best] } else { cnt[c] > cnt[best] };
        if better {
            best = c;
        }
    }
    best
}

pub fn greedy_gini_tree(x: &[Vec<f64>], y: &[usize], w: &[f64], k: usize, depth: usize) -> GreedyTree {
    const EPS: f64 = 1e-12;
    fn go(idx: &[usize], x: &[Vec<f64>], y: &[usize], w: &[f64], k: usize, depth: usize) -> GreedyTree {
        let leaf = GreedyTree::Leaf(weighted_majority(idx, y, w, k));
        let classes: std::collections::BTreeSet<usize> = idx.iter().map(|&i| y[i]).collect();
        if depth == 0 || classes.len() <= 1 {
            return leaf;
        }
        let mut best: Option<(usize, f64, Vec<usize>, Vec<usize>, f64)> = None;
        for (f, t, l, r) in candidate_splits(idx, x) {
            let imp = gini_times_weight(&l, y, w, k) + gini_times_weight(&r, y, w, k);
            if best.as_ref().is_none_or(|b| imp < b.4 - EPS) {
                best = Some((f, t, l, r, imp));
            }
        }
        match best {
            Some((f, t, l, r, imp)) if gini_times_weight(idx, y, w, k) - imp > EPS => GreedyTree::Split(
                f,
                t,
                Box::new(go(&l, x, y, w, k, depth - 1)),
                Box::new(go(&r, x, y, w, k, depth - 1)),
            ),
            _ => leaf,
        }
    }
    go(&(0..y.len()).collect::<Vec<_>>(), x, y, w, k, depth)
}

/// Stress-1 of a planar configuration.
pub fn stress1(delta: &[f64], n: usize, p: &[[f64; 2]]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let d = ((p[i][0] - p[j][0]).powi(2) + (p[i][1] - p[j][1]).powi(2)).sqrt();
            num += (delta[i * n + j] - d).powi(2);
            den += delta[i * n + j].powi(2);
        }
    }
    (num / den).sqrt()
}

/// Lowest stress-1 reached by plain gradient descent with backtracking from
/// `restarts` random starts.
pub fn gradient_descent_stress(delta: &[f64], n: usize, restarts: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut best = f64::INFINITY;
    for seed in 0..restarts {
        let mut r = rand::rngs::StdRng::seed_from_u64(1000 + seed);
        let mut p: Vec<[f64; 2]> = (0..n).map(|_| [r.random::<f64>() * 2.0 - 1.0, r.random::<f64>() * 2.0 - 1.0]).collect();
        let mut s = stress1(delta, n, &p);
        let mut step = 0.1;
        for _ in 0..20_000 {
            // Gradient of the raw stress sum (delta - d)^2.
            let mut g = vec![[0.0; 2]; n];
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let dx = p[i][0] - p[j][0];
                    let dy = p[i][1] - p[j][1];
                    let d = (dx * dx + dy * dy).sqrt().max(1e-12);
                    let coef = -2.0 * (delta[i * n + j] - d) / d;
                    g[i][0] += coef * dx;
                    g[i][1] += coef * dy;
                }
            }
            loop {
                let q: Vec<[f64; 2]> = p.iter().zip(&g).map(|(a, b)| [a[0] - step * b[0], a[1] - step * b[1]]).collect();
                let sq = stress1(delta, n, &q);
                if sq < s {
                    p = q;
                    s = sq;
                    step *= 1.2;
                    break;
                }
                step *= 0.5;
                if step < 1e-14 {
                    break;
                }
            }
            if step < 1e-14 {
                break;
            }
        }
        best = best.min(s);
    }
    best
}

pub fn mean_and_population_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Hamilton apportionment written out directly: floors, then one extra unit
/// to each of the largest remainders, lower index first on ties.
pub fn hamilton(quotas: &[f64], total: usize) -> Vec<usize> {
    let mut out: Vec<usize> = quotas.iter().map(|q| (q + 1e-9).floor() as usize).collect();
    let mut rem: Vec<(f64, usize)> = quotas
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let f = q - (q + 1e-9).floor();
            (if f < 1e-9 { 0.0 } else { f }, i)
        })
        .collect();
    rem.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let left = total - out.iter().sum::<usize>();
    for &(_, i) in rem.iter().take(left) {
        out[i] += 1;
    }
    out
}
