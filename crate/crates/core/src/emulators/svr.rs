//! Epsilon-insensitive support vector regression with an RBF kernel.
//!
//! The dual is solved over `2n` variables `(a, a*)` with pairwise SMO steps
//! and a second-order working set selection:
//!
//! `min 1/2 z^T Q z + p^T z,  s^T z = 0,  0 <= z <= C`
//!
//! where `z = [a; a*]`, `s = [+1; -1]`, `p = [eps - y; eps + y]` and
//! `Q_ij = s_i s_j k(x_i, x_j)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    /// RBF width; `None` uses `1 / (d * var(X))` of the training inputs.
    pub gamma: Option<f64>,
    /// Stop once the maximal KKT violation drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 10.0,
            epsilon: 0.05,
            gamma: None,
            tol: 1e-3,
            max_iter: 100_000,
        }
    }
}

impl SvrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !(self.epsilon >= 0.0) || !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidParameter(format!("invalid SVR parameters {self:?}")));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidParameter(format!("SVR gamma must be positive, got {g}")));
            }
        }
        Ok(())
    }
}

/// `1 / (d * var(X))` over all entries, as used when no gamma is given.
pub fn scale_gamma(x: &DMatrix<f64>) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (x.ncols() as f64 * var)
    } else {
        1.0
    }
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>()).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svr {
    pub gamma: f64,
    pub dim: usize,
    /// Training inputs, row-major.
    pub x_train: Vec<f64>,
    /// `a_i - a*_i` per training row.
    pub dual_coef: Vec<f64>,
    /// `f(x) = sum_i dual_coef_i k(x_i, x) - rho`.
    pub rho: f64,
    /// Dual objective in the minimization form above.
    pub objective: f64,
    pub iterations: usize,
    /// Largest per-point KKT residual at termination.
    pub max_kkt_residual: f64,
}

struct Solver<'a> {
    k: &'a DMatrix<f64>,
    n: usize,
    c: f64,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    p: Vec<f64>,
}

impl Solver<'_> {
    fn sign(&self, t: usize) -> f64 {
        if t < self.n {
            1.0
        } else {
            -1.0
        }
    }

    fn q(&self, a: usize, b: usize) -> f64 {
        self.sign(a) * self.sign(b) * self.k[(a % self.n, b % self.n)]
    }

    fn at_upper(&self, t: usize) -> bool {
        self.alpha[t] >= self.c
    }

    fn at_lower(&self, t: usize) -> bool {
        self.alpha[t] <= 0.0
    }

    /// Second-order working set; `None` once the gap is below `tol`.
    fn select(&self, tol: f64) -> (Option<(usize, usize)>, f64) {
        let m = 2 * self.n;
        let mut gmax = f64::NEG_INFINITY;
        let mut gmax_idx = None;
        for t in 0..m {
            let v = -self.sign(t) * self.grad[t];
            let eligible = if self.sign(t) > 0.0 { !self.at_upper(t) } else { !self.at_lower(t) };
            if eligible && v >= gmax {
                gmax = v;
                gmax_idx = Some(t);
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best_j = None;
        let mut best_obj = f64::INFINITY;
        let i = gmax_idx;
        for j in 0..m {
            let sj = self.sign(j);
            let eligible = if sj > 0.0 { !self.at_lower(j) } else { !self.at_upper(j) };
            if !eligible {
                continue;
            }
            let v = sj * self.grad[j];
            gmax2 = gmax2.max(v);
            let Some(i) = i else { continue };
            let grad_diff = gmax + v;
            if grad_diff > 0.0 {
                let quad = self.k[(i % self.n, i % self.n)] + self.k[(j % self.n, j % self.n)]
                    - 2.0 * self.sign(i) * self.q(i, j);
                let obj = -grad_diff * grad_diff / if quad > 0.0 { quad } else { TAU };
                if obj <= best_obj {
                    best_obj = obj;
                    best_j = Some(j);
                }
            }
        }
        let gap = gmax + gmax2;
        match (i, best_j) {
            (Some(i), Some(j)) if gap >= tol => (Some((i, j)), gap),
            _ => (None, gap.max(0.0)),
        }
    }

    fn step(&mut self, i: usize, j: usize) {
        let c = self.c;
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let qii = self.k[(i % self.n, i % self.n)];
        let qjj = self.k[(j % self.n, j % self.n)];
        let qij = self.q(i, j);
        let (mut ai, mut aj) = (old_i, old_j);
        if self.sign(i) != self.sign(j) {
            let quad = (qii + qjj + 2.0 * qij).max(TAU);
            let delta = (-self.grad[i] - self.grad[j]) / quad;
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
            let quad = (qii + qjj - 2.0 * qij).max(TAU);
            let delta = (self.grad[i] - self.grad[j]) / quad;
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
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..2 * self.n {
            self.grad[t] += self.q(i, t) * di + self.q(j, t) * dj;
        }
    }

    fn rho(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut sum_free) = (0usize, 0.0);
        for t in 0..2 * self.n {
            let yg = self.sign(t) * self.grad[t];
            let plus = self.sign(t) > 0.0;
            if self.at_upper(t) {
                if plus {
                    lb = lb.max(yg);
                } else {
                    ub = ub.min(yg);
                }
            } else if self.at_lower(t) {
                if plus {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum_free += yg;
            }
        }
        if free > 0 {
            sum_free / free as f64
        } else {
            0.5 * (ub + lb)
        }
    }

    /// Per-variable violation of the KKT conditions for the offset `rho`.
    fn kkt_residuals(&self, rho: f64) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                [i, i + self.n]
                    .into_iter()
                    .map(|t| {
                        let yg = self.sign(t) * self.grad[t];
                        let plus = self.sign(t) > 0.0;
                        let in_up = if plus { !self.at_upper(t) } else { !self.at_lower(t) };
                        let in_low = if plus { !self.at_lower(t) } else { !self.at_upper(t) };
                        let mut r: f64 = 0.0;
                        if in_up {
                            r = r.max(rho - yg);
                        }
                        if in_low {
                            r = r.max(yg - rho);
                        }
                        r
                    })
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    fn objective(&self) -> f64 {
        0.5 * (0..2 * self.n)
            .map(|t| self.alpha[t] * (self.grad[t] + self.p[t]))
            .sum::<f64>()
    }
}

impl Svr {
    pub fn fit(x: &DMatrix<f64>, y: &[f64], params: &SvrParams) -> Result<Self> {
        let n = x.nrows();
        if n == 0 {
            return Err(Error::EmptyInput("SVR training rows"));
        }
        if n != y.len() {
            return Err(Error::DimensionMismatch { expected: n, got: y.len() });
        }
        if n < 2 {
            return Err(Error::InvalidParameter("SVR needs at least 2 rows".into()));
        }
        params.validate()?;
        let gamma = params.gamma.unwrap_or_else(|| scale_gamma(x));
        let rows: Vec<Vec<f64>> = (0..n).map(|i| x.row(i).iter().copied().collect()).collect();
        let k = DMatrix::from_fn(n, n, |i, j| rbf(&rows[i], &rows[j], gamma));
        let p: Vec<f64> = (0..2 * n)
            .map(|t| if t < n { params.epsilon - y[t] } else { params.epsilon + y[t - n] })
            .collect();
        let mut s = Solver {
            k: &k,
            n,
            c: params.c,
            alpha: vec![0.0; 2 * n],
            grad: p.clone(),
            p,
        };
        let mut iterations = 0;
        loop {
            let (pair, gap) = s.select(params.tol);
            let Some((i, j)) = pair else { break };
            if iterations >= params.max_iter {
                return Err(Error::NoConvergence { iterations, violation: gap });
            }
            s.step(i, j);
            iterations += 1;
        }
        let rho = s.rho();
        let max_kkt_residual = s.kkt_residuals(rho).into_iter().fold(0.0, f64::max);
        Ok(Svr {
            gamma,
            dim: x.ncols(),
            x_train: rows.concat(),
            dual_coef: (0..n).map(|i| s.alpha[i] - s.alpha[i + n]).collect(),
            rho,
            objective: s.objective(),
            iterations,
            max_kkt_residual,
        })
    }

    pub fn n_support(&self) -> usize {
        self.dual_coef.iter().filter(|c| **c != 0.0).count()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.dual_coef
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| c * rbf(&self.x_train[i * self.dim..(i + 1) * self.dim], row, self.gamma))
            .sum::<f64>()
            - self.rho
    }
}
