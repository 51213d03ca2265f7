//! Zero-mean Gaussian process regression with a squared-exponential kernel.
//!
//! `k(a, b) = sf^2 exp(-|a - b|^2 / (2 l^2)) + sn^2 [a == b]`
//!
//! Hyperparameters `(sf, l, sn)` are fitted by maximizing the log marginal
//! likelihood with a box-constrained quasi-Newton ascent in log space,
//! restarted from several points.

use faer::linalg::solvers::{DenseSolveCore, Llt, Solve};
use faer::{Mat, Side};
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Jitter ladder tried when the kernel matrix is numerically singular.
const JITTER_LADDER: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];
const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GprHyper {
    pub signal_std: f64,
    pub length_scale: f64,
    pub noise_std: f64,
}

impl GprHyper {
    pub fn to_log(self) -> [f64; 3] {
        [self.signal_std.ln(), self.length_scale.ln(), self.noise_std.ln()]
    }

    pub fn from_log(t: [f64; 3]) -> Self {
        GprHyper {
            signal_std: t[0].exp(),
            length_scale: t[1].exp(),
            noise_std: t[2].exp(),
        }
    }

    fn validate(&self) -> Result<()> {
        for v in [self.signal_std, self.length_scale, self.noise_std] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("GPR hyperparameters must be positive: {self:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GprParams {
    pub n_restarts: usize,
    pub length_bounds: [f64; 2],
    pub signal_bounds: [f64; 2],
    pub noise_bounds: [f64; 2],
    /// Quasi-Newton iterations per restart.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for GprParams {
    fn default() -> Self {
        GprParams {
            n_restarts: 5,
            length_bounds: [1e-2, 1e2],
            signal_bounds: [1e-4, 1e2],
            noise_bounds: [1e-4, 1e2],
            max_iter: 60,
            seed: 0,
        }
    }
}

impl GprParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_restarts == 0 {
            return Err(Error::InvalidParameter("GPR needs at least one restart".into()));
        }
        for b in [self.length_bounds, self.signal_bounds, self.noise_bounds] {
            if !(b[0] > 0.0 && b[1] >= b[0]) {
                return Err(Error::InvalidParameter(format!("invalid GPR bounds {b:?}")));
            }
        }
        Ok(())
    }

    fn log_bounds(&self) -> ([f64; 3], [f64; 3]) {
        (
            [self.signal_bounds[0].ln(), self.length_bounds[0].ln(), self.noise_bounds[0].ln()],
            [self.signal_bounds[1].ln(), self.length_bounds[1].ln(), self.noise_bounds[1].ln()],
        )
    }
}

fn pairwise_sq_dist(x: &DMatrix<f64>) -> Mat<f64> {
    let n = x.nrows();
    Mat::from_fn(n, n, |i, j| (0..x.ncols()).map(|k| (x[(i, k)] - x[(j, k)]).powi(2)).sum())
}

/// Signal part of the kernel from precomputed squared distances.
fn signal_kernel(d2: &Mat<f64>, h: &GprHyper) -> Mat<f64> {
    let sf2 = h.signal_std * h.signal_std;
    let inv = 1.0 / (2.0 * h.length_scale * h.length_scale);
    Mat::from_fn(d2.nrows(), d2.ncols(), |i, j| sf2 * (-d2[(i, j)] * inv).exp())
}

/// Cholesky of `kf + (sn^2 + jitter) I`, escalating the jitter as needed.
fn factor(kf: &Mat<f64>, noise_var: f64) -> Result<(Llt<f64>, f64)> {
    for &jitter in &JITTER_LADDER {
        let mut k = kf.clone();
        for i in 0..k.nrows() {
            k[(i, i)] += noise_var + jitter;
        }
        if let Ok(c) = k.llt(Side::Lower) {
            return Ok((c, jitter));
        }
    }
    Err(Error::NotPositiveDefinite {
        max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
    })
}

fn check_xy(x: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::EmptyInput("GPR training rows"));
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    Ok(())
}

fn column(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

fn lml_from_factor(chol: &Llt<f64>, y: &Mat<f64>) -> (f64, Vec<f64>) {
    let alpha = chol.solve(y);
    let l = chol.L();
    let n = y.nrows();
    let log_det: f64 = (0..n).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0;
    let fit: f64 = (0..n).map(|i| y[(i, 0)] * alpha[(i, 0)]).sum();
    let alpha = (0..n).map(|i| alpha[(i, 0)]).collect();
    (-0.5 * fit - 0.5 * log_det - 0.5 * n as f64 * LN_2PI, alpha)
}

/// Log marginal likelihood of `y` under the GP with hyperparameters `h`.
pub fn log_marginal_likelihood(x: &DMatrix<f64>, y: &[f64], h: &GprHyper) -> Result<f64> {
    check_xy(x, y)?;
    h.validate()?;
    let kf = signal_kernel(&pairwise_sq_dist(x), h);
    let (chol, _) = factor(&kf, h.noise_std * h.noise_std)?;
    Ok(lml_from_factor(&chol, &column(y)).0)
}

struct LmlWorkspace {
    d2: Mat<f64>,
    y: Mat<f64>,
}

impl LmlWorkspace {
    fn new(x: &DMatrix<f64>, y: &[f64]) -> Self {
        LmlWorkspace {
            d2: pairwise_sq_dist(x),
            y: column(y),
        }
    }

    /// LML and its gradient with respect to `(ln sf, ln l, ln sn)`.
    fn eval(&self, h: &GprHyper) -> Result<(f64, [f64; 3])> {
        let kf = signal_kernel(&self.d2, h);
        let noise_var = h.noise_std * h.noise_std;
        let (chol, _) = factor(&kf, noise_var)?;
        let (lml, alpha) = lml_from_factor(&chol, &self.y);
        let k_inv = chol.inverse();
        let n = alpha.len();
        let inv_l2 = 1.0 / (h.length_scale * h.length_scale);
        // 1/2 tr((alpha alpha^T - K^-1) dK/dtheta)
        let (mut g_sf, mut g_l, mut g_sn) = (0.0, 0.0, 0.0);
        for j in 0..n {
            for i in 0..n {
                let w = alpha[i] * alpha[j] - k_inv[(i, j)];
                let kf_ij = kf[(i, j)];
                g_sf += w * kf_ij;
                g_l += w * kf_ij * self.d2[(i, j)];
            }
            g_sn += alpha[j] * alpha[j] - k_inv[(j, j)];
        }
        Ok((lml, [g_sf, 0.5 * g_l * inv_l2, g_sn * noise_var]))
    }
}

/// LML and analytic gradient with respect to the log-hyperparameters
/// `(ln signal_std, ln length_scale, ln noise_std)`.
pub fn lml_and_gradient(x: &DMatrix<f64>, y: &[f64], h: &GprHyper) -> Result<(f64, [f64; 3])> {
    check_xy(x, y)?;
    h.validate()?;
    LmlWorkspace::new(x, y).eval(h)
}

/// Maximizes `f` over the box `[lo, hi]` with projected BFGS.
fn maximize_box<F>(mut f: F, x0: [f64; 3], lo: [f64; 3], hi: [f64; 3], max_iter: usize) -> ([f64; 3], f64)
where
    F: FnMut(&[f64; 3]) -> Option<(f64, [f64; 3])>,
{
    let clamp = |v: [f64; 3]| std::array::from_fn(|k| v[k].clamp(lo[k], hi[k]));
    let mut x: [f64; 3] = clamp(x0);
    // work on the negated objective
    let Some((v, g)) = f(&x) else {
        return (x, f64::NEG_INFINITY);
    };
    let (mut fx, mut gx) = (-v, g.map(|c| -c));
    let mut h = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let projected = |x: &[f64; 3], g: &[f64; 3]| -> [f64; 3] {
        std::array::from_fn(|k| {
            if (x[k] <= lo[k] && g[k] > 0.0) || (x[k] >= hi[k] && g[k] < 0.0) {
                0.0
            } else {
                g[k]
            }
        })
    };
    for _ in 0..max_iter {
        let pg = projected(&x, &gx);
        if pg.iter().all(|c| c.abs() < 1e-6) {
            break;
        }
        let mut d: [f64; 3] = std::array::from_fn(|r| -(0..3).map(|c| h[r][c] * pg[c]).sum::<f64>());
        if d.iter().zip(&pg).map(|(a, b)| a * b).sum::<f64>() >= 0.0 {
            d = pg.map(|c| -c);
            h = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        }
        // cap the step at one e-fold per coordinate
        let scale = d.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if scale > 3.0 {
            d = d.map(|c| c * 3.0 / scale);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let xn = clamp(std::array::from_fn(|k| x[k] + t * d[k]));
            let step: [f64; 3] = std::array::from_fn(|k| xn[k] - x[k]);
            let decrease: f64 = step.iter().zip(&gx).map(|(s, g)| s * g).sum();
            if let Some((v, g)) = f(&xn) {
                if -v <= fx + 1e-4 * decrease {
                    accepted = Some((xn, -v, g.map(|c| -c)));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            break;
        };
        let s: [f64; 3] = std::array::from_fn(|k| xn[k] - x[k]);
        let yv: [f64; 3] = std::array::from_fn(|k| gnew[k] - gx[k]);
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            // BFGS inverse-Hessian update
            let hy: [f64; 3] = std::array::from_fn(|r| (0..3).map(|c| h[r][c] * yv[c]).sum());
            let yhy: f64 = yv.iter().zip(&hy).map(|(a, b)| a * b).sum();
            let rho = 1.0 / sy;
            for r in 0..3 {
                for c in 0..3 {
                    h[r][c] += -rho * (hy[r] * s[c] + s[r] * hy[c])
                        + (rho * rho * yhy + rho) * s[r] * s[c];
                }
            }
        }
        let converged = (fx - fnew).abs() < 1e-10 * (1.0 + fx.abs());
        x = xn;
        fx = fnew;
        gx = gnew;
        if converged {
            break;
        }
    }
    (x, -fx)
}

/// Fitted Gaussian process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gpr {
    pub hyper: GprHyper,
    /// Training inputs, row-major `n x d`.
    pub x_train: Vec<f64>,
    pub dim: usize,
    /// `K^-1 y`.
    pub alpha: Vec<f64>,
    /// Jitter that was needed to factor `K`.
    pub jitter: f64,
    pub log_marginal_likelihood: f64,
}

impl Gpr {
    /// Conditions the GP on `(x, y)` with fixed hyperparameters.
    pub fn fit_fixed(x: &DMatrix<f64>, y: &[f64], hyper: GprHyper) -> Result<Self> {
        check_xy(x, y)?;
        hyper.validate()?;
        let kf = signal_kernel(&pairwise_sq_dist(x), &hyper);
        let (chol, jitter) = factor(&kf, hyper.noise_std * hyper.noise_std)?;
        let (lml, alpha) = lml_from_factor(&chol, &column(y));
        let (n, d) = x.shape();
        Ok(Gpr {
            hyper,
            x_train: (0..n).flat_map(|i| (0..d).map(move |k| (i, k))).map(|(i, k)| x[(i, k)]).collect(),
            dim: d,
            alpha,
            jitter,
            log_marginal_likelihood: lml,
        })
    }

    /// Fits hyperparameters by multi-start LML maximization, then conditions.
    pub fn fit(x: &DMatrix<f64>, y: &[f64], params: &GprParams) -> Result<Self> {
        check_xy(x, y)?;
        if x.nrows() < 2 {
            return Err(Error::InvalidParameter("GPR needs at least 2 rows".into()));
        }
        params.validate()?;
        let ws = LmlWorkspace::new(x, y);
        let (lo, hi) = params.log_bounds();
        let y_std = crate::stats::std_dev(y).max(1e-3);
        let mut rng = rng::substream(params.seed, &[0x6E5]);
        let mut best: Option<([f64; 3], f64)> = None;
        for start in 0..params.n_restarts {
            let x0 = if start == 0 {
                [y_std.ln(), 0.0, (0.1 * y_std).ln()]
            } else {
                std::array::from_fn(|k| rng.gen_range(lo[k]..=hi[k]))
            };
            let (t, v) = maximize_box(
                |t| ws.eval(&GprHyper::from_log(*t)).ok(),
                x0,
                lo,
                hi,
                params.max_iter,
            );
            if v.is_finite() && best.is_none_or(|(_, b)| v > b) {
                best = Some((t, v));
            }
        }
        let (t, _) = best.ok_or(Error::NotPositiveDefinite {
            max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
        })?;
        Self::fit_fixed(x, y, GprHyper::from_log(t))
    }

    pub fn n_train(&self) -> usize {
        self.alpha.len()
    }

    fn train_row(&self, i: usize) -> &[f64] {
        &self.x_train[i * self.dim..(i + 1) * self.dim]
    }

    fn k_star(&self, row: &[f64]) -> impl Iterator<Item = f64> + '_ {
        let sf2 = self.hyper.signal_std.powi(2);
        let inv = 1.0 / (2.0 * self.hyper.length_scale.powi(2));
        let row = row.to_vec();
        (0..self.n_train()).map(move |i| {
            let d2: f64 = self.train_row(i).iter().zip(&row).map(|(a, b)| (a - b).powi(2)).sum();
            sf2 * (-d2 * inv).exp()
        })
    }

    /// Predictive mean.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.k_star(row).zip(&self.alpha).map(|(k, a)| k * a).sum()
    }

    /// Predictive mean and latent variance (noise excluded). Refactors the
    /// kernel matrix, so this is meant for diagnostics rather than hot loops.
    pub fn predict_with_variance(&self, rows: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
        let n = self.n_train();
        let x = DMatrix::from_row_slice(n, self.dim, &self.x_train);
        let kf = signal_kernel(&pairwise_sq_dist(&x), &self.hyper);
        let (chol, _) = factor(&kf, self.hyper.noise_std.powi(2))?;
        let sf2 = self.hyper.signal_std.powi(2);
        Ok((0..rows.nrows())
            .map(|r| {
                let row: Vec<f64> = rows.row(r).iter().copied().collect();
                let ks: Vec<f64> = self.k_star(&row).collect();
                let mean = ks.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
                let v = chol.solve(&column(&ks));
                let explained: f64 = (0..n).map(|i| ks[i] * v[(i, 0)]).sum();
                (mean, (sf2 - explained).max(0.0))
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn toy(n: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
        let mut r = rng::substream(seed, &[]);
        let x = DMatrix::<f64>::from_fn(n, 2, |_, _| r.gen_range(-2.0..2.0));
        let y = (0..n)
            .map(|i| (1.3 * x[(i, 0)]).sin() + 0.5 * x[(i, 1)] + 0.05 * r.gen_range(-1.0..1.0))
            .collect();
        (x, y)
    }

    /// `-1/2 y^T K^-1 y - 1/2 log|K| - n/2 log 2 pi` with a dense LU inverse.
    fn dense_lml(x: &DMatrix<f64>, y: &[f64], h: &GprHyper) -> f64 {
        let n = x.nrows();
        let k = DMatrix::from_fn(n, n, |i, j| {
            let d2: f64 = (0..x.ncols()).map(|c| (x[(i, c)] - x[(j, c)]).powi(2)).sum();
            h.signal_std.powi(2) * (-d2 / (2.0 * h.length_scale.powi(2))).exp()
                + if i == j { h.noise_std.powi(2) } else { 0.0 }
        });
        let yv = DVector::from_column_slice(y);
        let inv = k.clone().try_inverse().unwrap();
        let det = k.determinant();
        -0.5 * (yv.transpose() * inv * &yv)[0] - 0.5 * det.ln() - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
    }

    #[test]
    fn lml_matches_dense_oracle() {
        let (x, y) = toy(5, 3);
        let h = GprHyper { signal_std: 1.2, length_scale: 0.8, noise_std: 0.3 };
        let a = log_marginal_likelihood(&x, &y, &h).unwrap();
        let b = dense_lml(&x, &y, &h);
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (x, y) = toy(12, 4);
        let h = GprHyper { signal_std: 0.9, length_scale: 1.4, noise_std: 0.2 };
        let (_, g) = lml_and_gradient(&x, &y, &h).unwrap();
        let t = h.to_log();
        for k in 0..3 {
            let step = 1e-5;
            let mut tp = t;
            let mut tm = t;
            tp[k] += step;
            tm[k] -= step;
            let fd = (log_marginal_likelihood(&x, &y, &GprHyper::from_log(tp)).unwrap()
                - log_marginal_likelihood(&x, &y, &GprHyper::from_log(tm)).unwrap())
                / (2.0 * step);
            assert!((fd - g[k]).abs() <= 1e-4 * fd.abs().max(1e-3), "{k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn vanishing_signal_gives_noise_likelihood() {
        let (x, y) = toy(8, 5);
        let sn = 0.7f64;
        let h = GprHyper { signal_std: 1e-9, length_scale: 1.0, noise_std: sn };
        let expected: f64 = y
            .iter()
            .map(|v| -0.5 * v * v / (sn * sn) - sn.ln() - 0.5 * LN_2PI)
            .sum();
        assert!((log_marginal_likelihood(&x, &y, &h).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn duplicated_points_with_noise_are_fine() {
        let x = DMatrix::from_row_slice(3, 1, &[0.5, 0.5, 1.0]);
        let y = [1.0, 1.1, 0.3];
        let h = GprHyper { signal_std: 1.0, length_scale: 1.0, noise_std: 0.1 };
        assert!(lml_and_gradient(&x, &y, &h).unwrap().0.is_finite());
    }

    #[test]
    fn noiseless_interpolation_and_prior_far_away() {
        let (x, y) = toy(15, 6);
        let h = GprHyper { signal_std: 1.0, length_scale: 0.7, noise_std: 1e-6 };
        let gp = Gpr::fit_fixed(&x, &y, h).unwrap();
        for i in 0..15 {
            let p = gp.predict_row(&[x[(i, 0)], x[(i, 1)]]);
            assert!((p - y[i]).abs() < 1e-6, "{p} vs {}", y[i]);
        }
        let far = gp.predict_row(&[20.0 * 0.7 + 2.0, 0.0]);
        assert!(far.abs() < 1e-6);
    }

    #[test]
    fn predictive_mean_is_linear_in_targets() {
        let (x, y) = toy(20, 7);
        let h = GprHyper { signal_std: 1.0, length_scale: 1.0, noise_std: 0.1 };
        let a = 3.7;
        let ya: Vec<f64> = y.iter().map(|v| a * v).collect();
        let g1 = Gpr::fit_fixed(&x, &y, h).unwrap();
        let g2 = Gpr::fit_fixed(&x, &ya, h).unwrap();
        for q in [[0.1, 0.2], [-1.0, 1.5], [3.0, -3.0]] {
            assert!((g2.predict_row(&q) - a * g1.predict_row(&q)).abs() < 1e-8);
        }
    }

    #[test]
    fn fit_improves_on_starting_point_and_respects_bounds() {
        let (x, y) = toy(40, 8);
        let p = GprParams::default();
        let gp = Gpr::fit(&x, &y, &p).unwrap();
        let y_std = crate::stats::std_dev(&y);
        let start = GprHyper { signal_std: y_std, length_scale: 1.0, noise_std: 0.1 * y_std };
        assert!(gp.log_marginal_likelihood >= log_marginal_likelihood(&x, &y, &start).unwrap());
        let h = gp.hyper;
        assert!(h.length_scale >= 1e-2 * (1.0 - 1e-12) && h.length_scale <= 1e2 * (1.0 + 1e-12));
        assert!(h.noise_std >= 1e-4 * (1.0 - 1e-12));
        // noise level should be in the right ballpark of the injected 0.05 * U(-1, 1)
        assert!(h.noise_std < 0.2, "{h:?}");
        let again = Gpr::fit(&x, &y, &p).unwrap();
        assert_eq!(gp, again);
    }

    #[test]
    fn variance_vanishes_at_noiseless_training_points() {
        let (x, y) = toy(10, 9);
        let h = GprHyper { signal_std: 1.0, length_scale: 0.8, noise_std: 1e-5 };
        let gp = Gpr::fit_fixed(&x, &y, h).unwrap();
        let out = gp.predict_with_variance(&x).unwrap();
        for (i, (m, v)) in out.iter().enumerate() {
            assert!((m - y[i]).abs() < 1e-6);
            assert!(*v < 1e-6);
        }
        let far = gp.predict_with_variance(&DMatrix::from_row_slice(1, 2, &[50.0, 50.0])).unwrap();
        assert!((far[0].1 - 1.0).abs() < 1e-9);
    }
}
