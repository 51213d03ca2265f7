//! Ordinary least squares with intercept.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub weights: Vec<f64>,
}

impl LinearModel {
    /// Minimum-norm least-squares fit through the SVD, so collinear or
    /// rank-deficient designs still give a unique answer.
    pub fn fit(x: &DMatrix<f64>, y: &[f64]) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::EmptyInput("linear regression rows"));
        }
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                got: y.len(),
            });
        }
        let (n, d) = x.shape();
        let design = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
        let rhs = DVector::from_column_slice(y);
        let svd = design.svd(true, true);
        let max_sv = svd.singular_values.max();
        let eps = max_sv * (n.max(d + 1) as f64) * f64::EPSILON;
        let coef = svd
            .solve(&rhs, eps)
            .map_err(|e| Error::InvalidParameter(format!("least squares: {e}")))?;
        Ok(LinearModel {
            intercept: coef[0],
            weights: coef.iter().skip(1).copied().collect(),
        })
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
    }
}
