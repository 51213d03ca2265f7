//! Regression emulators of the simulator, one scalar model per metric.
//!
//! Callers work in dB; each model converts its target to linear units and
//! standardizes it before fitting, and undoes both on prediction.

pub mod forest;
pub mod gpr;
pub mod linear;
pub mod svr;

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::antenna::ArrayConfig;
use crate::dataset::{Dataset, Standardizer};
use crate::error::{Error, Result};
use crate::sim::{db_to_linear, linear_to_db, Metric};

pub use forest::{Forest, ForestParams};
pub use gpr::{Gpr, GprHyper, GprParams};
pub use linear::LinearModel;
pub use svr::{Svr, SvrParams};

/// Floor applied before converting a linear prediction back to dB.
pub const MIN_LINEAR_PREDICTION: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Linear,
    Gpr,
    RandomForest,
    Svr,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Linear, ModelKind::Gpr, ModelKind::RandomForest, ModelKind::Svr];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Gpr => "gpr",
            ModelKind::RandomForest => "random-forest",
            ModelKind::Svr => "svr",
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        ModelKind::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn default_hyper(self) -> Hyperparameters {
        match self {
            ModelKind::Linear => Hyperparameters::Linear,
            ModelKind::Gpr => Hyperparameters::Gpr(GprParams::default()),
            ModelKind::RandomForest => Hyperparameters::RandomForest(ForestParams::default()),
            ModelKind::Svr => Hyperparameters::Svr(SvrParams::default()),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Hyperparameters {
    Linear,
    Gpr(GprParams),
    RandomForest(ForestParams),
    Svr(SvrParams),
}

impl Hyperparameters {
    pub fn kind(&self) -> ModelKind {
        match self {
            Hyperparameters::Linear => ModelKind::Linear,
            Hyperparameters::Gpr(_) => ModelKind::Gpr,
            Hyperparameters::RandomForest(_) => ModelKind::RandomForest,
            Hyperparameters::Svr(_) => ModelKind::Svr,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Hyperparameters::Linear => Ok(()),
            Hyperparameters::Gpr(p) => p.validate(),
            Hyperparameters::RandomForest(p) => p.validate(),
            Hyperparameters::Svr(p) => p.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub target: Metric,
    pub hyper: Hyperparameters,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, target: Metric) -> Self {
        ModelSpec {
            target,
            hyper: kind.default_hyper(),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.hyper.kind()
    }
}

/// dB -> linear -> `(v - mean) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetTransform {
    pub linear_units: bool,
    pub mean: f64,
    pub scale: f64,
}

impl TargetTransform {
    fn fit(y_db: &[f64]) -> Self {
        let lin: Vec<f64> = y_db.iter().map(|&v| db_to_linear(v)).collect();
        let n = lin.len() as f64;
        let mean = lin.iter().sum::<f64>() / n;
        let var = lin.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let scale = if var.sqrt() > 1e-12 * mean.abs().max(1.0) { var.sqrt() } else { 1.0 };
        TargetTransform { linear_units: true, mean, scale }
    }

    fn forward(&self, db: f64) -> f64 {
        let v = if self.linear_units { db_to_linear(db) } else { db };
        (v - self.mean) / self.scale
    }

    /// Model output back to the fitting unit (linear SINR, or dB if the
    /// transform is disabled).
    fn to_unit(self, z: f64) -> f64 {
        z * self.scale + self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FittedModel {
    Linear(LinearModel),
    Gpr(Gpr),
    RandomForest(Forest),
    Svr(Svr),
}

impl FittedModel {
    fn predict_row(&self, z: &[f64]) -> f64 {
        match self {
            FittedModel::Linear(m) => m.predict_row(z),
            FittedModel::Gpr(m) => m.predict_row(z),
            FittedModel::RandomForest(m) => m.predict_row(z),
            FittedModel::Svr(m) => m.predict_row(z),
        }
    }
}

/// A fitted emulator `f^` for one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmulatorModel {
    pub spec: ModelSpec,
    pub standardizer: Standardizer,
    pub target_transform: TargetTransform,
    /// Dataset row ids the model was trained on.
    pub training_ids: Vec<u64>,
    pub fitted: FittedModel,
}

impl EmulatorModel {
    /// Fits on every row of `ds`.
    pub fn fit(spec: &ModelSpec, ds: &Dataset) -> Result<Self> {
        if ds.is_empty() {
            return Err(Error::EmptyInput("training dataset"));
        }
        Self::fit_xy(spec, &ds.features(), &ds.metric_column(spec.target), ds.ids())
    }

    /// Fits on raw features and dB targets.
    pub fn fit_xy(spec: &ModelSpec, x: &DMatrix<f64>, y_db: &[f64], ids: Vec<u64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::EmptyInput("training rows"));
        }
        if x.nrows() != y_db.len() || ids.len() != y_db.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                got: y_db.len().min(ids.len()),
            });
        }
        spec.hyper.validate()?;
        let standardizer = Standardizer::fit(x)?;
        let z = standardizer.apply(x)?;
        let target_transform = TargetTransform::fit(y_db);
        let t: Vec<f64> = y_db.iter().map(|&v| target_transform.forward(v)).collect();
        let fitted = match &spec.hyper {
            Hyperparameters::Linear => {
                if x.nrows() < x.ncols() + 1 {
                    return Err(Error::InvalidParameter(format!(
                        "linear regression needs at least {} rows, got {}",
                        x.ncols() + 1,
                        x.nrows()
                    )));
                }
                FittedModel::Linear(LinearModel::fit(&z, &t)?)
            }
            Hyperparameters::Gpr(p) => FittedModel::Gpr(Gpr::fit(&z, &t, p)?),
            Hyperparameters::RandomForest(p) => FittedModel::RandomForest(Forest::fit(&z, &t, p)?),
            Hyperparameters::Svr(p) => FittedModel::Svr(Svr::fit(&z, &t, p)?),
        };
        Ok(EmulatorModel {
            spec: spec.clone(),
            standardizer,
            target_transform,
            training_ids: ids,
            fitted,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }

    pub fn target(&self) -> Metric {
        self.spec.target
    }

    pub fn dim(&self) -> usize {
        self.standardizer.dim()
    }

    /// Prediction in linear SINR units for one raw feature row.
    pub fn predict_linear_row(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: features.len(),
            });
        }
        let z = self.standardizer.apply_row(features);
        Ok(self.target_transform.to_unit(self.fitted.predict_row(&z)))
    }

    /// Prediction in dB for one raw feature row.
    pub fn predict_db_row(&self, features: &[f64]) -> Result<f64> {
        let v = self.predict_linear_row(features)?;
        Ok(if self.target_transform.linear_units {
            linear_to_db(v.max(MIN_LINEAR_PREDICTION))
        } else {
            v
        })
    }

    pub fn predict_linear(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        self.check_cols(x)?;
        (0..x.nrows())
            .map(|i| self.predict_linear_row(&x.row(i).iter().copied().collect::<Vec<_>>()))
            .collect()
    }

    /// Predictions in dB, one per row of `x`.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        self.check_cols(x)?;
        (0..x.nrows())
            .map(|i| self.predict_db_row(&x.row(i).iter().copied().collect::<Vec<_>>()))
            .collect()
    }

    pub fn predict_config(&self, config: &ArrayConfig) -> Result<f64> {
        self.predict_db_row(&config.features())
    }

    pub fn predict_config_linear(&self, config: &ArrayConfig) -> Result<f64> {
        self.predict_linear_row(&config.features())
    }

    fn check_cols(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.ncols(),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = self.to_json()?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::MissingArtifact(path.to_path_buf())
            } else {
                Error::Io(e)
            }
        })?;
        Self::from_json(&s)
    }
}

/// Normalized RMSE: `sqrt(mean(((y - y^) / y)^2))`. Both inputs must be in
/// the same (linear) unit.
pub fn nrmse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::EmptyInput("nRMSE targets"));
    }
    if y.len() != y_hat.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: y_hat.len(),
        });
    }
    if let Some(index) = y.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroTarget { index });
    }
    let sum: f64 = y.iter().zip(y_hat).map(|(a, b)| ((a - b) / a).powi(2)).sum();
    Ok((sum / y.len() as f64).sqrt())
}

/// nRMSE of `model` on `ds`, computed on linear-unit SINR.
pub fn test_nrmse(model: &EmulatorModel, ds: &Dataset) -> Result<f64> {
    let y: Vec<f64> = ds.metric_column(model.target()).into_iter().map(db_to_linear).collect();
    let y_hat = model.predict_linear(&ds.features())?;
    nrmse(&y, &y_hat)
}
