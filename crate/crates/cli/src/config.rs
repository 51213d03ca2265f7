//! Pipeline configuration file.
//!
//! A single TOML document with one section per stage. Every section and
//! field is optional; omitted values take the library defaults. Unknown keys
//! are rejected so that typos fail loudly instead of silently using a default.
//!
//! ```toml
//! schema_version = 1
//! output_dir = "run"
//!
//! [simulation]
//! n_drops = 400
//! seed = 1
//!
//! [sampling]
//! count = 1000
//! seed = 7
//! bounds = { low = 0.2, high = 1.0 }
//!
//! [split]
//! test_size = 300
//! split_seed = 11
//!
//! [models]
//! kinds = ["linear", "gpr", "random-forest", "svr"]
//! metrics = ["sinr_mean", "sinr_p5", "sinr_p50", "sinr_p95"]
//! gpr = { n_restarts = 5 }
//!
//! [curve]
//! sizes = [25, 50, 100, 150, 200, 300, 500, 700]
//! n_runs = 10
//!
//! [objective]
//! objective = "sinr_mean"
//! constraints = [{ metric = "sinr_p5", comparator = ">", threshold_db = 6.0 }]
//!
//! [optimize]
//! model = "best"
//! grid_resolution = 101
//! de = { population = 30, generations = 200 }
//!
//! [validate]
//! baseline = { n_y = 8, d_y = 0.5, d_z = 0.5 }
//! ```

use std::path::{Path, PathBuf};

use emuopt_core::dataset::SamplingSpec;
use emuopt_core::emulators::{ForestParams, GprParams, Hyperparameters, ModelKind, ModelSpec, SvrParams};
use emuopt_core::evaluation::CurveSpec;
use emuopt_core::optimizer::{DeParams, ObjectiveSpec, SearchSpace};
use emuopt_core::{ArrayConfig, Metric, SimParams, SplitSpec};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<emuopt_core::Error> for ConfigError {
    fn from(e: emuopt_core::Error) -> Self {
        ConfigError(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub simulation: SimParams,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub models: ModelsSection,
    #[serde(default)]
    pub curve: CurveSection,
    #[serde(default)]
    pub objective: ObjectiveSpec,
    #[serde(default)]
    pub optimize: OptimizeSection,
    #[serde(default)]
    pub validate: ValidateSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("run")
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            schema_version: SCHEMA_VERSION,
            output_dir: default_output_dir(),
            simulation: SimParams::default(),
            sampling: SamplingSpec::default(),
            split: SplitSpec::default(),
            models: ModelsSection::default(),
            curve: CurveSection::default(),
            objective: ObjectiveSpec::default(),
            optimize: OptimizeSection::default(),
            validate: ValidateSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsSection {
    pub kinds: Vec<ModelKind>,
    pub metrics: Vec<Metric>,
    pub gpr: GprParams,
    #[serde(rename = "random-forest")]
    pub random_forest: ForestParams,
    pub svr: SvrParams,
}

impl Default for ModelsSection {
    fn default() -> Self {
        ModelsSection {
            kinds: ModelKind::ALL.to_vec(),
            metrics: Metric::ALL.to_vec(),
            gpr: GprParams::default(),
            random_forest: ForestParams::default(),
            svr: SvrParams::default(),
        }
    }
}

impl ModelsSection {
    pub fn spec(&self, kind: ModelKind, target: Metric) -> ModelSpec {
        let hyper = match kind {
            ModelKind::Linear => Hyperparameters::Linear,
            ModelKind::Gpr => Hyperparameters::Gpr(self.gpr.clone()),
            ModelKind::RandomForest => Hyperparameters::RandomForest(self.random_forest.clone()),
            ModelKind::Svr => Hyperparameters::Svr(self.svr.clone()),
        };
        ModelSpec { target, hyper }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveSection {
    pub sizes: Vec<usize>,
    pub n_runs: usize,
    pub seed: u64,
    pub level: f64,
    /// Metrics to trace; empty means every metric in `[models]`.
    pub metrics: Vec<Metric>,
    /// Grid points of the one-dimensional emulator slices.
    pub slice_points: usize,
    /// Half-width of the band in the fixed spacing that selects dataset rows
    /// plotted next to a slice.
    pub slice_tolerance: f64,
}

impl Default for CurveSection {
    fn default() -> Self {
        let c = CurveSpec::default();
        CurveSection {
            sizes: c.sizes,
            n_runs: c.n_runs,
            seed: c.seed,
            level: c.level,
            metrics: Vec::new(),
            slice_points: 41,
            slice_tolerance: 0.05,
        }
    }
}

impl CurveSection {
    pub fn spec(&self) -> CurveSpec {
        CurveSpec {
            sizes: self.sizes.clone(),
            n_runs: self.n_runs,
            seed: self.seed,
            level: self.level,
        }
    }
}

/// Which fitted model serves each metric during optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelChoice {
    /// Lowest test nRMSE per metric, from `models/selection.json`.
    Best,
    Linear,
    Gpr,
    RandomForest,
    Svr,
}

impl ModelChoice {
    pub fn kind(self) -> Option<ModelKind> {
        match self {
            ModelChoice::Best => None,
            ModelChoice::Linear => Some(ModelKind::Linear),
            ModelChoice::Gpr => Some(ModelKind::Gpr),
            ModelChoice::RandomForest => Some(ModelKind::RandomForest),
            ModelChoice::Svr => Some(ModelKind::Svr),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeSection {
    pub model: ModelChoice,
    pub de: DeParams,
    /// Spacing box; defaults to the sampling bounds.
    pub d_y: Option<[f64; 2]>,
    pub d_z: Option<[f64; 2]>,
    /// Points per axis of the reference grid search; 0 skips it.
    pub grid_resolution: usize,
    /// Sequential emulator evaluations timed for the latency report.
    pub timing_evaluations: usize,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        OptimizeSection {
            model: ModelChoice::Best,
            de: DeParams::default(),
            d_y: None,
            d_z: None,
            grid_resolution: 101,
            timing_evaluations: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layout {
    pub n_y: usize,
    pub d_y: f64,
    pub d_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSection {
    pub baseline: Layout,
}

impl Default for ValidateSection {
    fn default() -> Self {
        ValidateSection {
            baseline: Layout {
                n_y: 8,
                d_y: 0.5,
                d_z: 0.5,
            },
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError(format!(
                "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(ConfigError("output_dir must not be empty".into()));
        }
        self.simulation.validate()?;
        self.sampling.bounds.validate()?;
        if self.sampling.count == 0 {
            return Err(ConfigError("sampling.count must be at least 1".into()));
        }
        if self.models.kinds.is_empty() || self.models.metrics.is_empty() {
            return Err(ConfigError("models.kinds and models.metrics must not be empty".into()));
        }
        for kind in &self.models.kinds {
            self.models.spec(*kind, Metric::SinrMean).hyper.validate()?;
        }
        self.curve.spec().validate()?;
        if self.curve.slice_points < 2 {
            return Err(ConfigError("curve.slice_points must be at least 2".into()));
        }
        self.objective.validate()?;
        self.optimize.de.validate()?;
        if self.optimize.grid_resolution == 1 {
            return Err(ConfigError("optimize.grid_resolution must be 0 or at least 2".into()));
        }
        let space = self.search_space();
        space.validate()?;
        space.check_within(&self.sampling.bounds)?;
        self.baseline()?;
        Ok(())
    }

    pub fn search_space(&self) -> SearchSpace {
        let mut s = SearchSpace::from_bounds(self.sampling.n_total, &self.sampling.bounds);
        if let Some(b) = self.optimize.d_y {
            s.d_y = b;
        }
        if let Some(b) = self.optimize.d_z {
            s.d_z = b;
        }
        s
    }

    pub fn curve_metrics(&self) -> Vec<Metric> {
        if self.curve.metrics.is_empty() {
            self.models.metrics.clone()
        } else {
            self.curve.metrics.clone()
        }
    }

    pub fn layout(&self, l: Layout) -> Result<ArrayConfig, ConfigError> {
        Ok(ArrayConfig::with_total(
            l.n_y,
            self.sampling.n_total,
            l.d_y,
            l.d_z,
            self.simulation.carrier_frequency,
        )?)
    }

    pub fn baseline(&self) -> Result<ArrayConfig, ConfigError> {
        self.layout(self.validate.baseline)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_takes_defaults() {
        let cfg = PipelineConfig::from_toml("schema_version = 1\n").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
    }

    #[test]
    fn module_doc_example_parses() {
        let src = include_str!("config.rs");
        let body: String = src
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start())
            .collect::<Vec<_>>()
            .join("\n");
        let cfg = PipelineConfig::from_toml(&body).unwrap();
        assert_eq!(cfg.models.gpr.n_restarts, 5);
        assert_eq!(cfg.objective.constraints.len(), 1);
    }

    #[test]
    fn rejects_unknown_keys_and_versions() {
        assert!(PipelineConfig::from_toml("schema_version = 1\n[simulation]\nndrops = 3\n").is_err());
        let e = PipelineConfig::from_toml("schema_version = 2\n").unwrap_err();
        assert!(e.0.contains("schema_version"));
        assert!(PipelineConfig::from_toml("output_dir = \"x\"\n").is_err());
    }

    #[test]
    fn search_box_must_lie_inside_sampling_bounds() {
        let e = PipelineConfig::from_toml("schema_version = 1\n[optimize]\nd_y = [0.1, 0.9]\n").unwrap_err();
        assert!(e.0.contains("d_y") || e.0.contains("bounds"), "{e}");
    }

    #[test]
    fn bad_baseline_names_divisor() {
        let e = PipelineConfig::from_toml("schema_version = 1\n[validate]\nbaseline = { n_y = 5, d_y = 0.5, d_z = 0.5 }\n")
            .unwrap_err();
        assert!(e.0.contains("divisor"), "{e}");
    }
}
