//! Simulated training data: sampling the layout space, running the
//! simulator over the samples, CSV persistence and train/test splits.
//!
//! The CSV file carries exactly the eight schema columns. Everything else
//! (simulator settings, per-row seeds and ids, timings) lives in a JSON
//! sidecar next to it, `<file>.meta.json`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::antenna::{divisors, ArrayConfig, DEFAULT_TOTAL_ELEMENTS};
use crate::error::{Error, Result};
use crate::rng;
use crate::sim::{self, Metric, MetricVector, SimParams};

pub const SIMULATOR_VERSION: &str = concat!("emuopt-sim/", env!("CARGO_PKG_VERSION"));

/// Dataset CSV header, in order.
pub const CSV_COLUMNS: [&str; 8] = [
    "n_y",
    "n_z",
    "d_y_wavelengths",
    "d_z_wavelengths",
    "sinr_mean_db",
    "sinr_p5_db",
    "sinr_p50_db",
    "sinr_p95_db",
];

/// Names of the four input features, matching the CSV columns.
pub const FEATURE_NAMES: [&str; 4] = ["n_y", "n_z", "d_y_wavelengths", "d_z_wavelengths"];

/// Closed interval of element spacings, in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacingBounds {
    pub low: f64,
    pub high: f64,
}

impl Default for SpacingBounds {
    fn default() -> Self {
        SpacingBounds {
            low: 0.2,
            high: 1.0,
        }
    }
}

impl SpacingBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.low > 0.0 && self.high > self.low && self.high.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "spacing bounds must satisfy 0 < low < high, got [{}, {}]",
                self.low, self.high
            )));
        }
        Ok(())
    }

    pub fn contains(&self, d: f64) -> bool {
        d >= self.low && d <= self.high
    }
}

/// How the layout space is sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSpec {
    pub count: usize,
    pub bounds: SpacingBounds,
    pub seed: u64,
    /// Cycle through the divisors instead of drawing them independently.
    pub stratified: bool,
    pub n_total: usize,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec {
            count: 1000,
            bounds: SpacingBounds::default(),
            seed: 7,
            stratified: false,
            n_total: DEFAULT_TOTAL_ELEMENTS,
        }
    }
}

/// Draws `spec.count` layouts: `n_y` uniform over the divisors of
/// `n_total`, spacings independently uniform within the bounds.
pub fn sample_configs(spec: &SamplingSpec, carrier_hz: f64) -> Result<Vec<ArrayConfig>> {
    if spec.count == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    spec.bounds.validate()?;
    let divs = divisors(spec.n_total);
    let mut rng = rng::substream(spec.seed, &[0x005A_3F1E]);
    let b = spec.bounds;
    let mut stratum: Vec<usize> = Vec::new();
    (0..spec.count)
        .map(|i| {
            let n_y = if spec.stratified {
                // shuffled blocks of all divisors
                if i % divs.len() == 0 {
                    stratum = divs.clone();
                    stratum.shuffle(&mut rng);
                }
                stratum[i % divs.len()]
            } else {
                divs[rng.gen_range(0..divs.len())]
            };
            let d_y = rng.gen_range(b.low..=b.high);
            let d_z = rng.gen_range(b.low..=b.high);
            ArrayConfig::with_total(n_y, spec.n_total, d_y, d_z, carrier_hz)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Row id, stable across splits and subsets.
    pub id: u64,
    /// Simulator seed used for this row.
    pub seed: u64,
    pub config: ArrayConfig,
    pub metrics: MetricVector,
    /// Wall-clock of the simulator call, seconds.
    pub sim_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub simulator_version: String,
    pub sim_params: SimParams,
    /// Base seed the per-row seeds were derived from.
    pub creation_seed: u64,
    /// Element count shared by every row.
    pub n_total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Sidecar {
    meta: DatasetMeta,
    ids: Vec<u64>,
    seeds: Vec<u64>,
}

/// Wall-clock per row; kept out of the metadata sidecar so that the CSV
/// and its metadata are reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Timings {
    sim_seconds: Vec<f64>,
}

/// Paired `(ArrayConfig, MetricVector)` samples plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<Sample>,
    pub meta: DatasetMeta,
}

/// Simulator seed for row `index` of a dataset created from `base`.
pub fn row_seed(base: u64, index: u64) -> u64 {
    rng::derive_seed(base, &[0xDA7A, index])
}

/// Runs the simulator once per configuration. Rows keep the input order.
pub fn build_dataset(configs: &[ArrayConfig], params: &SimParams) -> Result<Dataset> {
    if configs.is_empty() {
        return Err(Error::EmptyInput("configurations"));
    }
    params.validate()?;
    let n_total = configs[0].n_total;
    if let Some(c) = configs.iter().find(|c| c.n_total != n_total) {
        return Err(Error::InvalidConfig(format!(
            "mixed element counts in one dataset ({} and {n_total})",
            c.n_total
        )));
    }
    let rows = configs
        .par_iter()
        .enumerate()
        .map(|(i, cfg)| {
            let seed = row_seed(params.seed, i as u64);
            let p = SimParams {
                seed,
                ..params.clone()
            };
            let start = Instant::now();
            let metrics = sim::simulate(cfg, &p).map_err(|e| match e {
                e @ Error::Simulation { .. } => e,
                other => Error::Simulation {
                    config: cfg.to_string(),
                    message: other.to_string(),
                },
            })?;
            Ok(Sample {
                id: i as u64,
                seed,
                config: *cfg,
                metrics,
                sim_seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        rows,
        meta: DatasetMeta {
            simulator_version: SIMULATOR_VERSION.to_string(),
            sim_params: params.clone(),
            creation_seed: params.seed,
            n_total,
        },
    })
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// `<csv>.meta.json`: simulator settings, row ids and seeds.
pub fn sidecar_path(path: &Path) -> PathBuf {
    with_suffix(path, ".meta.json")
}

/// `<csv>.timing.json`: per-row simulator wall-clock.
pub fn timing_path(path: &Path) -> PathBuf {
    with_suffix(path, ".timing.json")
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `n x 4` matrix of `(n_y, n_z, d_y, d_z)`.
    pub fn features(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), 4, |i, j| self.rows[i].config.features()[j])
    }

    /// `n x 4` matrix of the metrics in [`Metric::ALL`] order, dB.
    pub fn targets(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), 4, |i, j| self.rows[i].metrics.to_array()[j])
    }

    pub fn metric_column(&self, metric: Metric) -> Vec<f64> {
        self.rows.iter().map(|r| r.metrics.get(metric)).collect()
    }

    pub fn ids(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.id).collect()
    }

    /// Total simulator wall-clock spent on the first `k` rows, for every `k`.
    pub fn cumulative_sim_seconds(&self) -> Vec<f64> {
        self.rows
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r.sim_seconds;
                Some(*acc)
            })
            .collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            meta: self.meta.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (i, r) in self.rows.iter().enumerate() {
            r.config.validate().map_err(|e| Error::Validation {
                path: PathBuf::new(),
                row: i + 1,
                message: e.to_string(),
            })?;
            let key = (r.config.features().map(f64::to_bits), r.seed);
            if !seen.insert(key) {
                return Err(Error::Validation {
                    path: PathBuf::new(),
                    row: i + 1,
                    message: "duplicated (config, seed) row".into(),
                });
            }
        }
        Ok(())
    }

    /// Writes the CSV plus its `.meta.json` and `.timing.json` sidecars.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
        w.write_record(CSV_COLUMNS).map_err(csv_io)?;
        for r in &self.rows {
            let c = &r.config;
            let m = r.metrics.to_array();
            w.write_record([
                c.n_y.to_string(),
                c.n_z.to_string(),
                c.d_y.to_string(),
                c.d_z.to_string(),
                m[0].to_string(),
                m[1].to_string(),
                m[2].to_string(),
                m[3].to_string(),
            ])
            .map_err(csv_io)?;
        }
        w.flush()?;
        let sidecar = Sidecar {
            meta: self.meta.clone(),
            ids: self.ids(),
            seeds: self.rows.iter().map(|r| r.seed).collect(),
        };
        fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)? + "\n")?;
        let timings = Timings {
            sim_seconds: self.rows.iter().map(|r| r.sim_seconds).collect(),
        };
        fs::write(timing_path(path), serde_json::to_string(&timings)? + "\n")?;
        Ok(())
    }

    /// Reads a dataset CSV. Without a sidecar, the default simulator
    /// settings are assumed and rows are numbered from 0.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let sidecar: Option<Sidecar> = match fs::read_to_string(sidecar_path(path)) {
            Ok(s) => Some(serde_json::from_str(&s)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(e.into()),
        };
        let timings: Option<Timings> = match fs::read_to_string(timing_path(path)) {
            Ok(s) => Some(serde_json::from_str(&s)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(e.into()),
        };
        let meta = sidecar.as_ref().map_or_else(
            || DatasetMeta {
                simulator_version: SIMULATOR_VERSION.to_string(),
                sim_params: SimParams::default(),
                creation_seed: SimParams::default().seed,
                n_total: DEFAULT_TOTAL_ELEMENTS,
            },
            |s| s.meta.clone(),
        );
        let carrier = meta.sim_params.carrier_frequency;

        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(csv_io)?;
        let header = rdr.headers().map_err(csv_io)?.clone();
        if header.iter().map(str::trim).ne(CSV_COLUMNS) {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: 1,
                message: format!("expected header {:?}", CSV_COLUMNS.join(",")),
            });
        }

        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse {
                path: path.to_owned(),
                line: e.position().map_or(i + 2, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = rec.position().map_or(i + 2, |p| p.line() as usize);
            let field = |k: usize| -> Result<f64> {
                let raw = rec.get(k).unwrap_or("").trim();
                raw.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_owned(),
                    line,
                    message: format!("column {}: not a number: {raw:?}", CSV_COLUMNS[k]),
                })
            };
            let count = |k: usize| -> Result<usize> {
                let raw = rec.get(k).unwrap_or("").trim();
                raw.parse::<usize>().map_err(|_| Error::Parse {
                    path: path.to_owned(),
                    line,
                    message: format!("column {}: not a count: {raw:?}", CSV_COLUMNS[k]),
                })
            };
            if rec.len() != CSV_COLUMNS.len() {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    line,
                    message: format!("expected {} fields, found {}", CSV_COLUMNS.len(), rec.len()),
                });
            }
            let (n_y, n_z) = (count(0)?, count(1)?);
            let (d_y, d_z) = (field(2)?, field(3)?);
            let metrics = MetricVector::from_array([field(4)?, field(5)?, field(6)?, field(7)?]);
            let n_total = meta.n_total;
            if n_y * n_z != n_total {
                return Err(Error::Validation {
                    path: path.to_owned(),
                    row: i + 1,
                    message: format!("n_y * n_z = {n_y} * {n_z} = {} != {n_total}", n_y * n_z),
                });
            }
            let config =
                ArrayConfig::with_total(n_y, n_total, d_y, d_z, carrier).map_err(|e| {
                    Error::Validation {
                        path: path.to_owned(),
                        row: i + 1,
                        message: e.to_string(),
                    }
                })?;
            let (id, seed) = match &sidecar {
                Some(s) => (
                    *s.ids.get(i).ok_or_else(|| sidecar_mismatch(path))?,
                    *s.seeds.get(i).ok_or_else(|| sidecar_mismatch(path))?,
                ),
                None => (i as u64, row_seed(meta.creation_seed, i as u64)),
            };
            let secs = timings.as_ref().and_then(|t| t.sim_seconds.get(i).copied()).unwrap_or(0.0);
            rows.push(Sample {
                id,
                seed,
                config,
                metrics,
                sim_seconds: secs,
            });
        }
        if let Some(s) = &sidecar {
            if s.ids.len() != rows.len() {
                return Err(sidecar_mismatch(path));
            }
        }
        Ok(Dataset { rows, meta })
    }
}

fn sidecar_mismatch(path: &Path) -> Error {
    Error::Parse {
        path: sidecar_path(path),
        line: 1,
        message: "sidecar row count does not match the CSV".into(),
    }
}

pub(crate) fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidParameter(format!("csv: {other:?}")),
    }
}

/// Size of the held-out test set and the seed choosing it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub test_size: usize,
    pub split_seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_size: 300,
            split_seed: 11,
        }
    }
}

/// Partitions `ds` into `(train, test)`; each keeps the original row order.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    if spec.test_size == 0 || spec.test_size >= ds.len() {
        return Err(Error::InvalidParameter(format!(
            "test_size must be in 1..{}, got {}",
            ds.len(),
            spec.test_size
        )));
    }
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.shuffle(&mut rng::substream(spec.split_seed, &[0x5917]));
    let (test, train) = idx.split_at_mut(spec.test_size);
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset(train), ds.subset(test)))
}

/// Per-feature affine map to zero mean and unit (population) variance,
/// learned on training rows.
///
/// `n_z` is a deterministic function of `n_y` and both are kept as
/// features; they are not linearly dependent, but downstream linear
/// solves must still tolerate near-collinear columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &DMatrix<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::EmptyInput("training features"));
        }
        let n = x.nrows() as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut std = Vec::with_capacity(x.ncols());
        for (j, col) in x.column_iter().enumerate() {
            let m = col.sum() / n;
            let v = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
            if !(v.sqrt() > 1e-12 * m.abs().max(1.0)) {
                return Err(Error::ZeroVariance { index: j });
            }
            mean.push(m);
            std.push(v.sqrt());
        }
        Ok(Standardizer { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check(x)?;
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            (x[(i, j)] - self.mean[j]) / self.std[j]
        }))
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn inverse(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check(z)?;
        Ok(DMatrix::from_fn(z.nrows(), z.ncols(), |i, j| {
            z[(i, j)] * self.std[j] + self.mean[j]
        }))
    }

    fn check(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.ncols(),
            });
        }
        Ok(())
    }
}
