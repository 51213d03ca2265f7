//! Learning curves, slice profiles and scatter-matrix exports.

use std::path::Path;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::antenna::ArrayConfig;
use crate::dataset::{csv_io, Dataset, CSV_COLUMNS, FEATURE_NAMES};
use crate::emulators::{test_nrmse, EmulatorModel, ModelKind, ModelSpec};
use crate::error::{Error, Result};
use crate::rng;
use crate::sim::Metric;
use crate::stats;

pub const DEFAULT_SIZES: [usize; 8] = [25, 50, 100, 150, 200, 300, 500, 700];

/// Student-t interval `mean +- t_{n-1, (1+level)/2} s / sqrt(n)`.
pub fn confidence_interval(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "confidence interval needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("confidence level must be in (0, 1), got {level}")));
    }
    let n = samples.len() as f64;
    let t = StudentsT::new(0.0, 1.0, n - 1.0)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .inverse_cdf(0.5 + 0.5 * level);
    Ok((stats::mean(samples), t * stats::std_dev(samples) / n.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveSpec {
    pub sizes: Vec<usize>,
    pub n_runs: usize,
    pub seed: u64,
    pub level: f64,
}

impl Default for CurveSpec {
    fn default() -> Self {
        CurveSpec {
            sizes: DEFAULT_SIZES.to_vec(),
            n_runs: 10,
            seed: 5,
            level: 0.95,
        }
    }
}

impl CurveSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "learning-curve sizes must be non-empty and strictly increasing, got {:?}",
                self.sizes
            )));
        }
        if self.sizes[0] == 0 || self.n_runs == 0 {
            return Err(Error::InvalidParameter("learning-curve sizes and run count must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub size: usize,
    /// nRMSE of each run, in run order.
    pub runs: Vec<f64>,
    pub mean: f64,
    pub ci_half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub spec: ModelSpec,
    pub points: Vec<CurvePoint>,
    pub seed: u64,
    pub level: f64,
    /// Ids of the fixed test rows.
    pub test_ids: Vec<u64>,
}

impl LearningCurve {
    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }

    pub fn target(&self) -> Metric {
        self.spec.target
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.size).collect()
    }

    pub fn mean_at(&self, size: usize) -> Option<f64> {
        self.points.iter().find(|p| p.size == size).map(|p| p.mean)
    }

    /// Smallest size whose mean nRMSE is at or below `threshold`.
    pub fn sample_budget(&self, threshold: f64) -> Option<usize> {
        self.points.iter().find(|p| p.mean <= threshold).map(|p| p.size)
    }
}

/// Training rows used by run `run` at `size`: a fresh draw without
/// replacement from the pool, keyed by `(seed, size, run)`.
pub fn subset_indices(pool: usize, size: usize, seed: u64, run: usize) -> Vec<usize> {
    let mut r = rng::substream(seed, &[0xC0_4E, size as u64, run as u64]);
    let mut idx = index::sample(&mut r, pool, size).into_vec();
    idx.sort_unstable();
    idx
}

/// nRMSE on the fixed `test` set for every `(size, run)` cell.
pub fn learning_curve(train: &Dataset, test: &Dataset, spec: &ModelSpec, curve: &CurveSpec) -> Result<LearningCurve> {
    curve.validate()?;
    let largest = *curve.sizes.last().expect("validated non-empty");
    if largest > train.len() {
        return Err(Error::InvalidParameter(format!(
            "learning-curve size {largest} exceeds the training pool of {} rows",
            train.len()
        )));
    }
    if test.is_empty() {
        return Err(Error::EmptyInput("learning-curve test set"));
    }
    if curve.n_runs < 2 {
        log::warn!("learning curve with a single run: confidence intervals reported as 0");
    }
    let cells: Vec<(usize, usize)> = curve
        .sizes
        .iter()
        .flat_map(|&s| (0..curve.n_runs).map(move |r| (s, r)))
        .collect();
    let scores: Vec<f64> = cells
        .par_iter()
        .map(|&(size, run)| {
            let sub = train.subset(&subset_indices(train.len(), size, curve.seed, run));
            let model = EmulatorModel::fit(spec, &sub)?;
            test_nrmse(&model, test)
        })
        .collect::<Result<_>>()?;
    let points = scores
        .chunks(curve.n_runs)
        .zip(&curve.sizes)
        .map(|(runs, &size)| {
            let (mean, ci_half_width) = if runs.len() >= 2 {
                confidence_interval(runs, curve.level)?
            } else {
                (runs[0], 0.0)
            };
            Ok(CurvePoint {
                size,
                runs: runs.to_vec(),
                mean,
                ci_half_width,
            })
        })
        .collect::<Result<_>>()?;
    Ok(LearningCurve {
        spec: spec.clone(),
        points,
        seed: curve.seed,
        level: curve.level,
        test_ids: test.ids(),
    })
}

/// One row per `(model, metric, size)`.
pub fn write_curves_csv(curves: &[LearningCurve], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(["model", "metric", "size", "n_runs", "mean_nrmse", "ci_half_width"])
        .map_err(csv_io)?;
    for c in curves {
        for p in &c.points {
            w.write_record([
                c.kind().to_string(),
                c.target().to_string(),
                p.size.to_string(),
                p.runs.len().to_string(),
                p.mean.to_string(),
                p.ci_half_width.to_string(),
            ])
            .map_err(csv_io)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per `(model, metric, size, run)`.
pub fn write_curve_runs_csv(curves: &[LearningCurve], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(["model", "metric", "size", "run", "nrmse"]).map_err(csv_io)?;
    for c in curves {
        for p in &c.points {
            for (run, v) in p.runs.iter().enumerate() {
                w.write_record([
                    c.kind().to_string(),
                    c.target().to_string(),
                    p.size.to_string(),
                    run.to_string(),
                    v.to_string(),
                ])
                .map_err(csv_io)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SliceParam {
    #[serde(rename = "d_y")]
    Dy,
    #[serde(rename = "d_z")]
    Dz,
}

impl SliceParam {
    pub fn parse(s: &str) -> Result<SliceParam> {
        match s {
            "d_y" => Ok(SliceParam::Dy),
            "d_z" => Ok(SliceParam::Dz),
            other => Err(Error::InvalidParameter(format!(
                "unknown slice parameter {other:?} (expected d_y or d_z)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SliceParam::Dy => "d_y",
            SliceParam::Dz => "d_z",
        }
    }

    fn set(self, base: &ArrayConfig, v: f64) -> ArrayConfig {
        let mut c = *base;
        match self {
            SliceParam::Dy => c.d_y = v,
            SliceParam::Dz => c.d_z = v,
        }
        c
    }

    fn get(self, c: &ArrayConfig) -> f64 {
        match self {
            SliceParam::Dy => c.d_y,
            SliceParam::Dz => c.d_z,
        }
    }

    fn other(self) -> SliceParam {
        match self {
            SliceParam::Dy => SliceParam::Dz,
            SliceParam::Dz => SliceParam::Dy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceProfile {
    pub param: SliceParam,
    pub base: ArrayConfig,
    /// `(value, predicted dB)` along the grid.
    pub predictions: Vec<(f64, f64)>,
    /// `(value, simulated dB)` of dataset rows on the slice.
    pub samples: Vec<(f64, f64)>,
}

/// Emulator predictions along one spacing with everything else fixed at
/// `base`. Dataset rows with the same `n_y` and the fixed spacing within
/// `tolerance` of `base` are returned alongside for comparison.
pub fn slice_profile(
    model: &EmulatorModel,
    base: &ArrayConfig,
    param: SliceParam,
    grid: &[f64],
    data: Option<(&Dataset, f64)>,
) -> Result<SliceProfile> {
    let predictions = grid
        .iter()
        .map(|&v| {
            let c = param.set(base, v);
            c.validate()?;
            Ok((v, model.predict_config(&c)?))
        })
        .collect::<Result<_>>()?;
    let mut samples: Vec<(f64, f64)> = data
        .map(|(ds, tol)| {
            let fixed = param.other();
            ds.rows
                .iter()
                .filter(|r| r.config.n_y == base.n_y && (fixed.get(&r.config) - fixed.get(base)).abs() <= tol)
                .map(|r| (param.get(&r.config), r.metrics.get(model.target())))
                .collect()
        })
        .unwrap_or_default();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(SliceProfile {
        param,
        base: *base,
        predictions,
        samples,
    })
}

pub fn write_slice_csv(profile: &SliceProfile, metric: Metric, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(["source", profile.param.name(), metric.column()]).map_err(csv_io)?;
    for (src, rows) in [("emulator", &profile.predictions), ("simulator", &profile.samples)] {
        for (v, y) in rows {
            w.write_record([src.to_string(), v.to_string(), y.to_string()]).map_err(csv_io)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub sample_id: u64,
    pub input: &'static str,
    pub input_value: f64,
    pub output: &'static str,
    pub output_value: f64,
}

/// Long-format `(input, output)` pairs for scatter-matrix plotting.
pub fn pairplot_export(ds: &Dataset) -> Vec<PairRow> {
    let mut out = Vec::with_capacity(ds.len() * 16);
    for r in &ds.rows {
        let x = r.config.features();
        for (i, input) in FEATURE_NAMES.iter().enumerate() {
            for (k, output) in CSV_COLUMNS[4..].iter().enumerate() {
                out.push(PairRow {
                    sample_id: r.id,
                    input,
                    input_value: x[i],
                    output,
                    output_value: r.metrics.get(Metric::ALL[k]),
                });
            }
        }
    }
    out
}

pub fn write_pairplot_csv(rows: &[PairRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(["sample_id", "input", "input_value", "output", "output_value"])
        .map_err(csv_io)?;
    for r in rows {
        w.write_record([
            r.sample_id.to_string(),
            r.input.to_string(),
            r.input_value.to_string(),
            r.output.to_string(),
            r.output_value.to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatasetMeta, Sample};
    use crate::emulators::Hyperparameters;
    use crate::sim::{MetricVector, SimParams};
    use rand::Rng;
    use std::collections::HashMap;

    #[test]
    fn ci_hand_values() {
        assert_eq!(confidence_interval(&[3.0, 3.0, 3.0], 0.95).unwrap(), (3.0, 0.0));
        let (m, h) = confidence_interval(&[1.0, 2.0, 3.0], 0.95).unwrap();
        assert_eq!(m, 2.0);
        // t_{2, 0.975} = 4.302653 (tables), s = 1
        assert!((h - 4.302_652_729_911_275 / 3f64.sqrt()).abs() < 1e-9, "{h}");
        let (_, h99) = confidence_interval(&[1.0, 2.0, 3.0], 0.99).unwrap();
        assert!(h99 > h);
        assert!(confidence_interval(&[1.0], 0.95).is_err());
    }

    /// Dataset whose metrics are a smooth function of the spacings.
    fn synthetic_ds(n: usize, seed: u64) -> Dataset {
        let mut r = rng::substream(seed, &[]);
        let divs = crate::antenna::divisors(64);
        let rows = (0..n)
            .map(|i| {
                let n_y = divs[r.gen_range(0..divs.len())];
                let config = ArrayConfig::new(n_y, r.gen_range(0.2..1.0), r.gen_range(0.2..1.0)).unwrap();
                let base = 15.0 + 4.0 * config.d_z - 3.0 * (config.d_y - 0.5).powi(2) + (n_y as f64).ln();
                let noise = 0.1 * r.gen_range(-1.0..1.0);
                Sample {
                    id: i as u64,
                    seed: i as u64,
                    config,
                    metrics: MetricVector::from_array([base + noise, base - 10.0, base, base + 10.0]),
                    sim_seconds: 0.0,
                }
            })
            .collect();
        Dataset {
            rows,
            meta: DatasetMeta {
                simulator_version: "test".into(),
                sim_params: SimParams::default(),
                creation_seed: seed,
                n_total: 64,
            },
        }
    }

    fn spec(kind: ModelKind) -> ModelSpec {
        let mut s = ModelSpec::new(kind, Metric::SinrMean);
        if let Hyperparameters::RandomForest(p) = &mut s.hyper {
            p.n_trees = 20;
        }
        s
    }

    #[test]
    fn curve_is_deterministic_and_shaped() {
        let train = synthetic_ds(120, 1);
        let test = synthetic_ds(40, 2);
        let cs = CurveSpec { sizes: vec![20, 60, 120], n_runs: 3, ..CurveSpec::default() };
        let c = learning_curve(&train, &test, &spec(ModelKind::Svr), &cs).unwrap();
        assert_eq!(c.sizes(), vec![20, 60, 120]);
        assert!(c.points.iter().all(|p| p.runs.len() == 3 && p.ci_half_width >= 0.0));
        assert_eq!(c.test_ids, test.ids());
        assert_eq!(c, learning_curve(&train, &test, &spec(ModelKind::Svr), &cs).unwrap());
        assert!(c.mean_at(120).unwrap() <= c.mean_at(20).unwrap());
    }

    #[test]
    fn single_run_has_zero_width() {
        let train = synthetic_ds(50, 3);
        let test = synthetic_ds(10, 4);
        let cs = CurveSpec { sizes: vec![30], n_runs: 1, ..CurveSpec::default() };
        let c = learning_curve(&train, &test, &spec(ModelKind::Linear), &cs).unwrap();
        assert_eq!(c.points[0].ci_half_width, 0.0);
    }

    #[test]
    fn curve_rejects_oversized_and_unsorted() {
        let train = synthetic_ds(30, 5);
        let test = synthetic_ds(10, 6);
        let s = spec(ModelKind::Linear);
        let big = CurveSpec { sizes: vec![10, 31], ..CurveSpec::default() };
        assert!(learning_curve(&train, &test, &s, &big).is_err());
        let unsorted = CurveSpec { sizes: vec![20, 10], ..CurveSpec::default() };
        assert!(learning_curve(&train, &test, &s, &unsorted).is_err());
    }

    #[test]
    fn subsets_are_keyed_and_distinct() {
        let a = subset_indices(700, 100, 1, 0);
        assert_eq!(a, subset_indices(700, 100, 1, 0));
        assert_ne!(a, subset_indices(700, 100, 1, 1));
        let mut d = a.clone();
        d.dedup();
        assert_eq!(d.len(), 100);
        assert_eq!(subset_indices(50, 50, 9, 3), (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn sample_budget_picks_first_size_below_threshold() {
        let mk = |size, mean| CurvePoint { size, runs: vec![], mean, ci_half_width: 0.0 };
        let c = LearningCurve {
            spec: spec(ModelKind::Linear),
            points: vec![mk(25, 0.2), mk(100, 0.07), mk(300, 0.05), mk(700, 0.04)],
            seed: 0,
            level: 0.95,
            test_ids: vec![],
        };
        assert_eq!(c.sample_budget(0.06), Some(300));
        assert_eq!(c.sample_budget(0.01), None);
    }

    #[test]
    fn slice_profile_properties() {
        let ds = synthetic_ds(80, 7);
        let m = EmulatorModel::fit(&spec(ModelKind::Linear), &ds).unwrap();
        let base = ArrayConfig::new(8, 0.5, 0.5).unwrap();
        let one = slice_profile(&m, &base, SliceParam::Dz, &[0.7], None).unwrap();
        let direct = m.predict_config(&ArrayConfig::new(8, 0.5, 0.7).unwrap()).unwrap();
        assert_eq!(one.predictions, vec![(0.7, direct)]);
        let grid: Vec<f64> = (0..9).map(|i| 0.2 + 0.1 * i as f64).collect();
        let p = slice_profile(&m, &base, SliceParam::Dz, &grid, Some((&ds, 0.1))).unwrap();
        let xs: Vec<f64> = p.predictions.iter().map(|q| q.0).collect();
        assert_eq!(xs, grid);
        assert!(p.samples.iter().all(|s| (0.2..=1.0).contains(&s.0)));
        assert!(SliceParam::parse("n_y").is_err());
    }

    #[test]
    fn pairplot_is_lossless() {
        let ds = synthetic_ds(3, 8);
        let rows = pairplot_export(&ds.subset(&[0]));
        assert_eq!(rows.len(), 16);
        let all = pairplot_export(&ds);
        assert_eq!(all.len(), 48);
        let mut inputs: HashMap<(u64, &str), f64> = HashMap::new();
        let mut outputs: HashMap<(u64, &str), f64> = HashMap::new();
        for r in &all {
            assert!(CSV_COLUMNS.contains(&r.input) && CSV_COLUMNS.contains(&r.output));
            inputs.insert((r.sample_id, r.input), r.input_value);
            outputs.insert((r.sample_id, r.output), r.output_value);
        }
        for s in &ds.rows {
            for (i, name) in FEATURE_NAMES.iter().enumerate() {
                assert_eq!(inputs[&(s.id, *name)], s.config.features()[i]);
            }
            for (k, m) in Metric::ALL.iter().enumerate() {
                assert_eq!(outputs[&(s.id, CSV_COLUMNS[4 + k])], s.metrics.get(*m));
            }
        }
    }
}
