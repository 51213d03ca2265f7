use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use emuopt_core::dataset::{self, build_dataset, sample_configs, Dataset};
use emuopt_core::emulators::{test_nrmse, EmulatorModel, ModelKind};
use emuopt_core::evaluation::{
    learning_curve, pairplot_export, slice_profile, write_curve_runs_csv, write_curves_csv, write_pairplot_csv,
    write_slice_csv, SliceParam,
};
use emuopt_core::optimizer::{
    brute_force_grid, dataset_argmax, evaluate, fitness, optimize, render_report, speedup_report, validate_candidate,
    EmulatorSet, GridResult, OptimizationResult, SpeedupReport, TimingReport,
};
use emuopt_core::{sim, ArrayConfig, Error, Metric, MetricVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, Layout, PipelineConfig};

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration: exit 2.
    Usage(String),
    /// Everything else: exit 1.
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.0)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// File layout under the run directory.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunDir { root: root.into() }
    }

    pub fn dataset(&self) -> PathBuf {
        self.root.join("dataset.csv")
    }

    pub fn models(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn model(&self, metric: Metric, kind: ModelKind) -> PathBuf {
        self.models().join(format!("{metric}__{kind}.json"))
    }

    pub fn selection(&self) -> PathBuf {
        self.models().join("selection.json")
    }

    pub fn curves(&self) -> PathBuf {
        self.root.join("curves")
    }

    pub fn optimization_json(&self) -> PathBuf {
        self.root.join("optimization_report.json")
    }

    pub fn optimization_txt(&self) -> PathBuf {
        self.root.join("optimization_report.txt")
    }

    pub fn timing(&self) -> PathBuf {
        self.root.join("timing.json")
    }

    pub fn comparison(&self) -> PathBuf {
        self.root.join("comparison_table.csv")
    }

    pub fn validation(&self) -> PathBuf {
        self.root.join("validation.json")
    }

    pub fn simulate(&self) -> PathBuf {
        self.root.join("simulate.json")
    }
}

fn require(path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Runtime(Error::MissingArtifact(path.to_path_buf())))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    require(path)?;
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn load_dataset(run: &RunDir) -> CliResult<Dataset> {
    let path = run.dataset();
    require(&path)?;
    Ok(Dataset::load_csv(&path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateOutput {
    pub config: ArrayConfig,
    pub metrics: MetricVector,
}

/// One simulator run; flags override the configured baseline layout.
pub fn simulate(cfg: &PipelineConfig, n_y: Option<usize>, d_y: Option<f64>, d_z: Option<f64>) -> CliResult<SimulateOutput> {
    let b = cfg.validate.baseline;
    let layout = Layout {
        n_y: n_y.unwrap_or(b.n_y),
        d_y: d_y.unwrap_or(b.d_y),
        d_z: d_z.unwrap_or(b.d_z),
    };
    let config = cfg.layout(layout)?;
    let start = Instant::now();
    let metrics = sim::simulate_parallel(&config, &cfg.simulation)?;
    log::info!("simulated {config} in {:.3} s", start.elapsed().as_secs_f64());
    let run = RunDir::new(&cfg.output_dir);
    fs::create_dir_all(&run.root)?;
    let out = SimulateOutput { config, metrics };
    write_json(&run.simulate(), &out)?;
    Ok(out)
}

pub fn dataset(cfg: &PipelineConfig) -> CliResult<Dataset> {
    let run = RunDir::new(&cfg.output_dir);
    fs::create_dir_all(&run.root)?;
    let configs = sample_configs(&cfg.sampling, cfg.simulation.carrier_frequency)?;
    log::info!(
        "simulating {} layouts ({} drops x {} users each)",
        configs.len(),
        cfg.simulation.n_drops,
        cfg.simulation.n_ues_per_drop
    );
    let start = Instant::now();
    let ds = build_dataset(&configs, &cfg.simulation)?;
    let per_call: f64 = ds.rows.iter().map(|r| r.sim_seconds).sum::<f64>() / ds.len() as f64;
    log::info!(
        "dataset built in {:.2} s wall-clock, {:.4} s per simulator call",
        start.elapsed().as_secs_f64(),
        per_call
    );
    ds.save_csv(run.dataset())?;
    log::info!("wrote {}", run.dataset().display());
    Ok(ds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub metric: Metric,
    pub model: ModelKind,
    pub n_train: usize,
    pub n_test: usize,
    pub test_nrmse: f64,
}

/// Fits every configured `(kind, metric)` pair on the training split.
pub fn train(cfg: &PipelineConfig) -> CliResult<Vec<TrainRecord>> {
    let run = RunDir::new(&cfg.output_dir);
    let ds = load_dataset(&run)?;
    let (tr, te) = dataset::split(&ds, &cfg.split)?;
    fs::create_dir_all(run.models())?;
    let jobs: Vec<(Metric, ModelKind)> = cfg
        .models
        .metrics
        .iter()
        .flat_map(|&m| cfg.models.kinds.iter().map(move |&k| (m, k)))
        .collect();
    log::info!("fitting {} models on {} rows, testing on {}", jobs.len(), tr.len(), te.len());
    let fitted: Vec<(EmulatorModel, f64)> = jobs
        .par_iter()
        .map(|&(m, k)| {
            let start = Instant::now();
            let model = EmulatorModel::fit(&cfg.models.spec(k, m), &tr)?;
            let score = test_nrmse(&model, &te)?;
            log::info!("{m} / {k}: test nRMSE {score:.4} ({:.2} s)", start.elapsed().as_secs_f64());
            Ok((model, score))
        })
        .collect::<emuopt_core::Result<_>>()?;

    let mut records = Vec::with_capacity(fitted.len());
    let mut selection: BTreeMap<Metric, (ModelKind, f64)> = BTreeMap::new();
    for (model, score) in &fitted {
        model.save(run.model(model.target(), model.kind()))?;
        records.push(TrainRecord {
            metric: model.target(),
            model: model.kind(),
            n_train: tr.len(),
            n_test: te.len(),
            test_nrmse: *score,
        });
        let e = selection.entry(model.target()).or_insert((model.kind(), *score));
        if *score < e.1 {
            *e = (model.kind(), *score);
        }
    }
    let mut w = csv::Writer::from_path(run.models().join("test_nrmse.csv")).map_err(csv_err)?;
    w.write_record(["metric", "model", "n_train", "n_test", "test_nrmse"]).map_err(csv_err)?;
    for r in &records {
        w.write_record([
            r.metric.to_string(),
            r.model.to_string(),
            r.n_train.to_string(),
            r.n_test.to_string(),
            r.test_nrmse.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    let selection: BTreeMap<Metric, ModelKind> = selection.into_iter().map(|(m, (k, _))| (m, k)).collect();
    write_json(&run.selection(), &selection)?;
    Ok(records)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Runtime(Error::InvalidParameter(format!("csv: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CurveMetadata {
    n_train_pool: usize,
    n_test: usize,
    sizes: Vec<usize>,
    n_runs: usize,
    seed: u64,
    level: f64,
    models: Vec<ModelKind>,
    metrics: Vec<Metric>,
    test_ids: Vec<u64>,
}

/// Learning curves for every `(kind, metric)`, plus scatter and slice exports.
pub fn curve(cfg: &PipelineConfig) -> CliResult<usize> {
    let run = RunDir::new(&cfg.output_dir);
    let ds = load_dataset(&run)?;
    let (tr, te) = dataset::split(&ds, &cfg.split)?;
    let dir = run.curves();
    fs::create_dir_all(&dir)?;
    let spec = cfg.curve.spec();
    let metrics = cfg.curve_metrics();
    let mut curves = Vec::new();
    for &m in &metrics {
        for &k in &cfg.models.kinds {
            let start = Instant::now();
            let c = learning_curve(&tr, &te, &cfg.models.spec(k, m), &spec)?;
            let last = c.points.last().expect("non-empty curve");
            log::info!(
                "{m} / {k}: nRMSE {:.4} at {} samples ({:.1} s)",
                last.mean,
                last.size,
                start.elapsed().as_secs_f64()
            );
            curves.push(c);
        }
    }
    write_curves_csv(&curves, dir.join("learning_curves.csv"))?;
    write_curve_runs_csv(&curves, dir.join("learning_curve_runs.csv"))?;
    write_json(
        &dir.join("metadata.json"),
        &CurveMetadata {
            n_train_pool: tr.len(),
            n_test: te.len(),
            sizes: spec.sizes.clone(),
            n_runs: spec.n_runs,
            seed: spec.seed,
            level: spec.level,
            models: cfg.models.kinds.clone(),
            metrics: metrics.clone(),
            test_ids: te.ids(),
        },
    )?;
    write_pairplot_csv(&pairplot_export(&ds), dir.join("pairplot.csv"))?;
    write_slices(cfg, &run, &ds)?;
    Ok(curves.iter().map(|c| c.points.len()).sum())
}

/// Emulator slices through the baseline layout, from the selected models.
fn write_slices(cfg: &PipelineConfig, run: &RunDir, ds: &Dataset) -> CliResult<()> {
    if !run.selection().exists() {
        log::info!("no trained models yet; skipping slice export");
        return Ok(());
    }
    let selection: BTreeMap<Metric, ModelKind> = read_json(&run.selection())?;
    let base = cfg.baseline()?;
    let b = cfg.sampling.bounds;
    let n = cfg.curve.slice_points;
    let grid: Vec<f64> = (0..n).map(|i| b.low + (b.high - b.low) * i as f64 / (n - 1) as f64).collect();
    for (metric, kind) in selection {
        let path = run.model(metric, kind);
        require(&path)?;
        let model = EmulatorModel::load(&path)?;
        for param in [SliceParam::Dy, SliceParam::Dz] {
            let profile = slice_profile(&model, &base, param, &grid, Some((ds, cfg.curve.slice_tolerance)))?;
            write_slice_csv(&profile, metric, run.curves().join(format!("slice_{metric}_{}.csv", param.name())))?;
        }
    }
    Ok(())
}

/// Models serving each metric of the objective.
fn load_emulators(cfg: &PipelineConfig, run: &RunDir) -> CliResult<(EmulatorSet, BTreeMap<Metric, ModelKind>)> {
    let needed = cfg.objective.metrics();
    let choice: BTreeMap<Metric, ModelKind> = match cfg.optimize.model.kind() {
        Some(k) => needed.iter().map(|&m| (m, k)).collect(),
        None => {
            let sel: BTreeMap<Metric, ModelKind> = read_json(&run.selection())?;
            needed
                .iter()
                .map(|&m| {
                    sel.get(&m)
                        .map(|&k| (m, k))
                        .ok_or_else(|| CliError::Runtime(Error::MissingModel(m.to_string())))
                })
                .collect::<CliResult<_>>()?
        }
    };
    let models = choice
        .iter()
        .map(|(&m, &k)| {
            let path = run.model(m, k);
            require(&path)?;
            Ok(EmulatorModel::load(&path)?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok((EmulatorSet::new(models)?, choice))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxRow {
    pub id: u64,
    pub config: ArrayConfig,
    pub simulated: MetricVector,
    pub emulator_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOutput {
    pub models: BTreeMap<Metric, ModelKind>,
    pub result: OptimizationResult,
    pub speedup: SpeedupReport,
    pub grid: Option<GridResult>,
    /// Best dataset row under the simulator; `None` when no row is feasible.
    pub dataset_argmax: Option<ArgmaxRow>,
}

pub fn optimize_cmd(cfg: &PipelineConfig) -> CliResult<OptimizeOutput> {
    let run = RunDir::new(&cfg.output_dir);
    require(&run.dataset())?;
    let (set, models) = load_emulators(cfg, &run)?;
    let ds = load_dataset(&run)?;
    let space = cfg.search_space();
    let spec = &cfg.objective;
    let start = Instant::now();
    let result = optimize(&set, spec, &space, &cfg.optimize.de, ds.len() as u64)?;
    log::info!(
        "differential evolution: {} evaluations in {:.3} s, best {}",
        result.emulator_evaluations,
        start.elapsed().as_secs_f64(),
        result.config
    );
    let grid = match cfg.optimize.grid_resolution {
        0 => None,
        res => Some(brute_force_grid(&set, spec, &space, res)?),
    };
    let dataset_argmax = match dataset_argmax(&ds, spec) {
        Ok(row) => Some(ArgmaxRow {
            id: row.id,
            config: row.config,
            simulated: row.metrics,
            emulator_fitness: fitness(&set, spec, &row.config),
        }),
        Err(e @ Error::NoFeasibleRow { .. }) => {
            log::warn!("{e}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let out = OptimizeOutput {
        models,
        speedup: speedup_report(&result),
        result,
        grid,
        dataset_argmax,
    };
    write_json(&run.optimization_json(), &out)?;
    fs::write(run.optimization_txt(), render_full_report(&out, cfg))?;

    let timing = measure_latency(&set, cfg, &ds);
    write_json(&run.timing(), &timing)?;
    log::info!(
        "simulator call {:.3e} s, emulator evaluation {:.3e} s, ratio {:.0}",
        timing.mean_simulator_call_seconds,
        timing.mean_emulator_evaluation_seconds,
        timing.latency_ratio
    );
    Ok(out)
}

/// Single-threaded emulator latency against the recorded dataset timings.
fn measure_latency(set: &EmulatorSet, cfg: &PipelineConfig, ds: &Dataset) -> TimingReport {
    let sim_total: f64 = ds.rows.iter().map(|r| r.sim_seconds).sum();
    if sim_total == 0.0 {
        log::warn!("dataset has no recorded simulator timings");
    }
    let n = cfg.optimize.timing_evaluations.max(1);
    let space = cfg.search_space();
    let divs = space.divisors();
    let points: Vec<[f64; 4]> = (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            let n_y = divs[i % divs.len()];
            [
                n_y as f64,
                (space.n_total / n_y) as f64,
                space.d_y[0] + t * (space.d_y[1] - space.d_y[0]),
                space.d_z[1] - t * (space.d_z[1] - space.d_z[0]),
            ]
        })
        .collect();
    let start = Instant::now();
    let mut sink = 0.0;
    for p in &points {
        sink += evaluate(set, &cfg.objective, p).fitness;
    }
    let emu_total = start.elapsed().as_secs_f64();
    std::hint::black_box(sink);
    TimingReport::new(sim_total, ds.len() as u64, emu_total, n as u64)
}

fn render_full_report(out: &OptimizeOutput, cfg: &PipelineConfig) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(s, "emulators:");
    for (m, k) in &out.models {
        let _ = writeln!(s, "  {m}: {k}");
    }
    let _ = writeln!(s);
    s.push_str(&render_report(&out.result, &cfg.objective));
    if let Some(g) = &out.grid {
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "grid search ({} evaluations): {} fitness = {:.6}, feasible = {}",
            g.evaluations, g.config, g.fitness, g.feasible
        );
    }
    let _ = writeln!(s);
    match &out.dataset_argmax {
        Some(a) => {
            let _ = writeln!(
                s,
                "dataset argmax: row {} {} simulated mean {:.3} / p5 {:.3} dB, emulator fitness = {:.6}",
                a.id, a.config, a.simulated.sinr_mean, a.simulated.sinr_p5, a.emulator_fitness
            );
        }
        None => {
            let _ = writeln!(s, "dataset argmax: no feasible row");
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub config: ArrayConfig,
    pub simulated: MetricVector,
    pub constraints_satisfied: bool,
    pub emulator_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateOutput {
    pub rows: Vec<ComparisonRow>,
    /// Validated objective of the emulator optimum minus the baseline, dB.
    pub improvement_over_baseline_db: f64,
}

/// Re-simulates the baseline, the dataset argmax and the emulator optimum
/// with a fresh seed.
pub fn validate(cfg: &PipelineConfig) -> CliResult<ValidateOutput> {
    let run = RunDir::new(&cfg.output_dir);
    let opt: OptimizeOutput = read_json(&run.optimization_json())?;
    let (set, _) = load_emulators(cfg, &run)?;
    let spec = &cfg.objective;
    let mut candidates = vec![("baseline", cfg.baseline()?)];
    match &opt.dataset_argmax {
        Some(a) => candidates.push(("dataset-argmax", a.config)),
        None => log::warn!("no feasible dataset row; comparison table omits the dataset-argmax row"),
    }
    candidates.push(("emulator-optimum", opt.result.config));
    let rows = candidates
        .into_iter()
        .map(|(label, config)| {
            let simulated = validate_candidate(&config, &cfg.simulation)?;
            log::info!(
                "{label}: {config} mean {:.3} dB, p5 {:.3} dB",
                simulated.sinr_mean,
                simulated.sinr_p5
            );
            Ok(ComparisonRow {
                label: label.to_string(),
                config,
                constraints_satisfied: spec.constraints.iter().all(|c| c.satisfied_db(simulated.get(c.metric))),
                emulator_fitness: fitness(&set, spec, &config),
                simulated,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let obj = |r: &ComparisonRow| r.simulated.get(spec.objective);
    let out = ValidateOutput {
        improvement_over_baseline_db: obj(rows.last().expect("optimum row")) - obj(&rows[0]),
        rows,
    };

    let mut w = csv::Writer::from_path(run.comparison()).map_err(csv_err)?;
    let mut header = vec!["label", "n_y", "n_z", "d_y", "d_z"];
    header.extend(Metric::ALL.iter().map(|m| m.column()));
    header.extend(["constraints_satisfied", "emulator_fitness"]);
    w.write_record(&header).map_err(csv_err)?;
    for r in &out.rows {
        let c = &r.config;
        let mut rec = vec![r.label.clone(), c.n_y.to_string(), c.n_z.to_string(), c.d_y.to_string(), c.d_z.to_string()];
        rec.extend(Metric::ALL.iter().map(|&m| r.simulated.get(m).to_string()));
        rec.extend([r.constraints_satisfied.to_string(), r.emulator_fitness.to_string()]);
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    write_json(&run.validation(), &out)?;
    Ok(out)
}
