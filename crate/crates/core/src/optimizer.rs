//! Constrained search over array layouts using the emulators.
//!
//! `n_y` is enumerated over the divisors of the element count; for each value
//! a differential-evolution search runs over `(d_y, d_z)`. Constraints enter
//! as a static quadratic penalty in linear SINR units:
//!
//! `fitness = objective - w * sum(max(0, violation)^2)`

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::antenna::{divisors, ArrayConfig};
use crate::dataset::{Dataset, Sample, SpacingBounds};
use crate::emulators::EmulatorModel;
use crate::error::{Error, Result};
use crate::rng;
use crate::sim::{self, db_to_linear, linear_to_db, Metric, MetricVector, SimParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = ">")]
    Greater,
    #[serde(rename = "<")]
    Less,
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparator::Greater => ">",
            Comparator::Less => "<",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraint {
    pub metric: Metric,
    pub comparator: Comparator,
    pub threshold_db: f64,
}

impl Constraint {
    /// Signed distance to the threshold in dB, positive when satisfied.
    pub fn margin_db(&self, value_db: f64) -> f64 {
        match self.comparator {
            Comparator::Greater => value_db - self.threshold_db,
            Comparator::Less => self.threshold_db - value_db,
        }
    }

    pub fn satisfied_db(&self, value_db: f64) -> bool {
        self.margin_db(value_db) > 0.0
    }

    /// Linear-unit shortfall, zero when satisfied.
    pub fn violation_linear(&self, value_lin: f64) -> f64 {
        let t = db_to_linear(self.threshold_db);
        match self.comparator {
            Comparator::Greater => (t - value_lin).max(0.0),
            Comparator::Less => (value_lin - t).max(0.0),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} dB", self.metric, self.comparator, self.threshold_db)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveSpec {
    /// Metric to maximize.
    pub objective: Metric,
    pub constraints: Vec<Constraint>,
    pub penalty_weight: f64,
}

impl Default for ObjectiveSpec {
    fn default() -> Self {
        ObjectiveSpec {
            objective: Metric::SinrMean,
            constraints: vec![Constraint {
                metric: Metric::SinrP5,
                comparator: Comparator::Greater,
                threshold_db: 6.0,
            }],
            penalty_weight: 1e3,
        }
    }
}

impl ObjectiveSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.penalty_weight > 0.0 && self.penalty_weight.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "penalty weight must be positive, got {}",
                self.penalty_weight
            )));
        }
        if let Some(c) = self.constraints.iter().find(|c| !c.threshold_db.is_finite()) {
            return Err(Error::InvalidParameter(format!("constraint threshold must be finite: {c}")));
        }
        Ok(())
    }

    /// Every metric the objective and constraints read.
    pub fn metrics(&self) -> Vec<Metric> {
        let mut m = vec![self.objective];
        for c in &self.constraints {
            if !m.contains(&c.metric) {
                m.push(c.metric);
            }
        }
        m
    }
}

/// Anything that maps an array layout to linear-unit metric predictions.
pub trait Surrogate: Sync {
    fn supports(&self, metric: Metric) -> bool;

    /// Linear-unit prediction from the feature vector `(n_y, n_z, d_y, d_z)`.
    fn predict_linear(&self, metric: Metric, features: &[f64; 4]) -> f64;
}

/// One fitted emulator per metric.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmulatorSet {
    pub models: BTreeMap<Metric, EmulatorModel>,
}

impl EmulatorSet {
    pub fn new(models: impl IntoIterator<Item = EmulatorModel>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for m in models {
            if m.dim() != 4 {
                return Err(Error::DimensionMismatch { expected: 4, got: m.dim() });
            }
            map.insert(m.target(), m);
        }
        Ok(EmulatorSet { models: map })
    }

    pub fn get(&self, metric: Metric) -> Option<&EmulatorModel> {
        self.models.get(&metric)
    }
}

impl Surrogate for EmulatorSet {
    fn supports(&self, metric: Metric) -> bool {
        self.models.contains_key(&metric)
    }

    fn predict_linear(&self, metric: Metric, features: &[f64; 4]) -> f64 {
        self.models[&metric]
            .predict_linear_row(features)
            .expect("dimension checked on construction")
    }
}

fn check_supported(s: &dyn Surrogate, spec: &ObjectiveSpec) -> Result<()> {
    match spec.metrics().into_iter().find(|m| !s.supports(*m)) {
        Some(m) => Err(Error::MissingModel(m.to_string())),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpace {
    pub n_total: usize,
    pub d_y: [f64; 2],
    pub d_z: [f64; 2],
}

impl Default for SearchSpace {
    fn default() -> Self {
        let b = SpacingBounds::default();
        SearchSpace {
            n_total: crate::antenna::DEFAULT_TOTAL_ELEMENTS,
            d_y: [b.low, b.high],
            d_z: [b.low, b.high],
        }
    }
}

impl SearchSpace {
    /// The box spanned by the dataset sampling bounds.
    pub fn from_bounds(n_total: usize, bounds: &SpacingBounds) -> Self {
        SearchSpace {
            n_total,
            d_y: [bounds.low, bounds.high],
            d_z: [bounds.low, bounds.high],
        }
    }

    pub fn divisors(&self) -> Vec<usize> {
        divisors(self.n_total)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_total == 0 {
            return Err(Error::InvalidParameter("n_total must be >= 1".into()));
        }
        for (name, b) in [("d_y", self.d_y), ("d_z", self.d_z)] {
            if !(b[0] > 0.0 && b[1] >= b[0] && b[1].is_finite()) {
                return Err(Error::InvalidParameter(format!("invalid {name} search box {b:?}")));
            }
        }
        Ok(())
    }

    /// Rejects boxes reaching outside the training support.
    pub fn check_within(&self, bounds: &SpacingBounds) -> Result<()> {
        for (name, b) in [("d_y", self.d_y), ("d_z", self.d_z)] {
            if b[0] < bounds.low || b[1] > bounds.high {
                return Err(Error::InvalidParameter(format!(
                    "{name} search box {b:?} leaves the sampled range [{}, {}]",
                    bounds.low, bounds.high
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, c: &ArrayConfig) -> bool {
        c.n_total == self.n_total
            && self.n_total.is_multiple_of(c.n_y)
            && (self.d_y[0]..=self.d_y[1]).contains(&c.d_y)
            && (self.d_z[0]..=self.d_z[1]).contains(&c.d_z)
    }

    fn config(&self, n_y: usize, d_y: f64, d_z: f64) -> ArrayConfig {
        let mut c = ArrayConfig::new(1, 0.5, 0.5).expect("static config");
        c.n_total = self.n_total;
        c.n_y = n_y;
        c.n_z = self.n_total / n_y;
        c.d_y = d_y;
        c.d_z = d_z;
        c
    }
}

/// Emulator outputs at one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub objective_linear: f64,
    pub fitness: f64,
    pub feasible: bool,
    /// Linear-unit prediction per metric read by the spec.
    pub predicted_linear: BTreeMap<Metric, f64>,
}

pub fn evaluate(s: &dyn Surrogate, spec: &ObjectiveSpec, features: &[f64; 4]) -> Evaluation {
    let predicted_linear: BTreeMap<Metric, f64> =
        spec.metrics().into_iter().map(|m| (m, s.predict_linear(m, features))).collect();
    let objective_linear = predicted_linear[&spec.objective];
    let mut penalty = 0.0;
    let mut feasible = true;
    for c in &spec.constraints {
        let v = predicted_linear[&c.metric];
        penalty += c.violation_linear(v).powi(2);
        let db = linear_to_db(v.max(crate::emulators::MIN_LINEAR_PREDICTION));
        feasible &= v > 0.0 && c.satisfied_db(db);
    }
    Evaluation {
        objective_linear,
        fitness: objective_linear - spec.penalty_weight * penalty,
        feasible,
        predicted_linear,
    }
}

/// Penalized fitness of a configuration.
pub fn fitness(s: &dyn Surrogate, spec: &ObjectiveSpec, c: &ArrayConfig) -> f64 {
    evaluate(s, spec, &c.features()).fitness
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeParams {
    pub population: usize,
    pub generations: usize,
    pub f: f64,
    pub cr: f64,
    pub seed: u64,
}

impl Default for DeParams {
    fn default() -> Self {
        DeParams {
            population: 30,
            generations: 200,
            f: 0.7,
            cr: 0.9,
            seed: 13,
        }
    }
}

impl DeParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::InvalidParameter("differential evolution needs a population of at least 4".into()));
        }
        if !(self.f > 0.0 && self.f <= 2.0) || !(0.0..=1.0).contains(&self.cr) {
            return Err(Error::InvalidParameter(format!("invalid DE weights F = {}, CR = {}", self.f, self.cr)));
        }
        Ok(())
    }

    /// Candidate evaluations one divisor search performs.
    pub fn evaluations_per_search(&self) -> u64 {
        (self.population * (self.generations + 1)) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisorOutcome {
    pub n_y: usize,
    pub d_y: f64,
    pub d_z: f64,
    pub fitness: f64,
    pub feasible: bool,
    pub evaluations: u64,
}

/// rand/1/bin differential evolution over the `(d_y, d_z)` box for one `n_y`.
fn de_search(s: &dyn Surrogate, spec: &ObjectiveSpec, space: &SearchSpace, n_y: usize, de: &DeParams) -> DivisorOutcome {
    let lo = [space.d_y[0], space.d_z[0]];
    let hi = [space.d_y[1], space.d_z[1]];
    let n_z = (space.n_total / n_y) as f64;
    let mut evaluations = 0u64;
    // best feasible point ever evaluated; the quadratic penalty lets the
    // population settle marginally outside the feasible set
    let mut best_feasible: Option<([f64; 2], f64)> = None;
    let mut eval = |p: &[f64; 2]| {
        evaluations += 1;
        let e = evaluate(s, spec, &[n_y as f64, n_z, p[0], p[1]]);
        if e.feasible && best_feasible.is_none_or(|(_, f)| e.fitness > f) {
            best_feasible = Some((*p, e.fitness));
        }
        e
    };
    let mut r = rng::substream(de.seed, &[0xDE, n_y as u64]);
    let mut pop: Vec<[f64; 2]> = (0..de.population)
        .map(|_| std::array::from_fn(|k| if hi[k] > lo[k] { r.gen_range(lo[k]..=hi[k]) } else { lo[k] }))
        .collect();
    let mut scores: Vec<Evaluation> = pop.iter().map(&mut eval).collect();
    let np = de.population;
    for _ in 0..de.generations {
        for i in 0..np {
            let pick = |r: &mut rand_chacha::ChaCha8Rng, taken: &[usize]| loop {
                let c = r.gen_range(0..np);
                if !taken.contains(&c) {
                    break c;
                }
            };
            let a = pick(&mut r, &[i]);
            let b = pick(&mut r, &[i, a]);
            let c = pick(&mut r, &[i, a, b]);
            let forced = r.gen_range(0..2);
            let mut trial = pop[i];
            for k in 0..2 {
                if k == forced || r.gen::<f64>() < de.cr {
                    trial[k] = (pop[a][k] + de.f * (pop[b][k] - pop[c][k])).clamp(lo[k], hi[k]);
                }
            }
            let e = eval(&trial);
            if e.fitness >= scores[i].fitness {
                pop[i] = trial;
                scores[i] = e;
            }
        }
    }
    let (point, fitness, feasible) = match best_feasible {
        Some((p, f)) => (p, f, true),
        None => {
            let best = (0..np)
                .max_by(|&a, &b| scores[a].fitness.total_cmp(&scores[b].fitness).then(b.cmp(&a)))
                .expect("non-empty population");
            (pop[best], scores[best].fitness, false)
        }
    };
    DivisorOutcome {
        n_y,
        d_y: point[0],
        d_z: point[1],
        fitness,
        feasible,
        evaluations,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub config: ArrayConfig,
    pub fitness: f64,
    pub feasible: bool,
    /// Emulator predictions in dB for every metric read by the objective.
    pub predicted_db: BTreeMap<Metric, f64>,
    /// Per-constraint margin in dB (negative when violated).
    pub constraint_margins_db: Vec<f64>,
    /// Filled in by [`validate_candidate`].
    pub validated: Option<MetricVector>,
    pub per_divisor: Vec<DivisorOutcome>,
    pub emulator_evaluations: u64,
    /// Simulator calls spent on the dataset the emulators were fitted on.
    pub dataset_simulator_calls: u64,
}

impl OptimizationResult {
    pub fn speedup_factor(&self) -> f64 {
        if self.dataset_simulator_calls == 0 {
            return 0.0;
        }
        self.emulator_evaluations as f64 / self.dataset_simulator_calls as f64
    }
}

fn pick_best(outcomes: &[DivisorOutcome]) -> &DivisorOutcome {
    // prefer feasible, then fitness, then smaller n_y
    outcomes
        .iter()
        .max_by(|a, b| {
            a.feasible
                .cmp(&b.feasible)
                .then(a.fitness.total_cmp(&b.fitness))
                .then(b.n_y.cmp(&a.n_y))
        })
        .expect("at least one divisor")
}

fn finish(
    s: &dyn Surrogate,
    spec: &ObjectiveSpec,
    space: &SearchSpace,
    per_divisor: Vec<DivisorOutcome>,
    dataset_simulator_calls: u64,
) -> OptimizationResult {
    let best = pick_best(&per_divisor).clone();
    let config = space.config(best.n_y, best.d_y, best.d_z);
    let e = evaluate(s, spec, &config.features());
    let to_db = |v: f64| linear_to_db(v.max(crate::emulators::MIN_LINEAR_PREDICTION));
    let predicted_db: BTreeMap<Metric, f64> = e.predicted_linear.iter().map(|(m, v)| (*m, to_db(*v))).collect();
    let constraint_margins_db = spec.constraints.iter().map(|c| c.margin_db(predicted_db[&c.metric])).collect();
    if !e.feasible {
        log::warn!("no feasible configuration found; returning the best penalized candidate");
    }
    OptimizationResult {
        config,
        fitness: e.fitness,
        feasible: e.feasible,
        predicted_db,
        constraint_margins_db,
        validated: None,
        emulator_evaluations: per_divisor.iter().map(|d| d.evaluations).sum(),
        per_divisor,
        dataset_simulator_calls,
    }
}

/// Differential evolution per divisor of `n_total`, searches run in parallel.
pub fn optimize(
    s: &dyn Surrogate,
    spec: &ObjectiveSpec,
    space: &SearchSpace,
    de: &DeParams,
    dataset_simulator_calls: u64,
) -> Result<OptimizationResult> {
    spec.validate()?;
    space.validate()?;
    de.validate()?;
    check_supported(s, spec)?;
    let per_divisor: Vec<DivisorOutcome> = space
        .divisors()
        .par_iter()
        .map(|&n_y| de_search(s, spec, space, n_y, de))
        .collect();
    Ok(finish(s, spec, space, per_divisor, dataset_simulator_calls))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub config: ArrayConfig,
    pub fitness: f64,
    pub feasible: bool,
    pub evaluations: u64,
}

/// Exhaustive search over divisors times a uniform `resolution^2` grid.
pub fn brute_force_grid(s: &dyn Surrogate, spec: &ObjectiveSpec, space: &SearchSpace, resolution: usize) -> Result<GridResult> {
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!("grid resolution must be >= 2, got {resolution}")));
    }
    spec.validate()?;
    space.validate()?;
    check_supported(s, spec)?;
    let axis = |b: [f64; 2]| -> Vec<f64> {
        (0..resolution)
            .map(|k| b[0] + (b[1] - b[0]) * k as f64 / (resolution - 1) as f64)
            .collect()
    };
    let (ys, zs) = (axis(space.d_y), axis(space.d_z));
    let per_divisor: Vec<DivisorOutcome> = space
        .divisors()
        .par_iter()
        .map(|&n_y| {
            let n_z = (space.n_total / n_y) as f64;
            let mut best: Option<DivisorOutcome> = None;
            for &d_y in &ys {
                for &d_z in &zs {
                    let e = evaluate(s, spec, &[n_y as f64, n_z, d_y, d_z]);
                    let better = best.as_ref().is_none_or(|b| (e.feasible, e.fitness) > (b.feasible, b.fitness));
                    if better {
                        best = Some(DivisorOutcome { n_y, d_y, d_z, fitness: e.fitness, feasible: e.feasible, evaluations: 0 });
                    }
                }
            }
            DivisorOutcome { evaluations: (ys.len() * zs.len()) as u64, ..best.expect("non-empty grid") }
        })
        .collect();
    let best = pick_best(&per_divisor);
    Ok(GridResult {
        config: space.config(best.n_y, best.d_y, best.d_z),
        fitness: best.fitness,
        feasible: best.feasible,
        evaluations: per_divisor.iter().map(|d| d.evaluations).sum(),
    })
}

/// Best simulated row satisfying every constraint. Ties go to the smaller
/// `d_y + d_z`, then to the lexicographically smaller `(n_y, d_y, d_z)`.
pub fn dataset_argmax<'a>(ds: &'a Dataset, spec: &ObjectiveSpec) -> Result<&'a Sample> {
    if ds.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    let feasible = |r: &Sample| spec.constraints.iter().all(|c| c.satisfied_db(r.metrics.get(c.metric)));
    let key = |r: &Sample| {
        let c = &r.config;
        (r.metrics.get(spec.objective), -(c.d_y + c.d_z), -(c.n_y as f64), -c.d_y, -c.d_z)
    };
    let cmp = |a: &&Sample, b: &&Sample| {
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(ka.2.total_cmp(&kb.2))
            .then(ka.3.total_cmp(&kb.3))
            .then(ka.4.total_cmp(&kb.4))
    };
    if let Some(best) = ds.rows.iter().filter(|r| feasible(r)).max_by(cmp) {
        return Ok(best);
    }
    // report the binding constraint of the least-violating row
    let (metric, margin) = ds
        .rows
        .iter()
        .map(|r| {
            spec.constraints
                .iter()
                .map(|c| (c.metric, c.margin_db(r.metrics.get(c.metric))))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("infeasible rows imply constraints")
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty dataset");
    Err(Error::NoFeasibleRow {
        metric: metric.to_string(),
        best_margin_db: margin,
    })
}

/// Seed for validation runs; derived so it never coincides with a dataset
/// row seed drawn from the same base.
pub fn validation_seed(base: u64) -> u64 {
    rng::derive_seed(base, &[0x7A11_DA7E])
}

/// One fresh simulator run of `config` at [`validation_seed`].
pub fn validate_candidate(config: &ArrayConfig, params: &SimParams) -> Result<MetricVector> {
    let p = SimParams {
        seed: validation_seed(params.seed),
        ..params.clone()
    };
    sim::simulate_parallel(config, &p).map_err(|e| Error::Simulation {
        config: config.to_string(),
        message: e.to_string(),
    })
}

/// Evaluation-count ledger; deterministic for a fixed configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupReport {
    pub emulator_evaluations: u64,
    pub simulator_calls: u64,
    /// `emulator_evaluations / simulator_calls`.
    pub factor: f64,
}

pub fn speedup_report(result: &OptimizationResult) -> SpeedupReport {
    if result.emulator_evaluations == 0 {
        log::warn!("optimizer performed no emulator evaluations; speedup factor is 0");
    }
    SpeedupReport {
        emulator_evaluations: result.emulator_evaluations,
        simulator_calls: result.dataset_simulator_calls,
        factor: result.speedup_factor(),
    }
}

/// Wall-clock comparison; kept apart from the deterministic report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub mean_simulator_call_seconds: f64,
    pub mean_emulator_evaluation_seconds: f64,
    /// Simulator call time over emulator evaluation time.
    pub latency_ratio: f64,
}

impl TimingReport {
    pub fn new(simulator_seconds_total: f64, simulator_calls: u64, emulator_seconds_total: f64, emulator_evaluations: u64) -> Self {
        let sim = simulator_seconds_total / simulator_calls.max(1) as f64;
        let emu = emulator_seconds_total / emulator_evaluations.max(1) as f64;
        TimingReport {
            mean_simulator_call_seconds: sim,
            mean_emulator_evaluation_seconds: emu,
            latency_ratio: if emu > 0.0 { sim / emu } else { f64::INFINITY },
        }
    }
}

/// Human-readable report.
pub fn render_report(result: &OptimizationResult, spec: &ObjectiveSpec) -> String {
    let mut s = String::new();
    let c = &result.config;
    let _ = writeln!(s, "objective: maximize {}", spec.objective);
    for k in &spec.constraints {
        let _ = writeln!(s, "constraint: {k}");
    }
    let _ = writeln!(s, "penalty weight: {}", spec.penalty_weight);
    let _ = writeln!(s);
    let _ = writeln!(s, "best configuration: {c}");
    let _ = writeln!(s, "  n_y = {}, n_z = {}, d_y = {:.6}, d_z = {:.6}", c.n_y, c.n_z, c.d_y, c.d_z);
    let _ = writeln!(s, "feasible: {}", result.feasible);
    let _ = writeln!(s, "penalized fitness (linear): {:.6}", result.fitness);
    for (m, v) in &result.predicted_db {
        let _ = writeln!(s, "predicted {m}: {v:.3} dB");
    }
    for (k, margin) in spec.constraints.iter().zip(&result.constraint_margins_db) {
        let _ = writeln!(s, "margin on {k}: {margin:.3} dB");
    }
    if let Some(v) = &result.validated {
        let _ = writeln!(
            s,
            "validated: mean {:.3} / p5 {:.3} / p50 {:.3} / p95 {:.3} dB",
            v.sinr_mean, v.sinr_p5, v.sinr_p50, v.sinr_p95
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "per divisor:");
    for d in &result.per_divisor {
        let _ = writeln!(
            s,
            "  n_y = {:>2}: d_y = {:.4}, d_z = {:.4}, fitness = {:.4}, feasible = {}, evaluations = {}",
            d.n_y, d.d_y, d.d_z, d.fitness, d.feasible, d.evaluations
        );
    }
    let sp = speedup_report(result);
    let _ = writeln!(s);
    let _ = writeln!(s, "emulator evaluations: {}", sp.emulator_evaluations);
    let _ = writeln!(s, "dataset simulator calls: {}", sp.simulator_calls);
    let _ = writeln!(s, "speedup factor (evaluations / simulator calls): {:.3}", sp.factor);
    s
}
