//! Monte Carlo downlink SINR simulator.
//!
//! One serving base station sits at the origin, facing +x, and serves a
//! 120 degree sector of radius `cell_radius`. `n_interferers` co-channel
//! base stations sit on a ring of radius `2 * cell_radius`; each one
//! points its beam at a user of its own, drawn independently per drop.
//! Every base station uses the same array layout, which is the quantity
//! under study. Users have a single isotropic antenna.
//!
//! Each drop is generated from its own random substream keyed by
//! `(seed, drop_index)`, so drops may be evaluated in any order or in
//! parallel without changing the result.

pub mod channel;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::antenna::{total_gain_db, ArrayConfig, Direction};
use crate::error::{Error, Result};
use crate::rng;
use crate::stats;

pub use channel::{los_probability, pathloss_db, shadowing_sigma_db};

/// Thermal noise density in dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// Hz.
    pub carrier_frequency: f64,
    /// Hz.
    pub bandwidth: f64,
    /// dBm, identical for every base station.
    pub tx_power: f64,
    /// dB.
    pub noise_figure: f64,
    pub n_drops: usize,
    pub n_ues_per_drop: usize,
    /// m.
    pub cell_radius: f64,
    pub n_interferers: usize,
    pub seed: u64,
    /// m.
    pub bs_height: f64,
    /// m.
    pub ue_height: f64,
    /// Minimum 2-D user distance from its base station, m.
    pub min_ue_distance: f64,
    /// Angular width of each served sector, degrees.
    pub sector_width: f64,
    pub shadowing: bool,
    pub thermal_noise: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            carrier_frequency: 28e9,
            bandwidth: 400e6,
            tx_power: 40.0,
            noise_figure: 9.0,
            n_drops: 400,
            n_ues_per_drop: 10,
            cell_radius: 100.0,
            n_interferers: 6,
            seed: 1,
            bs_height: 10.0,
            ue_height: 1.5,
            min_ue_distance: 10.0,
            sector_width: 120.0,
            shadowing: true,
            thermal_noise: true,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n_drops == 0 || self.n_ues_per_drop == 0 {
            return bad("n_drops and n_ues_per_drop must be at least 1".into());
        }
        for (name, v) in [
            ("carrier_frequency", self.carrier_frequency),
            ("bandwidth", self.bandwidth),
            ("cell_radius", self.cell_radius),
            ("bs_height", self.bs_height),
            ("ue_height", self.ue_height),
            ("min_ue_distance", self.min_ue_distance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.min_ue_distance >= self.cell_radius {
            return bad("min_ue_distance must be smaller than cell_radius".into());
        }
        if !(self.sector_width > 0.0 && self.sector_width <= 360.0) {
            return bad(format!("sector_width must be in (0, 360], got {}", self.sector_width));
        }
        if !self.tx_power.is_finite() || !self.noise_figure.is_finite() {
            return bad("tx_power and noise_figure must be finite".into());
        }
        Ok(())
    }

    /// Noise power over the band, dBm. `None` when thermal noise is off.
    pub fn noise_dbm(&self) -> Option<f64> {
        self.thermal_noise
            .then(|| THERMAL_NOISE_DBM_HZ + 10.0 * self.bandwidth.log10() + self.noise_figure)
    }

    pub fn total_ues(&self) -> usize {
        self.n_drops * self.n_ues_per_drop
    }
}

/// Network-level SINR statistics, all in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    /// Mean over users of the per-user SINR in dB.
    pub sinr_mean: f64,
    pub sinr_p5: f64,
    pub sinr_p50: f64,
    pub sinr_p95: f64,
}

/// One of the four simulator outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SinrMean,
    SinrP5,
    SinrP50,
    SinrP95,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::SinrMean, Metric::SinrP5, Metric::SinrP50, Metric::SinrP95];

    pub fn name(self) -> &'static str {
        match self {
            Metric::SinrMean => "sinr_mean",
            Metric::SinrP5 => "sinr_p5",
            Metric::SinrP50 => "sinr_p50",
            Metric::SinrP95 => "sinr_p95",
        }
    }

    /// Column name in the dataset CSV.
    pub fn column(self) -> &'static str {
        match self {
            Metric::SinrMean => "sinr_mean_db",
            Metric::SinrP5 => "sinr_p5_db",
            Metric::SinrP50 => "sinr_p50_db",
            Metric::SinrP95 => "sinr_p95_db",
        }
    }

    pub fn parse(s: &str) -> Option<Metric> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s || m.column() == s)
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl MetricVector {
    /// Aggregates per-user SINR samples given in dB.
    pub fn from_samples_db(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("SINR samples"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(MetricVector {
            sinr_mean: stats::mean(samples),
            sinr_p5: stats::quantile_sorted(&sorted, 0.05),
            sinr_p50: stats::quantile_sorted(&sorted, 0.50),
            sinr_p95: stats::quantile_sorted(&sorted, 0.95),
        })
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::SinrMean => self.sinr_mean,
            Metric::SinrP5 => self.sinr_p5,
            Metric::SinrP50 => self.sinr_p50,
            Metric::SinrP95 => self.sinr_p95,
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.sinr_mean, self.sinr_p5, self.sinr_p50, self.sinr_p95]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        MetricVector {
            sinr_mean: a[0],
            sinr_p5: a[1],
            sinr_p50: a[2],
            sinr_p95: a[3],
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Per-link random state: LOS flag and a standard normal shadowing draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub los: bool,
    pub shadow: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    /// m, `[x, y, z]`.
    pub position: [f64; 3],
    /// Boresight azimuth, degrees.
    pub azimuth: f64,
    /// Point the beam is steered at.
    pub target: [f64; 3],
}

/// One Monte Carlo drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub serving: BaseStation,
    pub ues: Vec<[f64; 3]>,
    pub interferers: Vec<BaseStation>,
    /// `serving_links[u]`: serving BS to UE `u`.
    pub serving_links: Vec<Link>,
    /// `interferer_links[u][i]`: interferer `i` to UE `u`.
    pub interferer_links: Vec<Vec<Link>>,
}

fn sample_in_sector<R: Rng>(
    rng: &mut R,
    center: [f64; 2],
    azimuth_deg: f64,
    params: &SimParams,
) -> [f64; 3] {
    let (r0, r1) = (params.min_ue_distance, params.cell_radius);
    let r = (r0 * r0 + rng.gen::<f64>() * (r1 * r1 - r0 * r0)).sqrt();
    let half = params.sector_width / 2.0;
    let phi = (azimuth_deg + rng.gen_range(-half..=half)).to_radians();
    [center[0] + r * phi.cos(), center[1] + r * phi.sin(), params.ue_height]
}

fn draw_link<R: Rng>(rng: &mut R, from: [f64; 3], to: [f64; 3]) -> Link {
    let d2d = (to[0] - from[0]).hypot(to[1] - from[1]);
    let los = rng.gen::<f64>() < los_probability(d2d);
    let shadow = rng.sample(StandardNormal);
    Link { los, shadow }
}

/// Generates drop `drop_index`; a pure function of `(params, drop_index)`.
pub fn drop_scenario(params: &SimParams, drop_index: u64) -> Scenario {
    let mut rng = rng::substream(params.seed, &[0x5CE7_A210, drop_index]);
    let serving = BaseStation {
        position: [0.0, 0.0, params.bs_height],
        azimuth: 0.0,
        target: [0.0; 3],
    };
    let ues: Vec<[f64; 3]> = (0..params.n_ues_per_drop)
        .map(|_| sample_in_sector(&mut rng, [0.0, 0.0], 0.0, params))
        .collect();

    let ring = 2.0 * params.cell_radius;
    let interferers: Vec<BaseStation> = (0..params.n_interferers)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / params.n_interferers as f64;
            let center = [ring * a.cos(), ring * a.sin()];
            let target = sample_in_sector(&mut rng, center, 0.0, params);
            BaseStation {
                position: [center[0], center[1], params.bs_height],
                azimuth: 0.0,
                target,
            }
        })
        .collect();

    let serving_links = ues
        .iter()
        .map(|&u| draw_link(&mut rng, serving.position, u))
        .collect();
    let interferer_links = ues
        .iter()
        .map(|&u| {
            interferers
                .iter()
                .map(|bs| draw_link(&mut rng, bs.position, u))
                .collect()
        })
        .collect();

    Scenario {
        serving,
        ues,
        interferers,
        serving_links,
        interferer_links,
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn direction_from(bs: &BaseStation, point: [f64; 3]) -> Direction {
    let v = sub(point, bs.position);
    Direction::from_vector(v[0], v[1], v[2]).relative_to(bs.azimuth)
}

/// Received power in dBm at `ue` from `bs` whose beam is steered at `steer`.
fn received_dbm(
    bs: &BaseStation,
    steer: Direction,
    ue: [f64; 3],
    link: Link,
    config: &ArrayConfig,
    params: &SimParams,
) -> Result<f64> {
    let v = sub(ue, bs.position);
    let d2d = v[0].hypot(v[1]);
    let d3d = (d2d * d2d + v[2] * v[2]).sqrt();
    let mut loss = pathloss_db(d2d, d3d, params.carrier_frequency, ue[2], link.los)?;
    if params.shadowing {
        loss += shadowing_sigma_db(link.los) * link.shadow;
    }
    let gain = total_gain_db(config, steer, direction_from(bs, ue));
    Ok(params.tx_power - loss + gain)
}

/// Downlink SINR (dB) of every user in the scenario.
///
/// The serving beam is steered at each user in turn; each interferer keeps
/// its beam on its own target. Powers are summed in linear units.
pub fn compute_link_sinr(
    scenario: &Scenario,
    config: &ArrayConfig,
    params: &SimParams,
) -> Result<Vec<f64>> {
    let noise_mw = params.noise_dbm().map_or(0.0, db_to_linear);
    let interferer_steer: Vec<Direction> = scenario
        .interferers
        .iter()
        .map(|bs| direction_from(bs, bs.target))
        .collect();

    scenario
        .ues
        .iter()
        .enumerate()
        .map(|(u, &ue)| {
            let steer = direction_from(&scenario.serving, ue);
            let signal = received_dbm(
                &scenario.serving,
                steer,
                ue,
                scenario.serving_links[u],
                config,
                params,
            )?;
            let mut interference_mw = 0.0;
            for (i, bs) in scenario.interferers.iter().enumerate() {
                let p = received_dbm(
                    bs,
                    interferer_steer[i],
                    ue,
                    scenario.interferer_links[u][i],
                    config,
                    params,
                )?;
                interference_mw += db_to_linear(p);
            }
            Ok(signal - linear_to_db(interference_mw + noise_mw))
        })
        .collect()
}

fn simulation_error(config: &ArrayConfig, e: Error) -> Error {
    Error::Simulation {
        config: config.to_string(),
        message: e.to_string(),
    }
}

/// All per-user SINR samples of a run, in drop order.
pub fn simulate_samples(config: &ArrayConfig, params: &SimParams) -> Result<Vec<f64>> {
    params.validate()?;
    config.validate()?;
    let mut out = Vec::with_capacity(params.total_ues());
    for d in 0..params.n_drops as u64 {
        let sc = drop_scenario(params, d);
        out.extend(compute_link_sinr(&sc, config, params).map_err(|e| simulation_error(config, e))?);
    }
    Ok(out)
}

/// Runs the simulator: the ground-truth `config -> metrics` mapping.
pub fn simulate(config: &ArrayConfig, params: &SimParams) -> Result<MetricVector> {
    MetricVector::from_samples_db(&simulate_samples(config, params)?)
}

/// Same result as [`simulate`], with drops evaluated on the rayon pool.
pub fn simulate_parallel(config: &ArrayConfig, params: &SimParams) -> Result<MetricVector> {
    params.validate()?;
    config.validate()?;
    let per_drop: Vec<Vec<f64>> = (0..params.n_drops as u64)
        .into_par_iter()
        .map(|d| compute_link_sinr(&drop_scenario(params, d), config, params))
        .collect::<Result<_>>()
        .map_err(|e| simulation_error(config, e))?;
    MetricVector::from_samples_db(&per_drop.concat())
}
