//! Shared fixtures for the benchmarks.

use emuopt_core::dataset::{build_dataset, sample_configs, Dataset, SamplingSpec};
use emuopt_core::SimParams;

/// Simulator settings cheap enough to build fixtures inside a benchmark.
pub fn quick_params() -> SimParams {
    SimParams {
        n_drops: 20,
        ..SimParams::default()
    }
}

/// `n` simulated rows from the quick simulator.
pub fn fixture_dataset(n: usize) -> Dataset {
    let spec = SamplingSpec {
        count: n,
        ..SamplingSpec::default()
    };
    let params = quick_params();
    let configs = sample_configs(&spec, params.carrier_frequency).expect("valid sampling spec");
    build_dataset(&configs, &params).expect("simulation")
}
