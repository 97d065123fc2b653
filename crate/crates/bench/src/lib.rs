//! Shared fixtures for the criterion benches.

use doalab_core::scenario::{simulate, trial_rng};
use doalab_core::subspace::sample_covariance;
use doalab_core::{ComplexMatrix, ScenarioConfig};

/// Sample covariance of one seeded scenario with `antennas` elements and `targets` paths.
pub fn covariance(antennas: usize, targets: usize) -> ComplexMatrix {
    let cfg = ScenarioConfig {
        antennas,
        targets,
        subcarriers: 64,
        symbols: 2,
        snr_db: 30.0,
        ..Default::default()
    };
    let obs = simulate(&cfg, &mut trial_rng(7, 0)).expect("bench scenario");
    sample_covariance(&obs.y)
}
