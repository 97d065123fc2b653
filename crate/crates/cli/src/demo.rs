//! A single trial, printed for humans.

use std::fmt::Write as _;

use doalab_core::{Method, ScenarioConfig};

use crate::config::{SweepParameter, SweepSpec};
use crate::error::CliError;
use crate::sweep::{run_sweep, RunOptions};

pub fn demo_report(base: ScenarioConfig, seed: u64) -> Result<String, CliError> {
    let spec = SweepSpec {
        parameter: SweepParameter::SnrDb,
        values: vec![base.snr_db],
        trials: 1,
        methods: Method::ALL.to_vec(),
        order: Default::default(),
        order_overrides: Default::default(),
        evaluator: Default::default(),
        base,
    };
    let out = run_sweep(&spec, &RunOptions { seed: Some(seed), serial: true, ..Default::default() })?;
    let trial = &out.trials[0];
    if let Some(e) = &trial.error {
        return Err(CliError::Config(e.clone()));
    }
    let cfg = &spec.base;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "K={} M={} Q={} D={} SNR={} dB N={} seed={seed}",
        cfg.targets, cfg.antennas, cfg.subcarriers, cfg.symbols, cfg.snr_db, cfg.grid_points
    );
    let mut truth = trial.truth.clone();
    truth.sort_by(f64::total_cmp);
    let _ = writeln!(s, "true u:        {}", join(&truth));
    let _ = writeln!(
        s,
        "rank AIC K^ = {}, T = {:.3}, S = {:.3}\n",
        trial.k_rank, trial.steering_diagonality, trial.signal_diagonality
    );
    let _ = writeln!(s, "{:<14} {:>6} {:>9}  estimates", "method", "J", "time ms");
    for o in &trial.outcomes {
        match &o.error {
            Some(e) => {
                let _ = writeln!(s, "{:<14} failed: {e}", o.method.id());
            }
            None => {
                let mut est = o.estimates.clone();
                est.sort_by(f64::total_cmp);
                let _ = writeln!(s, "{:<14} {:>6.3} {:>9.3}  {}", o.method.id(), o.youden_j, o.time_ms, join(&est));
            }
        }
    }
    Ok(s)
}

fn join(us: &[f64]) -> String {
    us.iter().map(|u| format!("{u:+.4}")).collect::<Vec<_>>().join(" ")
}
