//! Monte Carlo sweep: one shared observation per trial, every method on it.

use std::time::Instant;

use doalab_core::estimator::{estimate, estimate_hybrid};
use doalab_core::eval::{associate, detection_metrics, diagnostics, hit_halfwidth, rmse_common_hits};
use doalab_core::fastgrid::pairwise_sum;
use doalab_core::linalg::hermitian_evd;
use doalab_core::order::{aic_rank, PenalizedResidual};
use doalab_core::scenario::{simulate, trial_rng};
use doalab_core::subspace::sample_covariance;
use doalab_core::{DoaGrid, Evaluator, Method, MethodOptions, OrderCriterion, ScenarioConfig};
use rayon::prelude::*;

use crate::config::SweepSpec;
use crate::error::CliError;
use crate::report::ResultRow;

/// Worker-count override.
pub const THREADS_ENV: &str = "DOALAB_THREADS";
/// A sweep point with more failed estimates than this fraction is flagged.
pub const FAILURE_WARN_FRACTION: f64 = 0.05;
/// Fraction of timings dropped from each end before averaging.
pub const TIME_TRIM_FRACTION: f64 = 0.05;

/// Command-line overrides of a [`SweepSpec`].
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub evaluator: Option<Evaluator>,
    pub serial: bool,
    pub evd_per_iter: bool,
    /// Worker count; `None` reads [`THREADS_ENV`], then uses all cores.
    pub threads: Option<usize>,
}

/// What one method produced on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub method: Method,
    pub criterion: OrderCriterion,
    pub k_hat: usize,
    /// Estimated angles in the method's output order.
    pub estimates: Vec<f64>,
    pub youden_j: f64,
    pub hit_rate: f64,
    pub fa_rate: f64,
    /// RMSE over targets hit by every successful method in this trial.
    pub rmse: Option<f64>,
    pub time_ms: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub value_index: usize,
    pub trial: usize,
    pub truth: Vec<f64>,
    pub k_rank: usize,
    pub steering_diagonality: f64,
    pub signal_diagonality: f64,
    /// Same order as the spec's method list.
    pub outcomes: Vec<MethodOutcome>,
    /// Set when the scenario itself could not be drawn.
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub trials: Vec<TrialRecord>,
}

/// Runs the whole sweep. Metric columns depend only on the spec and seed.
pub fn run_sweep(spec: &SweepSpec, options: &RunOptions) -> Result<SweepOutput, CliError> {
    spec.validate()?;
    let seed = options.seed.unwrap_or(spec.base.seed);
    let trials = options.trials.unwrap_or(spec.trials);
    if trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    let evaluator = options.evaluator.unwrap_or(spec.evaluator);
    let method_options = MethodOptions {
        evd_per_iter: options.evd_per_iter,
    };

    let points: Vec<(ScenarioConfig, DoaGrid)> = spec
        .values
        .iter()
        .map(|&v| {
            let cfg = spec.parameter.apply(&spec.base, v)?;
            let grid = grid_for(&cfg)?;
            Ok((cfg, grid))
        })
        .collect::<Result<_, CliError>>()?;
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|v| (0..trials).map(move |t| (v, t)))
        .collect();

    let run_one = |&(v, t): &(usize, usize)| {
        let (cfg, grid) = &points[v];
        run_trial(spec, cfg, grid, seed, v, t, evaluator, method_options)
    };
    let threads = worker_count(options)?;
    let records: Vec<TrialRecord> = if threads == 1 {
        jobs.iter().map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run_one).collect())
    };

    let mut rows = Vec::new();
    for (v, &value) in spec.values.iter().enumerate() {
        let at_point: Vec<&TrialRecord> = records.iter().filter(|r| r.value_index == v).collect();
        for (i, &method) in spec.methods.iter().enumerate() {
            rows.push(aggregate(spec, method, i, value, &at_point, evaluator, seed, trials));
        }
    }
    crate::report::sort_rows(&mut rows);
    Ok(SweepOutput { rows, trials: records })
}

fn worker_count(options: &RunOptions) -> Result<usize, CliError> {
    if options.serial {
        return Ok(1);
    }
    if let Some(n) = options.threads {
        return Ok(n.max(1));
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n >= 1)
            .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got '{s}'"))),
        Err(_) => Ok(rayon::current_num_threads()),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    spec: &SweepSpec,
    cfg: &ScenarioConfig,
    grid: &DoaGrid,
    seed: u64,
    value_index: usize,
    trial: usize,
    evaluator: Evaluator,
    options: MethodOptions,
) -> TrialRecord {
    let mut record = TrialRecord {
        value_index,
        trial,
        truth: Vec::new(),
        k_rank: 0,
        steering_diagonality: f64::NAN,
        signal_diagonality: f64::NAN,
        outcomes: Vec::new(),
        error: None,
    };
    let mut rng = trial_rng(seed, trial as u64);
    let prepared = simulate(cfg, &mut rng).and_then(|obs| {
        let r = sample_covariance(&obs.y);
        let evd = hermitian_evd(&r)?;
        let base = aic_rank(&evd.eigenvalues, cfg.snapshots())?;
        let diag = diagnostics(&obs.truth, &obs.coeffs, cfg.antennas, cfg.element_phase_factor)?;
        Ok((obs, r, base, diag))
    });
    let (obs, r, base, diag) = match prepared {
        Ok(p) => p,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    record.truth = obs.truth.doas.clone();
    record.k_rank = base.k_hat;
    record.steering_diagonality = diag.steering;
    record.signal_diagonality = diag.signal;

    let halfwidth = hit_halfwidth(cfg.antennas);
    let mut assocs = Vec::with_capacity(spec.methods.len());
    for &method in &spec.methods {
        let criterion = spec.criterion_for(method);
        let start = Instant::now();
        let result = match criterion {
            OrderCriterion::RankAic => {
                estimate(method, &r, base.k_hat, grid, evaluator, options).map(|est| (base.k_hat, est))
            }
            OrderCriterion::Hybrid => {
                estimate_hybrid(method, &r, &base, cfg.snapshots(), grid, evaluator, &PenalizedResidual)
                    .map(|out| (out.estimate.k_hat, out.angles))
            }
        };
        let time_ms = start.elapsed().as_secs_f64() * 1e3;
        let mut outcome = MethodOutcome {
            method,
            criterion,
            k_hat: 0,
            estimates: Vec::new(),
            youden_j: f64::NAN,
            hit_rate: f64::NAN,
            fa_rate: f64::NAN,
            rmse: None,
            time_ms,
            error: None,
        };
        match result {
            Ok((k_hat, est)) => {
                let assoc = associate(&record.truth, &est);
                let det = detection_metrics(&assoc, record.truth.len(), halfwidth);
                outcome.k_hat = k_hat;
                outcome.estimates = est;
                outcome.youden_j = det.youden_j;
                outcome.hit_rate = det.hit_rate;
                outcome.fa_rate = det.fa_rate;
                assocs.push(Some(assoc));
            }
            Err(e) => {
                outcome.error = Some(e.to_string());
                assocs.push(None);
            }
        }
        record.outcomes.push(outcome);
    }

    let succeeded: Vec<_> = assocs.iter().flatten().cloned().collect();
    let mut rmse = rmse_common_hits(&succeeded, record.truth.len(), halfwidth).into_iter();
    for (outcome, assoc) in record.outcomes.iter_mut().zip(&assocs) {
        if assoc.is_some() {
            outcome.rmse = rmse.next().flatten();
        }
    }
    record
}

/// Mean after dropping `fraction` of the samples from each end.
pub fn trimmed_mean(values: &[f64], fraction: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cut = (sorted.len() as f64 * fraction).floor() as usize;
    let kept = &sorted[cut..sorted.len() - cut];
    pairwise_sum(kept) / kept.len() as f64
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        pairwise_sum(values) / values.len() as f64
    }
}

#[allow(clippy::too_many_arguments)]
fn aggregate(
    spec: &SweepSpec,
    method: Method,
    index: usize,
    value: f64,
    records: &[&TrialRecord],
    evaluator: Evaluator,
    seed: u64,
    trials: usize,
) -> ResultRow {
    let ok: Vec<&MethodOutcome> = records
        .iter()
        .filter(|r| r.error.is_none())
        .map(|r| &r.outcomes[index])
        .filter(|o| o.error.is_none())
        .collect();
    let scenarios: Vec<&&TrialRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    let pick = |f: fn(&MethodOutcome) -> f64| mean(&ok.iter().map(|o| f(o)).collect::<Vec<_>>());
    let rmses: Vec<f64> = ok.iter().filter_map(|o| o.rmse).collect();
    let failures = trials - ok.len();
    ResultRow {
        sweep_param: spec.parameter.id().to_string(),
        sweep_value: value,
        method: method.id().to_string(),
        criterion: spec.criterion_for(method).id().to_string(),
        evaluator: evaluator.id().to_string(),
        trials,
        youden_j: pick(|o| o.youden_j),
        hit_rate: pick(|o| o.hit_rate),
        fa_rate: pick(|o| o.fa_rate),
        rmse: (!rmses.is_empty()).then(|| mean(&rmses)),
        rmse_coverage: if ok.is_empty() { 0.0 } else { rmses.len() as f64 / ok.len() as f64 },
        mean_time_ms: trimmed_mean(&ok.iter().map(|o| o.time_ms).collect::<Vec<_>>(), TIME_TRIM_FRACTION),
        t_metric: mean(&scenarios.iter().map(|r| r.steering_diagonality).collect::<Vec<_>>()),
        s_metric: mean(&scenarios.iter().map(|r| r.signal_diagonality).collect::<Vec<_>>()),
        mean_k_hat: pick(|o| o.k_hat as f64),
        seed,
        failures,
        warning: failures as f64 > FAILURE_WARN_FRACTION * trials as f64,
    }
}

/// Search grid matching a scenario's array.
pub fn grid_for(cfg: &ScenarioConfig) -> Result<DoaGrid, CliError> {
    Ok(DoaGrid::new(cfg.grid_points, cfg.antennas, cfg.element_phase_factor)?)
}
