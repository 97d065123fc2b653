//! Target-count selection: eigenvalue AIC and a stepwise hybrid rule.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DoaError, Result};
use crate::fastgrid::{DoaGrid, Evaluator, Pseudospectrum};
use crate::gimusic::GimusicState;
use crate::greedy::{pick, GreedyMethod, GreedyState};
use crate::linalg::ComplexMatrix;

/// Eigenvalues are floored here before taking logarithms.
pub const EIGEN_LOG_FLOOR: f64 = 1e-300;
/// Floor on the unexplained-energy fraction of the hybrid rule.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderCriterion {
    #[default]
    RankAic,
    Hybrid,
}

impl OrderCriterion {
    pub fn id(self) -> &'static str {
        match self {
            OrderCriterion::RankAic => "rank-aic",
            OrderCriterion::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for OrderCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for OrderCriterion {
    type Err = DoaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rank-aic" => Ok(OrderCriterion::RankAic),
            "hybrid" => Ok(OrderCriterion::Hybrid),
            other => Err(DoaError::Config(format!("unknown order criterion '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderEstimate {
    pub k_hat: usize,
    /// Criterion value for each evaluated order, starting at 0.
    pub curve: Vec<f64>,
    pub criterion: OrderCriterion,
}

/// Wax–Kailath AIC over descending eigenvalues from `snapshots` samples.
pub fn aic_rank(eigenvalues: &[f64], snapshots: usize) -> Result<OrderEstimate> {
    let m = eigenvalues.len();
    if m < 2 || snapshots == 0 {
        return Err(DoaError::Contract(format!(
            "AIC needs at least 2 eigenvalues and 1 snapshot, got {m} and {snapshots}"
        )));
    }
    if let Some(v) = eigenvalues.iter().find(|v| !(**v >= 0.0)) {
        return Err(DoaError::Contract(format!("AIC on negative eigenvalue {v:e}")));
    }
    let l = snapshots as f64;
    let curve: Vec<f64> = (0..m)
        .map(|k| {
            let tail = &eigenvalues[k..];
            let n = tail.len() as f64;
            let log_geo = tail.iter().map(|v| v.max(EIGEN_LOG_FLOOR).ln()).sum::<f64>() / n;
            let arith = (tail.iter().sum::<f64>() / n).max(EIGEN_LOG_FLOOR);
            let k = k as f64;
            let m = m as f64;
            -2.0 * l * (m - k) * (log_geo - arith.ln()) + 2.0 * k * (2.0 * m - k)
        })
        .collect();
    Ok(OrderEstimate {
        k_hat: argmin(&curve),
        curve,
        criterion: OrderCriterion::RankAic,
    })
}

fn argmin(values: &[f64]) -> usize {
    (0..values.len()).fold(0, |best, i| if values[i] < values[best] { i } else { best })
}

/// Scores a selection of `k` angles; lower is better.
pub trait StoppingRule {
    /// `residual_fraction` is `1 − trace(R·P)/trace(R)`.
    fn score(&self, k: usize, residual_fraction: f64, antennas: usize, snapshots: usize) -> f64;
}

/// `2·L·M·ln ε + 2·k·(2M − k + 1)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PenalizedResidual;

impl StoppingRule for PenalizedResidual {
    fn score(&self, k: usize, residual_fraction: f64, antennas: usize, snapshots: usize) -> f64 {
        let (k, m, l) = (k as f64, antennas as f64, snapshots as f64);
        2.0 * l * m * residual_fraction.max(RESIDUAL_FLOOR).ln() + 2.0 * k * (2.0 * m - k + 1.0)
    }
}

/// A greedy estimator that can be advanced one angle at a time.
pub trait Stepwise: Clone {
    fn objective(&self, grid: &DoaGrid, evaluator: Evaluator) -> Pseudospectrum;
    fn update(&mut self, u: f64) -> Result<()>;
    fn selected(&self) -> &[f64];
    fn complement(&self) -> &ComplexMatrix;
}

/// OMP or OLS packaged for stepwise use.
#[derive(Debug, Clone)]
pub struct GreedyStepper {
    pub state: GreedyState,
    pub method: GreedyMethod,
}

impl Stepwise for GreedyStepper {
    fn objective(&self, grid: &DoaGrid, evaluator: Evaluator) -> Pseudospectrum {
        self.state.objective(grid, self.method, evaluator)
    }

    fn update(&mut self, u: f64) -> Result<()> {
        self.state.update(u)
    }

    fn selected(&self) -> &[f64] {
        self.state.selected()
    }

    fn complement(&self) -> &ComplexMatrix {
        self.state.complement()
    }
}

impl Stepwise for GimusicState {
    fn objective(&self, grid: &DoaGrid, evaluator: Evaluator) -> Pseudospectrum {
        GimusicState::objective(self, grid, evaluator)
    }

    fn update(&mut self, u: f64) -> Result<()> {
        GimusicState::update(self, u)
    }

    fn selected(&self) -> &[f64] {
        GimusicState::selected(self)
    }

    fn complement(&self) -> &ComplexMatrix {
        GimusicState::complement(self)
    }
}

/// Order and angles chosen by [`hybrid_order`].
#[derive(Debug, Clone, PartialEq)]
pub struct HybridOutcome {
    pub estimate: OrderEstimate,
    pub angles: Vec<f64>,
}

/// Settings of one hybrid run.
#[derive(Clone, Copy)]
pub struct HybridSettings<'a> {
    pub grid: &'a DoaGrid,
    pub evaluator: Evaluator,
    pub max_k: usize,
    pub snapshots: usize,
    pub rule: &'a dyn StoppingRule,
}

/// Takes the first `base.k_hat` angles unconditionally, then keeps adding
/// while the stopping rule improves.
pub fn hybrid_order<S: Stepwise>(
    start: S,
    sqrt_cov: &ComplexMatrix,
    base: &OrderEstimate,
    settings: HybridSettings<'_>,
) -> Result<HybridOutcome> {
    let m = sqrt_cov.rows();
    if base.k_hat > settings.max_k || settings.max_k >= m {
        return Err(DoaError::Contract(format!(
            "hybrid order needs base {} <= max {} < {m}",
            base.k_hat, settings.max_k
        )));
    }
    let total = sqrt_cov.frobenius_norm_sq();
    let score = |s: &S| {
        let residual = s.complement().matmul(sqrt_cov).frobenius_norm_sq();
        let fraction = if total > 0.0 { residual / total } else { 0.0 };
        settings.rule.score(s.selected().len(), fraction, m, settings.snapshots)
    };

    let mut state = start;
    let mut curve = vec![score(&state)];
    let advance = |s: &S| -> Result<S> {
        let u = pick(&s.objective(settings.grid, settings.evaluator), settings.grid)?;
        let mut next = s.clone();
        next.update(u)?;
        Ok(next)
    };
    for _ in 0..base.k_hat {
        state = advance(&state)?;
        curve.push(score(&state));
    }
    while state.selected().len() < settings.max_k {
        let next = advance(&state)?;
        let c = score(&next);
        curve.push(c);
        if c < curve[curve.len() - 2] {
            state = next;
        } else {
            break;
        }
    }
    let k_hat = state.selected().len();
    debug_assert!(k_hat >= base.k_hat);
    Ok(HybridOutcome {
        estimate: OrderEstimate {
            k_hat,
            curve,
            criterion: OrderCriterion::Hybrid,
        },
        angles: state.selected().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::fastgrid::make_grid;
    use crate::linalg::{covariance_sqrt, hermitian_evd};
    use crate::scenario::steering_matrix;

    #[test]
    fn equal_eigenvalues_give_zero() {
        assert_eq!(aic_rank(&[2.0; 6], 100).unwrap().k_hat, 0);
    }

    #[test]
    fn two_strong_eigenvalues() {
        let eig = [100.0, 100.0, 1.0, 1.0, 1.0, 1.0];
        let est = aic_rank(&eig, 1000).unwrap();
        assert_eq!(est.k_hat, 2);
        // hand evaluation at k = 2: only the penalty survives
        assert!((est.curve[2] - 2.0 * 2.0 * 10.0).abs() < 1e-9);
        let scaled: Vec<f64> = eig.iter().map(|v| v * 37.5).collect();
        assert_eq!(aic_rank(&scaled, 1000).unwrap().k_hat, 2);
    }

    #[test]
    fn aic_rejects_bad_input() {
        assert!(aic_rank(&[1.0, -1.0], 10).is_err());
        assert!(aic_rank(&[1.0], 10).is_err());
        assert!(aic_rank(&[1.0, 0.0], 0).is_err());
        // exact zeros are floored, not rejected
        assert_eq!(aic_rank(&[1.0, 0.0, 0.0], 10).unwrap().k_hat, 1);
    }

    #[test]
    fn criterion_ids() {
        for c in [OrderCriterion::RankAic, OrderCriterion::Hybrid] {
            assert_eq!(c.id().parse::<OrderCriterion>().unwrap(), c);
        }
    }

    fn noiseless(us: &[f64], m: usize) -> ComplexMatrix {
        let a = steering_matrix(us, m, PI).unwrap();
        let r = a.mul_adjoint(&a);
        covariance_sqrt(&hermitian_evd(&r).unwrap()).unwrap()
    }

    #[test]
    fn hybrid_stops_at_true_count() {
        let m = 8;
        let grid = make_grid(64, m).unwrap();
        let us = [grid.angle(12), grid.angle(30), grid.angle(50)];
        let sq = noiseless(&us, m);
        let stepper = GreedyStepper {
            state: GreedyState::new(sq.clone(), PI),
            method: GreedyMethod::Ols,
        };
        let base = OrderEstimate {
            k_hat: 3,
            curve: vec![],
            criterion: OrderCriterion::RankAic,
        };
        let settings = HybridSettings {
            grid: &grid,
            evaluator: Evaluator::Fft,
            max_k: m - 1,
            snapshots: 64,
            rule: &PenalizedResidual,
        };
        let out = hybrid_order(stepper.clone(), &sq, &base, settings).unwrap();
        assert_eq!(out.estimate.k_hat, 3);
        let mut got = out.angles.clone();
        got.sort_by(f64::total_cmp);
        assert_eq!(got, us.to_vec());

        // starting from zero the rule still finds all three
        let zero = OrderEstimate { k_hat: 0, ..base.clone() };
        assert_eq!(hybrid_order(stepper.clone(), &sq, &zero, settings).unwrap().estimate.k_hat, 3);

        // no room to extend
        let full = OrderEstimate { k_hat: 7, ..base };
        assert_eq!(hybrid_order(stepper, &sq, &full, settings).unwrap().estimate.k_hat, 7);
    }
}
