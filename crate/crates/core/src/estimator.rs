//! One entry point per benchmarked method.

use std::fmt;
use std::str::FromStr;

use crate::error::{DoaError, Result};
use crate::fastgrid::{DoaGrid, Evaluator};
use crate::gimusic::{gimusic_estimate, GimusicOptions, GimusicState, GimusicVariant};
use crate::greedy::{greedy_estimate, GreedyMethod, GreedyState};
use crate::linalg::{covariance_sqrt, hermitian_evd, ComplexMatrix};
use crate::order::{hybrid_order, GreedyStepper, HybridOutcome, HybridSettings, OrderEstimate, StoppingRule};
use crate::subspace::{music_estimate, partition_evd, MusicVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    MusicSignal,
    MusicNoise,
    WmusicSignal,
    WmusicNoise,
    Omp,
    Ols,
    OmpImusic,
    /// Signal or noise form, whichever subspace is smaller.
    OlsImusic,
    OmpIwmusic,
    OlsIwmusic,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::MusicSignal,
        Method::MusicNoise,
        Method::WmusicSignal,
        Method::WmusicNoise,
        Method::Omp,
        Method::Ols,
        Method::OmpImusic,
        Method::OlsImusic,
        Method::OmpIwmusic,
        Method::OlsIwmusic,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::MusicSignal => "music-signal",
            Method::MusicNoise => "music-noise",
            Method::WmusicSignal => "wmusic-signal",
            Method::WmusicNoise => "wmusic-noise",
            Method::Omp => "omp",
            Method::Ols => "ols",
            Method::OmpImusic => "omp-imusic",
            Method::OlsImusic => "ols-imusic",
            Method::OmpIwmusic => "omp-iwmusic",
            Method::OlsIwmusic => "ols-iwmusic",
        }
    }

    /// Whether angles are picked one at a time (and the hybrid rule applies).
    pub fn is_stepwise(self) -> bool {
        !matches!(
            self,
            Method::MusicSignal | Method::MusicNoise | Method::WmusicSignal | Method::WmusicNoise
        )
    }

    fn music_variant(self) -> Option<MusicVariant> {
        match self {
            Method::MusicSignal => Some(MusicVariant::Signal),
            Method::MusicNoise => Some(MusicVariant::Noise),
            Method::WmusicSignal => Some(MusicVariant::WeightedSignal),
            Method::WmusicNoise => Some(MusicVariant::WeightedNoise),
            _ => None,
        }
    }

    fn gimusic_variant(self, order: usize, antennas: usize) -> Option<GimusicVariant> {
        match self {
            Method::OmpImusic => Some(GimusicVariant::OmpImusic),
            Method::OlsImusic => Some(GimusicVariant::ols_for(order, antennas)),
            Method::OmpIwmusic => Some(GimusicVariant::OmpIwmusic),
            Method::OlsIwmusic => Some(GimusicVariant::OlsIwmusic),
            _ => None,
        }
    }

    fn greedy_method(self) -> Option<GreedyMethod> {
        match self {
            Method::Omp => Some(GreedyMethod::Omp),
            Method::Ols => Some(GreedyMethod::Ols),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = DoaError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| DoaError::Config(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MethodOptions {
    pub evd_per_iter: bool,
}

/// `order` angle estimates from the sample covariance `r`. Zero order gives none.
pub fn estimate(
    method: Method,
    r: &ComplexMatrix,
    order: usize,
    grid: &DoaGrid,
    evaluator: Evaluator,
    options: MethodOptions,
) -> Result<Vec<f64>> {
    if order == 0 {
        return Ok(Vec::new());
    }
    let m = r.rows();
    if let Some(variant) = method.music_variant() {
        return music_estimate(r, order, variant, grid, evaluator);
    }
    if let Some(variant) = method.gimusic_variant(order, m) {
        let opts = GimusicOptions {
            evd_per_iter: options.evd_per_iter,
        };
        return gimusic_estimate(r, order, variant, grid, evaluator, opts);
    }
    let greedy = method.greedy_method().expect("every method has a family");
    let sqrt_cov = covariance_sqrt(&hermitian_evd(r)?)?;
    greedy_estimate(&sqrt_cov, order, greedy, grid, evaluator)
}

/// Runs a stepwise method under the hybrid stopping rule, starting from `base`.
///
/// Subspace-driven methods use a signal subspace of dimension `base.k_hat`
/// (at least 1), so extra angles come from residual signal energy.
pub fn estimate_hybrid(
    method: Method,
    r: &ComplexMatrix,
    base: &OrderEstimate,
    snapshots: usize,
    grid: &DoaGrid,
    evaluator: Evaluator,
    rule: &dyn StoppingRule,
) -> Result<HybridOutcome> {
    if !method.is_stepwise() {
        return Err(DoaError::Config(format!("the hybrid criterion needs a stepwise method, not {method}")));
    }
    let m = r.rows();
    let evd = hermitian_evd(r)?;
    let sqrt_cov = covariance_sqrt(&evd)?;
    let settings = HybridSettings {
        grid,
        evaluator,
        max_k: m - 1,
        snapshots,
        rule,
    };
    let base = OrderEstimate {
        k_hat: base.k_hat.min(m - 1),
        ..base.clone()
    };
    if let Some(greedy) = method.greedy_method() {
        let stepper = GreedyStepper {
            state: GreedyState::new(sqrt_cov.clone(), grid.phase_factor()),
            method: greedy,
        };
        return hybrid_order(stepper, &sqrt_cov, &base, settings);
    }
    let dim = base.k_hat.clamp(1, m - 1);
    let variant = method.gimusic_variant(dim, m).expect("stepwise non-greedy methods are G-iMUSIC");
    let dec = partition_evd(&evd, dim)?;
    let state = GimusicState::new(&dec, variant, grid.phase_factor());
    hybrid_order(state, &sqrt_cov, &base, settings)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::fastgrid::make_grid;
    use crate::order::{OrderCriterion, PenalizedResidual};
    use crate::scenario::steering_matrix;

    #[test]
    fn ids_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.id().parse::<Method>().unwrap(), m);
        }
        assert!("esprit".parse::<Method>().is_err());
    }

    #[test]
    fn every_method_recovers_noiseless_targets() {
        let m = 8;
        let grid = make_grid(64, m).unwrap();
        let us = [grid.angle(5), grid.angle(22), grid.angle(47)];
        let a = steering_matrix(&us, m, PI).unwrap();
        let r = a.mul_adjoint(&a);
        for method in Method::ALL {
            let mut est = estimate(method, &r, 3, &grid, Evaluator::Fft, MethodOptions::default()).unwrap();
            est.sort_by(f64::total_cmp);
            assert_eq!(est, us.to_vec(), "{method}");
        }
        assert!(estimate(Method::Omp, &r, 0, &grid, Evaluator::Fft, MethodOptions::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn hybrid_only_for_stepwise() {
        let grid = make_grid(32, 4).unwrap();
        let r = ComplexMatrix::identity(4);
        let base = OrderEstimate {
            k_hat: 1,
            curve: vec![],
            criterion: OrderCriterion::RankAic,
        };
        let err = estimate_hybrid(Method::MusicSignal, &r, &base, 10, &grid, Evaluator::Fft, &PenalizedResidual);
        assert!(matches!(err, Err(DoaError::Config(_))));
        let ok = estimate_hybrid(Method::OlsImusic, &r, &base, 10, &grid, Evaluator::Fft, &PenalizedResidual).unwrap();
        assert!(ok.estimate.k_hat >= 1);
    }
}
