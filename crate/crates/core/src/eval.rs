//! Association of estimates to targets, detection and precision scores, and
//! the steering/signal diagonality diagnostics.

use pathfinding::kuhn_munkres::kuhn_munkres_min;
use pathfinding::matrix::Matrix;

use crate::error::{DoaError, Result};
use crate::linalg::ComplexMatrix;
use crate::scenario::{steering_matrix, GroundTruth};

/// Assignment costs are integers in units of this angle step.
pub const COST_QUANTUM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    pub truth: usize,
    pub estimate: usize,
    pub error: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssociationResult {
    /// Sorted by true index.
    pub pairs: Vec<Pair>,
    pub unmatched_true: Vec<usize>,
    pub unmatched_est: Vec<usize>,
}

impl AssociationResult {
    pub fn total_cost(&self) -> f64 {
        self.pairs.iter().map(|p| p.error).sum()
    }
}

/// Minimum-cost matching of `estimates` to `truth` under `|Δu|`.
pub fn associate(truth: &[f64], estimates: &[f64]) -> AssociationResult {
    let (nt, ne) = (truth.len(), estimates.len());
    if nt == 0 || ne == 0 {
        return AssociationResult {
            pairs: Vec::new(),
            unmatched_true: (0..nt).collect(),
            unmatched_est: (0..ne).collect(),
        };
    }
    // the solver wants no more rows than columns
    let transposed = nt > ne;
    let (rows, cols) = if transposed { (estimates, truth) } else { (truth, estimates) };
    let weights = Matrix::from_fn(rows.len(), cols.len(), |(i, j)| {
        ((rows[i] - cols[j]).abs() / COST_QUANTUM).round() as i64
    });
    let (_, assignment) = kuhn_munkres_min(&weights);

    let mut pairs: Vec<Pair> = assignment
        .into_iter()
        .enumerate()
        .map(|(i, j)| {
            let (t, e) = if transposed { (j, i) } else { (i, j) };
            Pair {
                truth: t,
                estimate: e,
                error: (truth[t] - estimates[e]).abs(),
            }
        })
        .collect();
    pairs.sort_by_key(|p| p.truth);
    let unmatched_true = (0..nt).filter(|t| !pairs.iter().any(|p| p.truth == *t)).collect();
    let unmatched_est = (0..ne).filter(|e| !pairs.iter().any(|p| p.estimate == *e)).collect();
    AssociationResult {
        pairs,
        unmatched_true,
        unmatched_est,
    }
}

/// Main-lobe half-width `2/M` of an `M`-element half-wavelength array.
pub fn hit_halfwidth(antennas: usize) -> f64 {
    2.0 / antennas as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionMetrics {
    pub hits: usize,
    pub false_alarms: usize,
    pub hit_rate: f64,
    pub fa_rate: f64,
    pub youden_j: f64,
}

/// A matched pair closer than `halfwidth` is a hit; everything else the
/// estimator reported is a false alarm.
pub fn detection_metrics(assoc: &AssociationResult, true_count: usize, halfwidth: f64) -> DetectionMetrics {
    assert!(true_count >= 1, "detection metrics need at least one true target");
    let hits = assoc.pairs.iter().filter(|p| p.error < halfwidth).count();
    let detections = assoc.pairs.len() + assoc.unmatched_est.len();
    let false_alarms = detections - hits;
    let hit_rate = hits as f64 / true_count as f64;
    let fa_rate = false_alarms as f64 / detections.max(1) as f64;
    DetectionMetrics {
        hits,
        false_alarms,
        hit_rate,
        fa_rate,
        youden_j: hit_rate - fa_rate,
    }
}

/// Per-method RMSE over the true targets every method hit; `None` when no
/// target is common to all.
pub fn rmse_common_hits(assocs: &[AssociationResult], true_count: usize, halfwidth: f64) -> Vec<Option<f64>> {
    let hit_error = |a: &AssociationResult, t: usize| {
        a.pairs
            .iter()
            .find(|p| p.truth == t && p.error < halfwidth)
            .map(|p| p.error)
    };
    let common: Vec<usize> = (0..true_count)
        .filter(|&t| assocs.iter().all(|a| hit_error(a, t).is_some()))
        .collect();
    assocs
        .iter()
        .map(|a| {
            if common.is_empty() {
                return None;
            }
            let sq: f64 = common.iter().map(|&t| hit_error(a, t).unwrap().powi(2)).sum();
            Some((sq / common.len() as f64).sqrt())
        })
        .collect()
}

/// 1 for a diagonal matrix, 0 when every row is flat.
///
/// Each row scores `|A_ii| / Σ_j |A_ij|`; the mean is rescaled so that the
/// flat value `1/K` maps to 0.
pub fn diagonality_score(a: &ComplexMatrix) -> Result<f64> {
    if !a.is_square() || a.rows() == 0 {
        return Err(DoaError::Dimension(format!(
            "diagonality of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let k = a.rows();
    let mut total = 0.0;
    for i in 0..k {
        let row_sum: f64 = a.row(i).iter().map(|z| z.norm()).sum();
        if row_sum == 0.0 {
            return Err(DoaError::Contract(format!("row {i} is all zeros")));
        }
        total += a[(i, i)].norm() / row_sum;
    }
    if k == 1 {
        return Ok(1.0);
    }
    let kf = k as f64;
    Ok(((total - 1.0) / (kf - 1.0)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticMetrics {
    /// Diagonality of `AᴴA / M`: angular separability.
    pub steering: f64,
    /// Diagonality of `B′B′ᴴ / L`: signal decorrelation.
    pub signal: f64,
}

pub fn diagnostics(truth: &GroundTruth, coeffs: &ComplexMatrix, antennas: usize, phase_factor: f64) -> Result<DiagnosticMetrics> {
    let a = steering_matrix(&truth.doas, antennas, phase_factor)?;
    let t = a.adjoint_mul(&a).scale(1.0 / antennas as f64);
    let s = coeffs.mul_adjoint(coeffs).scale(1.0 / coeffs.cols().max(1) as f64);
    Ok(DiagnosticMetrics {
        steering: diagonality_score(&t)?,
        signal: diagonality_score(&s)?,
    })
}
