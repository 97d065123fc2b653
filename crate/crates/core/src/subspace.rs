//! Sample covariance, signal/noise subspaces and MUSIC-type pseudospectra.

use std::fmt;

use crate::error::{DoaError, Result};
use crate::fastgrid::{evaluate_objective, DoaGrid, Evaluator, ObjectiveForm, ObjectiveOperands};
use crate::linalg::{covariance_sqrt, hermitian_evd, ComplexMatrix, HermitianEvd};

pub use crate::fastgrid::Pseudospectrum;

/// Weighted noise-form eigenvalues are floored at this fraction of the largest eigenvalue.
pub const NOISE_WEIGHT_FLOOR: f64 = 1e-12;

/// `R = Y·Yᴴ / L` over the `L` columns of `y`, symmetrised.
pub fn sample_covariance(y: &ComplexMatrix) -> ComplexMatrix {
    assert!(y.cols() >= 1, "sample covariance needs at least one snapshot");
    let m = y.rows();
    let scale = 1.0 / y.cols() as f64;
    let mut r = ComplexMatrix::zeros(m, m);
    for i in 0..m {
        let yi = y.row(i);
        for j in i..m {
            let dot: num_complex::Complex64 = yi.iter().zip(y.row(j)).map(|(a, b)| a * b.conj()).sum();
            r[(i, j)] = dot * scale;
            r[(j, i)] = (dot * scale).conj();
        }
        r[(i, i)].im = 0.0;
    }
    r
}

/// Eigen-split of a covariance into `K` signal and `M − K` noise directions.
#[derive(Debug, Clone)]
pub struct SubspaceDecomposition {
    /// `M × K` dominant eigenvectors.
    pub signal: ComplexMatrix,
    /// `M × (M − K)` remaining eigenvectors.
    pub noise: ComplexMatrix,
    pub signal_eigenvalues: Vec<f64>,
    pub noise_eigenvalues: Vec<f64>,
    /// `[S·√Λs | G·√Λn]`.
    pub sqrt_cov: ComplexMatrix,
}

impl SubspaceDecomposition {
    pub fn antennas(&self) -> usize {
        self.signal.rows()
    }

    pub fn order(&self) -> usize {
        self.signal.cols()
    }

    /// `S·√Λs`.
    pub fn weighted_signal(&self) -> ComplexMatrix {
        self.sqrt_cov.column_range(0, self.order())
    }

    /// `G·√Λn`, with eigenvalues floored at [`NOISE_WEIGHT_FLOOR`]·λmax so the
    /// inverse spectrum stays informative when the noise floor is numerically zero.
    pub fn weighted_noise(&self) -> ComplexMatrix {
        let top = self.signal_eigenvalues.first().copied().unwrap_or(0.0);
        let floor = NOISE_WEIGHT_FLOOR * top;
        let roots: Vec<f64> = self
            .noise_eigenvalues
            .iter()
            .map(|&v| v.max(floor).sqrt())
            .collect();
        self.noise.scale_columns(&roots)
    }
}

/// Splits `R` after one eigendecomposition.
pub fn partition(r: &ComplexMatrix, order: usize) -> Result<SubspaceDecomposition> {
    check_order(order, r.rows())?;
    partition_evd(&hermitian_evd(r)?, order)
}

/// Splits an existing eigendecomposition.
pub fn partition_evd(evd: &HermitianEvd, order: usize) -> Result<SubspaceDecomposition> {
    let m = evd.eigenvalues.len();
    check_order(order, m)?;
    let sqrt_cov = covariance_sqrt(evd)?;
    Ok(SubspaceDecomposition {
        signal: evd.eigenvectors.column_range(0, order),
        noise: evd.eigenvectors.column_range(order, m),
        signal_eigenvalues: evd.eigenvalues[..order].to_vec(),
        noise_eigenvalues: evd.eigenvalues[order..].to_vec(),
        sqrt_cov,
    })
}

fn check_order(order: usize, antennas: usize) -> Result<()> {
    if order == 0 || order >= antennas {
        return Err(DoaError::Contract(format!(
            "signal subspace dimension {order} must be in 1..{antennas}"
        )));
    }
    Ok(())
}

/// Pseudospectrum flavours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MusicVariant {
    /// `1/‖Gᴴa‖²`.
    Noise,
    /// `‖Sᴴa‖²`.
    Signal,
    /// `1/‖(G√Λn)ᴴa‖²`.
    WeightedNoise,
    /// `‖(S√Λs)ᴴa‖²`.
    WeightedSignal,
}

impl MusicVariant {
    /// Cheaper unweighted form: the smaller of the two subspaces.
    pub fn unweighted_for(order: usize, antennas: usize) -> Self {
        if order <= antennas - order {
            MusicVariant::Signal
        } else {
            MusicVariant::Noise
        }
    }
}

impl fmt::Display for MusicVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MusicVariant::Noise => "music-noise",
            MusicVariant::Signal => "music-signal",
            MusicVariant::WeightedNoise => "wmusic-noise",
            MusicVariant::WeightedSignal => "wmusic-signal",
        };
        f.write_str(s)
    }
}

pub fn pseudospectrum(
    dec: &SubspaceDecomposition,
    grid: &DoaGrid,
    variant: MusicVariant,
    evaluator: Evaluator,
) -> Pseudospectrum {
    let (numerator, form) = match variant {
        MusicVariant::Signal => (dec.signal.clone(), ObjectiveForm::Power),
        MusicVariant::Noise => (dec.noise.clone(), ObjectiveForm::InversePower),
        MusicVariant::WeightedSignal => (dec.weighted_signal(), ObjectiveForm::Power),
        MusicVariant::WeightedNoise => (dec.weighted_noise(), ObjectiveForm::InversePower),
    };
    let operands = ObjectiveOperands {
        numerator: &numerator,
        complement: None,
    };
    evaluate_objective(operands, form, grid, evaluator)
}

/// Indices of the `k` largest strict local maxima, by descending value.
///
/// Endpoints compare against their single neighbour (no wrap-around). Ties
/// go to the lower index. When fewer than `k` peaks exist the remaining slots
/// take the largest non-peak values.
pub fn select_peak_indices(values: &[f64], k: usize) -> Vec<usize> {
    let n = values.len();
    let is_peak = |i: usize| {
        let v = values[i];
        let left = i == 0 || v > values[i - 1];
        let right = i + 1 == n || v > values[i + 1];
        n > 1 && left && right
    };
    let by_value = |a: &usize, b: &usize| values[*b].total_cmp(&values[*a]).then(a.cmp(b));

    let (mut peaks, mut rest): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| is_peak(i));
    peaks.sort_by(by_value);
    peaks.truncate(k);
    if peaks.len() < k {
        rest.sort_by(by_value);
        let missing = k - peaks.len();
        peaks.extend(rest.into_iter().take(missing));
        peaks.sort_by(by_value);
    }
    peaks
}

/// Angles of the `k` most prominent peaks.
pub fn select_peaks(ps: &Pseudospectrum, k: usize) -> Vec<f64> {
    select_peak_indices(&ps.values, k)
        .into_iter()
        .map(|i| ps.angles[i])
        .collect()
}

/// MUSIC / WMUSIC from a sample covariance.
pub fn music_estimate(
    r: &ComplexMatrix,
    order: usize,
    variant: MusicVariant,
    grid: &DoaGrid,
    evaluator: Evaluator,
) -> Result<Vec<f64>> {
    let dec = partition(r, order)?;
    let ps = pseudospectrum(&dec, grid, variant, evaluator);
    Ok(select_peaks(&ps, order))
}
