//! Passive OFDM radar scenario: random targets and the received-signal matrix.
//!
//! Angles are carried as normalized values `u = sin θ ∈ [−1, 1)` throughout.
//! The observation matrix stacks one column per (symbol, subcarrier) pair in
//! symbol-major order, `column = d·Q + q`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{DoaError, Result};
use crate::linalg::ComplexMatrix;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Closest a target may be to the receiver, in meters.
pub const MIN_RANGE_M: f64 = 5.0;
/// Range at which a target has unit path amplitude.
pub const REFERENCE_RANGE_M: f64 = 20.0;
/// Give up on angle rejection sampling after this many draws.
pub const MAX_ANGLE_DRAWS: usize = 10_000;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Radar and array parameters for one Monte Carlo scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub targets: usize,
    pub antennas: usize,
    pub subcarriers: usize,
    pub symbols: usize,
    /// `+inf` gives a noiseless observation.
    pub snr_db: f64,
    pub carrier_freq_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub max_range_m: f64,
    pub grid_points: usize,
    /// Inter-element phase `k_c·Δ_d` in radians; π for half-wavelength spacing.
    pub element_phase_factor: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            targets: 8,
            antennas: 16,
            subcarriers: 512,
            symbols: 10,
            snr_db: 40.0,
            carrier_freq_hz: 5e9,
            subcarrier_spacing_hz: 78_125.0,
            max_range_m: 60.0,
            grid_points: 2048,
            element_phase_factor: PI,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(DoaError::Config(msg));
        if self.targets < 1 {
            return fail("targets must be at least 1".into());
        }
        if self.antennas < 2 {
            return fail("antennas must be at least 2".into());
        }
        if self.targets >= self.antennas {
            return fail(format!(
                "targets ({}) must be fewer than antennas ({})",
                self.targets, self.antennas
            ));
        }
        if self.subcarriers < 1 || self.symbols < 1 {
            return fail("subcarriers and symbols must be at least 1".into());
        }
        if self.grid_points < 2 * self.antennas || !self.grid_points.is_power_of_two() {
            return fail(format!(
                "grid_points ({}) must be a power of two and at least 2·antennas",
                self.grid_points
            ));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return fail(format!("snr_db {} is not usable", self.snr_db));
        }
        let positive = [
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("subcarrier_spacing_hz", self.subcarrier_spacing_hz),
            ("element_phase_factor", self.element_phase_factor),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.max_range_m.is_finite() && self.max_range_m >= MIN_RANGE_M) {
            return fail(format!("max_range_m must be at least {MIN_RANGE_M}"));
        }
        Ok(())
    }

    /// OFDM symbol period (cyclic prefix ignored).
    pub fn symbol_period_s(&self) -> f64 {
        1.0 / self.subcarrier_spacing_hz
    }

    pub fn max_doppler_hz(&self) -> f64 {
        1.0 / (4.0 * self.symbols as f64 * self.symbol_period_s())
    }

    /// Number of snapshots `D·Q`.
    pub fn snapshots(&self) -> usize {
        self.symbols * self.subcarriers
    }
}

/// True target set of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub doas: Vec<f64>,
    pub delays_s: Vec<f64>,
    pub dopplers_hz: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
    pub noise_variance: f64,
}

/// Received-signal matrix together with its synthesis components.
#[derive(Debug, Clone)]
pub struct Observation {
    /// `M × D·Q` received signal.
    pub y: ComplexMatrix,
    /// `K × D·Q` modulated channel coefficients.
    pub coeffs: ComplexMatrix,
    /// `M × D·Q` noise draw; `steering·coeffs + noise == y` bit for bit.
    pub noise: ComplexMatrix,
    pub truth: GroundTruth,
}

/// Independent per-trial stream; adding trials never changes earlier ones.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    seed ^ trial.wrapping_mul(GOLDEN_GAMMA)
}

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(seed, trial))
}

/// ULA response `exp(j·phase·u·m)` for `m = 0..M`.
pub fn steering_vector(u: f64, antennas: usize, phase_factor: f64) -> Result<Vec<Complex64>> {
    if !(u.abs() <= 1.0) {
        return Err(DoaError::Domain(format!("normalized angle {u} outside [-1, 1]")));
    }
    Ok((0..antennas)
        .map(|m| Complex64::from_polar(1.0, phase_factor * u * m as f64))
        .collect())
}

/// One steering vector per angle, in input order.
pub fn steering_matrix(us: &[f64], antennas: usize, phase_factor: f64) -> Result<ComplexMatrix> {
    let cols = us
        .iter()
        .map(|&u| steering_vector(u, antennas, phase_factor))
        .collect::<Result<Vec<_>>>()?;
    ComplexMatrix::from_columns(antennas, &cols)
}

/// Noise variance that gives `snr_db` for the given path amplitudes.
pub fn noise_variance_for(amplitudes: &[Complex64], snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    let mean_power = amplitudes.iter().map(Complex64::norm_sqr).sum::<f64>() / amplitudes.len() as f64;
    mean_power / 10f64.powf(snr_db / 10.0)
}

/// Draws target angles, ranges, Dopplers and amplitudes.
///
/// Angles are uniform on `[−1, 1)` with a minimum pairwise gap of `2/N`;
/// ranges are uniform on `[5 m, max_range_m]` and converted to two-way delays;
/// amplitudes fall off as `(20 m / range)²` with uniform phase.
pub fn draw_targets<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<GroundTruth> {
    cfg.validate()?;
    let k = cfg.targets;
    let min_gap = 2.0 / cfg.grid_points as f64;
    let mut doas: Vec<f64> = Vec::with_capacity(k);
    let mut draws = 0;
    while doas.len() < k {
        if draws == MAX_ANGLE_DRAWS {
            return Err(DoaError::Config(format!(
                "could not place {k} targets with gap {min_gap} after {MAX_ANGLE_DRAWS} draws"
            )));
        }
        draws += 1;
        let u: f64 = rng.random_range(-1.0..1.0);
        if doas.iter().all(|&v| (v - u).abs() >= min_gap) {
            doas.push(u);
        }
    }

    let f_max = cfg.max_doppler_hz();
    let mut delays_s = Vec::with_capacity(k);
    let mut dopplers_hz = Vec::with_capacity(k);
    let mut amplitudes = Vec::with_capacity(k);
    for _ in 0..k {
        let range: f64 = rng.random_range(MIN_RANGE_M..=cfg.max_range_m);
        delays_s.push(2.0 * range / SPEED_OF_LIGHT);
        dopplers_hz.push(rng.random_range(-f_max..=f_max));
        let phase: f64 = rng.random_range(0.0..2.0 * PI);
        amplitudes.push(Complex64::from_polar((REFERENCE_RANGE_M / range).powi(2), phase));
    }
    let noise_variance = noise_variance_for(&amplitudes, cfg.snr_db);
    Ok(GroundTruth {
        doas,
        delays_s,
        dopplers_hz,
        amplitudes,
        noise_variance,
    })
}

/// Channel coefficient of target `k` on symbol `d`, subcarrier `q`.
pub fn channel_coefficient(truth: &GroundTruth, cfg: &ScenarioConfig, k: usize, d: usize, q: usize) -> Complex64 {
    let tau = truth.delays_s[k];
    let phase = -2.0 * PI * cfg.carrier_freq_hz * tau
        - 2.0 * PI * cfg.subcarrier_spacing_hz * tau * q as f64
        + 2.0 * PI * truth.dopplers_hz[k] * d as f64 * cfg.symbol_period_s();
    truth.amplitudes[k] * Complex64::from_polar(1.0, phase)
}

/// Builds `Y = A(Θ)·B′ + N` for a fixed target set.
pub fn synthesize_observation<R: Rng + ?Sized>(
    truth: &GroundTruth,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<Observation> {
    let k = truth.doas.len();
    let consistent = [truth.delays_s.len(), truth.dopplers_hz.len(), truth.amplitudes.len()]
        .iter()
        .all(|&n| n == k);
    if k == 0 || !consistent {
        return Err(DoaError::Contract("ground truth lists must be non-empty and equally long".into()));
    }
    let m = cfg.antennas;
    let (n_sym, n_sub) = (cfg.symbols, cfg.subcarriers);
    let snapshots = n_sym * n_sub;

    let mut coeffs = ComplexMatrix::zeros(k, snapshots);
    for d in 0..n_sym {
        for q in 0..n_sub {
            let col = d * n_sub + q;
            let symbol = Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
            for t in 0..k {
                coeffs[(t, col)] = channel_coefficient(truth, cfg, t, d, q) * symbol;
            }
        }
    }

    let sigma = (truth.noise_variance / 2.0).sqrt();
    let mut noise = ComplexMatrix::zeros(m, snapshots);
    if truth.noise_variance > 0.0 {
        for r in 0..m {
            for c in 0..snapshots {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                noise[(r, c)] = Complex64::new(sigma * re, sigma * im);
            }
        }
    }

    let steering = steering_matrix(&truth.doas, m, cfg.element_phase_factor)?;
    let y = &steering.matmul(&coeffs) + &noise;
    Ok(Observation {
        y,
        coeffs,
        noise,
        truth: truth.clone(),
    })
}

/// Draws a target set and synthesizes its observation from one stream.
pub fn simulate<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Observation> {
    let truth = draw_targets(cfg, rng)?;
    synthesize_observation(&truth, cfg, rng)
}
