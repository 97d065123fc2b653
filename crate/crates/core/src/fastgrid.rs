//! Search grid over normalized angles and column-norm objective evaluation.
//!
//! Every selection objective in this crate is built from quantities of the
//! form `‖Xᴴ a(u)‖²` evaluated on all grid angles. For a half-wavelength ULA
//! the grid steering vectors are columns of a length-`N` DFT matrix, so one
//! zero-padded FFT per column of `X` replaces the `N·M` direct products:
//!
//! `a(u_p) = F[:, n]` with `F[m, n] = exp(−j2πmn/N)` and `n = (N/2 − p) mod N`,
//! where `u_p = −1 + 2p/N` is the `p`-th ascending grid angle.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{DoaError, Result};
use crate::linalg::ComplexMatrix;

/// Ratio objectives are masked where `‖P⊥a‖² < MASK_TOL·M`.
pub const MASK_TOL: f64 = 1e-9;
/// Inverse objectives saturate where the norm falls below `SATURATION_TOL·M`.
pub const SATURATION_TOL: f64 = 1e-15;
pub const SATURATION_VALUE: f64 = 1e15;

/// How grid objectives are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Evaluator {
    /// Explicit steering-vector products, `O(N·M·r)`.
    Direct,
    /// Zero-padded FFT per column, `O(r·N log N)`.
    #[default]
    Fft,
}

impl Evaluator {
    pub fn id(self) -> &'static str {
        match self {
            Evaluator::Direct => "direct",
            Evaluator::Fft => "fft",
        }
    }
}

impl std::str::FromStr for Evaluator {
    type Err = DoaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Evaluator::Direct),
            "fft" => Ok(Evaluator::Fft),
            other => Err(DoaError::Config(format!("unknown evaluator {other:?}"))),
        }
    }
}

impl fmt::Display for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// `N` uniformly spaced normalized angles on `[−1, 1)` for an `M`-element ULA.
#[derive(Clone)]
pub struct DoaGrid {
    antennas: usize,
    phase_factor: f64,
    angles: Arc<[f64]>,
    /// `bins[p]` is the DFT bin holding grid angle `p`.
    bins: Vec<usize>,
    fft: OnceLock<Arc<dyn Fft<f64>>>,
    steering: OnceLock<Arc<[Complex64]>>,
}

impl fmt::Debug for DoaGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DoaGrid")
            .field("points", &self.len())
            .field("antennas", &self.antennas)
            .field("phase_factor", &self.phase_factor)
            .finish()
    }
}

/// Half-wavelength grid; see [`DoaGrid::new`].
pub fn make_grid(points: usize, antennas: usize) -> Result<DoaGrid> {
    DoaGrid::new(points, antennas, PI)
}

impl DoaGrid {
    /// Grid of `points` angles for `antennas` elements with the given inter-element phase.
    ///
    /// Needs `points ≥ 2·antennas` and `points` even. Only `phase_factor = π`
    /// admits FFT evaluation; other spacings always use direct products.
    pub fn new(points: usize, antennas: usize, phase_factor: f64) -> Result<Self> {
        if antennas == 0 || points < 2 * antennas || !points.is_multiple_of(2) {
            return Err(DoaError::Config(format!(
                "grid of {points} points cannot serve {antennas} antennas (need an even N ≥ 2M)"
            )));
        }
        let step = 2.0 / points as f64;
        let angles: Arc<[f64]> = (0..points).map(|p| -1.0 + step * p as f64).collect();
        let bins = (0..points).map(|p| (points / 2 + points - p) % points).collect();
        Ok(Self {
            antennas,
            phase_factor,
            angles,
            bins,
            fft: OnceLock::new(),
            steering: OnceLock::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn phase_factor(&self) -> f64 {
        self.phase_factor
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn angle(&self, index: usize) -> f64 {
        self.angles[index]
    }

    /// Spacing between neighbouring grid angles, `2/N`.
    pub fn resolution(&self) -> f64 {
        2.0 / self.len() as f64
    }

    /// Nearest grid index to `u`.
    pub fn nearest_index(&self, u: f64) -> usize {
        let p = ((u + 1.0) / self.resolution()).round() as i64;
        p.clamp(0, self.len() as i64 - 1) as usize
    }

    /// DFT bin that holds grid angle `index`.
    pub fn bin_of(&self, index: usize) -> usize {
        self.bins[index]
    }

    pub fn supports_fft(&self) -> bool {
        self.phase_factor == PI
    }

    /// Steering vector of grid angle `index`, computed from the DFT phase.
    pub fn steering(&self, index: usize) -> &[Complex64] {
        let m = self.antennas;
        &self.steering_table()[index * m..(index + 1) * m]
    }

    fn steering_table(&self) -> &[Complex64] {
        self.steering.get_or_init(|| {
            let (n, m) = (self.len(), self.antennas);
            let mut table = Vec::with_capacity(n * m);
            for p in 0..n {
                if self.supports_fft() {
                    // integer phase index keeps grid and DFT entries identical
                    let bin = self.bins[p];
                    for e in 0..m {
                        let k = (e * bin) % n;
                        table.push(Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64));
                    }
                } else {
                    let u = self.angles[p];
                    for e in 0..m {
                        table.push(Complex64::from_polar(1.0, self.phase_factor * u * e as f64));
                    }
                }
            }
            table.into()
        })
    }

    fn fft_plan(&self) -> &Arc<dyn Fft<f64>> {
        self.fft
            .get_or_init(|| FftPlanner::new().plan_fft_forward(self.len()))
    }
}

/// Objective values over a grid, aligned with the grid's ascending angles.
#[derive(Debug, Clone)]
pub struct Pseudospectrum {
    pub values: Vec<f64>,
    pub angles: Arc<[f64]>,
    /// Points where an inverse objective hit [`SATURATION_VALUE`].
    pub saturated: usize,
}

impl Pseudospectrum {
    /// Index of the largest value, lowest index on ties; `None` if every point is masked.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.values.iter().enumerate() {
            if v == f64::NEG_INFINITY || v.is_nan() {
                continue;
            }
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| i)
    }

    pub fn masked(&self) -> usize {
        self.values.iter().filter(|v| **v == f64::NEG_INFINITY).count()
    }
}

/// How a numerator (and optional denominator) column norm become an objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveForm {
    /// `‖Xᴴa‖²`.
    Power,
    /// `1 / ‖Xᴴa‖²`, saturating instead of dividing by zero.
    InversePower,
    /// `‖Xᴴa‖² / ‖P⊥a‖²`, masked to −∞ on degenerate candidates.
    Ratio,
    /// `1 − ‖Xᴴa‖² / ‖P⊥a‖²`, masked likewise.
    ComplementRatio,
}

/// Matrices feeding one objective evaluation.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveOperands<'a> {
    pub numerator: &'a ComplexMatrix,
    /// Orthogonal-complement projector for the ratio forms.
    pub complement: Option<&'a ComplexMatrix>,
}

/// `‖Xᴴ a(u_p)‖²` for every grid angle by explicit products.
pub fn colnorms_sq_direct(x: &ComplexMatrix, grid: &DoaGrid) -> Vec<f64> {
    check_rows(x, grid);
    let (m, r) = (x.rows(), x.cols());
    let conj: Vec<Complex64> = x.as_slice().iter().map(|z| z.conj()).collect();
    let mut acc = vec![Complex64::new(0.0, 0.0); r];
    let mut out = Vec::with_capacity(grid.len());
    for p in 0..grid.len() {
        acc.fill(Complex64::new(0.0, 0.0));
        for (e, a) in grid.steering(p).iter().enumerate() {
            for (dst, xc) in acc.iter_mut().zip(&conj[e * r..(e + 1) * r]) {
                *dst += xc * a;
            }
        }
        out.push(acc.iter().map(Complex64::norm_sqr).sum());
    }
    debug_assert_eq!(m, grid.antennas());
    out
}

/// `‖Xᴴ a(u_p)‖²` for every grid angle through one length-`N` FFT per column.
///
/// Falls back to [`colnorms_sq_direct`] when the grid spacing is not
/// half-wavelength. Per-column spectra are combined by pairwise summation.
pub fn colnorms_sq_fft(x: &ComplexMatrix, grid: &DoaGrid) -> Vec<f64> {
    check_rows(x, grid);
    if !grid.supports_fft() {
        return colnorms_sq_direct(x, grid);
    }
    let n = grid.len();
    if x.cols() == 0 {
        return vec![0.0; n];
    }
    let fft = grid.fft_plan();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let by_bin = accumulate_columns(x, 0, x.cols(), &**fft, &mut buf, &mut scratch);
    (0..n).map(|p| by_bin[grid.bin_of(p)]).collect()
}

fn accumulate_columns(
    x: &ComplexMatrix,
    lo: usize,
    hi: usize,
    fft: &dyn Fft<f64>,
    buf: &mut [Complex64],
    scratch: &mut [Complex64],
) -> Vec<f64> {
    if hi - lo == 1 {
        buf.fill(Complex64::new(0.0, 0.0));
        for e in 0..x.rows() {
            buf[e] = x[(e, lo)].conj();
        }
        fft.process_with_scratch(buf, scratch);
        return buf.iter().map(Complex64::norm_sqr).collect();
    }
    let mid = lo + (hi - lo) / 2;
    let mut left = accumulate_columns(x, lo, mid, fft, buf, scratch);
    let right = accumulate_columns(x, mid, hi, fft, buf, scratch);
    for (l, r) in left.iter_mut().zip(&right) {
        *l += r;
    }
    left
}

fn check_rows(x: &ComplexMatrix, grid: &DoaGrid) {
    assert_eq!(
        x.rows(),
        grid.antennas(),
        "operand has {} rows but the grid serves {} antennas",
        x.rows(),
        grid.antennas()
    );
}

/// Column norms with the requested evaluator.
pub fn colnorms_sq(x: &ComplexMatrix, grid: &DoaGrid, evaluator: Evaluator) -> Vec<f64> {
    match evaluator {
        Evaluator::Direct => colnorms_sq_direct(x, grid),
        Evaluator::Fft => colnorms_sq_fft(x, grid),
    }
}

/// Evaluates an objective over the whole grid.
///
/// The ratio forms need `operands.complement`; its column norms give
/// `‖P⊥a‖²` because `P⊥` is Hermitian and idempotent.
pub fn evaluate_objective(
    operands: ObjectiveOperands<'_>,
    form: ObjectiveForm,
    grid: &DoaGrid,
    evaluator: Evaluator,
) -> Pseudospectrum {
    let numerator = colnorms_sq(operands.numerator, grid, evaluator);
    let m = grid.antennas() as f64;
    let mut saturated = 0;
    let values = match form {
        ObjectiveForm::Power => numerator,
        ObjectiveForm::InversePower => numerator
            .into_iter()
            .map(|v| {
                if v < SATURATION_TOL * m {
                    saturated += 1;
                    SATURATION_VALUE
                } else {
                    1.0 / v
                }
            })
            .collect(),
        ObjectiveForm::Ratio | ObjectiveForm::ComplementRatio => {
            let pc = operands
                .complement
                .expect("ratio objectives need the complement projector");
            let denominator = colnorms_sq(pc, grid, evaluator);
            numerator
                .into_iter()
                .zip(denominator)
                .map(|(num, den)| {
                    if den < MASK_TOL * m {
                        f64::NEG_INFINITY
                    } else if form == ObjectiveForm::Ratio {
                        num / den
                    } else {
                        1.0 - num / den
                    }
                })
                .collect()
        }
    };
    Pseudospectrum {
        values,
        angles: grid.angles.clone(),
        saturated,
    }
}

/// [`evaluate_objective`] through the FFT path.
pub fn objective_via_fft(operands: ObjectiveOperands<'_>, form: ObjectiveForm, grid: &DoaGrid) -> Pseudospectrum {
    evaluate_objective(operands, form, grid, Evaluator::Fft)
}

/// Sum by recursive halving; the order depends only on the length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}
