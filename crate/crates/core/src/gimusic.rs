//! Greedy iterative MUSIC: OMP/OLS selection steps driven by the residual
//! signal (or noise) subspace, all from a single eigendecomposition.

use std::fmt;
use std::hint::black_box;
use std::str::FromStr;

use crate::error::{DoaError, Result};
use crate::fastgrid::{evaluate_objective, DoaGrid, Evaluator, ObjectiveForm, ObjectiveOperands, Pseudospectrum};
use crate::greedy::{pick, Selection};
use crate::linalg::{hermitian_evd, ComplexMatrix};
use crate::subspace::{partition, SubspaceDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GimusicVariant {
    /// `‖S_kᴴa‖²`.
    OmpImusic,
    /// `‖S_kᴴa‖² / ‖P⊥a‖²`.
    OlsImusicSignal,
    /// `1 − ‖G_kᴴa‖² / ‖P⊥a‖²`; same selections as the signal form.
    OlsImusicNoise,
    /// `‖(S_k√Λs)ᴴa‖²`.
    OmpIwmusic,
    /// `‖(S_k√Λs)ᴴa‖² / ‖P⊥a‖²`.
    OlsIwmusic,
}

impl GimusicVariant {
    pub const ALL: [GimusicVariant; 5] = [
        GimusicVariant::OmpImusic,
        GimusicVariant::OlsImusicSignal,
        GimusicVariant::OlsImusicNoise,
        GimusicVariant::OmpIwmusic,
        GimusicVariant::OlsIwmusic,
    ];

    /// OLS-iMUSIC on whichever subspace is smaller.
    pub fn ols_for(order: usize, antennas: usize) -> Self {
        if order <= antennas - order {
            GimusicVariant::OlsImusicSignal
        } else {
            GimusicVariant::OlsImusicNoise
        }
    }

    pub fn is_weighted(self) -> bool {
        matches!(self, GimusicVariant::OmpIwmusic | GimusicVariant::OlsIwmusic)
    }

    pub fn uses_noise(self) -> bool {
        self == GimusicVariant::OlsImusicNoise
    }

    pub fn id(self) -> &'static str {
        match self {
            GimusicVariant::OmpImusic => "omp-imusic",
            GimusicVariant::OlsImusicSignal => "ols-imusic-signal",
            GimusicVariant::OlsImusicNoise => "ols-imusic-noise",
            GimusicVariant::OmpIwmusic => "omp-iwmusic",
            GimusicVariant::OlsIwmusic => "ols-iwmusic",
        }
    }

    fn form(self) -> ObjectiveForm {
        match self {
            GimusicVariant::OmpImusic | GimusicVariant::OmpIwmusic => ObjectiveForm::Power,
            GimusicVariant::OlsImusicSignal | GimusicVariant::OlsIwmusic => ObjectiveForm::Ratio,
            GimusicVariant::OlsImusicNoise => ObjectiveForm::ComplementRatio,
        }
    }
}

impl fmt::Display for GimusicVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for GimusicVariant {
    type Err = DoaError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.id() == s)
            .ok_or_else(|| DoaError::Config(format!("unknown G-iMUSIC variant '{s}'")))
    }
}

/// Residual subspaces `P⊥S` (and `P⊥G` for the noise form) over a selection.
#[derive(Debug, Clone)]
pub struct GimusicState {
    variant: GimusicVariant,
    selection: Selection,
    signal: ComplexMatrix,
    noise: Option<ComplexMatrix>,
    residual_signal: ComplexMatrix,
    residual_noise: Option<ComplexMatrix>,
}

impl GimusicState {
    pub fn new(dec: &SubspaceDecomposition, variant: GimusicVariant, phase_factor: f64) -> Self {
        let signal = if variant.is_weighted() {
            dec.weighted_signal()
        } else {
            dec.signal.clone()
        };
        let noise = variant.uses_noise().then(|| dec.noise.clone());
        GimusicState {
            variant,
            selection: Selection::new(dec.antennas(), phase_factor),
            residual_signal: signal.clone(),
            residual_noise: noise.clone(),
            signal,
            noise,
        }
    }

    pub fn variant(&self) -> GimusicVariant {
        self.variant
    }

    pub fn selection(&self) -> &Selection {
        &self.selection
    }

    pub fn selected(&self) -> &[f64] {
        self.selection.angles()
    }

    pub fn complement(&self) -> &ComplexMatrix {
        self.selection.complement()
    }

    /// `P⊥·S`, column-weighted by `√Λs` for the weighted variants.
    pub fn residual_signal(&self) -> &ComplexMatrix {
        &self.residual_signal
    }

    /// `P⊥·G`, tracked only by the noise-form variant.
    pub fn residual_noise(&self) -> Option<&ComplexMatrix> {
        self.residual_noise.as_ref()
    }

    pub fn objective(&self, grid: &DoaGrid, evaluator: Evaluator) -> Pseudospectrum {
        let numerator = match &self.residual_noise {
            Some(g) => g,
            None => &self.residual_signal,
        };
        let operands = ObjectiveOperands {
            numerator,
            complement: Some(self.complement()),
        };
        evaluate_objective(operands, self.variant.form(), grid, evaluator)
    }

    /// Extends the selection and re-projects the original subspaces. No EVD.
    pub fn update(&mut self, u: f64) -> Result<()> {
        self.selection.push(u)?;
        let pc = self.selection.complement();
        self.residual_signal = pc.matmul(&self.signal);
        self.residual_noise = self.noise.as_ref().map(|g| pc.matmul(g));
        Ok(())
    }
}

/// Options beyond the variant itself.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GimusicOptions {
    /// Re-decompose `P⊥RP⊥` every iteration and discard the result, to
    /// measure what per-iteration EVDs would cost. Selections are unchanged.
    pub evd_per_iter: bool,
}

/// One EVD of `R`, then `order` select/update rounds.
pub fn gimusic_estimate(
    r: &ComplexMatrix,
    order: usize,
    variant: GimusicVariant,
    grid: &DoaGrid,
    evaluator: Evaluator,
    options: GimusicOptions,
) -> Result<Vec<f64>> {
    let dec = partition(r, order)?;
    run(&dec, Some(r), order, variant, grid, evaluator, options)
}

/// Same as [`gimusic_estimate`] on an existing decomposition of order `order`.
pub fn gimusic_estimate_from(
    dec: &SubspaceDecomposition,
    variant: GimusicVariant,
    grid: &DoaGrid,
    evaluator: Evaluator,
) -> Result<Vec<f64>> {
    run(dec, None, dec.order(), variant, grid, evaluator, GimusicOptions::default())
}

fn run(
    dec: &SubspaceDecomposition,
    r: Option<&ComplexMatrix>,
    order: usize,
    variant: GimusicVariant,
    grid: &DoaGrid,
    evaluator: Evaluator,
    options: GimusicOptions,
) -> Result<Vec<f64>> {
    let mut state = GimusicState::new(dec, variant, grid.phase_factor());
    let mut out = Vec::with_capacity(order);
    for k in 0..order {
        if k > 0 && options.evd_per_iter {
            if let Some(r) = r {
                let pc = state.complement();
                let projected = pc.matmul(r).matmul(pc).hermitian_part();
                black_box(hermitian_evd(&projected)?);
            }
        }
        let u = pick(&state.objective(grid, evaluator), grid)?;
        out.push(u);
        if k + 1 < order {
            state.update(u)?;
        }
    }
    Ok(out)
}
