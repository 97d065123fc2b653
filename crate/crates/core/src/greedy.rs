//! OMP and OLS over the square-root sample covariance.

use std::fmt;

use crate::error::{DoaError, Result};
use crate::fastgrid::{evaluate_objective, DoaGrid, Evaluator, ObjectiveForm, ObjectiveOperands, Pseudospectrum};
use crate::linalg::{projectors, ComplexMatrix};
use crate::scenario::steering_vector;

/// Two angles closer than this are the same selection.
pub const DUPLICATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GreedyMethod {
    Omp,
    Ols,
}

impl GreedyMethod {
    pub fn form(self) -> ObjectiveForm {
        match self {
            GreedyMethod::Omp => ObjectiveForm::Power,
            GreedyMethod::Ols => ObjectiveForm::Ratio,
        }
    }
}

impl fmt::Display for GreedyMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GreedyMethod::Omp => "omp",
            GreedyMethod::Ols => "ols",
        })
    }
}

/// Angles picked so far with the projector onto their complement.
///
/// The projector is rebuilt from the full steering matrix on every push.
#[derive(Debug, Clone)]
pub struct Selection {
    phase_factor: f64,
    angles: Vec<f64>,
    steering: ComplexMatrix,
    complement: ComplexMatrix,
}

impl Selection {
    pub fn new(antennas: usize, phase_factor: f64) -> Self {
        Selection {
            phase_factor,
            angles: Vec::new(),
            steering: ComplexMatrix::zeros(antennas, 0),
            complement: ComplexMatrix::identity(antennas),
        }
    }

    pub fn antennas(&self) -> usize {
        self.steering.rows()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn steering(&self) -> &ComplexMatrix {
        &self.steering
    }

    /// `P⊥` for the current selection.
    pub fn complement(&self) -> &ComplexMatrix {
        &self.complement
    }

    /// Adds `u`; leaves `self` untouched on error.
    pub fn push(&mut self, u: f64) -> Result<()> {
        if self.angles.iter().any(|s| (s - u).abs() < DUPLICATE_TOL) {
            return Err(DoaError::Contract(format!("angle {u} is already selected")));
        }
        let a = steering_vector(u, self.antennas(), self.phase_factor)?;
        let column = ComplexMatrix::from_columns(self.antennas(), &[a])?;
        let steering = self.steering.hstack(&column);
        let (_, complement) = projectors(&steering)?;
        self.angles.push(u);
        self.steering = steering;
        self.complement = complement;
        Ok(())
    }
}

/// Iteration state of OMP/OLS.
#[derive(Debug, Clone)]
pub struct GreedyState {
    selection: Selection,
    sqrt_cov: ComplexMatrix,
    residual_sqrt: ComplexMatrix,
}

impl GreedyState {
    pub fn new(sqrt_cov: ComplexMatrix, phase_factor: f64) -> Self {
        let selection = Selection::new(sqrt_cov.rows(), phase_factor);
        GreedyState {
            selection,
            residual_sqrt: sqrt_cov.clone(),
            sqrt_cov,
        }
    }

    pub fn selection(&self) -> &Selection {
        &self.selection
    }

    pub fn selected(&self) -> &[f64] {
        self.selection.angles()
    }

    pub fn iteration(&self) -> usize {
        self.selection.len()
    }

    pub fn complement(&self) -> &ComplexMatrix {
        self.selection.complement()
    }

    pub fn sqrt_cov(&self) -> &ComplexMatrix {
        &self.sqrt_cov
    }

    /// `P⊥·R^½`.
    pub fn residual_sqrt(&self) -> &ComplexMatrix {
        &self.residual_sqrt
    }

    /// OMP: `‖(P⊥R^½)ᴴa‖²`. OLS: that over `‖P⊥a‖²`, masked where the
    /// candidate already lies in the selected span.
    pub fn objective(&self, grid: &DoaGrid, method: GreedyMethod, evaluator: Evaluator) -> Pseudospectrum {
        let operands = ObjectiveOperands {
            numerator: &self.residual_sqrt,
            complement: Some(self.complement()),
        };
        evaluate_objective(operands, method.form(), grid, evaluator)
    }

    pub fn update(&mut self, u: f64) -> Result<()> {
        self.selection.push(u)?;
        self.residual_sqrt = self.selection.complement().matmul(&self.sqrt_cov);
        Ok(())
    }

    /// `trace(R·P)`: energy explained by the selected steering vectors.
    pub fn captured_energy(&self) -> f64 {
        captured_energy(&self.sqrt_cov, &self.residual_sqrt)
    }
}

/// `trace(R·P) = ‖R^½‖²_F − ‖P⊥R^½‖²_F`.
pub fn captured_energy(sqrt_cov: &ComplexMatrix, residual_sqrt: &ComplexMatrix) -> f64 {
    sqrt_cov.frobenius_norm_sq() - residual_sqrt.frobenius_norm_sq()
}

pub(crate) fn pick(ps: &Pseudospectrum, grid: &DoaGrid) -> Result<f64> {
    ps.argmax()
        .map(|i| grid.angle(i))
        .ok_or_else(|| DoaError::Singular("every grid candidate is in the selected span".into()))
}

/// `order` OMP/OLS iterations; angles in selection order.
pub fn greedy_estimate(
    sqrt_cov: &ComplexMatrix,
    order: usize,
    method: GreedyMethod,
    grid: &DoaGrid,
    evaluator: Evaluator,
) -> Result<Vec<f64>> {
    let m = sqrt_cov.rows();
    if order == 0 || order >= m {
        return Err(DoaError::Contract(format!("order {order} must be in 1..{m}")));
    }
    let mut state = GreedyState::new(sqrt_cov.clone(), grid.phase_factor());
    for k in 0..order {
        let u = pick(&state.objective(grid, method, evaluator), grid)?;
        if k + 1 == order {
            let mut out = state.selected().to_vec();
            out.push(u);
            return Ok(out);
        }
        state.update(u)?;
    }
    unreachable!("loop returns on its last iteration")
}
