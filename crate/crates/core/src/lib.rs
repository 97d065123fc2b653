//! Direction-of-arrival estimation for uniform linear arrays.
//!
//! MUSIC and its weighted forms, OMP/OLS over the square-root covariance, and
//! greedy iterative MUSIC, all evaluated over a DFT-aligned angle grid.

pub mod error;
pub mod estimator;
pub mod eval;
pub mod fastgrid;
pub mod gimusic;
pub mod greedy;
pub mod linalg;
pub mod order;
pub mod scenario;
pub mod subspace;

pub use error::{DoaError, Result};
pub use estimator::{estimate, Method, MethodOptions};
pub use eval::{associate, detection_metrics, diagnostics, AssociationResult, DetectionMetrics, DiagnosticMetrics};
pub use fastgrid::{make_grid, DoaGrid, Evaluator, Pseudospectrum};
pub use gimusic::{GimusicOptions, GimusicVariant};
pub use greedy::GreedyMethod;
pub use linalg::{ComplexMatrix, HermitianEvd};
pub use num_complex::Complex64;
pub use order::{OrderCriterion, OrderEstimate};
pub use scenario::{GroundTruth, Observation, ScenarioConfig};
pub use subspace::{MusicVariant, SubspaceDecomposition};
