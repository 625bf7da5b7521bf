//! Direction-of-arrival estimation for uniform linear arrays through the
//! polynomial (annihilator) parameterization of the noise subspace.
//!
//! The crate provides the ML, MODE and PUMA fitting criteria, the MODE,
//! PUMA and MODEX/Enhanced-PUMA estimators, and the snapshot simulator used
//! to exercise them.

pub mod array_model;
pub mod criteria;
pub mod error;
pub mod estimators;
mod linalg;
pub mod sample_stats;

pub use nalgebra::{Complex, DMatrix, DVector};

/// Complex double used throughout.
pub type C64 = Complex<f64>;

pub use array_model::{
    angles_from_coefs, coefs_from_angles, polynomial_roots, projector_from_annihilator,
    projector_from_steering, steering_matrix, toeplitz_annihilator, wrap_angle, AngleSet,
    CoefVector,
};
pub use criteria::{kron, v_ml_angles, v_ml_coefs, v_mode, v_puma, vec, weighted_trace, CriterionValue};
pub use error::{Error, Result};
pub use estimators::{
    estimate, match_angles, mode_two_step, modex, puma_iterative, quadratic_form_matrix,
    AngleErrors, CandidateScore, EstimationResult, EstimatorConfig, Method,
};
pub use sample_stats::{
    noise_power_for_snr, sample_covariance, signal_weight, simulate_snapshots,
    subspace_decomposition, true_covariance, SampleCovariance, Scenario, SignalWeight,
    SnapshotSet, SubspaceDecomposition,
};
