//! Finite-dimensional measurement simulator and verifier.
//!
//! Builds maximally entangled pairs, gates and black-box flash devices,
//! runs the source/gate/meter/device experiments, recovers the operator
//! behind any probability rule that satisfies the frame-function premises,
//! and checks that a device measuring an observable is an eigenspace
//! projector.

pub mod bornrule;
pub mod envariance;
pub mod error;
pub mod experiments;
pub mod gleason;
pub mod linalg;
pub mod qmodel;
pub mod rng;

pub use bornrule::{born_probability, projector_onto_eigenspace, verify_projective_device, Observable, ProjectiveVerdict};
pub use envariance::{apply_envariant_pair, envariance_report, EnvarianceReport};
pub use error::{Error, Result};
pub use experiments::{
    basis_sum_check, exact_probability, monte_carlo_probability, verify_permutation_identity, ExperimentConfig,
    ExperimentResult, PermutationReport, Variant,
};
pub use gleason::{
    reconstruct_operator, reduce_two_dim, verify_gleason_premises, verify_quadratic_form, ProbabilityOracle,
    QuadraticFormOracle,
};
pub use linalg::{hermitian_eigendecomposition, tensor_product, ComplexMatrix, Spectrum};
pub use qmodel::{
    apply_gate, device_probability, joint_device_probability, max_entangled_state, meter_measure, sample_device,
    BipartiteState, HermitianOperator, MeasurementRecord, Povm, PovmElement, PureState, Side, UnitaryGate,
};
pub use num_complex::Complex64;
