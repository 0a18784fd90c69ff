//! Exact computations with directed information on finite alphabets.
//!
//! The library models a channel with memory and feedback over a finite
//! horizon as two families of stochastic kernels: an input policy
//! `p_i(x_i; x^{i-1}, y^{i-1})` that may look at past outputs, and a forward
//! channel `q_i(y_i; y^{i-1}, x^i)` that generates each output causally.
//! Every derived object — block conditional tables, joint measures,
//! marginals, reference products — is stored as an exact dense table, so
//! identities that hold in exact arithmetic hold here to floating-point
//! accuracy.
//!
//! What you can do with it:
//!
//! - build and convert between per-step kernels and their expanded block
//!   conditional tables ([`measures`]);
//! - evaluate directed information through three independent routes that
//!   must agree, plus the reverse (feedback) direction ([`directed_info`]);
//! - evaluate both variational bounds on directed information with their
//!   closed-form achievers and gap identities ([`variational`]);
//! - run alternating-optimization solvers for feedback capacity and the
//!   nonanticipative rate distortion function, cross-checked against
//!   brute-force grid oracles ([`extremum`]);
//! - exercise convexity, continuity and sandwich-bound properties on
//!   seeded random instances ([`properties`]);
//! - read and write the instance/result JSON dialect ([`format`]).
//!
//! The `diflow` binary exposes all of this as a batch CLI.

use thiserror::Error;

pub mod directed_info;
pub mod extremum;
pub mod format;
pub mod measures;
pub mod properties;
pub mod variational;

pub(crate) mod radix;

pub use measures::{
    compose_joint, compose_tables, kl_divergence, mix_conditional, pi_backward, pi_forward,
    ChainMarginals, ConditionalTable, Direction, ForwardChannel, InputPolicy, InstanceSpec,
    JointMeasure, Pmf,
};

pub use directed_info::{
    di_abs, di_cmi_sum, di_divergence, di_logratio, di_partition_sup, di_reverse,
    mutual_information, DirectedInfoReport, Route,
};

pub use variational::{
    gap_a, lambda_max_deviation, objective_a, objective_a_stepwise, objective_b,
    objective_b_stepwise, optimal_nu, optimal_reverse_decomposition, reciprocity_check,
    ReciprocityReport, ReverseDecomposition,
};

pub use extremum::{
    brute_force_capacity, brute_force_nrdf, feedback_capacity, nrdf, DistortionSpec, PowerSpec,
    SolveResult, SolverConfig,
};

pub use properties::{run_all_checks, PropertyReport, SamplerBounds};

/// Errors reported by construction and solver entry points.
#[derive(Debug, Error)]
pub enum Error {
    #[error("alphabet sizes must all be at least 1")]
    EmptyAlphabet,

    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("joint table would need {cells} cells, cap is {cap}")]
    TableTooLarge { cells: u128, cap: usize },

    #[error("probability mass must be a nonnegative finite number, got {0}")]
    NegativeMass(f64),

    #[error("row mass sums to {0}, outside 1 ± 1e-9")]
    NotNormalized(f64),

    #[error("operands were built from different instance specs")]
    SpecMismatch,

    #[error("conditional table has the wrong direction for this operation")]
    DirectionMismatch,

    #[error("mixing weight {0} lies outside [0, 1]")]
    WeightOutOfRange(f64),

    #[error("partition is not a disjoint cover: {0}")]
    BadPartition(String),

    #[error("source kernels must not depend on past outputs")]
    SourceDependsOnOutput,

    #[error("distortion budget {budget} is below the minimum achievable {minimum}")]
    InfeasibleDistortion { budget: f64, minimum: f64 },

    #[error("grid enumeration would evaluate {candidates} candidates, cap is {cap}")]
    GridTooLarge { candidates: u128, cap: u64 },

    #[error("invalid solver configuration: {0}")]
    BadSolverConfig(String),

    #[error("instance file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
