//! Constraint-guided seed reduction for fuzzing.
//!
//! * [`reducer`] shrinks a seed with delta debugging while keeping a share of
//!   its statement coverage, a minimum size reduction and its exit status.
//! * [`oracle`] runs targets: external programs that write a coverage report,
//!   or deterministic built-in simulations.
//! * [`fuzzer`] is a small coverage-guided fuzzer used to compare how
//!   original and reduced seeds perform as campaign starting points.
//! * [`byteviz`] records generated inputs as hex lines and renders them as
//!   byte-color images.
//!
//! The constraint arithmetic is generic over [`Scalar`]; the aliases below
//! fix the two instantiations used in practice.

pub mod byteviz;
pub mod clock;
pub mod fuzzer;
pub mod model;
pub mod oracle;
pub mod reducer;
pub mod scalar;

pub use clock::{Clock, ClockMode};
pub use model::{
    chunk_ranges, cov_similarity, partition, percent_reduction, remove_chunk, CoverageSet, ExecutionOutcome,
    ExitStatus, ModelError, Seed, Unit,
};
pub use oracle::{execute, ExternalTarget, OracleError, SimulatedTarget, Target, TargetSpec};
pub use reducer::{check_constraints, reduce, ConstraintCheck, ReduceError, ReductionStatus, SeedType, Violation};
pub use scalar::Scalar;

/// Exact rational scalar.
pub type Exact = num_rational::Ratio<i64>;

pub type ReductionConfig = model::ReductionConfig<f64>;
pub type ExactReductionConfig = model::ReductionConfig<Exact>;
pub type ReductionConfigF32 = model::ReductionConfig<f32>;
pub type ReductionReport = reducer::ReductionReport<f64>;
pub type ExactReductionReport = reducer::ReductionReport<Exact>;
