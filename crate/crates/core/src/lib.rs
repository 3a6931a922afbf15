//! Compiler and simulator for dynamical-decoupling pulse sequences on a
//! single spin-1/2.
//!
//! The crate is organized around a small pipeline:
//!
//! 1. [`sequence`] expands a named sequence family (CPMG, UDD, the XY family,
//!    concatenated DD, KDD) into a flat, timed [`sequence::PulseProgram`].
//! 2. [`noise`] provides static control-error models (flip-angle fraction,
//!    offset) and an Ornstein-Uhlenbeck dephasing bath with deterministic,
//!    per-trajectory random streams.
//! 3. [`simulator`] propagates a program under errors and noise using exact
//!    SU(2) propagators from [`su2`], producing cycle propagators and
//!    stroboscopic magnetization traces.
//! 4. [`analysis`] derives the quantities of interest: fidelity-decay curves,
//!    2-D robustness maps, 1/e decay times and duty-cycle sweeps.
//!
//! All operations are pure functions of their inputs and the seeds they are
//! given; re-running any job with the same seed produces bit-identical output
//! regardless of how work is partitioned across threads.

pub mod analysis;
pub mod noise;
pub mod sequence;
pub mod simulator;
pub mod su2;

pub use analysis::{DecayFit, DecayMethod, FidelityCurve, MapResult, SweepRow};
pub use noise::{ControlError, GaussianEnsemble, NoiseProcess, OuPath};
pub use sequence::{DelayEvent, Event, Family, PulseEvent, PulseProgram, SequenceSpec};
pub use simulator::{AveragingRecipe, InitialState, Sampling, TraceResult};
pub use su2::{compose, evolve_static, fidelity, HamiltonianParams, Unitary2};

/// Errors shared by the compiler, simulator and analysis layers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("cannot compose an empty list of propagators")]
    EmptyComposition,
    #[error("fidelity is undefined for a zero-norm operand")]
    ZeroNormOperand,
    #[error("unsupported sequence: {0}")]
    UnsupportedSequence(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("noise path covers {covered_us} us but the run needs {needed_us} us")]
    NoisePathTooShort { covered_us: f64, needed_us: f64 },
    #[error("trace contains no finite samples")]
    EmptyTrace,
}

pub type Result<T> = std::result::Result<T, Error>;
