//! Exact-arithmetic reconstruction of depth-3 arithmetic circuits over prime
//! fields from black-box evaluation access.
//!
//! The library has three reconstruction entry points:
//!
//! * [`waring::reconstruct_sumpowsum`] decomposes a sum of `k` powers of
//!   affine forms (a Waring-type decomposition) with optimal top fan-in.
//! * [`reconstruct::reconstruct_multilinear`] properly learns multilinear
//!   depth-3 circuits with bounded top fan-in by semantic clustering of the
//!   product gates.
//! * [`reconstruct::reconstruct_setml`] decomposes set-multilinear depth-3
//!   circuits (equivalently, low-rank tensors given as polynomials) with
//!   optimal fan-in for small ranks.
//!
//! All arithmetic is exact over a configurable prime field; randomness is
//! confined to explicitly seeded generators so every run is reproducible.

pub mod algebra;
pub mod circuits;
pub mod cli;
pub mod cluster;
pub mod essential;
pub mod lowdeg;
pub mod oracle;
pub mod poly;
pub mod preserve;
pub mod reconstruct;
pub mod semrank;
pub mod waring;

use std::fmt;

/// Crate-wide error type.
///
/// Reconstruction routines distinguish "the input is provably not in the
/// target class" from "a configured resource budget was exhausted"; callers
/// (and the CLI exit codes) rely on that distinction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Division by zero or inversion of a non-unit.
    DivisionByZero,
    /// A matrix that was required to be invertible is singular.
    Singular(String),
    /// The input is not in the class the routine reconstructs, with a reason.
    NotInClass(String),
    /// A configured resource budget was exhausted before an answer was found.
    BudgetExceeded {
        stage: &'static str,
        detail: String,
    },
    /// Error-correcting decoding failed; no polynomial within the error
    /// budget explains the samples.
    DecodeFailure(String),
    /// A precondition on the arguments does not hold.
    Invalid(String),
    /// An internal consistency check failed; indicates a bug, never silent
    /// wrong output.
    Internal(String),
    /// Input or output handling failed (CLI file and format errors).
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DivisionByZero => write!(f, "division by zero"),
            Error::Singular(m) => write!(f, "singular matrix: {m}"),
            Error::NotInClass(m) => write!(f, "input not in target class: {m}"),
            Error::BudgetExceeded { stage, detail } => {
                write!(f, "budget exceeded in {stage}: {detail}")
            }
            Error::DecodeFailure(m) => write!(f, "decode failure: {m}"),
            Error::Invalid(m) => write!(f, "invalid argument: {m}"),
            Error::Internal(m) => write!(f, "internal error: {m}"),
            Error::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

/// Resource budgets and tuning knobs shared by the learners and drivers.
///
/// The defaults target "desk scale" instances: top fan-in at most 3, core
/// degree at most 4 after linear factors are stripped, and a handful of
/// essential variables. Every budget violation surfaces as
/// [`Error::BudgetExceeded`] rather than silent truncation.
#[derive(Debug, Clone)]
pub struct Budgets {
    /// Largest top fan-in the bounded-degree learner will attempt.
    pub max_k: usize,
    /// Largest degree of the linear-factor-free core handled by candidate
    /// recovery.
    pub max_core_degree: usize,
    /// Largest number of essential variables the core recovery enumerates
    /// over.
    pub max_core_vars: usize,
    /// Largest number of essential variables dense interpolation accepts.
    pub max_interp_vars: usize,
    /// Cap on recovered candidate circuits examined per fan-in.
    pub max_recovery_candidates: usize,
    /// Semantic-rank promise handed to cluster learners when no tighter bound
    /// is known.
    pub semrank_promise: usize,
    /// Cap on the size of a variable-preserving set.
    pub preserve_max_b: usize,
    /// Cap on main-loop iterations while growing a preserving set.
    pub preserve_max_iters: usize,
    /// Error exponent for probabilistic identity tests: the false-positive
    /// probability is at most 2^-exponent.
    pub pit_exponent: u32,
    /// Error budget for error-corrected cluster evaluation at arbitrary
    /// points.
    pub bw_errors: usize,
    /// Minimum number of line samples collected for error-corrected cluster
    /// evaluation.
    pub bw_min_window: usize,
    /// Node budget for the exhaustive polynomial-system solver.
    pub solver_nodes: u64,
    /// Restart budget for the randomized polynomial-system solver.
    pub solver_restarts: u32,
    /// Fresh-anchor retries per structured failure in the reconstruction
    /// sweep.
    pub sweep_retries: u32,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            max_k: 3,
            max_core_degree: 4,
            max_core_vars: 6,
            max_interp_vars: 20,
            max_recovery_candidates: 64,
            semrank_promise: 8,
            preserve_max_b: 64,
            preserve_max_iters: 512,
            pit_exponent: 40,
            bw_errors: 8,
            bw_min_window: 64,
            solver_nodes: 2_000_000,
            solver_restarts: 32,
            sweep_retries: 3,
        }
    }
}
