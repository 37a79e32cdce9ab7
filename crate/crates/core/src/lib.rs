//! Exact computation of matrix permanents with Ryser's inclusion-exclusion
//! formula and the Balasubramanian-Bax/Franklin-Glynn (BB/FG) sign-vector
//! formula, plus the tooling needed to study them:
//!
//! * [`algorithms`]: serial kernels in a sequential-fold ("faithful") mode and a
//!   Gray-code mode, a factorial-time reference and an exact rational oracle.
//! * [`parallel`]: range partitioning across worker threads with a
//!   deterministic, order-controlled reduction.
//! * [`generators`]: seed-determined matrix families (all-r, diagonal, Haar
//!   unitary, derived and special-derived submatrices).
//! * [`precision`]: rounding-error measurements against exact values and the
//!   two-algorithm double check.
//! * [`perf`]: timing sweeps and the `T = a * N^2 * 2^N * n^b` scaling model.

pub mod algorithms;
pub mod error;
pub mod exact;
pub mod generators;
pub mod matrix;
pub mod order;
pub mod parallel;
pub mod perf;
pub mod precision;
mod scalar;

pub use algorithms::{
    bbfg_permanent, exact_permanent, naive_permanent, pair_complement, ryser_permanent,
    Algorithm, ExactAlgorithm, Mode, PermanentValue, SignVector, SubsetIndex,
};
pub use error::{Error, Result};
pub use exact::{ExactMatrix, ExactScalar};
pub use matrix::{read_matrix, write_matrix, ComplexMatrix, ComplexScalar};
pub use order::{reduce_with_order, SignedTerm, SummationOrder};
pub use parallel::{make_plan, run_parallel, PartitionPlan, RunOptions, WorkerClass};
