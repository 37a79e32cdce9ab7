//! Permanent kernels.
//!
//! Both exponential formulas come in two modes:
//!
//! * **faithful** recomputes every inner sum from scratch for every term, so
//!   each term is a fixed sequence of binary64 operations: inner sums are
//!   left folds in ascending index order starting from `0`, the product is a
//!   left fold in ascending index order, and terms are combined in the chosen
//!   [`SummationOrder`]. The result depends only on the matrix, the range and
//!   the order, never on how the work was vectorised.
//! * **graycode** walks the terms in reflected-binary order and updates the
//!   inner sums with one addition per row (Ryser) or column (BB/FG) per step.
//!
//! Ryser terms are indexed by [`SubsetIndex`] over `[0, 2^n)`, BB/FG terms by
//! [`SignVector`] codes over `[0, 2^(n-1))`. A range covering every term
//! also gets the final factor: `(-1)^n` for Ryser, the division by `2^(n-1)`
//! for BB/FG.

mod bbfg;
mod exact;
pub(crate) mod kernel;
mod naive;
mod ryser;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::order::SummationOrder;

pub use exact::{exact_permanent, exact_permanent_of, EXACT_MAX_N};
pub use kernel::{graycode_audit, GrayAudit};
pub use naive::{naive_permanent, NAIVE_MAX_N};

use kernel::{Formula, Job};

/// Largest size accepted by the floating-point kernels.
pub const MAX_N: usize = 62;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Naive,
    Ryser,
    Bbfg,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Faithful,
    Graycode,
}

/// Formula evaluated by the exact oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExactAlgorithm {
    Ryser,
    Bbfg,
}

macro_rules! named_enum {
    ($ty:ident { $($var:ident => $name:literal),* $(,)? }) => {
        impl $ty {
            pub fn name(&self) -> &'static str {
                match self { $($ty::$var => $name),* }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($ty::$var),)*
                    _ => Err(Error::Invalid(format!(
                        concat!("unknown ", stringify!($ty), " '{}' (expected one of: {})"),
                        s,
                        [$($name),*].join(", ")
                    ))),
                }
            }
        }
    };
}

named_enum!(Algorithm { Naive => "naive", Ryser => "ryser", Bbfg => "bbfg", Exact => "exact" });
named_enum!(Mode { Faithful => "faithful", Graycode => "graycode" });
named_enum!(ExactAlgorithm { Ryser => "ryser", Bbfg => "bbfg" });

/// A computed permanent (or partial sum) with everything needed to
/// reproduce it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermanentValue {
    pub value: Complex64,
    pub algorithm: Algorithm,
    pub mode: Mode,
    pub order: SummationOrder,
    pub workers: usize,
    /// False for a partial sum over part of the term range; such values carry
    /// no final factor.
    pub complete: bool,
}

/// A column subset `S`: bit `j` set means column `j` (0-based) is in `S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetIndex(pub u64);

impl SubsetIndex {
    pub fn contains(self, col: usize) -> bool {
        self.0 >> col & 1 == 1
    }

    /// `|S|`.
    pub fn size(self) -> u32 {
        self.0.count_ones()
    }

    pub fn columns(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            (bits != 0).then(|| {
                let j = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                j
            })
        })
    }

    /// Sign `(-1)^|S|` of the term.
    pub fn sign(self) -> i8 {
        if self.size() % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

/// A sign vector `delta` of length `n` with `delta[0] = +1`. Bit `i - 1` of
/// `code` gives `delta[i]`; a set bit means `+1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SignVector {
    pub code: u64,
    pub n: usize,
}

impl SignVector {
    pub fn new(code: u64, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_N + 1 || code >> (n - 1) != 0 {
            return Err(Error::Invalid(format!("code {code} is not a sign vector of length {n}")));
        }
        Ok(Self { code, n })
    }

    /// `delta[i]` for a 0-based row index.
    pub fn delta(self, i: usize) -> i8 {
        if i == 0 || self.code >> (i - 1) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn minus_count(self) -> u32 {
        (self.n as u32 - 1) - self.code.count_ones()
    }

    /// The product of all entries of `delta`.
    pub fn sign(self) -> i8 {
        if self.minus_count() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn deltas(self) -> Vec<i8> {
        (0..self.n).map(|i| self.delta(i)).collect()
    }
}

/// `2^n - iter - 1`: the complement subset used by the load-balanced Ryser
/// schedule.
pub fn pair_complement(iter: u64, n: usize) -> u64 {
    debug_assert!(n <= 63 && iter >> n == 0);
    (1u64 << n) - iter - 1
}

/// Number of terms of a formula at size `n`.
pub fn term_count(algo: Algorithm, n: usize) -> Result<u64> {
    check_size(n)?;
    match algo {
        Algorithm::Ryser => Ok(1 << n),
        Algorithm::Bbfg => Ok(1 << (n - 1)),
        other => Err(Error::Invalid(format!("{other} has no term range"))),
    }
}

pub(crate) fn check_size(n: usize) -> Result<()> {
    if (1..=MAX_N).contains(&n) {
        Ok(())
    } else {
        Err(Error::SizeOutOfRange {
            what: "the floating-point kernels",
            n,
            min: 1,
            max: MAX_N,
        })
    }
}

/// Ryser's formula over the subsets in `range`. In graycode mode (and for
/// `Random` order) the range is over visiting positions rather than subset
/// indices; the full range visits every subset in either case.
pub fn ryser_permanent(
    m: &ComplexMatrix,
    mode: Mode,
    range: Range<u64>,
    order: SummationOrder,
) -> Result<PermanentValue> {
    run_serial(m, Formula::Ryser, mode, range, order)
}

/// The BB/FG formula over the sign-vector codes in `range` (positions in
/// graycode mode or `Random` order).
pub fn bbfg_permanent(
    m: &ComplexMatrix,
    mode: Mode,
    range: Range<u64>,
    order: SummationOrder,
) -> Result<PermanentValue> {
    run_serial(m, Formula::Bbfg, mode, range, order)
}

/// Full-range permanent on one thread with any algorithm. `Exact` is rounded
/// to binary64; `mode` and `order` are ignored by `Naive` and `Exact`.
pub fn permanent(
    m: &ComplexMatrix,
    algo: Algorithm,
    mode: Mode,
    order: SummationOrder,
) -> Result<PermanentValue> {
    match algo {
        Algorithm::Naive => naive_permanent(m),
        Algorithm::Exact => Ok(PermanentValue {
            value: exact_permanent(m, ExactAlgorithm::Ryser)?.to_c64(),
            algorithm: Algorithm::Exact,
            mode: Mode::Faithful,
            order: SummationOrder::Original,
            workers: 1,
            complete: true,
        }),
        Algorithm::Ryser => ryser_permanent(m, mode, 0..1 << m.n(), order),
        Algorithm::Bbfg => bbfg_permanent(m, mode, 0..1 << (m.n() - 1), order),
    }
}

fn run_serial(
    m: &ComplexMatrix,
    formula: Formula,
    mode: Mode,
    range: Range<u64>,
    order: SummationOrder,
) -> Result<PermanentValue> {
    let job = Job::new(m, formula, mode, order, false)?;
    let partial = job.run(range.start, range.end)?;
    let complete = job.is_complete(range.start, range.end);
    let value = if complete {
        job.finish(partial)
    } else {
        partial.finish()
    };
    Ok(PermanentValue {
        value,
        algorithm: formula.algorithm(),
        mode,
        order,
        workers: 1,
        complete,
    })
}
