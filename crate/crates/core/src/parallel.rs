//! Range partitioning and ordered reduction across worker threads.
//!
//! Each plan range runs on its own thread. Partial sums are not kept per
//! worker: every range is cut at fixed chunk boundaries (a power of two that
//! depends only on the term count), each piece gets a fresh accumulator, and
//! the pieces are merged in ascending position order. When worker
//! boundaries fall on chunk boundaries, which holds for power-of-two worker
//! counts, the result is therefore bit-identical for every worker count.
//! For `Merge` order the chunking is invisible: aligned chunks are exactly
//! the subtrees of the serial pairwise tree.

use std::thread;
use std::time::Instant;

use num_complex::Complex64;

use crate::algorithms::kernel::{Formula, Job};
use crate::algorithms::{Algorithm, Mode, PermanentValue};
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::order::{Partial, SummationOrder};

/// Which side of a ratio split a range belongs to. Without a ratio every
/// range is class `A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum WorkerClass {
    /// Front part of a worker's share.
    A,
    /// Back part of a worker's share.
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct PlanRange {
    pub worker: usize,
    pub class: WorkerClass,
    pub lo: u64,
    pub hi: u64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PartitionPlan {
    pub total: u64,
    pub workers: usize,
    pub ratio: Option<f64>,
    /// Sorted, disjoint, non-empty, covering `[0, total)`.
    pub ranges: Vec<PlanRange>,
}

/// Splits `[0, total)` into `workers` contiguous ranges whose lengths differ
/// by at most one, longer ranges first. With `ratio = r` each range is
/// further split at `floor(len * r)` into a class-`A` front and a class-`B`
/// back (empty parts are dropped).
pub fn make_plan(total: u64, workers: usize, ratio: Option<f64>) -> Result<PartitionPlan> {
    if workers == 0 {
        return Err(Error::Plan("at least one worker is needed".into()));
    }
    if total < workers as u64 {
        return Err(Error::Plan(format!("{total} terms cannot feed {workers} workers")));
    }
    if let Some(r) = ratio {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Plan(format!("ratio {r} is outside (0, 1)")));
        }
    }
    let w = workers as u64;
    let (base, extra) = (total / w, total % w);
    let mut ranges = Vec::with_capacity(workers * 2);
    let mut lo = 0;
    for worker in 0..workers {
        let len = base + u64::from((worker as u64) < extra);
        let hi = lo + len;
        match ratio {
            None => ranges.push(PlanRange {
                worker,
                class: WorkerClass::A,
                lo,
                hi,
            }),
            Some(r) => {
                let cut = lo + (len as f64 * r).floor() as u64;
                for (class, a, b) in [(WorkerClass::A, lo, cut), (WorkerClass::B, cut, hi)] {
                    if a < b {
                        ranges.push(PlanRange {
                            worker,
                            class,
                            lo: a,
                            hi: b,
                        });
                    }
                }
            }
        }
        lo = hi;
    }
    Ok(PartitionPlan {
        total,
        workers,
        ratio,
        ranges,
    })
}

/// A worker that runs slower than the rest: after computing, it idles for
/// `(factor - 1)` times its own compute time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Straggler {
    pub worker: usize,
    pub factor: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub mode: Mode,
    pub order: SummationOrder,
    /// Ryser only: pair every subset with its complement.
    pub balance: bool,
    pub straggler: Option<Straggler>,
}

impl RunOptions {
    pub fn new(mode: Mode, order: SummationOrder) -> Self {
        Self {
            mode,
            order,
            balance: false,
            straggler: None,
        }
    }

    pub fn balanced(mut self, balance: bool) -> Self {
        self.balance = balance;
        self
    }

    pub fn with_straggler(mut self, worker: usize, factor: f64) -> Self {
        self.straggler = Some(Straggler { worker, factor });
        self
    }
}

impl Default for RunOptions {
    fn default() -> Self {
        Self::new(Mode::Graycode, SummationOrder::Original)
    }
}

/// Result of [`run_parallel_timed`].
#[derive(Clone, Debug)]
pub struct ParallelRun {
    pub value: PermanentValue,
    /// Busy time of each plan range, including any straggler delay.
    pub range_seconds: Vec<f64>,
    pub wall_seconds: f64,
}

pub fn run_parallel(
    m: &ComplexMatrix,
    algo: Algorithm,
    plan: &PartitionPlan,
    opts: &RunOptions,
) -> Result<PermanentValue> {
    Ok(run_parallel_timed(m, algo, plan, opts)?.value)
}

/// Chunk width in positions for a walk of `positions` positions.
pub fn chunk_size(positions: u64) -> u64 {
    let bits = 64 - positions.saturating_sub(1).leading_zeros();
    1u64 << bits.saturating_sub(16).max(12)
}

pub fn run_parallel_timed(
    m: &ComplexMatrix,
    algo: Algorithm,
    plan: &PartitionPlan,
    opts: &RunOptions,
) -> Result<ParallelRun> {
    let formula = Formula::from_algorithm(algo)?;
    let job = Job::new(m, formula, opts.mode, opts.order, opts.balance)?;
    let expected = formula.terms(job.n);
    if plan.total != expected {
        return Err(Error::Plan(format!(
            "plan covers {} terms but {algo} at n={} has {expected}",
            plan.total, job.n
        )));
    }
    if let Some(s) = opts.straggler {
        if s.worker >= plan.workers || !(s.factor >= 1.0) {
            return Err(Error::Plan(format!(
                "straggler worker {} with factor {} is invalid for {} workers",
                s.worker, s.factor, plan.workers
            )));
        }
    }
    let chunk = chunk_size(job.positions());
    let to_positions = |r: &PlanRange| {
        if opts.balance {
            (r.lo.div_ceil(2), r.hi.div_ceil(2))
        } else {
            (r.lo, r.hi)
        }
    };

    let start = Instant::now();
    let work = |r: &PlanRange| -> Result<(Vec<(u64, Partial<Complex64>)>, f64)> {
        let t0 = Instant::now();
        let (lo, hi) = to_positions(r);
        let mut pieces = Vec::new();
        let mut a = lo;
        while a < hi {
            let b = hi.min((a / chunk + 1) * chunk);
            pieces.push((a, job.run(a, b)?));
            a = b;
        }
        let busy = t0.elapsed();
        if let Some(s) = opts.straggler.filter(|s| s.worker == r.worker) {
            thread::sleep(busy.mul_f64(s.factor - 1.0));
        }
        Ok((pieces, t0.elapsed().as_secs_f64()))
    };
    let results: Vec<Result<_>> = if plan.ranges.len() == 1 {
        vec![work(&plan.ranges[0])]
    } else {
        thread::scope(|scope| {
            let handles: Vec<_> = plan
                .ranges
                .iter()
                .map(|r| scope.spawn(move || work(r)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker thread panicked"))
                .collect()
        })
    };
    let wall = start.elapsed();

    let mut range_seconds = Vec::with_capacity(results.len());
    let mut pieces = Vec::new();
    for res in results {
        let (p, secs) = res?;
        range_seconds.push(secs);
        pieces.extend(p);
    }
    pieces.sort_by_key(|(lo, _)| *lo);
    let total = pieces
        .into_iter()
        .map(|(_, p)| p)
        .fold(Partial::empty(opts.order), Partial::merge);

    Ok(ParallelRun {
        value: PermanentValue {
            value: job.finish(total),
            algorithm: algo,
            mode: opts.mode,
            order: opts.order,
            workers: plan.workers,
            complete: true,
        },
        range_seconds,
        wall_seconds: wall.as_secs_f64(),
    })
}
