//! Shared plumbing between the public kernel entry points and the parallel
//! engine: matrix preparation, variant selection and final factors.

use num_complex::Complex64;

use super::{bbfg, check_size, ryser, Algorithm, Mode};
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::order::{accumulate_with, Partial, SeededShuffle, SummationOrder};
use crate::scalar::{Lanes, Num};

/// Bits of the term index covered by the prefix table in faithful mode.
const TABLE_BITS: usize = 11;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Formula {
    Ryser,
    Bbfg,
}

impl Formula {
    pub(crate) fn from_algorithm(algo: Algorithm) -> Result<Self> {
        match algo {
            Algorithm::Ryser => Ok(Formula::Ryser),
            Algorithm::Bbfg => Ok(Formula::Bbfg),
            other => Err(Error::Invalid(format!(
                "{other} is not a range-partitioned formula (use ryser or bbfg)"
            ))),
        }
    }

    pub(crate) fn algorithm(self) -> Algorithm {
        match self {
            Formula::Ryser => Algorithm::Ryser,
            Formula::Bbfg => Algorithm::Bbfg,
        }
    }

    pub(crate) fn terms(self, n: usize) -> u64 {
        match self {
            Formula::Ryser => 1 << n,
            Formula::Bbfg => 1 << (n - 1),
        }
    }
}

/// Matrix data in the layout the kernels read.
pub(crate) struct Prepared<T> {
    pub n: usize,
    /// Row-major entries.
    pub a: Vec<T>,
    /// Column-major entries.
    pub at: Vec<T>,
    /// Row-major entries times two (BB/FG graycode only).
    pub twice: Vec<T>,
    /// Prefix-table width in bits; 0 when there is no table.
    pub k: usize,
    pub table: Vec<T>,
}

impl<T: Lanes> Prepared<T> {
    fn new(m: &ComplexMatrix, formula: Formula, mode: Mode, tabled: bool) -> Self {
        let n = m.n();
        let a: Vec<T> = m.entries().iter().map(|&z| T::from_c64(z)).collect();
        let at = (0..n * n).map(|idx| a[(idx % n) * n + idx / n]).collect();
        let twice = if formula == Formula::Bbfg && mode == Mode::Graycode {
            a.iter().map(|&x| x.times_two()).collect()
        } else {
            Vec::new()
        };
        let mut p = Self {
            n,
            a,
            at,
            twice,
            k: 0,
            table: Vec::new(),
        };
        let bits = match formula {
            Formula::Ryser => n.min(TABLE_BITS),
            Formula::Bbfg => (n - 1).min(TABLE_BITS),
        };
        // The lane kernels need the table to hold at least one block.
        if tabled && 1 << bits >= T::LANES {
            match formula {
                Formula::Ryser => ryser::build_table(&mut p, bits),
                Formula::Bbfg => bbfg::build_table(&mut p, bits),
            }
        }
        p
    }
}

enum Data {
    Real(Prepared<f64>),
    Complex(Prepared<Complex64>),
}

/// A fully specified evaluation of one formula on one matrix. Ranges of
/// positions can be evaluated independently and their partial sums merged
/// in ascending position order.
pub(crate) struct Job {
    pub n: usize,
    pub formula: Formula,
    pub mode: Mode,
    pub order: SummationOrder,
    pub balance: bool,
    shuffle: Option<SeededShuffle>,
    data: Data,
}

impl Job {
    pub(crate) fn new(
        m: &ComplexMatrix,
        formula: Formula,
        mode: Mode,
        order: SummationOrder,
        balance: bool,
    ) -> Result<Self> {
        let n = m.n();
        check_size(n)?;
        let random = matches!(order, SummationOrder::Random(_));
        if random && mode == Mode::Graycode {
            return Err(Error::Invalid(
                "random order needs faithful mode; graycode visits terms in a fixed walk".into(),
            ));
        }
        if balance && formula != Formula::Ryser {
            return Err(Error::Invalid("load balancing applies to ryser only".into()));
        }
        let positions = if balance {
            1u64 << (n - 1)
        } else {
            formula.terms(n)
        };
        let shuffle = match order {
            SummationOrder::Random(seed) => Some(SeededShuffle::new(positions, seed)),
            _ => None,
        };
        let tabled = mode == Mode::Faithful && !random && !balance;
        let data = if m.is_real() {
            Data::Real(Prepared::new(m, formula, mode, tabled))
        } else {
            Data::Complex(Prepared::new(m, formula, mode, tabled))
        };
        Ok(Self {
            n,
            formula,
            mode,
            order,
            balance,
            shuffle,
            data,
        })
    }

    /// Size of the position space: terms, or complement pairs when balanced.
    pub(crate) fn positions(&self) -> u64 {
        if self.balance {
            1 << (self.n - 1)
        } else {
            self.formula.terms(self.n)
        }
    }

    /// Whether `[lo, hi)` covers every term. Position 0 of an unshuffled,
    /// unpaired Ryser walk is the empty subset, whose term is zero.
    pub(crate) fn is_complete(&self, lo: u64, hi: u64) -> bool {
        let skip_empty = self.formula == Formula::Ryser && !self.balance && self.shuffle.is_none();
        hi == self.positions() && (lo == 0 || (lo == 1 && skip_empty))
    }

    pub(crate) fn run(&self, lo: u64, hi: u64) -> Result<Partial<Complex64>> {
        if lo >= hi || hi > self.positions() {
            return Err(Error::BadRange {
                lo,
                hi,
                total: self.positions(),
            });
        }
        Ok(match &self.data {
            Data::Real(p) => self.run_typed(p, lo, hi).to_c64(),
            Data::Complex(p) => self.run_typed(p, lo, hi),
        })
    }

    fn run_typed<T: Lanes>(&self, p: &Prepared<T>, lo: u64, hi: u64) -> Partial<T> {
        let order = self.order;
        let sh = self.shuffle.as_ref();
        match (self.formula, self.mode, self.balance) {
            (Formula::Ryser, Mode::Faithful, false) if p.k > 0 => {
                accumulate_with(order, ryser::Lanes { p, lo, hi })
            }
            (Formula::Ryser, Mode::Faithful, false) => {
                accumulate_with(order, ryser::Direct { p, lo, hi, shuffle: sh })
            }
            (Formula::Ryser, Mode::Faithful, true) => {
                accumulate_with(order, ryser::Pairs { p, lo, hi, shuffle: sh })
            }
            (Formula::Ryser, Mode::Graycode, false) => {
                accumulate_with(order, ryser::Gray { p, lo, hi })
            }
            (Formula::Ryser, Mode::Graycode, true) => {
                accumulate_with(order, ryser::GrayPairs { p, lo, hi })
            }
            (Formula::Bbfg, Mode::Faithful, _) if p.k > 0 => {
                accumulate_with(order, bbfg::Lanes { p, lo, hi })
            }
            (Formula::Bbfg, Mode::Faithful, _) => {
                accumulate_with(order, bbfg::Direct { p, lo, hi, shuffle: sh })
            }
            (Formula::Bbfg, Mode::Graycode, _) => accumulate_with(order, bbfg::Gray { p, lo, hi }),
        }
    }

    /// Finishes a complete sum and applies the formula's final factor.
    pub(crate) fn finish(&self, partial: Partial<Complex64>) -> Complex64 {
        let v = partial.finish();
        match self.formula {
            Formula::Ryser if self.n % 2 == 1 => -v,
            Formula::Ryser => v,
            Formula::Bbfg => v / (1u64 << (self.n - 1)) as f64,
        }
    }
}

/// Outcome of [`graycode_audit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GrayAudit {
    pub steps: u64,
    pub checks: u64,
    pub mismatches: u64,
}

/// Walks the full graycode sequence of `algo` and, every `stride` steps,
/// compares the incrementally maintained inner sums with freshly
/// recomputed ones (bitwise).
pub fn graycode_audit(m: &ComplexMatrix, algo: Algorithm, stride: u64) -> Result<GrayAudit> {
    let formula = Formula::from_algorithm(algo)?;
    check_size(m.n())?;
    if stride == 0 {
        return Err(Error::Invalid("audit stride must be positive".into()));
    }
    let p: Prepared<Complex64> = Prepared::new(m, formula, Mode::Graycode, false);
    let total = formula.terms(m.n());
    let (checks, mismatches) = match formula {
        Formula::Ryser => ryser::audit(&p, total, stride),
        Formula::Bbfg => bbfg::audit(&p, total, stride),
    };
    Ok(GrayAudit {
        steps: total,
        checks,
        mismatches,
    })
}

/// Product of `s` as four interleaved partial products, for graycode mode.
#[inline(always)]
pub(crate) fn product4<T: Num>(s: &[T]) -> T {
    if s.len() < 4 {
        let mut p = s[0];
        for &x in &s[1..] {
            p = p * x;
        }
        return p;
    }
    let mut acc = [s[0], s[1], s[2], s[3]];
    let mut chunks = s[4..].chunks_exact(4);
    for c in &mut chunks {
        for l in 0..4 {
            acc[l] = acc[l] * c[l];
        }
    }
    for (l, &x) in chunks.remainder().iter().enumerate() {
        acc[l] = acc[l] * x;
    }
    (acc[0] * acc[1]) * (acc[2] * acc[3])
}

#[inline(always)]
pub(crate) fn bits_equal<T: Num>(a: T, b: T) -> bool {
    let (a, b) = (a.to_c64(), b.to_c64());
    a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::Partial;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, real: bool) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, |_, _| {
            let im = if real { 0.0 } else { rng.random_range(-1.0..1.0) };
            Complex64::new(rng.random_range(-1.0..1.0), im)
        })
        .unwrap()
    }

    fn same(a: &Partial<Complex64>, b: &Partial<Complex64>) -> bool {
        bits_equal(a.clone().finish(), b.clone().finish())
    }

    fn lanes_vs_direct<T: Lanes>(m: &ComplexMatrix, formula: Formula, rng: &mut ChaCha8Rng) {
        let p: Prepared<T> = Prepared::new(m, formula, Mode::Faithful, true);
        assert!(p.k > 0);
        let total = formula.terms(m.n());
        for order in SummationOrder::standard_four(0)
            .into_iter()
            .filter(|o| !matches!(o, SummationOrder::Random(_)))
            .chain([SummationOrder::Compensated])
        {
            for _ in 0..4 {
                let lo = rng.random_range(0..total);
                let hi = rng.random_range(lo + 1..=total);
                let (fast, slow) = match formula {
                    Formula::Ryser => (
                        accumulate_with(order, ryser::Lanes { p: &p, lo, hi }),
                        accumulate_with(order, ryser::Direct { p: &p, lo, hi, shuffle: None }),
                    ),
                    Formula::Bbfg => (
                        accumulate_with(order, bbfg::Lanes { p: &p, lo, hi }),
                        accumulate_with(order, bbfg::Direct { p: &p, lo, hi, shuffle: None }),
                    ),
                };
                assert!(
                    same(&fast.to_c64(), &slow.to_c64()),
                    "{formula:?} n={} [{lo},{hi}) {order}",
                    m.n()
                );
            }
        }
    }

    #[test]
    fn lane_kernels_match_the_reference_order_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [5, 6, 9, 12, 14] {
            for formula in [Formula::Ryser, Formula::Bbfg] {
                if formula == Formula::Bbfg && n < 6 {
                    continue;
                }
                let re = random_matrix(&mut rng, n, true);
                lanes_vs_direct::<f64>(&re, formula, &mut rng);
                let c = random_matrix(&mut rng, n, false);
                lanes_vs_direct::<Complex64>(&c, formula, &mut rng);
            }
        }
    }

    /// Records every pushed term instead of summing.
    #[derive(Default)]
    struct Collect(Vec<(u64, u64, bool)>);

    impl<T: Num> crate::order::Accumulate<T> for Collect {
        fn push(&mut self, x: T, negative: bool) {
            let z = x.to_c64();
            // the walks may reach a zero from either side
            self.0.push(((z.re + 0.0).to_bits(), (z.im + 0.0).to_bits(), negative));
        }
        fn into_partial(self) -> Partial<T> {
            Partial::empty(SummationOrder::Original)
        }
    }

    fn collect<F: crate::order::Fill<f64>>(f: F) -> Vec<(u64, u64, bool)> {
        let mut c = Collect::default();
        f.fill(&mut c);
        c.0.sort_unstable();
        c.0
    }

    /// Row 0 holds powers of two and the rest are ones, so every Ryser term
    /// is an exact integer that identifies its subset up to rare collisions.
    /// The transpose does the same for BB/FG.
    fn probe_matrix(n: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, |i, j| Complex64::new(if i == 0 { (1u64 << j) as f64 } else { 1.0 }, 0.0))
            .unwrap()
    }

    /// Collects `[0, hi)` as two ranges split at an awkward point.
    fn split_walk(hi: u64, mut walk: impl FnMut(u64, u64) -> Vec<(u64, u64, bool)>) -> Vec<(u64, u64, bool)> {
        let cut = (hi / 3).max(1);
        let mut v = walk(0, cut.min(hi));
        if cut < hi {
            v.extend(walk(cut, hi));
        }
        v.sort_unstable();
        v
    }

    #[test]
    fn every_schedule_visits_each_subset_once() {
        for n in 1..=12 {
            let m = probe_matrix(n);
            let p: Prepared<f64> = Prepared::new(&m, Formula::Ryser, Mode::Graycode, false);
            let (all, half) = (1u64 << n, 1u64 << (n - 1));
            let reference = collect(ryser::Direct { p: &p, lo: 0, hi: all, shuffle: None });
            assert_eq!(reference.len() as u64, all);
            let pairs = split_walk(half, |lo, hi| collect(ryser::Pairs { p: &p, lo, hi, shuffle: None }));
            assert_eq!(pairs, reference, "pairs n={n}");
            let gray_pairs = split_walk(half, |lo, hi| collect(ryser::GrayPairs { p: &p, lo, hi }));
            assert_eq!(gray_pairs, reference, "gray pairs n={n}");
            let gray = split_walk(all, |lo, hi| collect(ryser::Gray { p: &p, lo, hi }));
            assert_eq!(gray, reference, "gray n={n}");
            let shuffle = SeededShuffle::new(all, 9);
            let shuffled = collect(ryser::Direct { p: &p, lo: 0, hi: all, shuffle: Some(&shuffle) });
            assert_eq!(shuffled, reference, "shuffled n={n}");
        }
    }

    #[test]
    fn bbfg_walks_visit_each_sign_vector_once() {
        for n in 1..=12 {
            let m = probe_matrix(n).transpose();
            let p: Prepared<f64> = Prepared::new(&m, Formula::Bbfg, Mode::Graycode, false);
            let all = 1u64 << (n - 1);
            let reference = collect(bbfg::Direct { p: &p, lo: 0, hi: all, shuffle: None });
            assert_eq!(reference.len() as u64, all);
            let gray = split_walk(all, |lo, hi| collect(bbfg::Gray { p: &p, lo, hi }));
            assert_eq!(gray, reference, "gray n={n}");
        }
    }

    #[test]
    fn audit_finds_no_drift_on_integer_matrices() {
        let m = ComplexMatrix::from_fn(10, |i, j| Complex64::new((i * 3 + j) as f64 % 5.0 - 2.0, 1.0))
            .unwrap();
        for algo in [Algorithm::Ryser, Algorithm::Bbfg] {
            let a = graycode_audit(&m, algo, 1 << 4).unwrap();
            assert!(a.checks > 0);
            assert_eq!(a.mismatches, 0);
        }
    }

    #[test]
    fn random_graycode_and_balanced_bbfg_are_rejected() {
        let m = ComplexMatrix::from_fn(3, |_, _| Complex64::new(1.0, 0.0)).unwrap();
        assert!(Job::new(&m, Formula::Ryser, Mode::Graycode, SummationOrder::Random(1), false).is_err());
        assert!(Job::new(&m, Formula::Bbfg, Mode::Faithful, SummationOrder::Original, true).is_err());
    }
}
