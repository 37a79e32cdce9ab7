//! Summation orders for the outer sum of both formulas.
//!
//! Terms arrive as a magnitude plus a sign flag. The orders differ only in
//! how they are combined:
//!
//! * `Original`: left to right, `0 - 1 + 2 - 3 + ...`.
//! * `Merge`: neighbours pairwise, `((0 - 1) + (2 - 3)) + ((4 - 5) + (6 - 7))`.
//! * `Separate`: `(0 + 2 + 4 + 6) - (1 + 3 + 5 + 7)`, i.e. positive-sign and
//!   negative-sign terms summed apart.
//! * `Random(seed)`: left to right over a seed-determined permutation.
//! * `Compensated`: left to right with Neumaier's correction term.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Num;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummationOrder {
    Original,
    Merge,
    Separate,
    Random(u64),
    Compensated,
}

impl SummationOrder {
    /// The four orders studied for the Ryser formula; `Random` uses `seed`.
    pub fn standard_four(seed: u64) -> [SummationOrder; 4] {
        [
            SummationOrder::Original,
            SummationOrder::Random(seed),
            SummationOrder::Merge,
            SummationOrder::Separate,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            SummationOrder::Original => "original",
            SummationOrder::Merge => "merge",
            SummationOrder::Separate => "separate",
            SummationOrder::Random(_) => "random",
            SummationOrder::Compensated => "compensated",
        }
    }
}

impl fmt::Display for SummationOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SummationOrder::Random(seed) => write!(f, "random:{seed}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for SummationOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(SummationOrder::Original),
            "merge" => Ok(SummationOrder::Merge),
            "separate" => Ok(SummationOrder::Separate),
            "compensated" => Ok(SummationOrder::Compensated),
            _ => {
                let seed = s
                    .strip_prefix("random:")
                    .and_then(|t| t.parse::<u64>().ok())
                    .ok_or_else(|| {
                        Error::Invalid(format!(
                            "unknown order '{s}' (expected original, merge, separate, \
                             compensated or random:SEED)"
                        ))
                    })?;
                Ok(SummationOrder::Random(seed))
            }
        }
    }
}

/// One term of the outer sum: `value` enters with a minus sign when
/// `negative` is set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedTerm {
    pub value: Complex64,
    pub negative: bool,
}

impl SignedTerm {
    pub fn new(value: Complex64, negative: bool) -> Self {
        Self { value, negative }
    }

    /// A term whose sign is carried by the value itself.
    pub fn plain(value: Complex64) -> Self {
        Self {
            value,
            negative: false,
        }
    }
}

/// Sums `terms` in the given order.
pub fn reduce_with_order(terms: &[SignedTerm], order: SummationOrder) -> Result<Complex64> {
    if terms.is_empty() {
        return Err(Error::Invalid("cannot reduce an empty sequence".into()));
    }
    let shuffle = match order {
        SummationOrder::Random(seed) => Some(SeededShuffle::new(terms.len() as u64, seed)),
        _ => None,
    };
    Ok(accumulate_with(order, Terms { terms, shuffle }).finish())
}

struct Terms<'a> {
    terms: &'a [SignedTerm],
    shuffle: Option<SeededShuffle>,
}

impl Fill<Complex64> for Terms<'_> {
    fn fill<A: Accumulate<Complex64>>(self, acc: &mut A) {
        for p in 0..self.terms.len() as u64 {
            let idx = self.shuffle.as_ref().map_or(p, |s| s.apply(p));
            let t = self.terms[idx as usize];
            acc.push(t.value, t.negative);
        }
    }
}

struct Nothing;

impl<T: Num> Fill<T> for Nothing {
    fn fill<A: Accumulate<T>>(self, _: &mut A) {}
}

/// Code that feeds terms into an accumulator; generic so that kernels are
/// monomorphised per order.
pub(crate) trait Fill<T: Num> {
    fn fill<A: Accumulate<T>>(self, acc: &mut A);
}

pub(crate) fn accumulate_with<T: Num, F: Fill<T>>(order: SummationOrder, f: F) -> Partial<T> {
    match order {
        SummationOrder::Original | SummationOrder::Random(_) => {
            let mut a = Plain(T::ZERO);
            f.fill(&mut a);
            a.into_partial()
        }
        SummationOrder::Compensated => {
            let mut a = Neumaier::default();
            f.fill(&mut a);
            a.into_partial()
        }
        SummationOrder::Separate => {
            let mut a = Split::default();
            f.fill(&mut a);
            a.into_partial()
        }
        SummationOrder::Merge => {
            let mut a = Tree::default();
            f.fill(&mut a);
            a.into_partial()
        }
    }
}

pub(crate) trait Accumulate<T: Num> {
    fn push(&mut self, x: T, negative: bool);
    fn into_partial(self) -> Partial<T>;
}

/// Accumulator state that can be carried across range boundaries and merged
/// with the state of the following range.
#[derive(Clone, Debug)]
pub(crate) enum Partial<T> {
    Plain(T),
    Compensated { sum: T, comp: T },
    Separate { pos: T, neg: T },
    /// Binary-counter stack of `(level, value)`, bottom first.
    Merge(Vec<(u32, T)>),
}

impl<T: Num> Partial<T> {
    pub(crate) fn empty(order: SummationOrder) -> Self {
        accumulate_with(order, Nothing)
    }

    /// Appends the state of the range that follows `self`.
    pub(crate) fn merge(self, next: Partial<T>) -> Partial<T> {
        match (self, next) {
            (Partial::Plain(a), Partial::Plain(b)) => Partial::Plain(a + b),
            (Partial::Compensated { sum, comp }, Partial::Compensated { sum: s2, comp: c2 }) => {
                let (mut sum, mut comp) = (sum, comp);
                T::neumaier(&mut sum, &mut comp, s2);
                Partial::Compensated {
                    sum,
                    comp: comp + c2,
                }
            }
            (Partial::Separate { pos, neg }, Partial::Separate { pos: p2, neg: n2 }) => {
                Partial::Separate {
                    pos: pos + p2,
                    neg: neg + n2,
                }
            }
            (Partial::Merge(mut stack), Partial::Merge(next)) => {
                for (level, v) in next {
                    push_level(&mut stack, level, v);
                }
                Partial::Merge(stack)
            }
            _ => panic!("merging partial sums of different orders"),
        }
    }

    pub(crate) fn finish(self) -> T {
        match self {
            Partial::Plain(v) => v,
            Partial::Compensated { sum, comp } => sum + comp,
            Partial::Separate { pos, neg } => pos - neg,
            Partial::Merge(stack) => {
                let mut it = stack.into_iter().rev();
                let Some((_, mut v)) = it.next() else {
                    return T::ZERO;
                };
                for (_, below) in it {
                    v = below + v;
                }
                v
            }
        }
    }

    pub(crate) fn to_c64(&self) -> Partial<Complex64> {
        match self {
            Partial::Plain(v) => Partial::Plain(v.to_c64()),
            Partial::Compensated { sum, comp } => Partial::Compensated {
                sum: sum.to_c64(),
                comp: comp.to_c64(),
            },
            Partial::Separate { pos, neg } => Partial::Separate {
                pos: pos.to_c64(),
                neg: neg.to_c64(),
            },
            Partial::Merge(s) => Partial::Merge(s.iter().map(|&(l, v)| (l, v.to_c64())).collect()),
        }
    }
}

#[inline(always)]
fn push_level<T: Num>(stack: &mut Vec<(u32, T)>, mut level: u32, mut v: T) {
    while let Some(&(l, left)) = stack.last() {
        if l != level {
            break;
        }
        stack.pop();
        v = left + v;
        level += 1;
    }
    stack.push((level, v));
}

pub(crate) struct Plain<T>(T);

impl<T: Num> Accumulate<T> for Plain<T> {
    #[inline(always)]
    fn push(&mut self, x: T, negative: bool) {
        self.0 = if negative { self.0 - x } else { self.0 + x };
    }
    fn into_partial(self) -> Partial<T> {
        Partial::Plain(self.0)
    }
}

pub(crate) struct Neumaier<T> {
    sum: T,
    comp: T,
}

impl<T: Num> Default for Neumaier<T> {
    fn default() -> Self {
        Self {
            sum: T::ZERO,
            comp: T::ZERO,
        }
    }
}

impl<T: Num> Accumulate<T> for Neumaier<T> {
    #[inline(always)]
    fn push(&mut self, x: T, negative: bool) {
        let x = if negative { -x } else { x };
        T::neumaier(&mut self.sum, &mut self.comp, x);
    }
    fn into_partial(self) -> Partial<T> {
        Partial::Compensated {
            sum: self.sum,
            comp: self.comp,
        }
    }
}

pub(crate) struct Split<T> {
    pos: T,
    neg: T,
}

impl<T: Num> Default for Split<T> {
    fn default() -> Self {
        Self {
            pos: T::ZERO,
            neg: T::ZERO,
        }
    }
}

impl<T: Num> Accumulate<T> for Split<T> {
    #[inline(always)]
    fn push(&mut self, x: T, negative: bool) {
        if negative {
            self.neg = self.neg + x;
        } else {
            self.pos = self.pos + x;
        }
    }
    fn into_partial(self) -> Partial<T> {
        Partial::Separate {
            pos: self.pos,
            neg: self.neg,
        }
    }
}

pub(crate) struct Tree<T> {
    stack: Vec<(u32, T)>,
}

impl<T> Default for Tree<T> {
    fn default() -> Self {
        Self {
            stack: Vec::with_capacity(64),
        }
    }
}

impl<T: Num> Accumulate<T> for Tree<T> {
    #[inline(always)]
    fn push(&mut self, x: T, negative: bool) {
        let x = if negative { -x } else { x };
        push_level(&mut self.stack, 0, x);
    }
    fn into_partial(self) -> Partial<T> {
        Partial::Merge(self.stack)
    }
}

/// Seed-keyed bijection on `[0, total)`: a four-round Feistel network over the
/// smallest even-width power-of-two domain, with cycle walking.
#[derive(Clone, Debug)]
pub(crate) struct SeededShuffle {
    total: u64,
    half_bits: u32,
    keys: [u64; 4],
}

impl SeededShuffle {
    pub(crate) fn new(total: u64, seed: u64) -> Self {
        let bits = 64 - total.saturating_sub(1).leading_zeros();
        let half_bits = bits.div_ceil(2).max(1);
        let mut state = seed;
        let keys = std::array::from_fn(|_| splitmix64(&mut state));
        Self {
            total,
            half_bits,
            keys,
        }
    }

    pub(crate) fn apply(&self, mut x: u64) -> u64 {
        debug_assert!(x < self.total);
        loop {
            x = self.permute(x);
            if x < self.total {
                return x;
            }
        }
    }

    fn permute(&self, x: u64) -> u64 {
        let mask = (1u64 << self.half_bits) - 1;
        let (mut l, mut r) = (x >> self.half_bits, x & mask);
        for k in self.keys {
            let mut s = k ^ r;
            let f = splitmix64(&mut s) & mask;
            (l, r) = (r, l ^ f);
        }
        (l << self.half_bits) | r
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
