//! Exact evaluation of both formulas.
//!
//! The matrix is scaled by the common denominator `D` of its entries, the
//! formula is evaluated over Gaussian integers (checked `i128`, falling back
//! to `BigInt` on overflow), and the result is divided by `D^n` (and by
//! `2^(n-1)` for BB/FG). The term order is a graycode walk, which is
//! immaterial in exact arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{ExactAlgorithm, MAX_N};
use crate::error::{Error, Result};
use crate::exact::{ExactMatrix, ExactScalar};
use crate::matrix::ComplexMatrix;

/// Default runtime guard for the exact kernels.
pub const EXACT_MAX_N: usize = 36;

/// Exact permanent of the binary64 matrix `m`, taking every entry at its
/// exact binary value.
pub fn exact_permanent(m: &ComplexMatrix, algo: ExactAlgorithm) -> Result<ExactScalar> {
    exact_permanent_of(&ExactMatrix::from_matrix(m), algo, false)
}

/// Exact permanent of an exact matrix. `allow_large` lifts the
/// [`EXACT_MAX_N`] guard (up to the index-width limit).
pub fn exact_permanent_of(
    m: &ExactMatrix,
    algo: ExactAlgorithm,
    allow_large: bool,
) -> Result<ExactScalar> {
    let n = m.n();
    let max = if allow_large { MAX_N } else { EXACT_MAX_N };
    if n > max {
        return Err(Error::SizeOutOfRange {
            what: "the exact oracle",
            n,
            min: 1,
            max,
        });
    }
    let (d, ints) = m.scaled_to_integers();
    let small: Option<Vec<Gi128>> = ints
        .iter()
        .map(|(re, im)| Some(Gi128(i128::try_from(re).ok()?, i128::try_from(im).ok()?)))
        .collect();
    let total = small
        .and_then(|a| evaluate(&a, n, algo))
        .map(|z| (BigInt::from(z.0), BigInt::from(z.1)))
        .unwrap_or_else(|| {
            let a: Vec<GiBig> = ints.into_iter().map(|(re, im)| GiBig(re, im)).collect();
            let z = evaluate(&a, n, algo).expect("big integers never overflow");
            (z.0, z.1)
        });

    let mut denom = num_traits::pow(d, n);
    let mut num = ExactScalar::new(
        BigRational::from_integer(total.0),
        BigRational::from_integer(total.1),
    );
    match algo {
        ExactAlgorithm::Ryser => {
            if n % 2 == 1 {
                num = -num;
            }
        }
        ExactAlgorithm::Bbfg => denom <<= n - 1,
    }
    Ok(if denom.is_one() { num } else { num.div_integer(&denom) })
}

/// Gaussian integers with fallible arithmetic.
trait Gauss: Clone {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Option<Self>;
    fn sub(&self, o: &Self) -> Option<Self>;
    fn mul(&self, o: &Self) -> Option<Self>;
    fn double(&self) -> Option<Self> {
        self.add(self)
    }
}

#[derive(Clone, Copy)]
struct Gi128(i128, i128);

impl Gauss for Gi128 {
    fn zero() -> Self {
        Gi128(0, 0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0 && self.1 == 0
    }
    fn add(&self, o: &Self) -> Option<Self> {
        Some(Gi128(self.0.checked_add(o.0)?, self.1.checked_add(o.1)?))
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        Some(Gi128(self.0.checked_sub(o.0)?, self.1.checked_sub(o.1)?))
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        if self.1 == 0 && o.1 == 0 {
            return Some(Gi128(self.0.checked_mul(o.0)?, 0));
        }
        let re = self.0.checked_mul(o.0)?.checked_sub(self.1.checked_mul(o.1)?)?;
        let im = self.0.checked_mul(o.1)?.checked_add(self.1.checked_mul(o.0)?)?;
        Some(Gi128(re, im))
    }
}

#[derive(Clone)]
struct GiBig(BigInt, BigInt);

impl Gauss for GiBig {
    fn zero() -> Self {
        GiBig(BigInt::zero(), BigInt::zero())
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero() && self.1.is_zero()
    }
    fn add(&self, o: &Self) -> Option<Self> {
        Some(GiBig(&self.0 + &o.0, &self.1 + &o.1))
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        Some(GiBig(&self.0 - &o.0, &self.1 - &o.1))
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        Some(GiBig(
            &self.0 * &o.0 - &self.1 * &o.1,
            &self.0 * &o.1 + &self.1 * &o.0,
        ))
    }
}

fn evaluate<G: Gauss>(a: &[G], n: usize, algo: ExactAlgorithm) -> Option<G> {
    match algo {
        ExactAlgorithm::Ryser => ryser(a, n),
        ExactAlgorithm::Bbfg => bbfg(a, n),
    }
}

fn product<G: Gauss>(s: &[G]) -> Option<G> {
    let mut p = s[0].clone();
    for x in &s[1..] {
        if p.is_zero() {
            break;
        }
        p = p.mul(x)?;
    }
    Some(p)
}

/// `sum_S (-1)^|S| prod_i sum_{j in S} a_ij`, without the `(-1)^n` factor.
fn ryser<G: Gauss>(a: &[G], n: usize) -> Option<G> {
    let mut sums = vec![G::zero(); n];
    let mut total = G::zero();
    let mut g = 0u64;
    for pos in 1..1u64 << n {
        let j = pos.trailing_zeros() as usize;
        g ^= 1 << j;
        let adding = g >> j & 1 == 1;
        for (i, s) in sums.iter_mut().enumerate() {
            let v = &a[i * n + j];
            *s = if adding { s.add(v)? } else { s.sub(v)? };
        }
        let p = product(&sums)?;
        total = if g.count_ones() % 2 == 1 { total.sub(&p)? } else { total.add(&p)? };
    }
    Some(total)
}

/// `sum_delta (prod delta) prod_j sum_i delta_i a_ij`, without the division.
fn bbfg<G: Gauss>(a: &[G], n: usize) -> Option<G> {
    // Code 0: every delta after the first is -1.
    let mut sums = Vec::with_capacity(n);
    for j in 0..n {
        let mut s = a[j].clone();
        for i in 1..n {
            s = s.sub(&a[i * n + j])?;
        }
        sums.push(s);
    }
    let twice: Vec<G> = a.iter().map(|x| x.double()).collect::<Option<_>>()?;
    let sign = |code: u64| ((n as u32 - 1) - code.count_ones()) % 2 == 1;
    let mut total = G::zero();
    let mut code = 0u64;
    let mut pos = 0u64;
    loop {
        let p = product(&sums)?;
        total = if sign(code) { total.sub(&p)? } else { total.add(&p)? };
        pos += 1;
        if pos == 1u64 << (n - 1) {
            break;
        }
        let b = pos.trailing_zeros() as usize;
        code ^= 1 << b;
        let row = &twice[(b + 1) * n..(b + 2) * n];
        let plus = code >> b & 1 == 1;
        for (s, v) in sums.iter_mut().zip(row) {
            *s = if plus { s.add(v)? } else { s.sub(v)? };
        }
    }
    Some(total)
}
