//! Exact complex rationals, used as the reference for every error figure.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::matrix::{parse_rows, ComplexMatrix};

/// Complex number with arbitrary-precision rational parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactScalar {
    pub re: BigRational,
    pub im: BigRational,
}

impl ExactScalar {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn zero() -> Self {
        Self::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn from_integer(x: i64) -> Self {
        Self::new(BigRational::from_integer(x.into()), BigRational::zero())
    }

    pub fn from_bigint(x: BigInt) -> Self {
        Self::new(BigRational::from_integer(x), BigRational::zero())
    }

    /// The exact value of a binary64 number. Panics on NaN or infinity.
    pub fn from_f64(x: f64) -> Self {
        Self::new(real_from_f64(x), BigRational::zero())
    }

    /// The exact value of both binary64 parts. Panics on non-finite parts.
    pub fn from_c64(z: Complex64) -> Self {
        Self::new(real_from_f64(z.re), real_from_f64(z.im))
    }

    /// Parses a decimal literal such as `-1.25e-3` exactly.
    pub fn parse_decimal(s: &str) -> Option<BigRational> {
        let s = s.trim();
        let (neg, body) = match s.as_bytes().first()? {
            b'-' => (true, &s[1..]),
            b'+' => (false, &s[1..]),
            _ => (false, s),
        };
        let (mant, exp) = match body.find(['e', 'E']) {
            Some(i) => (&body[..i], body[i + 1..].parse::<i32>().ok()?),
            None => (body, 0),
        };
        let (int_part, frac_part) = match mant.find('.') {
            Some(i) => (&mant[..i], &mant[i + 1..]),
            None => (mant, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return None;
        }
        let digits: BigInt = format!("0{int_part}{frac_part}").parse().ok()?;
        let scale = exp - frac_part.len() as i32;
        let ten = BigInt::from(10);
        let mut q = if scale >= 0 {
            BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
        };
        if neg {
            q = -q;
        }
        Some(q)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// `|z|^2`, exact.
    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Nearest binary64 approximation of each part.
    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(rat_to_f64(&self.re), rat_to_f64(&self.im))
    }

    /// Modulus rounded to binary64 (the parts are rounded first, then
    /// combined with `hypot`).
    pub fn abs_f64(&self) -> f64 {
        let z = self.to_c64();
        z.re.hypot(z.im)
    }

    pub fn div_integer(&self, d: &BigInt) -> Self {
        let d = BigRational::from_integer(d.clone());
        Self::new(&self.re / &d, &self.im / &d)
    }
}

pub(crate) fn real_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite value")
}

/// Correctly rounded conversion; falls back to a scaled division for values
/// whose numerator or denominator exceed the binary64 range.
pub(crate) fn rat_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |q: &BigRational| format!("{}/{}", q.numer(), q.denom());
        if self.im.is_zero() {
            f.write_str(&show(&self.re))
        } else if self.im.is_negative() {
            write!(f, "{} - {}i", show(&self.re), show(&-self.im.clone()))
        } else {
            write!(f, "{} + {}i", show(&self.re), show(&self.im))
        }
    }
}

impl Add for &ExactScalar {
    type Output = ExactScalar;
    fn add(self, o: &ExactScalar) -> ExactScalar {
        ExactScalar::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl Sub for &ExactScalar {
    type Output = ExactScalar;
    fn sub(self, o: &ExactScalar) -> ExactScalar {
        ExactScalar::new(&self.re - &o.re, &self.im - &o.im)
    }
}

impl Mul for &ExactScalar {
    type Output = ExactScalar;
    fn mul(self, o: &ExactScalar) -> ExactScalar {
        ExactScalar::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
}

impl Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar::new(-self.re.clone(), -self.im.clone())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for ExactScalar {
            type Output = ExactScalar;
            fn $m(self, o: ExactScalar) -> ExactScalar {
                (&self).$m(&o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        -&self
    }
}

/// Square matrix of exact complex rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactMatrix {
    n: usize,
    entries: Vec<ExactScalar>,
}

impl ExactMatrix {
    pub fn new(n: usize, entries: Vec<ExactScalar>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::Invalid(format!(
                "a {n}x{n} exact matrix needs {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        Ok(Self { n, entries })
    }

    /// The exact values of the binary64 entries.
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        Self {
            n: m.n(),
            entries: m.entries().iter().map(|&z| ExactScalar::from_c64(z)).collect(),
        }
    }

    /// Reads the matrix text format, taking every decimal literal at its exact
    /// value rather than its nearest binary64 neighbour.
    pub fn parse(text: &str) -> Result<Self> {
        let (n, vals) = parse_rows(text, |tok, line| {
            ExactScalar::parse_decimal(tok).ok_or_else(|| Error::Parse {
                line,
                msg: format!("'{tok}' is not a decimal number"),
            })
        })?;
        let mut it = vals.into_iter();
        let mut entries = Vec::with_capacity(n * n);
        while let (Some(re), Some(im)) = (it.next(), it.next()) {
            entries.push(ExactScalar::new(re, im));
        }
        Self::new(n, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &ExactScalar {
        &self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[ExactScalar] {
        &self.entries
    }

    /// Common denominator `d` and the Gaussian-integer matrix `d * self`.
    pub(crate) fn scaled_to_integers(&self) -> (BigInt, Vec<(BigInt, BigInt)>) {
        let mut d = BigInt::one();
        for z in &self.entries {
            d = d.lcm(z.re.denom()).lcm(z.im.denom());
        }
        let scale = |q: &BigRational| q.numer() * (&d / q.denom());
        let ints = self.entries.iter().map(|z| (scale(&z.re), scale(&z.im))).collect();
        (d, ints)
    }
}
