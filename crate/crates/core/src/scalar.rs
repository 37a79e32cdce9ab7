//! Arithmetic shared by the real and complex kernel paths.
//!
//! A matrix whose imaginary parts are all zero is evaluated in real
//! arithmetic. Every real operation is the real part of the corresponding
//! complex operation, so both paths produce the same real parts.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

pub(crate) trait Num:
    Copy
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    const ZERO: Self;

    fn from_c64(z: Complex64) -> Self;

    fn to_c64(self) -> Complex64;

    fn times_two(self) -> Self;

    /// One step of Neumaier's compensated summation.
    fn neumaier(sum: &mut Self, comp: &mut Self, x: Self);
}

#[inline(always)]
fn neumaier_f64(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl Num for f64 {
    const ZERO: Self = 0.0;

    #[inline(always)]
    fn from_c64(z: Complex64) -> Self {
        z.re
    }

    #[inline(always)]
    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }

    #[inline(always)]
    fn times_two(self) -> Self {
        self * 2.0
    }

    #[inline(always)]
    fn neumaier(sum: &mut Self, comp: &mut Self, x: Self) {
        neumaier_f64(sum, comp, x);
    }
}

impl Num for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);

    #[inline(always)]
    fn from_c64(z: Complex64) -> Self {
        z
    }

    #[inline(always)]
    fn to_c64(self) -> Complex64 {
        self
    }

    #[inline(always)]
    fn times_two(self) -> Self {
        Complex64::new(self.re * 2.0, self.im * 2.0)
    }

    #[inline(always)]
    fn neumaier(sum: &mut Self, comp: &mut Self, x: Self) {
        neumaier_f64(&mut sum.re, &mut comp.re, x.re);
        neumaier_f64(&mut sum.im, &mut comp.im, x.im);
    }
}

/// A fixed-width block of independent values, used by the faithful lane
/// kernels. Each lane performs exactly the scalar operations of `Num`.
pub(crate) trait Lanes: Num {
    const LANES: usize;
    type Block: Copy;

    /// Loads `LANES` consecutive values.
    fn load(src: &[Self]) -> Self::Block;
    /// Adds `v` to every lane.
    fn add_all(b: &mut Self::Block, v: Self);
    /// Lane-wise `a = a * b`.
    fn mul_into(a: &mut Self::Block, b: &Self::Block);
    fn lane(b: &Self::Block, l: usize) -> Self;
}

const REAL_LANES: usize = 16;
const COMPLEX_LANES: usize = 8;

impl Lanes for f64 {
    const LANES: usize = REAL_LANES;
    type Block = [f64; REAL_LANES];

    #[inline(always)]
    fn load(src: &[f64]) -> Self::Block {
        src[..REAL_LANES].try_into().unwrap()
    }

    #[inline(always)]
    fn add_all(b: &mut Self::Block, v: f64) {
        for x in b.iter_mut() {
            *x += v;
        }
    }

    #[inline(always)]
    fn mul_into(a: &mut Self::Block, b: &Self::Block) {
        for (x, y) in a.iter_mut().zip(b) {
            *x *= *y;
        }
    }

    #[inline(always)]
    fn lane(b: &Self::Block, l: usize) -> f64 {
        b[l]
    }
}

/// Split real and imaginary parts.
#[derive(Clone, Copy)]
pub(crate) struct ComplexBlock {
    re: [f64; COMPLEX_LANES],
    im: [f64; COMPLEX_LANES],
}

impl Lanes for Complex64 {
    const LANES: usize = COMPLEX_LANES;
    type Block = ComplexBlock;

    #[inline(always)]
    fn load(src: &[Complex64]) -> ComplexBlock {
        let mut b = ComplexBlock {
            re: [0.0; COMPLEX_LANES],
            im: [0.0; COMPLEX_LANES],
        };
        for (l, z) in src[..COMPLEX_LANES].iter().enumerate() {
            b.re[l] = z.re;
            b.im[l] = z.im;
        }
        b
    }

    #[inline(always)]
    fn add_all(b: &mut ComplexBlock, v: Complex64) {
        for l in 0..COMPLEX_LANES {
            b.re[l] += v.re;
            b.im[l] += v.im;
        }
    }

    // Same expression as `Mul for Complex<f64>`.
    #[inline(always)]
    fn mul_into(a: &mut ComplexBlock, b: &ComplexBlock) {
        for l in 0..COMPLEX_LANES {
            let (ar, ai, br, bi) = (a.re[l], a.im[l], b.re[l], b.im[l]);
            a.re[l] = ar * br - ai * bi;
            a.im[l] = ar * bi + ai * br;
        }
    }

    #[inline(always)]
    fn lane(b: &ComplexBlock, l: usize) -> Complex64 {
        Complex64::new(b.re[l], b.im[l])
    }
}
