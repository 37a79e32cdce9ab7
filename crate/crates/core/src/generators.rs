//! Seed-determined matrix families.
//!
//! Randomness comes from ChaCha20 seeded with a 64-bit seed, so a spec
//! reproduces the same bits on every platform.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactScalar;
use crate::matrix::ComplexMatrix;

/// Size of the base matrix that derived families are cut from.
pub const BASE_N: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixSpec {
    AllR { n: usize, r: f64 },
    AllC { n: usize, re: f64, im: f64 },
    Diag1i { n: usize },
    HaarUnitary { n: usize, seed: u64 },
    Derived {
        base_seed: u64,
        base_n: usize,
        sub_n: usize,
        selection_seed: u64,
    },
    SpecialDerived { base_seed: u64, target_n: usize },
}

impl MatrixSpec {
    pub fn n(&self) -> usize {
        match *self {
            MatrixSpec::AllR { n, .. }
            | MatrixSpec::AllC { n, .. }
            | MatrixSpec::Diag1i { n }
            | MatrixSpec::HaarUnitary { n, .. } => n,
            MatrixSpec::Derived { sub_n, .. } => sub_n,
            MatrixSpec::SpecialDerived { target_n, .. } => target_n,
        }
    }

    pub fn generate(&self) -> Result<ComplexMatrix> {
        match *self {
            MatrixSpec::AllR { n, r } => gen_all_r(n, Complex64::new(r, 0.0)),
            MatrixSpec::AllC { n, re, im } => gen_all_r(n, Complex64::new(re, im)),
            MatrixSpec::Diag1i { n } => gen_diag_1i(n),
            MatrixSpec::HaarUnitary { n, seed } => gen_haar_unitary(n, seed),
            MatrixSpec::Derived {
                base_seed,
                base_n,
                sub_n,
                selection_seed,
            } => gen_derived(base_seed, base_n, sub_n, selection_seed),
            MatrixSpec::SpecialDerived {
                base_seed,
                target_n,
            } => gen_special_derived(base_seed, target_n),
        }
    }

    /// Exact permanent when the family has a closed form.
    pub fn closed_form(&self) -> Option<ExactScalar> {
        match *self {
            MatrixSpec::AllR { n, r } => Some(all_r_permanent(n, Complex64::new(r, 0.0))),
            MatrixSpec::AllC { n, re, im } => Some(all_r_permanent(n, Complex64::new(re, im))),
            MatrixSpec::Diag1i { n } => {
                Some(ExactScalar::from_c64(Complex64::new(1.0, 1.0)).pow(n as u32))
            }
            _ => None,
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Invalid("matrix size must be at least 1".into()));
    }
    Ok(())
}

/// `r^n * n!` for the binary64 value `r`, exactly.
pub fn all_r_permanent(n: usize, r: Complex64) -> ExactScalar {
    let fact = (1..=n as i64).fold(ExactScalar::one(), |acc, k| acc * ExactScalar::from_integer(k));
    ExactScalar::from_c64(r).pow(n as u32) * fact
}

/// Every entry equal to `r`.
pub fn gen_all_r(n: usize, r: Complex64) -> Result<ComplexMatrix> {
    check_n(n)?;
    ComplexMatrix::new(n, vec![r; n * n])
}

/// `1 + i` on the diagonal, zero elsewhere.
pub fn gen_diag_1i(n: usize) -> Result<ComplexMatrix> {
    check_n(n)?;
    ComplexMatrix::from_fn(n, |i, j| {
        if i == j {
            Complex64::new(1.0, 1.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn haar(n: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let z = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    });
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            d / d.norm()
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

fn from_dmatrix(q: &DMatrix<Complex64>) -> Result<ComplexMatrix> {
    ComplexMatrix::from_fn(q.nrows(), |i, j| q[(i, j)])
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases
/// of `R`'s diagonal moved into `Q`.
pub fn gen_haar_unitary(n: usize, seed: u64) -> Result<ComplexMatrix> {
    check_n(n)?;
    from_dmatrix(&haar(n, seed))
}

/// `sub_n` rows and `sub_n` columns, chosen uniformly without replacement
/// and kept in ascending order, of a `base_n x base_n` Haar unitary.
pub fn gen_derived(
    base_seed: u64,
    base_n: usize,
    sub_n: usize,
    selection_seed: u64,
) -> Result<ComplexMatrix> {
    check_n(sub_n)?;
    if sub_n > base_n {
        return Err(Error::Invalid(format!(
            "cannot select {sub_n} rows from a {base_n}x{base_n} base"
        )));
    }
    let base = haar(base_n, base_seed);
    let mut rng = ChaCha20Rng::seed_from_u64(selection_seed);
    let mut rows = sample(&mut rng, base_n, sub_n).into_vec();
    let mut cols = sample(&mut rng, base_n, sub_n).into_vec();
    rows.sort_unstable();
    cols.sort_unstable();
    ComplexMatrix::from_fn(sub_n, |i, j| base[(rows[i], cols[j])])
}

/// Real orthogonal matrix: QR of a real Gaussian matrix, with the signs of
/// `R`'s diagonal moved into `Q`.
fn real_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Rows and columns (ascending) of an all-negative square block of `q`,
/// found greedily: from each start row, keep adding the row that preserves
/// the most negative columns while the block can still grow.
pub fn negative_block(q: &DMatrix<f64>) -> (Vec<usize>, Vec<usize>) {
    let n = q.nrows();
    let mut best: (Vec<usize>, Vec<usize>) = (Vec::new(), Vec::new());
    for start in 0..n {
        let mut rows = vec![start];
        let mut cols: Vec<usize> = (0..n).filter(|&j| q[(start, j)] < 0.0).collect();
        loop {
            let k = rows.len().min(cols.len());
            if k > best.0.len() {
                let mut r = rows[..k].to_vec();
                r.sort_unstable();
                best = (r, cols[..k].to_vec());
            }
            let pick = (0..n)
                .filter(|r| !rows.contains(r))
                .map(|r| (cols.iter().filter(|&&j| q[(r, j)] < 0.0).count(), r))
                .max_by_key(|&(count, r)| (count, std::cmp::Reverse(r)));
            match pick {
                Some((count, r)) if count > rows.len() => {
                    rows.push(r);
                    cols.retain(|&j| q[(r, j)] < 0.0);
                }
                _ => break,
            }
        }
    }
    best
}

/// An all-negative block of a seeded `100 x 100` real orthogonal matrix,
/// with rows and columns repeated cyclically (`t -> t mod k`) up to
/// `target_n`, or truncated when `target_n` is smaller than the block.
pub fn gen_special_derived(base_seed: u64, target_n: usize) -> Result<ComplexMatrix> {
    if target_n < 2 {
        return Err(Error::Invalid("special-derived matrices need size >= 2".into()));
    }
    let q = real_orthogonal(BASE_N, base_seed);
    let (rows, cols) = negative_block(&q);
    let k = rows.len();
    if k < 2 {
        return Err(Error::Invalid(format!(
            "seed {base_seed} has no all-negative block of size >= 2; try another seed"
        )));
    }
    ComplexMatrix::from_fn(target_n, |i, j| {
        Complex64::new(q[(rows[i % k], cols[j % k])], 0.0)
    })
}

/// Size of the all-negative block behind [`gen_special_derived`].
pub fn special_block_size(base_seed: u64) -> usize {
    negative_block(&real_orthogonal(BASE_N, base_seed)).0.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_is_unitary_and_seeded() {
        let u = gen_haar_unitary(12, 3).unwrap();
        for i in 0..12 {
            for k in 0..12 {
                let dot: Complex64 = (0..12).map(|j| u.get(i, j) * u.get(k, j).conj()).sum();
                let want = if i == k { 1.0 } else { 0.0 };
                assert!((dot - want).norm() < 1e-12);
            }
        }
        assert!(u.bit_eq(&gen_haar_unitary(12, 3).unwrap()));
        assert!(!u.bit_eq(&gen_haar_unitary(12, 4).unwrap()));
    }

    #[test]
    fn derived_full_selection_is_the_base() {
        let base = gen_haar_unitary(10, 5).unwrap();
        assert!(gen_derived(5, 10, 10, 99).unwrap().bit_eq(&base));
        assert!(gen_derived(5, 10, 11, 99).is_err());
    }

    #[test]
    fn special_derived_is_negative() {
        let m = gen_special_derived(1, 12).unwrap();
        assert!(m.entries().iter().all(|z| z.re < 0.0 && z.im == 0.0));
        assert!(special_block_size(1) >= 2);
    }
}
