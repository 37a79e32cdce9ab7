#![allow(dead_code)]

use num_complex::Complex64;
use permlab::ComplexMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .unwrap()
}

pub fn random_integer(rng: &mut ChaCha8Rng, n: usize, span: i64) -> Vec<Vec<i64>> {
    (0..n)
        .map(|_| (0..n).map(|_| rng.random_range(-span..=span)).collect())
        .collect()
}

pub fn from_integers(rows: &[Vec<i64>]) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows.len(), |i, j| c(rows[i][j] as f64, 0.0)).unwrap()
}

/// Row-by-row expansion over column subsets:
/// `dp[mask] = sum_{j in mask} dp[mask - j] * a[|mask| - 1][j]`.
pub fn expansion(m: &ComplexMatrix) -> Complex64 {
    let n = m.n();
    let mut dp = vec![c(0.0, 0.0); 1 << n];
    dp[0] = c(1.0, 0.0);
    for mask in 1usize..1 << n {
        let row = mask.count_ones() as usize - 1;
        let mut s = c(0.0, 0.0);
        for j in 0..n {
            if mask >> j & 1 == 1 {
                s += dp[mask ^ 1 << j] * m.get(row, j);
            }
        }
        dp[mask] = s;
    }
    dp[(1 << n) - 1]
}

/// Same expansion in exact integer arithmetic.
pub fn expansion_i128(rows: &[Vec<i64>]) -> i128 {
    let n = rows.len();
    let mut dp = vec![0i128; 1 << n];
    dp[0] = 1;
    for mask in 1usize..1 << n {
        let row = mask.count_ones() as usize - 1;
        dp[mask] = (0..n)
            .filter(|j| mask >> j & 1 == 1)
            .map(|j| dp[mask ^ 1 << j] * rows[row][j] as i128)
            .sum();
    }
    dp[(1 << n) - 1]
}

pub fn rel_diff(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

pub fn factorial(n: u32) -> u128 {
    (1..=n as u128).product()
}
