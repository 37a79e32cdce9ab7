use num_complex::Complex64;

use super::{Algorithm, Mode, PermanentValue};
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::order::SummationOrder;

/// Factorial-cost guard for [`naive_permanent`].
pub const NAIVE_MAX_N: usize = 12;

/// Sum over all permutations of `prod_i a[i][sigma(i)]`, permutations in
/// lexicographic order, each product folded left to right.
pub fn naive_permanent(m: &ComplexMatrix) -> Result<PermanentValue> {
    let n = m.n();
    if n > NAIVE_MAX_N {
        return Err(Error::SizeOutOfRange {
            what: "the naive permanent",
            n,
            min: 1,
            max: NAIVE_MAX_N,
        });
    }
    let mut used = vec![false; n];
    let mut sum = Complex64::new(0.0, 0.0);
    walk(m, 0, None, &mut used, &mut sum);
    Ok(PermanentValue {
        value: sum,
        algorithm: Algorithm::Naive,
        mode: Mode::Faithful,
        order: SummationOrder::Original,
        workers: 1,
        complete: true,
    })
}

// The prefix product is carried down the recursion; folding it once per
// level gives the same operations as refolding each permutation.
fn walk(
    m: &ComplexMatrix,
    row: usize,
    prefix: Option<Complex64>,
    used: &mut [bool],
    sum: &mut Complex64,
) {
    let n = m.n();
    for col in 0..n {
        if used[col] {
            continue;
        }
        let a = m.get(row, col);
        let p = match prefix {
            Some(q) => q * a,
            None => a,
        };
        if row + 1 == n {
            *sum += p;
        } else {
            used[col] = true;
            walk(m, row + 1, Some(p), used, sum);
            used[col] = false;
        }
    }
}
