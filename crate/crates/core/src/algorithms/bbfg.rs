//! The BB/FG formula:
//! `sum_delta (prod_k delta_k) prod_j sum_i delta_i a_ij / 2^(n-1)`, `delta_0 = +1`.

use super::kernel::{bits_equal, product4, Prepared};
use crate::order::{Accumulate, Fill, SeededShuffle};
use crate::scalar::{Lanes as LaneOps, Num};

/// Whether the term of `code` enters with a minus sign (odd number of -1s).
#[inline(always)]
fn negative(n: usize, code: u64) -> bool {
    ((n as u32 - 1) - code.count_ones()) & 1 == 1
}

/// `T[j][L]` holds column `j`'s sum over rows `0..=k` with signs taken from
/// the low `k` code bits, folded in ascending row order exactly as [`term`]
/// does. Built by doubling: each new row splits every entry into a `+`
/// and a `-` branch.
pub(super) fn build_table<T: Num>(p: &mut Prepared<T>, k: usize) {
    let (n, width) = (p.n, 1usize << k);
    let mut t = vec![T::ZERO; n * width];
    for j in 0..n {
        let col = &mut t[j * width..(j + 1) * width];
        col[0] = T::ZERO + p.a[j];
        for b in 0..k {
            let v = p.a[(b + 1) * n + j];
            let half = 1usize << b;
            for l in 0..half {
                let s = col[l];
                col[l + half] = s + v;
                col[l] = s - v;
            }
        }
    }
    p.k = k;
    p.table = t;
}

#[inline(always)]
fn col_sum<T: Num>(col: &[T], code: u64) -> T {
    let mut s = T::ZERO + col[0];
    for (r, &v) in col.iter().enumerate().skip(1) {
        s = if code >> (r - 1) & 1 == 1 { s + v } else { s - v };
    }
    s
}

/// One term, unsigned, in the reference operation order.
#[inline(always)]
pub(super) fn term<T: Num>(p: &Prepared<T>, code: u64) -> T {
    let n = p.n;
    let mut prod = col_sum(&p.at[..n], code);
    for j in 1..n {
        prod = prod * col_sum(&p.at[j * n..(j + 1) * n], code);
    }
    prod
}

fn col_sums<T: Num>(p: &Prepared<T>, code: u64, out: &mut [T]) {
    for (j, s) in out.iter_mut().enumerate() {
        *s = col_sum(&p.at[j * p.n..(j + 1) * p.n], code);
    }
}

pub(super) struct Direct<'a, T> {
    pub p: &'a Prepared<T>,
    pub lo: u64,
    pub hi: u64,
    pub shuffle: Option<&'a SeededShuffle>,
}

impl<T: Num> Fill<T> for Direct<'_, T> {
    fn fill<A: Accumulate<T>>(self, acc: &mut A) {
        for pos in self.lo..self.hi {
            let code = self.shuffle.map_or(pos, |s| s.apply(pos));
            acc.push(term(self.p, code), negative(self.p.n, code));
        }
    }
}

/// Ascending codes, a block at a time; rows `0..=k` come from the prefix
/// table, rows above are added lane by lane in ascending order. Subtracting
/// `v` is the same IEEE operation as adding `-v`, so each block pre-signs
/// those rows once.
pub(super) struct Lanes<'a, T> {
    pub p: &'a Prepared<T>,
    pub lo: u64,
    pub hi: u64,
}

impl<T: LaneOps> Fill<T> for Lanes<'_, T> {
    fn fill<A: Accumulate<T>>(self, acc: &mut A) {
        let p = self.p;
        let (n, k) = (p.n, p.k);
        let width = 1usize << k;
        let upper = n - 1 - k;
        // signed[j * upper + t] = +-a[k + 1 + t][j]
        let mut signed: Vec<T> = vec![T::ZERO; n * upper];
        let mut pos = self.lo;
        while pos < self.hi {
            let h = pos >> k;
            let base = h << k;
            let end = self.hi.min(base + width as u64);
            for j in 0..n {
                for t in 0..upper {
                    let v = p.at[j * n + k + 1 + t];
                    signed[j * upper + t] = if h >> t & 1 == 1 { v } else { -v };
                }
            }

            let mut l0 = ((pos - base) as usize) & !(T::LANES - 1);
            while base + (l0 as u64) < end {
                let mut prod = T::load(&p.table[l0..]);
                for &v in &signed[..upper] {
                    T::add_all(&mut prod, v);
                }
                for j in 1..n {
                    let mut s = T::load(&p.table[j * width + l0..]);
                    for &v in &signed[j * upper..(j + 1) * upper] {
                        T::add_all(&mut s, v);
                    }
                    T::mul_into(&mut prod, &s);
                }
                for l in 0..T::LANES {
                    let code = base + (l0 + l) as u64;
                    if code >= pos && code < end {
                        acc.push(T::lane(&prod, l), negative(n, code));
                    }
                }
                l0 += T::LANES;
            }
            pos = end;
        }
    }
}

#[inline(always)]
fn gray(pos: u64) -> u64 {
    pos ^ (pos >> 1)
}

/// Moves the column sums from code `code ^ (1 << b)` to `code`; row `b + 1`
/// changes sign, so its entries enter twice.
#[inline(always)]
fn step<T: Num>(sums: &mut [T], twice_row: &[T], code: u64, b: usize) {
    if code >> b & 1 == 1 {
        for (s, &v) in sums.iter_mut().zip(twice_row) {
            *s = *s + v;
        }
    } else {
        for (s, &v) in sums.iter_mut().zip(twice_row) {
            *s = *s - v;
        }
    }
}

pub(super) struct Gray<'a, T> {
    pub p: &'a Prepared<T>,
    pub lo: u64,
    pub hi: u64,
}

impl<T: Num> Fill<T> for Gray<'_, T> {
    fn fill<A: Accumulate<T>>(self, acc: &mut A) {
        let (p, n) = (self.p, self.p.n);
        let mut code = gray(self.lo);
        let mut sums = vec![T::ZERO; n];
        col_sums(p, code, &mut sums);
        acc.push(product4(&sums), negative(n, code));
        for pos in self.lo + 1..self.hi {
            let b = pos.trailing_zeros() as usize;
            code ^= 1 << b;
            step(&mut sums, &p.twice[(b + 1) * n..(b + 2) * n], code, b);
            acc.push(product4(&sums), negative(n, code));
        }
    }
}

pub(super) fn audit<T: Num>(p: &Prepared<T>, total: u64, stride: u64) -> (u64, u64) {
    let n = p.n;
    let mut sums = vec![T::ZERO; n];
    let mut fresh = vec![T::ZERO; n];
    col_sums(p, 0, &mut sums);
    let (mut checks, mut bad) = (0, 0);
    let mut code = 0;
    for pos in 1..total {
        let b = pos.trailing_zeros() as usize;
        code ^= 1 << b;
        step(&mut sums, &p.twice[(b + 1) * n..(b + 2) * n], code, b);
        if pos % stride == 0 {
            col_sums(p, code, &mut fresh);
            checks += 1;
            if !sums.iter().zip(&fresh).all(|(&a, &b)| bits_equal(a, b)) {
                bad += 1;
            }
        }
    }
    (checks, bad)
}
