//! Ryser's formula: `(-1)^n * sum_S (-1)^|S| * prod_i sum_{j in S} a_ij`.

use super::kernel::{bits_equal, product4, Prepared};
use crate::order::{Accumulate, Fill, SeededShuffle};
use crate::scalar::{Lanes as LaneOps, Num};

#[inline(always)]
fn odd(x: u64) -> bool {
    x.count_ones() & 1 == 1
}

/// `T[i][L]` holds the row-`i` sum over the columns in the low-bit subset
/// `L`, folded in ascending column order exactly as [`term`] does.
pub(super) fn build_table<T: Num>(p: &mut Prepared<T>, k: usize) {
    let (n, width) = (p.n, 1usize << k);
    let mut t = vec![T::ZERO; n * width];
    for i in 0..n {
        let row = &mut t[i * width..(i + 1) * width];
        for l in 1..width {
            let hb = usize::BITS as usize - 1 - l.leading_zeros() as usize;
            row[l] = row[l ^ (1 << hb)] + p.a[i * n + hb];
        }
    }
    p.k = k;
    p.table = t;
}

#[inline(always)]
fn row_sum<T: Num>(row: &[T], iter: u64) -> T {
    let mut s = T::ZERO;
    let mut bits = iter;
    while bits != 0 {
        s = s + row[bits.trailing_zeros() as usize];
        bits &= bits - 1;
    }
    s
}

/// One term, unsigned, in the reference operation order.
#[inline(always)]
pub(super) fn term<T: Num>(p: &Prepared<T>, iter: u64) -> T {
    let n = p.n;
    let mut prod = row_sum(&p.a[..n], iter);
    for i in 1..n {
        prod = prod * row_sum(&p.a[i * n..(i + 1) * n], iter);
    }
    prod
}

fn row_sums<T: Num>(p: &Prepared<T>, iter: u64, out: &mut [T]) {
    for (i, s) in out.iter_mut().enumerate() {
        *s = row_sum(&p.a[i * p.n..(i + 1) * p.n], iter);
    }
}

/// Ascending subset indices, one term at a time (optionally shuffled).
pub(super) struct Direct<'a, T> {
    pub p: &'a Prepared<T>,
    pub lo: u64,
    pub hi: u64,
    pub shuffle: Option<&'a SeededShuffle>,
}

impl<T: Num> Fill<T> for Direct<'_, T> {
    fn fill<A: Accumulate<T>>(self, acc: &mut A) {
        for pos in self.lo..self.hi {
            let iter = self.shuffle.map_or(pos, |s| s.apply(pos));
            acc.push(term(self.p, iter), odd(iter));
        }
    }
}

/// Ascending subset indices, evaluated a block at a time. The low `k`
/// columns come from the prefix table, the remaining columns are added lane
/// by lane in ascending order, so every lane repeats the exact operation
/// sequence of [`term`].
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
        let mut high: Vec<usize> = Vec::with_capacity(n);
        let mut pos = self.lo;
        while pos < self.hi {
            let h = pos >> k;
            let base = h << k;
            let end = self.hi.min(base + width as u64);
            high.clear();
            high.extend(super::SubsetIndex(h).columns().map(|c| c + k));
            let h_odd = odd(h);

            let mut l0 = ((pos - base) as usize) & !(T::LANES - 1);
            while base + (l0 as u64) < end {
                let mut prod = T::load(&p.table[l0..]);
                for &j in &high {
                    T::add_all(&mut prod, p.a[j]);
                }
                for i in 1..n {
                    let row = &p.a[i * n..(i + 1) * n];
                    let mut s = T::load(&p.table[i * width + l0..]);
                    for &j in &high {
                        T::add_all(&mut s, row[j]);
                    }
                    T::mul_into(&mut prod, &s);
                }
                for l in 0..T::LANES {
                    let iter = base + (l0 + l) as u64;
                    if iter >= pos && iter < end {
                        acc.push(T::lane(&prod, l), h_odd ^ odd((l0 + l) as u64));
                    }
                }
                l0 += T::LANES;
            }
            pos = end;
        }
    }
}

/// Load-balanced schedule: pair position `q` evaluates subset `q` and then
/// its complement, so every pair does the same number of additions.
pub(super) struct Pairs<'a, T> {
    pub p: &'a Prepared<T>,
    pub lo: u64,
    pub hi: u64,
    pub shuffle: Option<&'a SeededShuffle>,
}

impl<T: Num> Fill<T> for Pairs<'_, T> {
    fn fill<A: Accumulate<T>>(self, acc: &mut A) {
        let full = (1u64 << self.p.n) - 1;
        for pos in self.lo..self.hi {
            let q = self.shuffle.map_or(pos, |s| s.apply(pos));
            acc.push(term(self.p, q), odd(q));
            acc.push(term(self.p, full ^ q), odd(full ^ q));
        }
    }
}

#[inline(always)]
fn gray(pos: u64) -> u64 {
    pos ^ (pos >> 1)
}

/// Moves the row sums from subset `g ^ (1 << j)` to `g`.
#[inline(always)]
fn step<T: Num>(sums: &mut [T], col: &[T], g: u64, j: usize) {
    if g >> j & 1 == 1 {
        for (s, &v) in sums.iter_mut().zip(col) {
            *s = *s + v;
        }
    } else {
        for (s, &v) in sums.iter_mut().zip(col) {
            *s = *s - v;
        }
    }
}

/// Reflected-binary walk: position `pos` visits subset `pos ^ (pos >> 1)`.
pub(super) struct Gray<'a, T> {
    pub p: &'a Prepared<T>,
    pub lo: u64,
    pub hi: u64,
}

impl<T: Num> Fill<T> for Gray<'_, T> {
    fn fill<A: Accumulate<T>>(self, acc: &mut A) {
        let (p, n) = (self.p, self.p.n);
        let mut g = gray(self.lo);
        let mut sums = vec![T::ZERO; n];
        row_sums(p, g, &mut sums);
        acc.push(product4(&sums), odd(g));
        for pos in self.lo + 1..self.hi {
            let j = pos.trailing_zeros() as usize;
            g ^= 1 << j;
            step(&mut sums, &p.at[j * n..(j + 1) * n], g, j);
            acc.push(product4(&sums), odd(g));
        }
    }
}

/// Balanced graycode walk: pair position `q` visits `S = gray(q)` and its
/// complement, both maintained incrementally (one flip updates both).
pub(super) struct GrayPairs<'a, T> {
    pub p: &'a Prepared<T>,
    pub lo: u64,
    pub hi: u64,
}

impl<T: Num> Fill<T> for GrayPairs<'_, T> {
    fn fill<A: Accumulate<T>>(self, acc: &mut A) {
        let (p, n) = (self.p, self.p.n);
        let full = (1u64 << n) - 1;
        let mut g = gray(self.lo);
        let mut sums = vec![T::ZERO; n];
        let mut rest = vec![T::ZERO; n];
        row_sums(p, g, &mut sums);
        row_sums(p, full ^ g, &mut rest);
        acc.push(product4(&sums), odd(g));
        acc.push(product4(&rest), odd(full ^ g));
        for pos in self.lo + 1..self.hi {
            let j = pos.trailing_zeros() as usize;
            g ^= 1 << j;
            let col = &p.at[j * n..(j + 1) * n];
            step(&mut sums, col, g, j);
            step(&mut rest, col, full ^ g, j);
            acc.push(product4(&sums), odd(g));
            acc.push(product4(&rest), odd(full ^ g));
        }
    }
}

pub(super) fn audit<T: Num>(p: &Prepared<T>, total: u64, stride: u64) -> (u64, u64) {
    let n = p.n;
    let mut sums = vec![T::ZERO; n];
    let mut fresh = vec![T::ZERO; n];
    let (mut checks, mut bad) = (0, 0);
    let mut g = 0;
    for pos in 1..total {
        let j = pos.trailing_zeros() as usize;
        g ^= 1 << j;
        step(&mut sums, &p.at[j * n..(j + 1) * n], g, j);
        if pos % stride == 0 {
            row_sums(p, g, &mut fresh);
            checks += 1;
            if !sums.iter().zip(&fresh).all(|(&a, &b)| bits_equal(a, b)) {
                bad += 1;
            }
        }
    }
    (checks, bad)
}
