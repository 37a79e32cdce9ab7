//! Dense complex matrices and the plain-text matrix format.
//!
//! The format is line oriented: the first non-comment line holds `N`, each of
//! the following `N` lines holds `2N` numbers read pairwise as `(re, im)`.
//! Lines whose first non-blank character is `#` are ignored, as are blank
//! lines. Numbers are written in shortest round-trip form, so writing and
//! reading a matrix reproduces it bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexScalar = Complex64;

/// Row-major dense `n x n` complex matrix. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("matrix size must be at least 1".into()));
        }
        if entries.len() != n * n {
            return Err(Error::Invalid(format!(
                "a {n}x{n} matrix needs {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        Ok(Self { n, entries })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        Self::new(n, entries)
    }

    /// Builds a real matrix from rows; every row must have `rows.len()` entries.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid("rows must form a square matrix".into()));
        }
        Self::from_fn(n, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i)).expect("same shape")
    }

    /// True when every imaginary part is exactly zero (either sign).
    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Bit-level equality, distinguishing `0.0` from `-0.0`.
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits())
    }

    /// Renders the matrix in the text format.
    pub fn to_text(&self) -> Result<String> {
        if !self.is_finite() {
            return Err(Error::Invalid("cannot serialize a non-finite matrix".into()));
        }
        let mut out = String::new();
        writeln!(out, "{}", self.n).unwrap();
        for i in 0..self.n {
            let mut first = true;
            for z in self.row(i) {
                for x in [z.re, z.im] {
                    if !first {
                        out.push(' ');
                    }
                    first = false;
                    out.push_str(&format_f64(x));
                }
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses the text format.
    pub fn parse(text: &str) -> Result<Self> {
        let (n, rows) = parse_rows(text, |tok, line| {
            let x: f64 = tok.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("cannot parse '{tok}' as a number"),
            })?;
            if !x.is_finite() {
                return Err(Error::Parse {
                    line,
                    msg: format!("'{tok}' is not finite"),
                });
            }
            Ok(x)
        })?;
        let entries = rows
            .chunks_exact(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        Self::new(n, entries)
    }
}

/// Shortest decimal string that parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Splits matrix text into the header size and the flat token list (2N^2
/// values), converting each token with `conv`.
pub(crate) fn parse_rows<T>(
    text: &str,
    mut conv: impl FnMut(&str, usize) -> Result<T>,
) -> Result<(usize, Vec<T>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing size header".into(),
    })?;
    let n: usize = header.parse().map_err(|_| Error::Parse {
        line: hline,
        msg: format!("header '{header}' is not a positive integer"),
    })?;
    if n == 0 {
        return Err(Error::Parse {
            line: hline,
            msg: "matrix size must be at least 1".into(),
        });
    }

    let mut values = Vec::with_capacity(2 * n * n);
    let mut last_line = hline;
    for r in 0..n {
        let (line, body) = lines.next().ok_or(Error::Parse {
            line: last_line + 1,
            msg: format!("expected {n} rows, found {r}"),
        })?;
        last_line = line;
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.len() != 2 * n {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} numbers, found {}", 2 * n, toks.len()),
            });
        }
        for tok in toks {
            values.push(conv(tok, line)?);
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::Parse {
            line,
            msg: format!("unexpected data after {n} rows"),
        });
    }
    Ok((n, values))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    ComplexMatrix::parse(&fs::read_to_string(path)?)
}

pub fn write_matrix(m: &ComplexMatrix, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, m.to_text()?)?;
    Ok(())
}
