//! Rounding-error measurements.
//!
//! Errors are always measured by lifting the computed binary64 value into
//! exact arithmetic and subtracting the exact reference there; only the final
//! difference is rounded. The absolute error is
//! `hypot(Re(c - t), Im(c - t))` and the relative error rate is that divided
//! by `|t|`, undefined when `t = 0`.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::algorithms::{permanent, Algorithm, Mode};
use crate::error::{Error, Result};
use crate::exact::{rat_to_f64, real_from_f64, ExactScalar};
use crate::generators::{all_r_permanent, gen_all_r};
use crate::matrix::{format_f64, ComplexMatrix};
use crate::order::SummationOrder;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub n: usize,
    /// The common entry of an all-r matrix.
    pub r: Option<Complex64>,
    pub algorithm: Algorithm,
    pub order: SummationOrder,
    pub computed: Complex64,
    #[serde(serialize_with = "exact_as_string")]
    pub theoretical: ExactScalar,
    pub abs_error: f64,
    /// `None` when the theoretical value is zero.
    pub rel_error_rate: Option<f64>,
}

fn exact_as_string<S: serde::Serializer>(x: &ExactScalar, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(x)
}

/// `(abs_error, rel_error_rate)` of `computed` against the exact value.
pub fn measure_error(computed: Complex64, theoretical: &ExactScalar) -> Result<(f64, Option<f64>)> {
    if !(computed.re.is_finite() && computed.im.is_finite()) {
        return Ok((f64::INFINITY, (!theoretical.is_zero()).then_some(f64::INFINITY)));
    }
    let dre = rat_to_f64(&(real_from_f64(computed.re) - &theoretical.re));
    let dim = rat_to_f64(&(real_from_f64(computed.im) - &theoretical.im));
    let abs = dre.hypot(dim);
    let rel = (!theoretical.is_zero()).then(|| abs / theoretical.abs_f64());
    Ok((abs, rel))
}

/// Exact permanent for matrices with a closed form: constant matrices
/// (`r^n n!`) and diagonal matrices (product of the diagonal).
pub fn closed_form_permanent(m: &ComplexMatrix) -> Option<ExactScalar> {
    let n = m.n();
    let first = m.get(0, 0);
    if m.entries().iter().all(|&z| z == first) {
        return Some(all_r_permanent(n, first));
    }
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || m.get(i, j) == Complex64::new(0.0, 0.0)));
    if diagonal {
        return Some(
            (0..n).fold(ExactScalar::one(), |acc, i| acc * ExactScalar::from_c64(m.get(i, i))),
        );
    }
    None
}

fn constant_entry(m: &ComplexMatrix) -> Option<Complex64> {
    let first = m.get(0, 0);
    m.entries().iter().all(|&z| z == first).then_some(first)
}

/// Single-worker faithful run of `algo` against the closed-form value.
pub fn error_vs_theory(
    m: &ComplexMatrix,
    algo: Algorithm,
    order: SummationOrder,
) -> Result<ErrorReport> {
    let theoretical = closed_form_permanent(m).ok_or_else(|| {
        Error::NoTheory("matrices that are neither constant nor diagonal".into())
    })?;
    let computed = permanent(m, algo, Mode::Faithful, order)?.value;
    let (abs_error, rel_error_rate) = measure_error(computed, &theoretical)?;
    Ok(ErrorReport {
        n: m.n(),
        r: constant_entry(m),
        algorithm: algo,
        order,
        computed,
        theoretical,
        abs_error,
        rel_error_rate,
    })
}

/// Trend of the error over one `r` of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTrend {
    pub r: Complex64,
    /// Least-squares slope of `log10(abs_error)` against `n` over the nonzero
    /// errors; `None` with fewer than two such points.
    pub log10_slope: Option<f64>,
    pub nonzero_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sweep {
    pub reports: Vec<ErrorReport>,
    pub trends: Vec<SweepTrend>,
}

/// Errors on all-r matrices for every `(n, r)`, ordered by `r` then `n`.
pub fn allr_sweep(
    ns: &[usize],
    rs: &[Complex64],
    algo: Algorithm,
    order: SummationOrder,
) -> Result<Sweep> {
    let mut reports = Vec::with_capacity(ns.len() * rs.len());
    let mut trends = Vec::with_capacity(rs.len());
    for &r in rs {
        let mut points = Vec::new();
        for &n in ns {
            let rep = error_vs_theory(&gen_all_r(n, r)?, algo, order)?;
            if rep.abs_error > 0.0 && rep.abs_error.is_finite() {
                points.push((n as f64, rep.abs_error.log10()));
            }
            reports.push(rep);
        }
        trends.push(SweepTrend {
            r,
            log10_slope: slope(&points),
            nonzero_points: points.len(),
        });
    }
    Ok(Sweep { reports, trends })
}

/// Least-squares slope of `y` against `x`.
pub fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format_f64(z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", format_f64(z.re), format_f64(-z.im))
    } else {
        format!("{}+{}i", format_f64(z.re), format_f64(z.im))
    }
}

fn rate_cell(rate: Option<f64>) -> String {
    rate.map_or_else(|| "undefined".to_string(), format_f64_any)
}

fn format_f64_any(x: f64) -> String {
    if x == 0.0 {
        // -0 carries no information in a table
        "0".into()
    } else if x.is_finite() {
        format_f64(x)
    } else {
        x.to_string()
    }
}

/// CSV: `n,r,computed_re,computed_im,theoretical_re,theoretical_im,abs_error,rel_error_rate`.
pub fn write_sweep_csv<W: Write>(reports: &[ErrorReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "n",
        "r",
        "computed_re",
        "computed_im",
        "theoretical_re",
        "theoretical_im",
        "abs_error",
        "rel_error_rate",
    ])?;
    for rep in reports {
        let t = rep.theoretical.to_c64();
        out.write_record([
            rep.n.to_string(),
            rep.r.map_or_else(String::new, format_complex),
            format_f64_any(rep.computed.re),
            format_f64_any(rep.computed.im),
            format_f64_any(t.re),
            format_f64_any(t.im),
            format_f64_any(rep.abs_error),
            rate_cell(rep.rel_error_rate),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One order's result in an [`OrderRow`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderCell {
    pub order: SummationOrder,
    pub value: f64,
    pub rel_error_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderRow {
    pub n: usize,
    /// `n!` rounded to binary64.
    pub theoretical: f64,
    pub cells: Vec<OrderCell>,
}

/// Ryser on the all-one matrix of each size, once per order.
pub fn order_study(ns: &[usize], orders: &[SummationOrder]) -> Result<Vec<OrderRow>> {
    let one = Complex64::new(1.0, 0.0);
    ns.iter()
        .map(|&n| {
            let m = gen_all_r(n, one)?;
            let cells = orders
                .iter()
                .map(|&order| {
                    let rep = error_vs_theory(&m, Algorithm::Ryser, order)?;
                    Ok(OrderCell {
                        order,
                        value: rep.computed.re,
                        rel_error_rate: rep.rel_error_rate.expect("n! is nonzero"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(OrderRow {
                n,
                theoretical: all_r_permanent(n, one).to_c64().re,
                cells,
            })
        })
        .collect()
}

/// CSV: `n,theoretical`, then `<order>_value,<order>_rate` per order.
pub fn write_order_csv<W: Write>(rows: &[OrderRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if let Some(first) = rows.first() {
        let mut header = vec!["n".to_string(), "theoretical".to_string()];
        for c in &first.cells {
            header.push(format!("{}_value", c.order.name()));
            header.push(format!("{}_rate", c.order.name()));
        }
        out.write_record(&header)?;
    }
    for row in rows {
        let mut rec = vec![row.n.to_string(), format_f64_any(row.theoretical)];
        for c in &row.cells {
            rec.push(format_f64_any(c.value));
            rec.push(format_f64_any(c.rel_error_rate));
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DoubleCheckReport {
    pub n: usize,
    pub perm_ryser: Complex64,
    pub perm_bbfg: Complex64,
    /// `|bbfg - ryser| / |bbfg|`; `None` when the BB/FG value is zero.
    pub rel_diff: Option<f64>,
}

/// Runs both formulas (faithful, single worker, same order) and compares.
pub fn double_check(m: &ComplexMatrix, order: SummationOrder) -> Result<DoubleCheckReport> {
    let r = permanent(m, Algorithm::Ryser, Mode::Faithful, order)?.value;
    let b = permanent(m, Algorithm::Bbfg, Mode::Faithful, order)?.value;
    let denom = b.norm();
    Ok(DoubleCheckReport {
        n: m.n(),
        perm_ryser: r,
        perm_bbfg: b,
        rel_diff: (denom != 0.0).then(|| (b - r).norm() / denom),
    })
}
