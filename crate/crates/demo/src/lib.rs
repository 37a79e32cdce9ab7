//! Three operations for the static page in `www/`. Everything runs on one
//! thread in the browser, so sizes are capped well below what the CLI takes.
//! Results are JSON strings; errors are plain messages.

use num_complex::Complex64;
use permlab::algorithms::permanent;
use permlab::perf::{predict_time, ScalingModel};
use permlab::precision::{closed_form_permanent, error_vs_theory, measure_error};
use permlab::algorithms::exact_permanent_of;
use permlab::generators::gen_all_r;
use permlab::{Algorithm, ExactAlgorithm, ExactMatrix};
use permlab::{ComplexMatrix, Mode, SummationOrder};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest matrix the page computes; a faithful run is about 2^n * n^2 flops.
pub const MAX_N: usize = 20;
/// The exact oracle and the n! reference are slower; they stop here.
pub const MAX_EXACT_N: usize = 12;
pub const MAX_NAIVE_N: usize = 8;

#[derive(Serialize)]
struct Value {
    algorithm: &'static str,
    mode: &'static str,
    re: f64,
    im: f64,
    /// Against the exact value, when known.
    rel_error: Option<f64>,
}

#[derive(Serialize)]
struct Report {
    n: usize,
    exact: Option<String>,
    values: Vec<Value>,
}

fn to_string<T: Serialize>(x: &T) -> Result<String, String> {
    serde_json::to_string(x).map_err(|e| e.to_string())
}

/// Permanent of a matrix in the text format (`n`, then `n` rows of `re im`
/// pairs) with every formula the page can afford.
#[wasm_bindgen]
pub fn permanent_report(text: &str) -> Result<String, String> {
    let m = ComplexMatrix::parse(text).map_err(|e| e.to_string())?;
    let n = m.n();
    if n > MAX_N {
        return Err(format!("n = {n} is too large for the browser (max {MAX_N})"));
    }
    let exact = if n <= MAX_EXACT_N {
        // decimals such as 0.1 stay exact here
        let em = ExactMatrix::parse(text).map_err(|e| e.to_string())?;
        Some(exact_permanent_of(&em, ExactAlgorithm::Ryser, false).map_err(|e| e.to_string())?)
    } else {
        closed_form_permanent(&m)
    };
    let mut runs = vec![
        (Algorithm::Ryser, Mode::Faithful),
        (Algorithm::Ryser, Mode::Graycode),
        (Algorithm::Bbfg, Mode::Faithful),
        (Algorithm::Bbfg, Mode::Graycode),
    ];
    if n <= MAX_NAIVE_N {
        runs.push((Algorithm::Naive, Mode::Faithful));
    }
    let mut values = Vec::with_capacity(runs.len());
    for (algo, mode) in runs {
        let v = permanent(&m, algo, mode, SummationOrder::Original).map_err(|e| e.to_string())?.value;
        let rel_error = match &exact {
            Some(t) => measure_error(v, t).map_err(|e| e.to_string())?.1,
            None => None,
        };
        values.push(Value {
            algorithm: algo.name(),
            mode: if algo == Algorithm::Naive { "-" } else { mode.name() },
            re: v.re,
            im: v.im,
            rel_error,
        });
    }
    to_string(&Report {
        n,
        exact: exact.map(|t| t.to_string()),
        values,
    })
}

#[derive(Serialize)]
struct ErrorPoint {
    n: usize,
    abs_error: f64,
    rel_error_rate: Option<f64>,
}

/// Relative error of one formula on all-one matrices of size 1..=n_max
/// against n!, under the given summation order.
#[wasm_bindgen]
pub fn allone_error_curve(algo: &str, order: &str, n_max: usize) -> Result<String, String> {
    let algo: Algorithm = algo.parse().map_err(|e: permlab::Error| e.to_string())?;
    if !matches!(algo, Algorithm::Ryser | Algorithm::Bbfg) {
        return Err("the curve is for ryser or bbfg".into());
    }
    let order: SummationOrder = order.parse().map_err(|e: permlab::Error| e.to_string())?;
    if !(1..=MAX_N).contains(&n_max) {
        return Err(format!("n_max must be in 1..={MAX_N}"));
    }
    let mut points = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let m = gen_all_r(n, Complex64::new(1.0, 0.0)).map_err(|e| e.to_string())?;
        let rep = error_vs_theory(&m, algo, order).map_err(|e| e.to_string())?;
        points.push(ErrorPoint {
            n,
            abs_error: rep.abs_error,
            rel_error_rate: rep.rel_error_rate,
        });
    }
    to_string(&points)
}

#[derive(Serialize)]
struct TimePoint {
    workers: u32,
    seconds: f64,
}

/// Predicted run time of an N x N matrix on 1, 2, 4, ... up to
/// `max_workers` workers under `T = a * N^2 * 2^N * n^b`.
#[wasm_bindgen]
pub fn predict_curve(a: f64, b: f64, n_size: u32, max_workers: u32) -> Result<String, String> {
    let model = ScalingModel::from_coefficients(a, b).map_err(|e| e.to_string())?;
    if max_workers == 0 {
        return Err("max_workers must be positive".into());
    }
    let mut points = Vec::new();
    let mut w = 1u32;
    loop {
        let p = predict_time(&model, n_size, w).map_err(|e| e.to_string())?;
        points.push(TimePoint { workers: w, seconds: p.seconds });
        if w >= max_workers {
            break;
        }
        w = w.saturating_mul(2).min(max_workers);
    }
    to_string(&points)
}
