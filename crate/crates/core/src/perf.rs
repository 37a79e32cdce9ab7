//! Timing harness and the scaling model `T = a * N^2 * 2^N * n^b`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::algorithms::{term_count, Algorithm, Mode, PermanentValue};
use crate::error::{Error, Result};
use crate::generators::MatrixSpec;
use crate::order::SummationOrder;
use crate::parallel::{make_plan, run_parallel_timed, RunOptions, Straggler};

/// One measured (or recorded) run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingSample {
    /// Worker count (compute nodes in recorded data).
    #[serde(rename = "nodes")]
    pub n_workers: u32,
    #[serde(rename = "size")]
    pub matrix_size: u32,
    pub seconds: f64,
}

impl TimingSample {
    pub fn new(n_workers: u32, matrix_size: u32, seconds: f64) -> Result<Self> {
        if n_workers == 0 || matrix_size == 0 || !(seconds > 0.0 && seconds.is_finite()) {
            return Err(Error::Invalid(format!(
                "timing sample needs positive nodes, size and seconds (got {n_workers}, {matrix_size}, {seconds})"
            )));
        }
        Ok(Self {
            n_workers,
            matrix_size,
            seconds,
        })
    }
}

/// Reads `nodes,size,seconds` CSV; lines starting with `#` are skipped.
pub fn read_samples<R: Read>(r: R) -> Result<Vec<TimingSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut out = Vec::new();
    for row in rdr.deserialize::<TimingSample>() {
        let s = row?;
        out.push(TimingSample::new(s.n_workers, s.matrix_size, s.seconds)?);
    }
    Ok(out)
}

pub fn load_samples(path: impl AsRef<Path>) -> Result<Vec<TimingSample>> {
    read_samples(std::fs::File::open(path)?)
}

pub fn write_samples<W: Write>(samples: &[TimingSample], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for s in samples {
        out.serialize(s)?;
    }
    out.flush()?;
    Ok(())
}

pub const BBFG_HYBRID_CSV: &str = include_str!("../data/bbfg_hybrid.csv");
pub const RYSER_CPU_CSV: &str = include_str!("../data/ryser_cpu.csv");

/// BB/FG timings on hybrid CPU+accelerator nodes (81 rows).
pub fn bundled_bbfg_hybrid() -> Vec<TimingSample> {
    read_samples(BBFG_HYBRID_CSV.as_bytes()).expect("bundled dataset parses")
}

/// Ryser timings on CPU-only nodes (63 rows).
pub fn bundled_ryser_cpu() -> Vec<TimingSample> {
    read_samples(RYSER_CPU_CSV.as_bytes()).expect("bundled dataset parses")
}

/// `N^2 * 2^N`.
fn work(matrix_size: u32) -> f64 {
    let n = matrix_size as f64;
    n * n * n.exp2()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitStatistics {
    pub samples: usize,
    pub sse: f64,
    pub r_square: f64,
    pub adjusted_r_square: f64,
    pub rmse: f64,
    pub ci95_a: (f64, f64),
    pub ci95_b: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingModel {
    pub a: f64,
    pub b: f64,
    /// Present only for fitted models.
    pub stats: Option<FitStatistics>,
}

impl ScalingModel {
    /// A model from given coefficients, without fit statistics.
    pub fn from_coefficients(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Invalid(format!(
                "model needs a > 0 and finite b (got a={a}, b={b})"
            )));
        }
        Ok(Self { a, b, stats: None })
    }

    pub fn eval(&self, matrix_size: u32, n_workers: u32) -> f64 {
        eval(self.a, self.b, matrix_size, n_workers)
    }
}

fn eval(a: f64, b: f64, matrix_size: u32, n_workers: u32) -> f64 {
    a * work(matrix_size) * (n_workers as f64).powf(b)
}

fn check_design(samples: &[TimingSample]) -> Result<()> {
    if samples.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 samples, got {}", samples.len())));
    }
    let first = samples[0].n_workers;
    if samples.iter().all(|s| s.n_workers == first) {
        return Err(Error::Fit(
            "all samples share one worker count, so b is not identifiable".into(),
        ));
    }
    Ok(())
}

/// Ordinary least squares of `ln T - ln(N^2 2^N)` on `ln n`; returns `(a, b)`.
pub fn log_space_fit(samples: &[TimingSample]) -> Result<(f64, f64)> {
    check_design(samples)?;
    let m = samples.len() as f64;
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| {
            (
                (s.n_workers as f64).ln(),
                s.seconds.ln() - work(s.matrix_size).ln(),
            )
        })
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    Ok(((my - b * mx).exp(), b))
}

fn sse_of(samples: &[TimingSample], a: f64, b: f64) -> f64 {
    samples
        .iter()
        .map(|s| (s.seconds - eval(a, b, s.matrix_size, s.n_workers)).powi(2))
        .sum()
}

/// Solves the 2x2 system `m x = r`.
fn solve2(m: [[f64; 2]; 2], r: [f64; 2]) -> Option<[f64; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([
        (r[0] * m[1][1] - m[0][1] * r[1]) / det,
        (m[0][0] * r[1] - m[1][0] * r[0]) / det,
    ])
}

/// Levenberg-Marquardt on raw seconds, started from [`log_space_fit`].
/// Iterates in `(ln a, b)`, which has the same minimiser and keeps the two
/// parameters on comparable scales.
pub fn fit_scaling(samples: &[TimingSample]) -> Result<ScalingModel> {
    let (a0, b0) = log_space_fit(samples)?;
    let (mut u, mut b) = (a0.ln(), b0);
    let mut sse = sse_of(samples, a0, b0);
    let mut lambda = 1e-3;
    for _ in 0..1000 {
        let mut jtj = [[0.0; 2]; 2];
        let mut jtr = [0.0; 2];
        for s in samples {
            let f = eval(u.exp(), b, s.matrix_size, s.n_workers);
            let g = [f, f * (s.n_workers as f64).ln()];
            let r = s.seconds - f;
            for i in 0..2 {
                jtr[i] += g[i] * r;
                for j in 0..2 {
                    jtj[i][j] += g[i] * g[j];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let damped = [
                [jtj[0][0] * (1.0 + lambda), jtj[0][1]],
                [jtj[1][0], jtj[1][1] * (1.0 + lambda)],
            ];
            let Some(step) = solve2(damped, jtr) else { break };
            let (nu, nb) = (u + step[0], b + step[1]);
            let nsse = sse_of(samples, nu.exp(), nb);
            if nsse.is_finite() && nsse <= sse {
                let done = sse - nsse <= 1e-15 * sse
                    && step[0].abs() < 1e-12
                    && step[1].abs() < 1e-12;
                u = nu;
                b = nb;
                sse = nsse;
                lambda = (lambda / 10.0).max(1e-12);
                improved = !done;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let a = u.exp();
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Fit("iteration diverged".into()));
    }
    Ok(ScalingModel {
        a,
        b,
        stats: Some(statistics(samples, a, b)?),
    })
}

fn statistics(samples: &[TimingSample], a: f64, b: f64) -> Result<FitStatistics> {
    let m = samples.len();
    let dof = (m - 2) as f64;
    let sse = sse_of(samples, a, b);
    let mean = samples.iter().map(|s| s.seconds).sum::<f64>() / m as f64;
    let sst: f64 = samples.iter().map(|s| (s.seconds - mean).powi(2)).sum();
    let r_square = 1.0 - sse / sst;
    let adjusted_r_square = 1.0 - (1.0 - r_square) * (m - 1) as f64 / dof;
    let rmse = (sse / dof).sqrt();

    // Covariance from the Jacobian in (a, b) at the optimum.
    let mut jtj = [[0.0; 2]; 2];
    for s in samples {
        let x = work(s.matrix_size) * (s.n_workers as f64).powf(b);
        let g = [x, a * x * (s.n_workers as f64).ln()];
        for i in 0..2 {
            for j in 0..2 {
                jtj[i][j] += g[i] * g[j];
            }
        }
    }
    let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Fit("singular Jacobian at the optimum".into()));
    }
    let s2 = sse / dof;
    let var_a = s2 * jtj[1][1] / det;
    let var_b = s2 * jtj[0][0] / det;
    let t = if dof > 0.0 {
        StudentsT::new(0.0, 1.0, dof)
            .map_err(|e| Error::Fit(e.to_string()))?
            .inverse_cdf(0.975)
    } else {
        f64::INFINITY
    };
    let (ha, hb) = (t * var_a.sqrt(), t * var_b.sqrt());
    Ok(FitStatistics {
        samples: m,
        sse,
        r_square,
        adjusted_r_square,
        rmse,
        ci95_a: (a - ha, a + ha),
        ci95_b: (b - hb, b + hb),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub seconds: f64,
    /// Range over the corners of the coefficient confidence box; `None`
    /// for models without fit statistics.
    pub interval: Option<(f64, f64)>,
}

pub fn predict_time(model: &ScalingModel, matrix_size: u32, n_workers: u32) -> Result<Prediction> {
    if matrix_size == 0 || n_workers == 0 {
        return Err(Error::Invalid("matrix size and worker count must be positive".into()));
    }
    if !(model.a > 0.0 && model.a.is_finite() && model.b.is_finite()) {
        return Err(Error::Fit("model has no usable coefficients".into()));
    }
    let interval = model.stats.map(|st| {
        let corners = [
            (st.ci95_a.0, st.ci95_b.0),
            (st.ci95_a.0, st.ci95_b.1),
            (st.ci95_a.1, st.ci95_b.0),
            (st.ci95_a.1, st.ci95_b.1),
        ]
        .map(|(a, b)| eval(a, b, matrix_size, n_workers));
        (
            corners.iter().copied().fold(f64::INFINITY, f64::min),
            corners.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    });
    Ok(Prediction {
        seconds: model.eval(matrix_size, n_workers),
        interval,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub spec: MatrixSpec,
    pub algorithm: Algorithm,
    pub mode: Mode,
    pub order: SummationOrder,
    pub balance: bool,
    pub workers: Vec<usize>,
    pub repetitions: usize,
    pub straggler: Option<Straggler>,
}

impl BenchConfig {
    pub fn new(spec: MatrixSpec, algorithm: Algorithm, workers: Vec<usize>) -> Self {
        Self {
            spec,
            algorithm,
            mode: Mode::Graycode,
            order: SummationOrder::Original,
            balance: false,
            workers,
            repetitions: 3,
            straggler: None,
        }
    }
}

/// One worker count of a bench sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchCell {
    pub sample: TimingSample,
    pub runs: Vec<f64>,
    pub value: PermanentValue,
}

/// Times `run_parallel` (wall clock, matrix generation excluded) for each
/// worker count; the reported time is the median of the repetitions.
pub fn bench(cfg: &BenchConfig) -> Result<Vec<BenchCell>> {
    if cfg.repetitions < 3 {
        return Err(Error::Invalid("bench needs at least 3 repetitions".into()));
    }
    if cfg.workers.is_empty() {
        return Err(Error::Invalid("bench needs at least one worker count".into()));
    }
    let m = cfg.spec.generate()?;
    let total = term_count(cfg.algorithm, m.n())?;
    let mut opts = RunOptions::new(cfg.mode, cfg.order).balanced(cfg.balance);
    let mut workers = cfg.workers.clone();
    workers.sort_unstable();
    workers.dedup();
    let mut cells = Vec::with_capacity(workers.len());
    for &w in &workers {
        let plan = make_plan(total, w, None)?;
        opts.straggler = cfg.straggler.filter(|s| s.worker < w);
        let mut runs = Vec::with_capacity(cfg.repetitions);
        let mut value = None;
        for _ in 0..cfg.repetitions {
            let run = run_parallel_timed(&m, cfg.algorithm, &plan, &opts)?;
            runs.push(run.wall_seconds.max(f64::MIN_POSITIVE));
            value = Some(run.value);
        }
        cells.push(BenchCell {
            sample: TimingSample::new(w as u32, m.n() as u32, median(&runs))?,
            runs,
            value: value.expect("at least one repetition"),
        });
    }
    Ok(cells)
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}
