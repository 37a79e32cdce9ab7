use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use permlab::algorithms::{exact_permanent_of, permanent, term_count};
use permlab::generators::MatrixSpec;
use permlab::parallel::{run_parallel_timed, Straggler};
use permlab::perf::{self, BenchConfig, ScalingModel, TimingSample};
use permlab::precision::{self, format_complex};
use permlab::{
    make_plan, Algorithm, ComplexMatrix, ExactAlgorithm, ExactMatrix, Mode, RunOptions,
    SummationOrder,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::manifest::{available_threads, InputFile, RunManifest};
use crate::{
    BenchArgs, Bundled, ComputeArgs, DataArgs, DoublecheckArgs, FitArgs, GenArgs, Kind,
    OrdersArgs, PredictArgs, Source, SweepArgs, VerifyArgs,
};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or unreadable input.
    Usage(String),
    /// The computation itself failed.
    Kernel(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Kernel(_) => ExitCode::from(1),
            CliError::Usage(_) => ExitCode::from(2),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Kernel(m) => write!(f, "computation failed: {m}"),
        }
    }
}

impl From<permlab::Error> for CliError {
    fn from(e: permlab::Error) -> Self {
        use permlab::Error::*;
        match e {
            Parse { .. } | Io(_) | Csv(_) | Invalid(_) => CliError::Usage(e.to_string()),
            _ => CliError::Kernel(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

const VERIFY_FAILED: u8 = 3;

fn params<T: Serialize>(args: &T) -> Value {
    serde_json::to_value(args).unwrap_or(Value::Null)
}

/// Prints `result` as JSON with the manifest attached, or as `text`.
fn emit<T: Serialize>(json: bool, mut manifest: RunManifest, start: Instant, result: &T, text: String) {
    manifest.wall_seconds = start.elapsed().as_secs_f64();
    if json {
        let mut v = serde_json::to_value(result).expect("result serializes");
        v["manifest"] = serde_json::to_value(&manifest).expect("manifest serializes");
        println!("{}", serde_json::to_string_pretty(&v).expect("json"));
    } else {
        print!("{text}");
    }
}

fn read_input(path: &Path, manifest: &mut RunManifest) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    manifest.inputs.push(InputFile::new(path, &bytes));
    String::from_utf8(bytes).map_err(|_| CliError::Usage(format!("{}: not UTF-8 text", path.display())))
}

fn load_matrix(path: &Path, manifest: &mut RunManifest) -> Result<(ComplexMatrix, String)> {
    let text = read_input(path, manifest)?;
    let m = ComplexMatrix::parse(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok((m, text))
}

#[derive(Serialize)]
struct Cplx {
    re: f64,
    im: f64,
}

impl From<Complex64> for Cplx {
    fn from(z: Complex64) -> Self {
        Cplx { re: z.re, im: z.im }
    }
}

#[derive(Serialize)]
struct ComputeOutput {
    n: usize,
    re: f64,
    im: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<String>,
    algorithm: Algorithm,
    mode: Mode,
    order: String,
    workers: usize,
    seconds: f64,
}

pub fn compute(a: ComputeArgs) -> Result<ExitCode> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("compute", params(&a));
    let (m, text) = load_matrix(&a.matrix, &mut manifest)?;
    let run = &a.run;
    let t0 = Instant::now();
    let (value, exact, mode, workers, seconds) = match run.algo {
        Algorithm::Exact => {
            // reparse so decimal literals such as 0.1 stay exact
            let em = ExactMatrix::parse(&text)?;
            let x = exact_permanent_of(&em, ExactAlgorithm::Ryser, false)?;
            (x.to_c64(), Some(x.to_string()), Mode::Faithful, 1, t0.elapsed().as_secs_f64())
        }
        Algorithm::Naive => {
            let v = permanent(&m, Algorithm::Naive, run.mode, run.order)?;
            (v.value, None, v.mode, 1, t0.elapsed().as_secs_f64())
        }
        algo => {
            let threads = run.threads.unwrap_or_else(available_threads);
            if threads == 0 {
                return Err(CliError::Usage("--threads must be at least 1".into()));
            }
            let total = term_count(algo, m.n())?;
            let plan = make_plan(total, threads.min(total as usize), run.ratio)?;
            let opts = RunOptions::new(run.mode, run.order).balanced(run.balance);
            let r = run_parallel_timed(&m, algo, &plan, &opts)?;
            (r.value.value, None, run.mode, r.value.workers, r.wall_seconds)
        }
    };
    let out = ComputeOutput {
        n: m.n(),
        re: value.re,
        im: value.im,
        exact,
        algorithm: run.algo,
        mode,
        order: run.order.to_string(),
        workers,
        seconds,
    };
    let text = match &out.exact {
        Some(x) => format!("{x}\n"),
        None => format!("{}\n", format_complex(value)),
    };
    emit(a.json, manifest, start, &out, text);
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct VerifyOutput {
    n: usize,
    ryser: Cplx,
    bbfg: Cplx,
    rel_diff: Option<f64>,
    threshold: f64,
    pass: bool,
}

fn passes(rep: &precision::DoubleCheckReport, threshold: f64) -> bool {
    // a zero BB/FG value leaves the ratio undefined; then both must vanish
    rep.rel_diff.map_or(rep.perm_ryser == Complex64::new(0.0, 0.0), |d| d < threshold)
}

pub fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("verify", params(&a));
    let (m, _) = load_matrix(&a.matrix, &mut manifest)?;
    let rep = precision::double_check(&m, a.order)?;
    let pass = passes(&rep, a.threshold);
    let out = VerifyOutput {
        n: rep.n,
        ryser: rep.perm_ryser.into(),
        bbfg: rep.perm_bbfg.into(),
        rel_diff: rep.rel_diff,
        threshold: a.threshold,
        pass,
    };
    let text = format!(
        "ryser {}\nbbfg  {}\nrel_diff {} ({})\n",
        format_complex(rep.perm_ryser),
        format_complex(rep.perm_bbfg),
        rep.rel_diff.map_or("undefined".to_string(), |d| format!("{d:e}")),
        if pass { "ok" } else { "FAILED" }
    );
    emit(a.json, manifest, start, &out, text);
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(VERIFY_FAILED) })
}

impl Source {
    fn spec(&self) -> MatrixSpec {
        let (n, f) = (self.n, &self.family);
        match self.kind {
            Kind::Allone => MatrixSpec::AllR { n, r: 1.0 },
            Kind::Allr => MatrixSpec::AllR { n, r: f.r },
            Kind::Allc => MatrixSpec::AllC { n, re: f.r, im: f.im },
            Kind::Diag1i => MatrixSpec::Diag1i { n },
            Kind::Haar => MatrixSpec::HaarUnitary { n, seed: f.seed },
            Kind::Derived => MatrixSpec::Derived {
                base_seed: f.seed,
                base_n: f.base_n,
                sub_n: n,
                selection_seed: f.selection_seed,
            },
            Kind::Special => MatrixSpec::SpecialDerived { base_seed: f.seed, target_n: n },
        }
    }

    /// The `k`-th member of a seeded family.
    fn nth(&self, k: u64) -> Source {
        let mut s = self.clone();
        s.family.seed += k;
        s.family.selection_seed += k;
        s
    }
}

pub fn gen(a: GenArgs) -> Result<ExitCode> {
    let spec = a.source.spec();
    let m = spec.generate()?;
    let mut text = format!(
        "# {}\n# spec: {}\n",
        std::env::args().collect::<Vec<_>>().join(" "),
        serde_json::to_string(&spec).expect("spec serializes")
    );
    text.push_str(&m.to_text()?);
    match &a.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

/// `1`, `-0.5`, `2i`, `1+1i`, `1.5-2i`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let bad = || CliError::Usage(format!("cannot parse '{s}' as a complex number"));
    let t = s.trim();
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|x| Complex64::new(x, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that is not part of an exponent or the leading sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        x => x,
    };
    Ok(Complex64::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?))
}

fn sizes(lo: usize, hi: usize) -> Result<Vec<usize>> {
    if lo == 0 || lo > hi {
        return Err(CliError::Usage(format!("need 1 <= --n-min <= --n-max (got {lo}..{hi})")));
    }
    Ok((lo..=hi).collect())
}

/// `out.csv` -> `out-ryser.csv`.
fn suffixed(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}-{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{tag}"),
    };
    path.with_file_name(name)
}

#[derive(Serialize)]
struct SweepOutput {
    sweeps: Vec<AlgoSweep>,
}

#[derive(Serialize)]
struct AlgoSweep {
    algorithm: Algorithm,
    #[serde(skip_serializing_if = "Option::is_none")]
    csv: Option<PathBuf>,
    reports: Vec<precision::ErrorReport>,
    trends: Vec<precision::SweepTrend>,
}

pub fn sweep(a: SweepArgs) -> Result<ExitCode> {
    let start = Instant::now();
    let manifest = RunManifest::new("precision sweep", params(&a));
    let ns = sizes(a.n_min, a.n_max)?;
    let rs = a.r.iter().map(|s| parse_complex(s)).collect::<Result<Vec<_>>>()?;
    let mut algos = a.algo.clone();
    algos.dedup();
    if let Some(bad) = algos.iter().find(|x| !matches!(x, Algorithm::Ryser | Algorithm::Bbfg)) {
        return Err(CliError::Usage(format!("sweeps run ryser or bbfg, not {bad}")));
    }
    let mut out = SweepOutput { sweeps: Vec::new() };
    let mut text = String::new();
    for &algo in &algos {
        let sw = precision::allr_sweep(&ns, &rs, algo, a.order)?;
        let csv = a.csv.as_ref().map(|p| if algos.len() > 1 { suffixed(p, algo.name()) } else { p.clone() });
        match &csv {
            Some(path) => {
                precision::write_sweep_csv(&sw.reports, fs::File::create(path)?)?;
                for t in &sw.trends {
                    text.push_str(&format!(
                        "{algo} r={}: log10 slope {} over {} nonzero points -> {}\n",
                        format_complex(t.r),
                        t.log10_slope.map_or("n/a".into(), |s| format!("{s:.3}")),
                        t.nonzero_points,
                        path.display()
                    ));
                }
            }
            None if !a.json => {
                let mut buf = Vec::new();
                precision::write_sweep_csv(&sw.reports, &mut buf)?;
                if algos.len() > 1 {
                    text.push_str(&format!("# {algo}\n"));
                }
                text.push_str(&String::from_utf8_lossy(&buf));
            }
            None => {}
        }
        out.sweeps.push(AlgoSweep { algorithm: algo, csv, reports: sw.reports, trends: sw.trends });
    }
    emit(a.json, manifest, start, &out, text);
    Ok(ExitCode::SUCCESS)
}

pub fn orders(a: OrdersArgs) -> Result<ExitCode> {
    let start = Instant::now();
    let manifest = RunManifest::new("precision orders", params(&a));
    let ns = sizes(a.n_min, a.n_max)?;
    let rows = precision::order_study(&ns, &SummationOrder::standard_four(a.seed))?;
    let mut buf = Vec::new();
    precision::write_order_csv(&rows, &mut buf)?;
    let text = match &a.csv {
        Some(path) => {
            fs::write(path, &buf)?;
            format!("{} rows -> {}\n", rows.len(), path.display())
        }
        None => String::from_utf8_lossy(&buf).into_owned(),
    };
    emit(a.json, manifest, start, &json!({ "rows": rows }), text);
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CheckRow {
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    ryser: Cplx,
    bbfg: Cplx,
    rel_diff: Option<f64>,
    pass: bool,
}

pub fn doublecheck(a: DoublecheckArgs) -> Result<ExitCode> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("precision doublecheck", params(&a));
    let cases: Vec<(Option<u64>, ComplexMatrix)> = match (&a.matrix, a.kind, a.n) {
        (Some(path), _, _) => vec![(None, load_matrix(path, &mut manifest)?.0)],
        (None, Some(kind), Some(n)) => {
            let src = Source { kind, n, family: a.family.clone() };
            (0..a.cases)
                .map(|k| {
                    let s = src.nth(k);
                    Ok((Some(s.family.seed), s.spec().generate()?))
                })
                .collect::<Result<_>>()?
        }
        _ => return Err(CliError::Usage("give --matrix or --kind and --n".into())),
    };
    let mut rows = Vec::with_capacity(cases.len());
    for (seed, m) in &cases {
        let rep = precision::double_check(m, a.order)?;
        rows.push(CheckRow {
            n: rep.n,
            seed: *seed,
            ryser: rep.perm_ryser.into(),
            bbfg: rep.perm_bbfg.into(),
            rel_diff: rep.rel_diff,
            pass: passes(&rep, a.threshold),
        });
    }
    let mut csv = String::from("n,seed,ryser_re,ryser_im,bbfg_re,bbfg_im,rel_diff\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{:e},{:e},{:e},{:e},{}\n",
            r.n,
            r.seed.map_or(String::new(), |s| s.to_string()),
            r.ryser.re,
            r.ryser.im,
            r.bbfg.re,
            r.bbfg.im,
            r.rel_diff.map_or("undefined".into(), |d| format!("{d:e}"))
        ));
    }
    let passed = rows.iter().filter(|r| r.pass).count();
    let summary = format!("{passed}/{} cases below {:e}\n", rows.len(), a.threshold);
    let text = match &a.csv {
        Some(path) => {
            fs::write(path, &csv)?;
            summary
        }
        None => csv + &summary,
    };
    let out = json!({ "threshold": a.threshold, "passed": passed, "cases": rows });
    emit(a.json, manifest, start, &out, text);
    Ok(ExitCode::SUCCESS)
}

fn parse_straggler(s: &str) -> Result<Straggler> {
    let bad = || CliError::Usage(format!("--straggler wants WORKER:FACTOR, got '{s}'"));
    let (w, f) = s.split_once(':').ok_or_else(bad)?;
    Ok(Straggler { worker: w.parse().map_err(|_| bad())?, factor: f.parse().map_err(|_| bad())? })
}

#[derive(Serialize)]
struct BenchRow {
    workers: u32,
    size: u32,
    seconds: f64,
    runs: Vec<f64>,
    value: Cplx,
}

pub fn bench(a: BenchArgs) -> Result<ExitCode> {
    let start = Instant::now();
    let manifest = RunManifest::new("bench", params(&a));
    let mut cfg = BenchConfig::new(a.source.spec(), a.algo, a.workers.clone());
    cfg.mode = a.mode;
    cfg.order = a.order;
    cfg.balance = a.balance;
    cfg.repetitions = a.reps;
    cfg.straggler = a.straggler.as_deref().map(parse_straggler).transpose()?;
    let cells = perf::bench(&cfg)?;
    let samples: Vec<TimingSample> = cells.iter().map(|c| c.sample).collect();
    if let Some(path) = &a.csv {
        perf::write_samples(&samples, fs::File::create(path)?)?;
    }
    let rows: Vec<BenchRow> = cells
        .iter()
        .map(|c| BenchRow {
            workers: c.sample.n_workers,
            size: c.sample.matrix_size,
            seconds: c.sample.seconds,
            runs: c.runs.clone(),
            value: c.value.value.into(),
        })
        .collect();
    let mut text = String::from("workers,size,median_seconds\n");
    for r in &rows {
        text.push_str(&format!("{},{},{:.6}\n", r.workers, r.size, r.seconds));
    }
    emit(a.json, manifest, start, &json!({ "algorithm": a.algo, "mode": a.mode, "cells": rows }), text);
    Ok(ExitCode::SUCCESS)
}

fn load_data(d: &DataArgs, manifest: &mut RunManifest) -> Result<Option<Vec<TimingSample>>> {
    Ok(match (&d.data, d.bundled) {
        (Some(path), _) => Some(perf::read_samples(read_input(path, manifest)?.as_bytes())?),
        (None, Some(Bundled::BbfgHybrid)) => Some(perf::bundled_bbfg_hybrid()),
        (None, Some(Bundled::RyserCpu)) => Some(perf::bundled_ryser_cpu()),
        (None, None) => None,
    })
}

#[derive(Serialize)]
struct FitOutput {
    a: f64,
    b: f64,
    stats: perf::FitStatistics,
    log_space: LogSpace,
}

#[derive(Serialize)]
struct LogSpace {
    a: f64,
    b: f64,
}

pub fn fit(a: FitArgs) -> Result<ExitCode> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("fit", params(&a));
    let samples = load_data(&a.data, &mut manifest)?
        .ok_or_else(|| CliError::Usage("give --data FILE or --bundled NAME".into()))?;
    let model = perf::fit_scaling(&samples)?;
    let (a0, b0) = perf::log_space_fit(&samples)?;
    let st = model.stats.expect("fitted models carry statistics");
    let text = format!(
        "a = {:.5e}  95% [{:.5e}, {:.5e}]\nb = {:.5}  95% [{:.5}, {:.5}]\n\
         SSE = {:.4}  R^2 = {:.5}  adj. R^2 = {:.5}  RMSE = {:.4}  ({} samples)\n",
        model.a, st.ci95_a.0, st.ci95_a.1, model.b, st.ci95_b.0, st.ci95_b.1,
        st.sse, st.r_square, st.adjusted_r_square, st.rmse, st.samples
    );
    let out = FitOutput { a: model.a, b: model.b, stats: st, log_space: LogSpace { a: a0, b: b0 } };
    emit(a.json, manifest, start, &out, text);
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct PredictOutput {
    a: f64,
    b: f64,
    n_size: u32,
    workers: u32,
    seconds: f64,
    minutes: f64,
    interval_seconds: Option<(f64, f64)>,
}

pub fn predict(a: PredictArgs) -> Result<ExitCode> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("predict", params(&a));
    let model = match (a.a, a.b, load_data(&a.data, &mut manifest)?) {
        (Some(ca), Some(cb), None) => ScalingModel::from_coefficients(ca, cb)?,
        (None, None, Some(samples)) => perf::fit_scaling(&samples)?,
        _ => return Err(CliError::Usage("give either --a and --b or --data/--bundled".into())),
    };
    let p = perf::predict_time(&model, a.n_size, a.workers)?;
    let mut text = format!("{:.1} s = {:.2} min", p.seconds, p.seconds / 60.0);
    if let Some((lo, hi)) = p.interval {
        text.push_str(&format!("  (95% [{:.2}, {:.2}] min)", lo / 60.0, hi / 60.0));
    }
    text.push('\n');
    let out = PredictOutput {
        a: model.a,
        b: model.b,
        n_size: a.n_size,
        workers: a.workers,
        seconds: p.seconds,
        minutes: p.seconds / 60.0,
        interval_seconds: p.interval,
    };
    emit(a.json, manifest, start, &out, text);
    Ok(ExitCode::SUCCESS)
}
