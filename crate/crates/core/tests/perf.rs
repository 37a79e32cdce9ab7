use permlab::generators::MatrixSpec;
use permlab::perf::{
    bench, bundled_bbfg_hybrid, bundled_ryser_cpu, fit_scaling, log_space_fit, predict_time,
    read_samples, write_samples, BenchConfig, ScalingModel, TimingSample,
};
use permlab::algorithms::term_count;
use permlab::parallel::run_parallel_timed;
use permlab::{make_plan, Algorithm, Error, Mode, RunOptions, SummationOrder};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn bundled_datasets_load() {
    let hybrid = bundled_bbfg_hybrid();
    assert_eq!(hybrid.len(), 81);
    assert_eq!(bundled_ryser_cpu().len(), 63);
    assert!(hybrid.iter().all(|s| s.seconds > 0.0 && s.matrix_size >= 24));
}

#[test]
fn fit_on_bundled_hybrid_data() {
    let model = fit_scaling(&bundled_bbfg_hybrid()).unwrap();
    let st = model.stats.unwrap();
    assert!(rel(model.a, 1.1408e-11) < 1e-3, "{}", model.a);
    assert!(rel(model.b, -0.910865) < 1e-4, "{}", model.b);
    assert!(st.r_square > 0.97 && st.r_square < 0.98);
    assert!(st.adjusted_r_square < st.r_square);
    assert!(st.ci95_a.0 < model.a && model.a < st.ci95_a.1);
    assert!(st.ci95_b.0 < model.b && model.b < st.ci95_b.1);
    assert!(rel(st.rmse.powi(2) * (st.samples - 2) as f64, st.sse) < 1e-9);
}

#[test]
fn raw_fit_improves_on_its_log_space_start() {
    let data = bundled_bbfg_hybrid();
    let (a0, b0) = log_space_fit(&data).unwrap();
    let sse = |m: &ScalingModel| -> f64 {
        data.iter().map(|s| (s.seconds - m.eval(s.matrix_size, s.n_workers)).powi(2)).sum()
    };
    let fitted = fit_scaling(&data).unwrap();
    let start = ScalingModel::from_coefficients(a0, b0).unwrap();
    assert!(sse(&fitted) < sse(&start));
    assert!(rel(sse(&fitted), fitted.stats.unwrap().sse) < 1e-9);
}

#[test]
fn synthetic_samples_are_recovered() {
    let truth = ScalingModel::from_coefficients(1e-11, -0.9).unwrap();
    let mut samples = Vec::new();
    for &n in &[32u32, 64, 128, 256, 512, 1024] {
        for size in [34u32, 36, 38, 40] {
            samples.push(TimingSample::new(n, size, truth.eval(size, n)).unwrap());
        }
    }
    let fit = fit_scaling(&samples).unwrap();
    assert!(rel(fit.a, 1e-11) < 5e-7, "{}", fit.a);
    assert!(rel(fit.b, -0.9) < 5e-7, "{}", fit.b);
    let (a, b) = log_space_fit(&samples).unwrap();
    assert!(rel(a, 1e-11) < 1e-9 && rel(b, -0.9) < 1e-9);
}

#[test]
fn degenerate_designs_are_rejected() {
    let same: Vec<_> = (30..35).map(|n| TimingSample::new(64, n, 1.0).unwrap()).collect();
    assert!(matches!(fit_scaling(&same), Err(Error::Fit(_))));
    assert!(matches!(fit_scaling(&same[..2]), Err(Error::Fit(_))));
    assert!(TimingSample::new(0, 30, 1.0).is_err());
    assert!(TimingSample::new(4, 30, -1.0).is_err());
    assert!(ScalingModel::from_coefficients(0.0, -0.9).is_err());
}

#[test]
fn published_coefficients_predictions() {
    let m = ScalingModel::from_coefficients(9.805e-12, -0.8782).unwrap();
    let p = predict_time(&m, 50, 16000).unwrap();
    let minutes = p.seconds / 60.0;
    assert!((93.0..94.5).contains(&minutes), "{minutes}");
    assert!(p.interval.is_none());
    // measured 24.86 s
    let t = predict_time(&m, 40, 4096).unwrap().seconds;
    assert!(t > 2.486 && t < 248.6, "{t}");
    let t = predict_time(&m, 30, 1).unwrap().seconds;
    assert_eq!(t, 9.805e-12 * 900.0 * 2f64.powi(30));
    assert!(predict_time(&m, 0, 4).is_err());
}

#[test]
fn predictions_are_monotone() {
    let m = fit_scaling(&bundled_bbfg_hybrid()).unwrap();
    let mut last = f64::INFINITY;
    for n in [1, 2, 16, 256, 4096, 16000] {
        let t = predict_time(&m, 44, n).unwrap().seconds;
        assert!(t < last);
        last = t;
    }
    let mut last = 0.0;
    for size in 20..=50 {
        let p = predict_time(&m, size, 1024).unwrap();
        let (lo, hi) = p.interval.unwrap();
        assert!(lo <= p.seconds && p.seconds <= hi && p.seconds > last);
        last = p.seconds;
    }
}

#[test]
fn samples_round_trip_through_csv() {
    let data = bundled_ryser_cpu();
    let mut buf = Vec::new();
    write_samples(&data, &mut buf).unwrap();
    let back = read_samples(buf.as_slice()).unwrap();
    assert_eq!(back, data);
    assert!(read_samples("nodes,size,seconds\n4,30,abc\n".as_bytes()).is_err());
}

#[test]
fn small_bench_reports_medians() {
    let mut cfg = BenchConfig::new(MatrixSpec::AllR { n: 12, r: 1.0 }, Algorithm::Bbfg, vec![2, 1, 2]);
    let cells = bench(&cfg).unwrap();
    assert_eq!(cells.len(), 2);
    assert_eq!(cells[0].sample.n_workers, 1);
    for cell in &cells {
        assert_eq!(cell.runs.len(), 3);
        assert_eq!(cell.sample.seconds, permlab::perf::median(&cell.runs));
        assert_eq!(cell.sample.matrix_size, 12);
    }
    cfg.repetitions = 2;
    assert!(bench(&cfg).is_err());
}

#[test]
fn one_more_row_roughly_doubles_the_time() {
    // per-row growth as the geometric mean over two rows; runs of both
    // sizes are interleaved and the fastest kept, which cancels most of the
    // load from other processes on the machine
    let setup = |n| {
        let m = MatrixSpec::AllR { n, r: 1.0 }.generate().unwrap();
        let plan = make_plan(term_count(Algorithm::Bbfg, n).unwrap(), 1, None).unwrap();
        (m, plan)
    };
    let (small, large) = (setup(26), setup(28));
    let opts = RunOptions::new(Mode::Graycode, SummationOrder::Original);
    let (mut t_small, mut t_large) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..5 {
        for ((m, plan), t) in [(&small, &mut t_small), (&large, &mut t_large)] {
            let run = run_parallel_timed(m, Algorithm::Bbfg, plan, &opts).unwrap();
            *t = t.min(run.wall_seconds);
        }
    }
    let ratio = (t_large / t_small).sqrt();
    assert!((1.8..=2.3).contains(&ratio), "{ratio}");
}

#[test]
fn more_workers_are_not_slower() {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    if cores < 4 {
        eprintln!("skipped: {cores} core(s) available");
        return;
    }
    let cfg = BenchConfig::new(MatrixSpec::AllR { n: 24, r: 1.0 }, Algorithm::Bbfg, vec![1, 2, 4]);
    let cells = bench(&cfg).unwrap();
    for w in cells.windows(2) {
        assert!(w[1].sample.seconds <= w[0].sample.seconds * 1.1);
    }
}

