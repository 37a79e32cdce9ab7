mod common;

use common::*;
use permlab::algorithms::permanent;
use permlab::generators::{gen_all_r, gen_diag_1i, gen_haar_unitary};
use permlab::parallel::run_parallel_timed;
use permlab::{
    make_plan, ryser_permanent, run_parallel, Algorithm, ComplexMatrix, ExactAlgorithm, Mode,
    RunOptions, SummationOrder, WorkerClass,
};
use proptest::prelude::*;
use rand::Rng;

fn bits(z: num_complex::Complex64) -> (u64, u64) {
    (z.re.to_bits(), z.im.to_bits())
}

#[test]
fn plan_examples() {
    let p = make_plan(8, 3, None).unwrap();
    let r: Vec<_> = p.ranges.iter().map(|r| (r.lo, r.hi)).collect();
    assert_eq!(r, vec![(0, 3), (3, 6), (6, 8)]);

    let p = make_plan(1 << 31, 256, None).unwrap();
    assert_eq!(p.ranges.len(), 256);
    assert!(p.ranges.iter().all(|r| r.hi - r.lo == 1 << 23));

    let p = make_plan(100, 1, Some(0.7)).unwrap();
    let r: Vec<_> = p.ranges.iter().map(|r| (r.lo, r.hi, r.class)).collect();
    assert_eq!(r, vec![(0, 70, WorkerClass::A), (70, 100, WorkerClass::B)]);

    assert!(make_plan(3, 4, None).is_err());
    assert!(make_plan(10, 0, None).is_err());
    assert!(make_plan(10, 2, Some(1.0)).is_err());
}

proptest! {
    #[test]
    fn plans_tile_the_term_range(total in 1u64..=1 << 20, workers in 1usize..=300, ratio in proptest::option::of(0.01f64..0.99)) {
        prop_assume!(total >= workers as u64);
        let plan = make_plan(total, workers, ratio).unwrap();
        let mut next = 0;
        for r in &plan.ranges {
            prop_assert_eq!(r.lo, next);
            prop_assert!(r.hi > r.lo);
            next = r.hi;
        }
        prop_assert_eq!(next, total);
        if ratio.is_none() {
            let lens: Vec<u64> = plan.ranges.iter().map(|r| r.hi - r.lo).collect();
            prop_assert_eq!(lens.len(), workers);
            prop_assert!(lens.iter().max().unwrap() - lens.iter().min().unwrap() <= 1);
        }
    }
}

#[test]
fn two_by_two_on_four_workers() {
    let m = ComplexMatrix::from_real_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    for (algo, total) in [(Algorithm::Ryser, 4), (Algorithm::Bbfg, 2)] {
        let workers = if algo == Algorithm::Ryser { 4 } else { 2 };
        let plan = make_plan(total, workers, None).unwrap();
        let v = run_parallel(&m, algo, &plan, &RunOptions::default()).unwrap();
        assert_eq!(v.value, c(10.0, 0.0));
        assert_eq!(v.workers, workers);
    }
}

/// Ranges are evaluated in canonical chunks whose size depends only on the
/// term count, so any plan whose boundaries fall on chunk boundaries (every
/// power-of-two worker count here) reproduces the one-worker bits.
#[test]
fn worker_count_does_not_change_bits() {
    let ones = gen_all_r(17, c(1.0, 0.0)).unwrap();
    let u = gen_haar_unitary(15, 4).unwrap();
    for m in [&ones, &u] {
        for algo in [Algorithm::Bbfg, Algorithm::Ryser] {
            let total = permlab::algorithms::term_count(algo, m.n()).unwrap();
            for order in [SummationOrder::Original, SummationOrder::Merge, SummationOrder::Separate] {
                let opts = RunOptions::new(Mode::Faithful, order);
                let one = make_plan(total, 1, None).unwrap();
                let serial = run_parallel(m, algo, &one, &opts).unwrap().value;
                let reference = permanent(m, algo, Mode::Faithful, order).unwrap().value;
                // rounding differs from the single left fold, not the value
                assert!(rel_diff(serial, reference) < 1e-3);
                for workers in [2, 4, 8] {
                    if total / workers as u64 % permlab::parallel::chunk_size(total) != 0 {
                        continue;
                    }
                    let plan = make_plan(total, workers, None).unwrap();
                    let v = run_parallel(m, algo, &plan, &opts).unwrap().value;
                    assert_eq!(bits(v), bits(serial), "{algo} {order} workers={workers}");
                }
            }
        }
    }
}

#[test]
fn merge_order_matches_the_serial_tree() {
    let u = gen_haar_unitary(14, 2).unwrap();
    let opts = RunOptions::new(Mode::Faithful, SummationOrder::Merge);
    let serial = permanent(&u, Algorithm::Bbfg, Mode::Faithful, SummationOrder::Merge).unwrap().value;
    for workers in [1, 2, 4] {
        let plan = make_plan(1 << 13, workers, None).unwrap();
        let v = run_parallel(&u, Algorithm::Bbfg, &plan, &opts).unwrap().value;
        assert_eq!(bits(v), bits(serial), "workers={workers}");
    }
}

#[test]
fn repeated_parallel_runs_are_identical() {
    let u = gen_haar_unitary(15, 6).unwrap();
    let plan = make_plan(1 << 15, 3, Some(0.4)).unwrap();
    let opts = RunOptions::new(Mode::Graycode, SummationOrder::Separate);
    let a = run_parallel(&u, Algorithm::Ryser, &plan, &opts).unwrap().value;
    let b = run_parallel(&u, Algorithm::Ryser, &plan, &opts).unwrap().value;
    assert_eq!(bits(a), bits(b));
}

#[test]
fn graycode_runs_are_deterministic_across_worker_counts() {
    let u = gen_haar_unitary(16, 9).unwrap();
    for algo in [Algorithm::Ryser, Algorithm::Bbfg] {
        let total = permlab::algorithms::term_count(algo, 16).unwrap();
        let opts = RunOptions::new(Mode::Graycode, SummationOrder::Original);
        let first = run_parallel(&u, algo, &make_plan(total, 1, None).unwrap(), &opts).unwrap().value;
        for workers in [2, 4, 8] {
            let plan = make_plan(total, workers, None).unwrap();
            let v = run_parallel(&u, algo, &plan, &opts).unwrap().value;
            assert_eq!(bits(v), bits(first), "{algo} workers={workers}");
        }
    }
}

#[test]
fn balanced_ryser_is_exact_on_integer_matrices() {
    let mut rng = rng(21);
    for n in 1..=12 {
        let rows = random_integer(&mut rng, n, 3);
        let m = from_integers(&rows);
        let want = expansion_i128(&rows) as f64;
        for mode in [Mode::Faithful, Mode::Graycode] {
            for workers in [1usize, 2, 3, 7] {
                let total = 1u64 << n;
                if total < workers as u64 {
                    continue;
                }
                let plan = make_plan(total, workers, None).unwrap();
                let opts = RunOptions::new(mode, SummationOrder::Original).balanced(true);
                let v = run_parallel(&m, Algorithm::Ryser, &plan, &opts).unwrap().value;
                assert_eq!(v, c(want, 0.0), "n={n} {mode} workers={workers}");
            }
        }
    }
}

#[test]
fn balance_is_rejected_for_bbfg() {
    let m = gen_all_r(4, c(1.0, 0.0)).unwrap();
    let plan = make_plan(8, 2, None).unwrap();
    let opts = RunOptions::default().balanced(true);
    assert!(run_parallel(&m, Algorithm::Bbfg, &plan, &opts).is_err());
}

#[test]
fn plan_must_match_the_formula() {
    let m = gen_all_r(5, c(1.0, 0.0)).unwrap();
    let plan = make_plan(32, 2, None).unwrap();
    assert!(run_parallel(&m, Algorithm::Bbfg, &plan, &RunOptions::default()).is_err());
    assert!(run_parallel(&m, Algorithm::Ryser, &plan, &RunOptions::default()).is_ok());
    assert!(run_parallel(&m, Algorithm::Naive, &plan, &RunOptions::default()).is_err());
}

/// Only the full subset has no zero row sum, so every range except the one
/// holding `2^n - 1` contributes exactly zero.
#[test]
fn diagonal_45_completes_from_its_last_range() {
    let n = 45;
    let m = gen_diag_1i(n).unwrap();
    let total = 1u64 << n;
    let last = ryser_permanent(&m, Mode::Faithful, total - 4096..total, SummationOrder::Original).unwrap();
    assert!(!last.complete);
    let mut rng = rng(22);
    for _ in 0..8 {
        let lo = rng.random_range(0..total - 8192);
        let other = ryser_permanent(&m, Mode::Faithful, lo..lo + 4096, SummationOrder::Original).unwrap();
        assert_eq!(other.value.norm(), 0.0);
    }
    // n is odd: the (-1)^n factor
    let completed = -last.value;
    let want = permlab::ExactScalar::from_c64(c(1.0, 1.0)).pow(n as u32).to_c64();
    assert!(rel_diff(completed, want) < 1e-12);
    assert_eq!(completed, c(4194304.0, 4194304.0).scale(-1.0));
}

#[test]
fn exact_and_parallel_agree_on_small_integers() {
    let mut rng = rng(23);
    let rows = random_integer(&mut rng, 11, 2);
    let m = from_integers(&rows);
    let exact = permlab::exact_permanent(&m, ExactAlgorithm::Bbfg).unwrap().to_c64();
    for algo in [Algorithm::Ryser, Algorithm::Bbfg] {
        let total = permlab::algorithms::term_count(algo, 11).unwrap();
        let plan = make_plan(total, 5, Some(0.3)).unwrap();
        let v = run_parallel(&m, algo, &plan, &RunOptions::default()).unwrap();
        assert_eq!(v.value, exact);
    }
}

#[test]
fn straggler_sets_the_pace() {
    let m = gen_all_r(20, c(1.0, 0.0)).unwrap();
    let total = 1u64 << 19;
    let plan = make_plan(total, 4, None).unwrap();
    let base = RunOptions::default();
    let run = run_parallel_timed(&m, Algorithm::Bbfg, &plan, &base.with_straggler(2, 1.0)).unwrap();
    assert_eq!(run.range_seconds.len(), 4);
    let slow = run_parallel_timed(&m, Algorithm::Bbfg, &plan, &base.with_straggler(2, 4.0)).unwrap();
    assert_eq!(bits(slow.value.value), bits(run.value.value));
    let mut others: Vec<f64> = [0, 1, 3].iter().map(|&i| slow.range_seconds[i]).collect();
    others.sort_by(f64::total_cmp);
    assert!(slow.range_seconds[2] > 2.0 * others[1], "{:?}", slow.range_seconds);
    assert!(slow.wall_seconds >= slow.range_seconds[2]);
    assert!(run_parallel_timed(&m, Algorithm::Bbfg, &plan, &base.with_straggler(4, 2.0)).is_err());
    assert!(run_parallel_timed(&m, Algorithm::Bbfg, &plan, &base.with_straggler(0, 0.5)).is_err());
}
