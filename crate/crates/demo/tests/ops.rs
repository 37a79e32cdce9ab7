use permlab_demo::{allone_error_curve, permanent_report, predict_curve, MAX_N};
use serde_json::Value;

fn json(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.unwrap()).unwrap()
}

#[test]
fn two_by_two_is_ad_plus_bc() {
    // perm [[1+i, 2], [3, -0.5]] = (1+i)(-0.5) + 2*3 = 5.5 - 0.5i
    let v = json(permanent_report("2\n1 1  2 0\n3 0  -0.5 0\n"));
    assert_eq!(v["n"], 2);
    assert_eq!(v["exact"], "11/2 - 1/2i");
    let values = v["values"].as_array().unwrap();
    assert_eq!(values.len(), 5);
    for x in values {
        assert_eq!((x["re"].as_f64(), x["im"].as_f64()), (Some(5.5), Some(-0.5)), "{x}");
        assert_eq!(x["rel_error"], 0.0);
    }
}

#[test]
fn decimal_entries_are_compared_exactly() {
    // 0.1 is not a binary64 number, so the float formulas are slightly off
    // the exact 3 * 2 * 0.1^3 = 3/500
    let v = json(permanent_report(&format!("3\n{}", "0.1 0  0.1 0  0.1 0\n".repeat(3))));
    assert_eq!(v["exact"], "3/500");
    let rel = v["values"][0]["rel_error"].as_f64().unwrap();
    assert!(rel > 0.0 && rel < 1e-15, "{rel}");
}

#[test]
fn large_matrices_fall_back_to_closed_forms() {
    let n = 14;
    let row = vec!["1 0"; n].join("  ");
    let text = format!("{n}\n{}", format!("{row}\n").repeat(n));
    let v = json(permanent_report(&text));
    assert_eq!(v["exact"], "87178291200/1");
    // no n! reference at this size
    assert_eq!(v["values"].as_array().unwrap().len(), 4);

    let n = MAX_N + 1;
    let row = vec!["1 0"; n].join("  ");
    let text = format!("{n}\n{}", format!("{row}\n").repeat(n));
    assert!(permanent_report(&text).unwrap_err().contains("too large"));
    assert!(permanent_report("2\n1 0 2 0\n3 0\n").is_err());
}

#[test]
fn error_curves_match_the_precision_lab() {
    let v = json(allone_error_curve("ryser", "original", 15));
    let pts = v.as_array().unwrap();
    assert_eq!(pts.len(), 15);
    assert!(pts[..14].iter().all(|p| p["abs_error"] == 0.0));
    // 15! + 256 was computed: 256 / 1307674368000
    assert_eq!(pts[14]["abs_error"], 256.0);
    assert!((pts[14]["rel_error_rate"].as_f64().unwrap() - 256.0 / 1307674368000.0).abs() < 1e-24);

    let v = json(allone_error_curve("bbfg", "merge", 13));
    assert!(v.as_array().unwrap().iter().all(|p| p["rel_error_rate"] == 0.0));

    assert!(allone_error_curve("naive", "original", 5).is_err());
    assert!(allone_error_curve("ryser", "sideways", 5).is_err());
    assert!(allone_error_curve("ryser", "original", 0).is_err());
    assert!(allone_error_curve("ryser", "original", MAX_N + 1).is_err());
}

#[test]
fn prediction_curve_halves_with_b_minus_one() {
    // a * N^2 * 2^N * w^b with a = 1e-9, N = 10, b = -1: 1.024e-4 / w
    let v = json(predict_curve(1e-9, -1.0, 10, 6));
    let pts = v.as_array().unwrap();
    let workers: Vec<u64> = pts.iter().map(|p| p["workers"].as_u64().unwrap()).collect();
    assert_eq!(workers, [1, 2, 4, 6]);
    for p in pts {
        let w = p["workers"].as_f64().unwrap();
        let s = p["seconds"].as_f64().unwrap();
        assert!((s - 1.024e-4 / w).abs() < 1e-18, "{p}");
    }
    assert_eq!(json(predict_curve(1e-9, 0.0, 10, 1)).as_array().unwrap().len(), 1);
    assert!(predict_curve(0.0, -1.0, 10, 4).is_err());
    assert!(predict_curve(1e-9, -1.0, 10, 0).is_err());
    assert!(predict_curve(1e-9, -1.0, 0, 4).is_err());
}
