use std::io::Write;
use std::process::{Command, Output};

fn bmt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bmt"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Byte offsets of `"key":` in order; panics if a key is missing.
fn key_positions(text: &str, keys: &[&str]) -> Vec<usize> {
    keys.iter()
        .map(|k| {
            text.find(&format!("\"{k}\":"))
                .unwrap_or_else(|| panic!("missing key {k} in {text}"))
        })
        .collect()
}

fn csv_file(body: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
    f.write_all(body.as_bytes()).unwrap();
    f
}

#[test]
fn parse_prints_structure() {
    let o = bmt(&["parse", "((1,2,3),4,0);"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("fiber size  4"), "{text}");
    assert!(text.contains("node 5"), "{text}");

    let o = bmt(&["--json", "parse", "fig1"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["leaves"], 5);
    assert_eq!(v["fiber_size"], 4);
    assert_eq!(v["edges"].as_array().unwrap().len(), 6);
}

#[test]
fn mld_json_schema_and_order() {
    let o = bmt(&["--json", "--seed", "4", "mld", "star3"]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    let keys = [
        "tree",
        "seed",
        "fiber_size",
        "raw_count",
        "mld",
        "diverged",
        "filtered_divisor",
        "clusters",
    ];
    let pos = key_positions(&text, &keys);
    assert!(
        pos.windows(2).all(|w| w[0] < w[1]),
        "keys out of order: {text}"
    );
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["seed"], 4);
    assert_eq!(v["mld"], 7);
    assert_eq!(v["fiber_size"], 2);
    assert_eq!(v["raw_count"], 14);
    assert_eq!(v["diverged"], 18);
    let clusters = v["clusters"].as_array().unwrap();
    assert_eq!(clusters.len(), 14);
    let c = &clusters[0];
    let first = &text[pos[7]..];
    let p = key_positions(first, &["point", "multiplicity", "residual"]);
    assert!(p[0] < p[1] && p[1] < p[2]);
    assert_eq!(c["point"].as_array().unwrap().len(), 4);
    assert!(c["residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn mld_is_deterministic() {
    let a = bmt(&["--json", "--seed", "9", "mld", "(1,2,3,4,0);"]);
    let b = bmt(&[
        "--json",
        "--seed",
        "9",
        "--threads",
        "1",
        "mld",
        "(1,2,3,4,0);",
    ]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["mld"], 21);
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["parse", "((1,2),0);"],
        vec!["parse", "nonsense"],
        vec!["frobnicate"],
        vec!["mle", "star2"],
        vec!["reroot", "fig1", "--leaf", "9"],
        vec!["verify-star", "--n-max", "9"],
    ] {
        let o = bmt(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {o:?}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(bmt(&["--help"]).status.code(), Some(0));
}

#[test]
fn failed_validity_check_exits_two() {
    // a threshold below every solution norm declares all paths divergent
    let o = bmt(&["verify-star", "--n-max", "3", "--infinity-threshold", "0.5"]);
    assert_eq!(o.status.code(), Some(2), "{o:?}");
    assert!(stdout(&o).contains("NO"));
}

#[test]
fn verify_star_small() {
    let o = bmt(&["--json", "verify-star", "--n-max", "4"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let computed: Vec<u64> = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["computed"].as_u64().unwrap())
        .collect();
    assert_eq!(computed, [1, 7, 21]);
}

#[test]
fn determinant_and_ideal() {
    let o = bmt(&["--json", "det", "fig1", "--check"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["matches_symbolic"], true);

    let o = bmt(&["--json", "ideal", "fig1"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["generators"].as_array().unwrap().len(), 7);

    let o = bmt(&["matrix", "(1,2,0);"]);
    assert!(stdout(&o).contains("K[1,2]"));
}

#[test]
fn covariance_file_reroot_and_mle() {
    let cov = csv_file("# sample covariance\n2, 1\n1, 2\n");
    let path = cov.path().to_str().unwrap();
    let o = bmt(&["--json", "--cov", path, "reroot", "(1,2,0);", "--leaf", "1"]);
    assert!(o.status.success(), "{o:?}");
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["s_prime"], serde_json::json!([["2", "1"], ["1", "2"]]));

    let o = bmt(&["--json", "--cov", path, "mle", "(1,2,0);"]);
    assert!(o.status.success(), "{o:?}");
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["status"], "found");
    for p in v["p"].as_array().unwrap() {
        assert!((p.as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-9);
    }
}

#[test]
fn samples_file_gives_a_covariance() {
    let data = csv_file("1, 0.5\n-1, 0.25\n0.5, -1\n2, 1\n");
    let o = bmt(&[
        "--json",
        "--samples",
        data.path().to_str().unwrap(),
        "mld",
        "(1,2,0);",
    ]);
    assert!(o.status.success(), "{o:?}");
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["mld"], 1);
}

#[test]
fn toric_degree_of_small_star() {
    let o = bmt(&["--json", "degree", "(1,2,3,0);"]);
    assert!(o.status.success(), "{o:?}");
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["degree"], 4);
}
