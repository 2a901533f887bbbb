use std::collections::HashMap;
use std::process::Command;

use kext_core::bounds::{best_bound, erasure_privcap_bound};
use kext_core::diverge::{dh_bernoulli_n, dh_classical, BinaryDistributionPair, ExtOrder};

const BIN: &str = env!("CARGO_BIN_EXE_kext");

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn kext(args: &[&str]) -> Output {
    let out = Command::new(BIN).args(args).env_remove("KEXT_SOLVER_TOL").output().expect("binary runs");
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

type Rows = Vec<HashMap<String, String>>;

fn csv_rows(args: &[&str]) -> Rows {
    let out = kext(args);
    assert_eq!(out.code, 0, "{args:?}: {}", out.stderr);
    let mut r = csv::Reader::from_reader(out.stdout.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records().map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect()).collect()
}

fn num(row: &HashMap<String, String>, col: &str) -> f64 {
    match row[col].as_str() {
        "inf" => f64::INFINITY,
        s => s.parse().unwrap_or_else(|_| panic!("{col} = {s}")),
    }
}

#[test]
fn privacy_max_identity_twist_reaches_ceiling() {
    let r = csv_rows(&["privacy-max", "--d", "2", "--k", "2", "--identity-twist"]);
    assert!((num(&r[0], "optimum") - 0.75).abs() < 1e-5);
    assert_eq!(num(&r[0], "ceiling"), 0.75);
    let r = csv_rows(&["privacy-max", "--d", "3", "--k", "2"]);
    assert!((num(&r[0], "ceiling") - 2.0 / 3.0).abs() < 1e-12);
    assert!((num(&r[0], "optimum") - 2.0 / 3.0).abs() < 1e-5);
}

#[test]
fn privacy_max_random_twist_stays_below_ceiling() {
    let r = csv_rows(&["privacy-max", "--d", "2", "--k", "3", "--seed", "7", "--random-twist"]);
    assert_eq!(r[0]["twist"], "random");
    assert!(num(&r[0], "optimum") <= 2.0 / 3.0 + 1e-5);
}

#[test]
fn fig1_rows_match_derived_values() {
    let r = csv_rows(&["fig1", "--fidelity", "0.75,0.95,1.0", "--k", "2", "--eps", "0.05"]);
    assert_eq!(r.len(), 3);
    assert!(num(&r[0], "bound_bits") <= 0.1520 + 1e-4);
    assert!((num(&r[1], "bound_bits") - 1.0).abs() < 1e-4);
    assert!((num(&r[2], "bound_bits") - 1.2345).abs() < 1e-3);
    for row in &r {
        assert!((num(row, "e_sdp_bits") - num(row, "e_bernoulli_bits")).abs() < 1e-4);
        assert_eq!(row["valid"], "true");
    }
}

#[test]
fn fig2_curves_and_cells() {
    let r = csv_rows(&["fig2", "--n", "1:120", "--k", "2,inf"]);
    let curve = |k: &str| -> Vec<&HashMap<String, String>> { r.iter().filter(|row| row["k"] == k).collect() };
    let k2 = curve("2");
    let last_valid = k2.iter().rposition(|row| row["valid"] == "true").unwrap();
    assert!(last_valid + 1 < k2.len());
    assert!(k2[..=last_valid].iter().all(|row| row["valid"] == "true"));
    assert!(k2[last_valid + 1..].iter().all(|row| row["valid"] == "false" && row["bound_bits"] == "inf"));
    assert!(num(k2[last_valid], "divergence_bits") <= 1.0);

    let inf = curve("inf");
    assert!(inf.iter().all(|row| row["valid"] == "true"));
    let oracle = dh_classical(&[0.95, 0.05], &[0.5, 0.5], 1e-5).unwrap().bits;
    assert!((num(inf[0], "bound_bits") - oracle).abs() < 1e-12);
    // a product of tests with type-I slack eps' on each block has slack 1-(1-eps')^2 = eps
    let b = |n: usize| num(inf[n - 1], "bound_bits");
    let split = 1.0 - (1.0 - 1e-5f64).sqrt();
    let part = |n: u64| dh_bernoulli_n(&BinaryDistributionPair::new(0.95, 0.5, n).unwrap(), split).unwrap().bits;
    for (n1, n2) in [(1, 1), (3, 5), (10, 20), (17, 40), (50, 70)] {
        assert!(b((n1 + n2) as usize) >= part(n1) + part(n2) - 1e-9, "n1={n1} n2={n2}");
    }
}

#[test]
fn fig3_is_monotone() {
    let r = csv_rows(&["fig3", "--fidelity", "0.85:1.0:0.05", "--eps", "1e-5,0.05"]);
    let n_min = |f: f64, e: f64| num(r.iter().find(|row| num(row, "F") == f && num(row, "eps") == e).unwrap(), "n_min");
    assert_eq!(n_min(1.0, 1e-5), 1.0);
    assert_eq!(n_min(1.0, 0.05), 1.0);
    assert!(n_min(0.9, 1e-5) >= n_min(0.95, 1e-5));
    for f in [0.85, 0.9, 0.95, 1.0] {
        assert!(n_min(f, 1e-5) >= n_min(f, 0.05), "F={f}");
    }
}

#[test]
fn fig4a_matches_reported_use_count() {
    let r = csv_rows(&["fig4a", "--p", "0.3", "--eps", "1e-5", "--k", "2", "--n", "1:120"]);
    let last_valid = r.iter().rposition(|row| row["valid"] == "true").unwrap();
    assert_eq!(num(&r[last_valid], "n"), 104.0);
    assert!((num(&r[0], "bound_bits") - 4.81e-5).abs() < 1e-7);
}

#[test]
fn fig4b_rows() {
    let r = csv_rows(&["fig4b", "--p", "0,0.3", "--eps", "1e-5", "--k", "2,inf"]);
    assert_eq!(r[0]["n_min"], "1");
    let ks = [ExtOrder::Finite(2), ExtOrder::Infinite];
    let scan = (1..).find(|&n| best_bound(&ks, |k| erasure_privcap_bound(0.3, k, n, 1e-5)).unwrap().0 >= 1.0).unwrap();
    assert_eq!(num(&r[1], "n_min"), scan as f64);

    let r = csv_rows(&["fig4b", "--p", "0.5", "--k", "2"]);
    assert_eq!(r[0]["n_min"], "inf");
    assert_eq!(r[0]["status"], "unbounded");
}

#[test]
fn channel_examples() {
    let geo = |p: &str| {
        let r = csv_rows(&["channel", "--channel", "erasure", "--p", p, "--k", "2", "--method", "geo", "--ell", "1"]);
        num(&r[0], "divergence_bits")
    };
    assert!(geo("0.5") <= 1e-6);
    let g = geo("0.3");
    assert!(g > 0.0 && g <= 0.169878 + 1e-4);
    let r =
        csv_rows(&["channel", "--channel", "erasure", "--p", "0.3", "--k", "2", "--method", "hyp", "--eps", "1e-5"]);
    assert!(num(&r[0], "divergence_bits") <= 2.405e-5 + 1e-6);
}

#[test]
fn choi_file_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dim_in": 2, "dim_out": 2, "re": [[1,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}"#).unwrap();
    let out = kext(&["channel", "--channel", "choi-file", "--choi", bad.to_str().unwrap()]);
    assert_eq!(out.code, 3);
    assert!(out.stderr.contains("trace"), "{}", out.stderr);

    let not_tp = dir.path().join("not_tp.json");
    std::fs::write(&not_tp, r#"{"dim_in": 2, "dim_out": 2, "re": [[2,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}"#).unwrap();
    let out = kext(&["channel", "--channel", "choi-file", "--choi", not_tp.to_str().unwrap()]);
    assert_eq!(out.code, 3);
    assert!(out.stderr.contains("trace preserving"), "{}", out.stderr);

    let good = dir.path().join("id.json");
    std::fs::write(&good, r#"{"dim_in": 2, "dim_out": 2, "re": [[1,0,0,1],[0,0,0,0],[0,0,0,0],[1,0,0,1]], "im": [[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}"#).unwrap();
    let r = csv_rows(&["channel", "--channel", "choi-file", "--choi", good.to_str().unwrap(), "--method", "max"]);
    assert!(num(&r[0], "divergence_bits") > 0.0);
}

#[test]
fn exit_codes() {
    assert_eq!(kext(&["key-nshot", "--eps", "2"]).code, 1);
    assert_eq!(kext(&["no-such-command"]).code, 1);
    assert_eq!(kext(&["fig2", "--k", "1"]).code, 1);
    assert_eq!(kext(&["fig3", "--fidelity", "0.3"]).code, 1);
    assert_eq!(kext(&["privacy-max", "--d", "3", "--k", "7"]).code, 2);
    assert_eq!(kext(&["--help"]).code, 0);
}

#[test]
fn every_cell_is_a_number_or_a_marker() {
    let text_cols = ["k", "valid", "status", "twist", "channel", "method"];
    for args in [
        &["fig1", "--fidelity", "0.75:0.8:0.05", "--k", "2,inf"][..],
        &["fig2", "--n", "90:110:5"],
        &["fig3", "--fidelity", "0.9,1.0"],
        &["fig4a", "--n", "100:106"],
        &["fig4b", "--p", "0.2,0.5,0.8", "--k", "2"],
    ] {
        for row in csv_rows(args) {
            for (col, cell) in row {
                if text_cols.contains(&col.as_str()) {
                    continue;
                }
                let ok = cell == "inf" || cell == "invalid" || cell.parse::<f64>().is_ok_and(f64::is_finite);
                assert!(ok, "{args:?}: {col} = {cell}");
            }
        }
    }
}

#[test]
fn output_is_deterministic_across_runs_and_pool_sizes() {
    let args = ["fig1", "--fidelity", "0.8:1.0:0.05", "--k", "2,3"];
    let a = kext(&[&args[..], &["--jobs", "1"]].concat()).stdout;
    let b = kext(&[&args[..], &["--jobs", "4"]].concat()).stdout;
    let c = kext(&args).stdout;
    assert_eq!(a, b);
    assert_eq!(a, c);
    let r1 = kext(&["privacy-max", "--random-twist", "--seed", "3", "--shield-a", "1"]).stdout;
    let r2 = kext(&["privacy-max", "--random-twist", "--seed", "3", "--shield-a", "1"]).stdout;
    assert_eq!(r1, r2);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"fidelity": [0.9, 0.95], "eps": 1e-5, "k": ["2", "inf"], "jobs": 2}"#).unwrap();
    let r = csv_rows(&["min-copies", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.len(), 2);
    let r = csv_rows(&["min-copies", "--config", cfg.to_str().unwrap(), "--fidelity", "1.0"]);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0]["n_min"], "1");

    std::fs::write(&cfg, r#"{"fidelty": 0.9}"#).unwrap();
    let out = kext(&["min-copies", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("fidelty"));
}

#[test]
fn output_file_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("fig4a.csv");
    let svg_path = dir.path().join("fig4a.svg");
    let out = kext(&["fig4a", "--n", "1:10", "--output", csv_path.to_str().unwrap()]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(&csv_path).unwrap().starts_with("n,k,divergence_bits"));
    let out = kext(&["fig4a", "--n", "1:10", "--format", "svg", "--output", svg_path.to_str().unwrap()]);
    assert_eq!(out.code, 0);
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
}
