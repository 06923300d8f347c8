use std::path::Path;
use std::process::{Command, Output};

use dressed_modes::fock::FockOperator;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dressed-modes"))
        .args(args)
        .env_remove("DRESSED_MODES_ORACLE_DIM")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let k = header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn validate(schema_file: &str, doc: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../docs/schemas")
        .join(schema_file);
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema_file}: {errors:?}");
}

#[test]
fn trace_at_origin_is_one() {
    let (h, rows) = csv_rows(&ok(&[
        "trace",
        "--u",
        "0",
        "--v",
        "0",
        "--epsilon",
        "1",
        "--theta",
        "0.3",
    ]));
    assert_eq!(rows.len(), 1);
    assert!((column(&h, &rows, "re")[0] - 1.0).abs() <= 1e-15);
    assert!(column(&h, &rows, "im")[0].abs() <= 1e-15);
}

#[test]
fn trace_via_integral_agrees() {
    let (h, rows) = csv_rows(&ok(&[
        "trace",
        "--u",
        "1.0",
        "--v",
        "-0.7",
        "--epsilon",
        "0.8",
        "--theta",
        "0.6",
        "--via-integral",
    ]));
    assert!(column(&h, &rows, "integral_abs_diff")[0] <= 1e-10);
    assert!(column(&h, &rows, "integral_re")[0].is_finite());
}

#[test]
fn single_mode_trace_matches_library() {
    let (h, rows) = csv_rows(&ok(&[
        "trace",
        "--single",
        "--u",
        "0.9",
        "--epsilon",
        "1.2",
        "--theta",
        "0.4",
    ]));
    let p = dressed_modes::DressedModelParams::new(1.2, 0.4).unwrap();
    let want = dressed_modes::statistics::t_single(0.9, &p).unwrap();
    assert_eq!(column(&h, &rows, "re")[0], want.re);
    assert_eq!(column(&h, &rows, "im")[0], want.im);
}

#[test]
fn trace_with_oracle() {
    let (h, rows) = csv_rows(&ok(&[
        "trace",
        "--u",
        "0.4",
        "--v",
        "-1.1",
        "-e",
        "1",
        "-t",
        "0.3",
        "--oracle",
        "--oracle-dim",
        "40",
    ]));
    assert!(column(&h, &rows, "oracle_abs_diff")[0] <= 1e-6);
    assert_eq!(column(&h, &rows, "oracle_dim")[0], 40.0);
}

#[test]
fn p_single_is_geometric() {
    let (h, rows) = csv_rows(&ok(&[
        "probs",
        "--quantity",
        "p_single",
        "--epsilon",
        "1",
        "--theta",
        "0",
        "--max-index",
        "5",
    ]));
    let p = column(&h, &rows, "probability");
    assert_eq!(p.len(), 6);
    let x = (-1.0f64).exp();
    for (n, v) in p.iter().enumerate() {
        assert!((v - (1.0 - x) * x.powi(n as i32)).abs() <= 1e-15, "n = {n}");
    }
    assert_eq!(
        column(&h, &rows, "n"),
        (0..6).map(f64::from).collect::<Vec<_>>()
    );
}

#[test]
fn p_joint_is_symmetric_table() {
    let (h, rows) = csv_rows(&ok(&[
        "probs",
        "--quantity",
        "p_joint",
        "-e",
        "1",
        "-t",
        "0.25",
        "--max-index",
        "8",
    ]));
    assert_eq!(rows.len(), 81);
    let (m, n, p) = (
        column(&h, &rows, "m"),
        column(&h, &rows, "n"),
        column(&h, &rows, "probability"),
    );
    let at = |a: f64, b: f64| p[(0..81).find(|&k| m[k] == a && n[k] == b).unwrap()];
    for a in 0..9 {
        for b in 0..9 {
            let (x, y) = (at(a as f64, b as f64), at(b as f64, a as f64));
            assert!((x - y).abs() <= 1e-14);
            let lib = dressed_modes::statistics::p_joint(
                a,
                b,
                &dressed_modes::DressedModelParams::new(1.0, 0.25).unwrap(),
            )
            .unwrap();
            assert!((x - lib).abs() <= 1e-15);
        }
    }
}

#[test]
fn p_total_in_negative_y_minus_regime() {
    let (h, rows) = csv_rows(&ok(&[
        "probs",
        "--quantity",
        "p_total",
        "-e",
        "1",
        "-t",
        "0.5",
        "--max-index",
        "40",
    ]));
    let p = column(&h, &rows, "probability");
    let tail = column(&h, &rows, "tail_bound")[0];
    assert!(p.iter().all(|&x| x >= 0.0));
    assert!((p.iter().sum::<f64>() + tail - 1.0).abs() <= 1e-12);
    // 40 terms leave a tail of about 7e-7 at Y₊ ≈ 1.41; 80 terms reach 1 − 1e-8
    let (h, rows) = csv_rows(&ok(&[
        "probs",
        "--quantity",
        "p_total",
        "-e",
        "1",
        "-t",
        "0.5",
        "--max-index",
        "80",
    ]));
    assert!(column(&h, &rows, "probability").iter().sum::<f64>() >= 1.0 - 1e-8);
}

#[test]
fn sweep_order_is_epsilon_outer() {
    let (h, rows) = csv_rows(&ok(&[
        "probs",
        "--quantity",
        "p_single",
        "-e",
        "0.5,2",
        "-t",
        "0,-0.3",
        "--max-index",
        "1",
    ]));
    let e = column(&h, &rows, "epsilon");
    let t = column(&h, &rows, "theta");
    assert_eq!(e, vec![0.5, 0.5, 0.5, 0.5, 2.0, 2.0, 2.0, 2.0]);
    assert_eq!(t, vec![0.0, 0.0, -0.3, -0.3, 0.0, 0.0, -0.3, -0.3]);
}

#[test]
fn output_is_byte_deterministic() {
    for args in [
        &[
            "probs",
            "--quantity",
            "p_joint",
            "-e",
            "0.3,1,3",
            "-t",
            "0,0.5,1",
            "--max-index",
            "12",
        ][..],
        &[
            "trace",
            "--u=-2,0.1,2",
            "--v",
            "1.5,-0.4",
            "-e",
            "0.7,1.9",
            "-t",
            "0.2,0.9",
            "--format",
            "json",
        ][..],
    ] {
        let a = run(args);
        let b = run(args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn floats_use_seventeen_digits() {
    let text = ok(&["trace", "--u", "0.3", "--v", "0.2", "-e", "1", "-t", "0.1"]);
    let (_, rows) = csv_rows(&text);
    let re = &rows[0][4];
    let digits = re
        .trim_start_matches("0.")
        .trim_start_matches('0')
        .replace('.', "");
    assert!(digits.len() >= 15, "{re}");
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let stdout = ok(&[
        "probs",
        "--quantity",
        "p_single",
        "-e",
        "1",
        "--max-index",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        written,
        ok(&[
            "probs",
            "--quantity",
            "p_single",
            "-e",
            "1",
            "--max-index",
            "3"
        ])
    );
}

#[test]
fn json_documents_validate() {
    let trace: Value = serde_json::from_str(&ok(&[
        "trace",
        "--u",
        "0.3",
        "--v",
        "-0.2",
        "-e",
        "1",
        "-t",
        "0.4",
        "--via-integral",
        "--oracle",
        "--oracle-dim",
        "30",
        "--format",
        "json",
    ]))
    .unwrap();
    validate("trace.schema.json", &trace);
    let single: Value = serde_json::from_str(&ok(&[
        "trace", "--single", "--u", "0.3", "-e", "1", "--format", "json",
    ]))
    .unwrap();
    validate("trace.schema.json", &single);
    assert_eq!(single["records"][0]["v"], Value::Null);

    for q in ["p_single", "p_total", "p_joint", "p_dressed_single"] {
        let doc: Value = serde_json::from_str(&ok(&[
            "probs",
            "--quantity",
            q,
            "-e",
            "1",
            "-t",
            "0.3",
            "--max-index",
            "4",
            "--oracle",
            "--oracle-dim",
            "30",
            "--format",
            "json",
        ]))
        .unwrap();
        validate("probs.schema.json", &doc);
    }
    let pole: Value = serde_json::from_str(&ok(&[
        "probs",
        "--quantity",
        "p_joint",
        "-e",
        "1",
        "-t",
        &(-1.0f64).exp().atanh().to_string(),
        "--max-index",
        "3",
        "--format",
        "json",
    ]))
    .unwrap();
    validate("probs.schema.json", &pole);
    assert_eq!(pole["tables"][0]["method"], "fourier");

    let verify: Value = serde_json::from_str(&ok(&["verify", "fast", "--format", "json"])).unwrap();
    validate("verify.schema.json", &verify);
    assert_eq!(verify["passed"], true);
}

#[test]
fn dumps_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let (w, v, rho) = (
        dir.path().join("w.json"),
        dir.path().join("v.json"),
        dir.path().join("rho.bin"),
    );
    ok(&[
        "trace",
        "--single",
        "--u",
        "0.5",
        "-e",
        "1",
        "-t",
        "0.3",
        "--oracle",
        "--oracle-dim",
        "16",
        "--dump-wigner",
        w.to_str().unwrap(),
        "--dump-transform",
        v.to_str().unwrap(),
        "--oracle-dump",
        rho.to_str().unwrap(),
    ]);
    let wj: Value = serde_json::from_str(&std::fs::read_to_string(&w).unwrap()).unwrap();
    validate("wigner.schema.json", &wj);
    let vj: Value = serde_json::from_str(&std::fs::read_to_string(&v).unwrap()).unwrap();
    validate("transform.schema.json", &vj);

    let wig =
        dressed_modes::GaussianWigner::from_json(&serde_json::from_value(wj).unwrap()).unwrap();
    assert!((wig.integrate().unwrap() - 1.0).norm() <= 1e-12);
    let tr = dressed_modes::SymplecticTransform::from_json(&serde_json::from_value(vj).unwrap())
        .unwrap();
    assert!(tr.residual() <= 1e-12);

    let op = FockOperator::read_dense_binary(std::fs::File::open(&rho).unwrap()).unwrap();
    assert_eq!((op.n_modes(), op.dim_per_mode()), (1, 16));
    let p = dressed_modes::DressedModelParams::new(1.0, 0.3).unwrap();
    let lib = dressed_modes::fock::rho_fock(&p, dressed_modes::ModeCount::One, 16).unwrap();
    assert_eq!(op.matrix(), lib.matrix());
}

#[test]
fn domain_errors_exit_two() {
    for args in [
        &["trace", "--u", "0", "--v", "0", "-e", "-1"][..],
        &["trace", "--u", "0", "-e", "1"][..],
        &[
            "probs",
            "--quantity",
            "p_single",
            "-e",
            "1",
            "--max-index",
            "10001",
        ][..],
        &["probs", "--quantity", "p_bogus", "-e", "1"][..],
        &["frobnicate"][..],
        &["trace", "--u", "4", "--v", "0", "-e", "1", "--via-integral"][..],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(!err.trim().is_empty());
    }
}

#[test]
fn verify_fast_exits_zero() {
    let text = ok(&["verify", "fast"]);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 8);
    assert!(!text.contains("FAIL"));
}

#[test]
fn corrupted_tolerance_exits_one_naming_check() {
    let out = run(&["verify", "fast", "--tolerance-scale", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("verification failed: [2] integral route"),
        "{err}"
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn oracle_dim_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_dressed-modes"))
        .args([
            "trace", "--u", "0.2", "--v", "0.1", "-e", "4", "-t", "0", "--oracle",
        ])
        .env("DRESSED_MODES_ORACLE_DIM", "24")
        .output()
        .unwrap();
    let (h, rows) = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(column(&h, &rows, "oracle_dim")[0], 24.0);
}

#[test]
fn verify_full_reports_oracle_agreement() {
    let text = ok(&["verify", "full"]);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 10);
    assert!(text.contains("Fock oracle equivalence"));
}
