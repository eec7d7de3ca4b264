use std::process::Command;

use rpq_cli::format::read_table_json;
use rpq_cli::run_cli;
use rpq_core::distributions::{pmf_table, DistributionSpec, Kind};
use rpq_core::{make_preset_algebra, Extended, Preset, Real};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_cli(
        std::iter::once("rpq").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn second_kind_csv_table() {
    let (code, out, _) = run(&[
        "table",
        "--kind",
        "second-kind",
        "--algebra",
        "q-standard",
        "--q",
        "0.5",
        "--n",
        "2",
        "--k",
        "1",
        "--theta",
        "0.4",
        "--format",
        "csv",
    ]);
    assert_eq!(code, 0);
    assert!(out.starts_with("r_1,probability\n"));
    let rows = csv_rows(&out);
    let want = [(0.0, 0.48), (1.0, 0.36), (2.0, 0.16)];
    assert_eq!(rows.len(), 3);
    for (row, (i, p)) in rows.iter().zip(want) {
        assert_eq!(row[0], i);
        assert!((row[1] - p).abs() < 1e-15);
    }
    assert!(out
        .lines()
        .last()
        .unwrap()
        .starts_with("# normalization_defect="));
}

#[test]
fn coefficient() {
    let (code, out, _) = run(&[
        "coeff",
        "--algebra",
        "q-standard",
        "--q",
        "0.5",
        "--x",
        "3",
        "--r",
        "1,1",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out.trim().parse::<f64>().unwrap(), 2.625);
}

#[test]
fn zero_trials_give_one_row() {
    let (code, out, _) = run(&[
        "table",
        "--kind",
        "first-kind",
        "--q",
        "0.5",
        "--n",
        "0",
        "--theta",
        "0.3",
        "--k",
        "2",
    ]);
    assert_eq!(code, 0);
    assert_eq!(csv_rows(&out), vec![vec![0.0, 0.0, 1.0]]);
    assert!(out.starts_with("r_1,r_2,probability\n"));
}

#[test]
fn truncated_json_table_is_flagged() {
    let (code, out, _) = run(&[
        "table",
        "--kind",
        "negative-first-kind",
        "--q",
        "0.5",
        "--n",
        "2",
        "--theta",
        "0.3",
        "--max-index",
        "3",
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    let doc = read_table_json(&out).unwrap();
    assert!(doc.meta.truncated);
    assert!(doc.meta.normalization_defect > 0.0);
}

#[test]
fn json_table_roundtrips_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let (code, _, _) = run(&[
        "table",
        "--kind",
        "second-kind",
        "--algebra",
        "jagannathan-srinivasa",
        "--p",
        "0.9",
        "--q",
        "0.5",
        "--n",
        "6",
        "--theta",
        "0.3,0.2,0.1",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let doc = read_table_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let alg = make_preset_algebra(Preset::JagannathanSrinivasa, 0.9, 0.5).unwrap();
    let t =
        pmf_table(&DistributionSpec::new(Kind::SecondKind, alg, 6, vec![0.3, 0.2, 0.1]).unwrap())
            .unwrap();
    let back = doc.values::<f64>().unwrap();
    assert_eq!(back.len(), t.len());
    for ((i, p), (j, q)) in back.iter().zip(t.entries()) {
        assert_eq!(i, j);
        assert_eq!(p.to_bits(), q.to_bits());
    }
}

#[test]
fn extended_json_table_roundtrips() {
    let (code, out, _) = run(&[
        "table",
        "--kind",
        "first-kind",
        "--q",
        "0.5",
        "--n",
        "3",
        "--theta",
        "0.3",
        "--precision",
        "extended",
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    let doc = read_table_json(&out).unwrap();
    let alg = make_preset_algebra(
        Preset::QStandard,
        Extended::one(),
        Extended::parse_decimal("0.5").unwrap(),
    )
    .unwrap();
    let spec = DistributionSpec::new(
        Kind::FirstKind,
        alg,
        3,
        vec![Extended::parse_decimal("0.3").unwrap()],
    )
    .unwrap();
    let t = pmf_table(&spec).unwrap();
    for ((_, p), (_, q)) in doc.values::<Extended>().unwrap().iter().zip(t.entries()) {
        assert_eq!(p, q);
    }
}

#[test]
fn samples_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<_> = ["a.csv", "b.csv"]
        .iter()
        .map(|f| dir.path().join(f))
        .collect();
    for f in &files {
        let (code, _, _) = run(&[
            "sample",
            "--kind",
            "second-kind",
            "--q",
            "0.5",
            "--n",
            "3",
            "--theta",
            "0.4,0.3",
            "--draws",
            "300",
            "--seed",
            "9",
            "--out",
            f.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    let a = std::fs::read(&files[0]).unwrap();
    assert_eq!(a, std::fs::read(&files[1]).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 301);
}

#[test]
fn limits_decrease() {
    let (code, out, _) = run(&[
        "limits", "--family", "heine", "--q", "0.5", "--theta", "0.3", "--format", "json",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["strictly_decreasing"], true);
    assert_eq!(v["distances"].as_array().unwrap().len(), 4);
}

#[test]
fn invalid_input_exits_with_two() {
    for args in [
        &["table", "--kind", "first-kind", "--q", "0.5", "--n", "2"][..],
        &[
            "table",
            "--kind",
            "no-such-kind",
            "--q",
            "0.5",
            "--theta",
            "0.3",
        ],
        &[
            "table",
            "--kind",
            "first-kind",
            "--q",
            "1.5",
            "--theta",
            "0.3",
        ],
        &[
            "table",
            "--kind",
            "first-kind",
            "--algebra",
            "quesne",
            "--q",
            "0.5",
            "--theta",
            "0.3",
        ],
        &[
            "table",
            "--kind",
            "first-kind",
            "--q",
            "0.5",
            "--theta",
            "0.3,0.2",
            "--k",
            "3",
        ],
        &["coeff", "--q", "0.5", "--x", "3", "--r", "a"],
        &["verify", "--config", "/nonexistent/suite.toml"],
        &["frobnicate"],
    ] {
        let (code, _, err) = run(args);
        assert_eq!(code, 2, "{args:?}");
        assert!(!err.is_empty());
    }
}

#[test]
fn unwritable_output_is_an_error() {
    let (code, _, err) = run(&[
        "coeff",
        "--q",
        "0.5",
        "--x",
        "3",
        "--r",
        "1",
        "--out",
        "/nonexistent/dir/x.txt",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("cannot write"));
}

#[test]
fn failing_verification_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("suite.toml");
    std::fs::write(
        &cfg,
        "[[case]]\nidentity = \"normalization\"\npreset = \"biedenharn-macfarlane\"\nq = 0.5\nkind = \"second-kind\"\nn = 30\nk = 1\ntheta = [[0.4]]\n",
    )
    .unwrap();
    let (code, out, _) = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(out.contains("\"verdict\":\"fail\""));
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_rpq");
    let ok = Command::new(bin)
        .args(["coeff", "--q", "0.5", "--x", "3", "--r", "1,1"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&ok.stdout).trim(), "2.625");
    let bad = Command::new(bin)
        .args(["coeff", "--q", "2", "--x", "3", "--r", "1"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn precision_comes_from_the_environment() {
    let bin = env!("CARGO_BIN_EXE_rpq");
    let out = Command::new(bin)
        .env("RPQ_PRECISION", "extended")
        .args([
            "table",
            "--kind",
            "first-kind",
            "--q",
            "0.5",
            "--n",
            "2",
            "--theta",
            "0.3",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    let digits = text.lines().nth(1).unwrap().len();
    assert!(digits > 40, "{text}");
}
