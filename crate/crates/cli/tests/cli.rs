use std::process::{Command, Output};

use heatrec_core::closed_form::SphereOddKernel;
use heatrec_core::KernelEvaluator;

fn heatrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heatrec"))
        .args(args)
        .output()
        .expect("run heatrec")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn eval_matches_library() {
    let o = heatrec(&[
        "eval", "--space", "sphere", "--dim", "3", "--t", "0.5", "--r", "1.0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,r,value,method"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[3], "closed_form");
    let value: f64 = row[2].parse().unwrap();
    let want = SphereOddKernel::of_dim(3).unwrap().value(0.5, 1.0).unwrap();
    assert_eq!(value, want);
    assert!(lines.next().is_none());
}

#[test]
fn eval_grid_and_routes() {
    let o = heatrec(&[
        "eval",
        "--space",
        "hyperbolic",
        "--dim",
        "2",
        "--t",
        "0.5",
        "--r",
        "0:2:5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",abel")));

    let o = heatrec(&[
        "eval", "--space", "sphere", "--dim", "2", "--t", "0.5", "--r", "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("spectral"));
}

#[test]
fn coeffs_tables() {
    let o = heatrec(&["coeffs", "--diag", "hyperbolic", "--m", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "m,k,numerator,denominator,sqrtpi\n2,0,1,1,0\n2,1,2,3,0\n"
    );

    let o = heatrec(&["coeffs", "--table", "c", "--m", "4"]);
    assert_eq!(stdout(&o).lines().nth(3), Some("4,2,49,1,0"));

    let o = heatrec(&["coeffs", "--table", "trace", "--m", "1", "--k-max", "3"]);
    assert_eq!(
        stdout(&o).lines().skip(1).collect::<Vec<_>>(),
        ["1,0,1,4,1", "1,1,1,4,1", "1,2,1,8,1", "1,3,1,24,1"]
    );
}

#[test]
fn verify_passes_and_controls_fail() {
    let o = heatrec(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().skip(1).all(|l| l.ends_with(",true")));
    for control in ["drop-exp", "perturb-2pi", "flip-sign"] {
        let o = heatrec(&["verify", "--suite", "closed", "--control", control]);
        assert_eq!(o.status.code(), Some(4), "{control}");
        assert!(stdout(&o).contains(",false"));
    }
}

#[test]
fn invalid_input_exits_2() {
    for args in [
        &[
            "eval", "--space", "sphere", "--dim", "3", "--t", "0.5", "--r", "4",
        ][..],
        &[
            "eval", "--space", "sphere", "--dim", "3", "--t", "-1", "--r", "1",
        ],
        &[
            "eval", "--space", "sphere", "--dim", "0", "--t", "1", "--r", "1",
        ],
        &["eval", "--bogus"],
        &["coeffs", "--m", "2"],
        &["coeffs", "--diag", "sphere", "--m", "0"],
        &["verify", "--tol", "1"],
        &["volterra", "--steps", "4"],
    ] {
        let o = heatrec(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn inaccurate_volterra_exits_3() {
    let o = heatrec(&[
        "volterra",
        "--t-end",
        "3",
        "--steps",
        "8",
        "--spacing",
        "uniform",
        "--r-nodes",
        "9",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stdout(&o).lines().count(), 1 + 8 * 9);
}

#[test]
fn json_output() {
    let o = heatrec(&["coeffs", "--diag", "sphere", "--m", "2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[1]["numerator"], "-2");
    assert_eq!(v[1]["denominator"], "3");

    let o = heatrec(&["verify", "--suite", "trace", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn writes_file_and_is_deterministic() {
    let dir = std::env::temp_dir().join(format!("heatrec-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("k.csv");
    let args = [
        "eval",
        "--space",
        "sphere",
        "--dim",
        "5",
        "--t",
        "0.1:1:4:log",
        "--r",
        "0:3:4",
    ];
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let o = heatrec(&with_out);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let file = std::fs::read(&path).unwrap();
    assert_eq!(file, heatrec(&args).stdout);
    assert_eq!(heatrec(&args).stdout, heatrec(&args).stdout);
    std::fs::remove_dir_all(&dir).unwrap();
}
