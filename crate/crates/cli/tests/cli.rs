use std::io::Write;
use std::process::{Command, Output, Stdio};

use conflate_core::{ConflationResult, DistributionSpec};

const BERNOULLIS: &str =
    r#"[{"kind":"bernoulli","params":{"p":0.3333333333333333}},{"kind":"bernoulli","params":{"p":0.25}}]"#;

fn conflate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conflate"))
        .args(args)
        .stdin(Stdio::null())
        .output()
        .unwrap()
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_conflate"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn bernoulli_pair_golden_json() {
    let o = conflate(&["conflate", "--spec", BERNOULLIS]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "{\"engine\":\"closed_form\",\"form\":{\"kind\":\"bernoulli\",\"params\":{\"p\":0.14285714285714285}},\
         \"norm_constant\":0.5833333333333334,\"warnings\":[]}\n"
    );
}

#[test]
fn disjoint_supports_exit_two() {
    let o = conflate(&[
        "conflate",
        "--spec",
        r#"{"kind":"pmf","atoms":[[0,1]]}"#,
        "--spec",
        r#"{"kind":"pmf","atoms":[[1,1]]}"#,
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no common atoms"));
    assert!(o.stdout.is_empty());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(conflate(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        conflate(&["oracle", "--jmax", "0", "--spec", BERNOULLIS]).status.code(),
        Some(1)
    );
    assert_eq!(conflate(&["conflate", "--spec", "{"]).status.code(), Some(1));
    assert_eq!(conflate(&["conflate"]).status.code(), Some(1));
    assert_eq!(conflate(&["--help"]).status.code(), Some(0));
}

#[test]
fn input_order_does_not_change_output() {
    let specs = [
        r#"{"kind":"normal","params":{"mu":1,"sigma2":1}}"#,
        r#"{"kind":"normal","params":{"mu":2,"sigma2":4}}"#,
        r#"{"kind":"normal","params":{"mu":-0.5,"sigma2":0.3}}"#,
    ];
    let run = |order: [usize; 3]| {
        let mut args = vec!["conflate"];
        for i in order {
            args.extend(["--spec", specs[i]]);
        }
        let o = conflate(&args);
        assert!(o.status.success());
        o.stdout
    };
    let first = run([0, 1, 2]);
    for order in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
        assert_eq!(run(order), first);
    }
}

#[test]
fn result_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.json");
    let o = conflate(&[
        "conflate",
        "--spec",
        r#"[{"kind":"gamma","params":{"alpha":2,"beta":1}},{"kind":"exponential","params":{"mean":2}}]"#,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let r: ConflationResult = serde_json::from_str(&text).unwrap();
    assert_eq!(r.to_json(), text);
    let DistributionSpec::Gamma { alpha, beta } = r.to_spec() else {
        panic!("expected a gamma law, got {:?}", r.to_spec());
    };
    assert_eq!(alpha, 2.0);
    assert!((beta - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn specs_from_files_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("in.json");
    std::fs::write(&path, r#"{"kind":"bernoulli","params":{"p":0.3333333333333333}}"#).unwrap();
    let o = conflate(&[
        "conflate",
        "--input",
        path.to_str().unwrap(),
        "--spec",
        r#"{"kind":"bernoulli","params":{"p":0.25}}"#,
    ]);
    assert_eq!(o.stdout, conflate(&["conflate", "--spec", BERNOULLIS]).stdout);
}

#[test]
fn specs_read_from_stdin() {
    let o = with_stdin(&["conflate"], BERNOULLIS);
    assert!(o.status.success());
    assert!(stdout(&o).contains("0.14285714285714285"));
}

#[test]
fn csv_output_of_a_pmf() {
    let o = conflate(&["conflate", "--format", "csv", "--spec", BERNOULLIS]);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("0,") && rows[2].starts_with("1,"));
}

#[test]
fn fuse_reads_csv() {
    let o = with_stdin(&["fuse"], "observation,variance\n1,1\n2,4\n");
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.2).abs() < 1e-15);
    assert!((v["variance"].as_f64().unwrap() - 0.8).abs() < 1e-15);

    let bad = with_stdin(&["fuse"], "1,-1\n");
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn oracle_converges_on_bernoullis() {
    let o = conflate(&["oracle", "--jmax", "8", "--spec", BERNOULLIS]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["converged"], serde_json::json!(true));
    assert_eq!(v["monotonicity_ok"], serde_json::json!(true));
}

#[test]
fn sample_is_reproducible_and_writes_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let spec = r#"[{"kind":"poisson","params":{"lambda":2}},{"kind":"binomial","params":{"n":3,"p":0.5}}]"#;
    for p in [&a, &b] {
        let o = conflate(&[
            "sample",
            "--n",
            "500",
            "--seed",
            "7",
            "--format",
            "csv",
            "--spec",
            spec,
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    let rows = std::fs::read_to_string(&a).unwrap();
    assert_eq!(rows, std::fs::read_to_string(&b).unwrap());
    assert_eq!(rows.lines().count(), 501);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["accepted"], serde_json::json!(500));
    assert_eq!(meta["seed"], serde_json::json!(7));
}

#[test]
fn sampling_incompatible_inputs_exits_two() {
    let o = conflate(&[
        "sample",
        "--spec",
        r#"{"kind":"pmf","atoms":[[0,1]]}"#,
        "--spec",
        r#"{"kind":"pmf","atoms":[[1,1]]}"#,
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn diagnose_closed_form_candidate() {
    let o = conflate(&[
        "diagnose",
        "--spec",
        r#"[{"kind":"normal","params":{"mu":1,"sigma2":1}},{"kind":"normal","params":{"mu":2,"sigma2":4}}]"#,
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["proportionality"]["proportional"], serde_json::json!(true));
    assert!(v["mlr"]["delta"].as_f64().unwrap() < 1e-9);
}

#[test]
fn verify_passes() {
    let o = conflate(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(!text.contains("FAIL"));
    assert!(text.ends_with("8/8 passed\n"));
}
