use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_thickflat");
const PROP6: &str = "x1*x2*x3 + x1*x4*x5 + x2*x4*x6 + x3*x5*x6";

fn run(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(BIN)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    if let Some(text) = stdin {
        child.stdin.take().unwrap().write_all(text.as_bytes()).unwrap();
    }
    drop(child.stdin.take());
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str], stdin: Option<&str>) -> String {
    let o = run(args, stdin);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas").join(name);
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

/// Parses the whole of stdout as one JSON document and validates it.
fn check_json(text: &str, schema_name: &str) -> Value {
    let doc: Value = serde_json::from_str(text).expect("stdout is exactly one JSON document");
    let v = schema(schema_name);
    let errors: Vec<String> = v.iter_errors(&doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:?}\n{text}");
    doc
}

#[test]
fn analyze_prop6() {
    let doc = check_json(&ok(&["analyze", "-", "--json"], Some(PROP6)), "analyze.schema.json");
    assert_eq!(doc["sparsity"], 4);
    assert_eq!(doc["degree"], 3);
    assert_eq!(doc["crucial"], 4);
    assert_eq!(doc["max_occurrence"], 2);
    assert_eq!(doc["greedy_bound"], 2);
}

#[test]
fn analyze_zero_and_majority() {
    let doc = check_json(&ok(&["analyze", "-", "--json", "--n", "3"], Some("0")), "analyze.schema.json");
    assert_eq!(doc["sparsity"], 0);
    assert_eq!(doc["degree"], 0);
    assert_eq!(doc["crucial"], 0);
    assert_eq!(doc["occurrences"], serde_json::json!([0, 0, 0]));
    let maj = ok(&["gen", "majority", "--n", "3", "--json"], None);
    check_json(&maj, "function.schema.json");
    let doc = check_json(&ok(&["analyze", "-", "--json"], Some(&maj)), "analyze.schema.json");
    assert_eq!(doc["sparsity"], 3);
    assert_eq!(doc["degree"], 2);
}

#[test]
fn parse_error_exits_2_with_position() {
    let o = run(&["analyze", "-"], Some("x1 + *x2"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("position 5"));
    let o = run(&["analyze", "-", "--n", "2"], Some("x3"));
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["analyze", "/nonexistent/file"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn find_flat_examples() {
    let doc = check_json(&ok(&["find-flat", "-", "--json"], Some(PROP6)), "flat_report.schema.json");
    assert_eq!(doc["dimension"], 4);
    assert_eq!(doc["constant"], 0);
    let doc = check_json(&ok(&["find-flat", "-", "--json"], Some("x1 + x2 + x3 + x4 + x5")), "flat_report.schema.json");
    assert_eq!(doc["dimension"], 4);
    let doc = check_json(&ok(&["find-flat", "-", "--json"], Some("x1*x2 + x3*x4")), "flat_report.schema.json");
    assert_eq!(doc["dimension"], 2);
    let doc = check_json(
        &ok(&["find-flat", "-", "--json", "--epsilon", "1", "--n", "40"], Some(PROP6)),
        "flat_report.schema.json",
    );
    assert_eq!(doc["epsilon"], 1.0);
    assert_eq!(doc["guaranteed_dim"], 0.0);
}

#[test]
fn find_flat_sampled_verification_is_reported() {
    let doc = check_json(
        &ok(&["find-flat", "-", "--json", "--n", "30", "--samples", "1024"], Some(PROP6)),
        "flat_report.schema.json",
    );
    assert_eq!(doc["dimension"], 28);
    assert_eq!(doc["verification"]["mode"], "sampled");
    assert_eq!(doc["verification"]["seed"], 0x5EED_F1A7u64);
}

#[test]
fn verify_flat_round_trip_and_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.anf", PROP6);
    let report = dir.path().join("report.json");
    ok(&["find-flat", f.to_str().unwrap(), "--out", report.to_str().unwrap()], None);
    let doc = check_json(
        &ok(&["verify-flat", f.to_str().unwrap(), report.to_str().unwrap(), "--json"], None),
        "verify.schema.json",
    );
    assert_eq!(doc["verdict"], "constant");
    assert_eq!(doc["matches"], true);

    // claim mismatch
    let o = run(&["verify-flat", f.to_str().unwrap(), report.to_str().unwrap(), "--constant", "1"], None);
    assert_eq!(o.status.code(), Some(4));

    // add x1 to the flat: x1*x2*x3 is no longer killed
    let mut tampered: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    tampered["basis"][0] = Value::String("110000".into());
    let bad = write(dir.path(), "bad.json", &tampered.to_string());
    let o = run(&["verify-flat", f.to_str().unwrap(), bad.to_str().unwrap(), "--json"], None);
    assert_eq!(o.status.code(), Some(4));
    let doc = check_json(&stdout(&o), "verify.schema.json");
    assert_eq!(doc["verdict"], "not_constant");
    let w = doc["witness"].as_array().unwrap();
    assert_ne!(w[0]["value"], w[1]["value"]);
    let human = run(&["verify-flat", f.to_str().unwrap(), bad.to_str().unwrap()], None);
    assert!(stdout(&human).contains("f("));
}

#[test]
fn verify_flat_text_format_and_sampling() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.anf", "x1*x2");
    let flat = write(dir.path(), "flat.txt", "00\n01\n");
    let doc = check_json(
        &ok(&["verify-flat", f.to_str().unwrap(), flat.to_str().unwrap(), "--json"], None),
        "verify.schema.json",
    );
    assert_eq!(doc["value"], 0);
    assert!(doc.get("claimed").is_none());

    let g = write(dir.path(), "g.anf", "x25");
    let mut big = String::from(&"0".repeat(25));
    for i in 0..24 {
        big.push('\n');
        big.push_str(&(0..25).map(|j| if j == i { '1' } else { '0' }).collect::<String>());
    }
    let flat = write(dir.path(), "big.txt", &big);
    let out = ok(&["verify-flat", g.to_str().unwrap(), flat.to_str().unwrap(), "--samples", "4096"], None);
    assert!(out.contains("sampled"), "{out}");
    let doc = check_json(
        &ok(&["verify-flat", g.to_str().unwrap(), flat.to_str().unwrap(), "--samples", "4096", "--json"], None),
        "verify.schema.json",
    );
    assert_eq!(doc["verdict"], "sampled_constant");
    assert_eq!(doc["points"], 4096);
}

#[test]
fn convert_examples() {
    assert_eq!(ok(&["convert", "--from", "truth-table", "--to", "anf", "-"], Some("0001")), "x1*x2\n");
    let tt = "0110100110010110";
    let anf = ok(&["convert", "--from", "truth-table", "--to", "anf", "-"], Some(tt));
    let back = ok(&["convert", "--from", "anf", "--to", "truth-table", "-", "--n", "4"], Some(&anf));
    assert_eq!(back, format!("{tt}\n"));
    let o = run(&["convert", "--from", "anf", "--to", "truth-table", "-"], Some("x30"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("too large"));
    let doc = check_json(
        &ok(&["convert", "--from", "anf", "--to", "truth-table", "-", "--json"], Some("x1*x2")),
        "convert.schema.json",
    );
    assert_eq!(doc["truth_table"], "0001");
    let o = run(&["convert", "--from", "truth-table", "--to", "anf", "-"], Some("011"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_examples() {
    assert_eq!(ok(&["gen", "prop6"], None), format!("{PROP6}\n"));
    assert_eq!(ok(&["gen", "majority", "--n", "3"], None), "x1*x2 + x1*x3 + x2*x3\n");
    let a = ok(&["gen", "rand3-sparse", "--n", "20", "--s", "2.5", "--seed", "7"], None);
    let b = ok(&["gen", "rand3-sparse", "--n", "20", "--s", "2.5", "--seed", "0x7"], None);
    assert_eq!(a, b);
    let o = run(&["gen", "rand3-half", "--n", "8"], None);
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed: 0"));
    for family in ["all-ones", "complete3", "rand3-half"] {
        check_json(&ok(&["gen", family, "--n", "5", "--json"], None), "function.schema.json");
    }
    check_json(&ok(&["gen", "prop6-family", "--m", "1", "--json"], None), "function.schema.json");
    assert_eq!(run(&["gen", "majority"], None).status.code(), Some(2));
    assert_eq!(run(&["gen", "rand3-sparse", "--n", "10", "--s", "3.5"], None).status.code(), Some(2));
}

#[test]
fn oracle_examples() {
    let doc = check_json(&ok(&["oracle", "normality", "-", "--json"], Some("x1*x2")), "oracle.schema.json");
    assert_eq!(doc["value"], 1);
    let doc = check_json(&ok(&["oracle", "thickness", "-", "--json"], Some("x1*x2 + x1")), "oracle.schema.json");
    assert_eq!(doc["value"], 1);
    let doc = check_json(&ok(&["oracle", "hitting-set", "-", "--json"], Some(PROP6)), "oracle.schema.json");
    assert_eq!(doc["value"], 2);
    assert_eq!(run(&["oracle", "normality", "-", "--n", "9"], Some("x1")).status.code(), Some(2));
}

#[test]
fn container_with_bijection() {
    // g = x1*x2 with A swapping coordinates and adding e1
    let container = r#"{"n": 2, "anf": "x1*x2", "bijection": {"matrix": ["01", "10"], "offset": "10"}}"#;
    check_json(container, "function.schema.json");
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.json", container);
    let report = dir.path().join("r.json");
    let doc = check_json(
        &ok(&["find-flat", f.to_str().unwrap(), "--json", "--out", report.to_str().unwrap()], None),
        "flat_report.schema.json",
    );
    assert_eq!(doc["dimension"], 1);
    ok(&["verify-flat", f.to_str().unwrap(), report.to_str().unwrap()], None);
    let doc = check_json(&ok(&["oracle", "normality", f.to_str().unwrap(), "--json"], None), "oracle.schema.json");
    let flat = write(
        dir.path(),
        "n.json",
        &serde_json::json!({"offset": doc["flat"]["offset"], "basis": doc["flat"]["basis"]}).to_string(),
    );
    ok(&["verify-flat", f.to_str().unwrap(), flat.to_str().unwrap()], None);
}

#[test]
fn experiment_reports() {
    let doc = check_json(
        &ok(&["experiment", "sampler-stats", "--n", "20", "--s", "2.5", "--trials", "300", "--json"], None),
        "experiment_report.schema.json",
    );
    assert_eq!(doc["sparsity"]["within_4_sigma"], true);
    assert_eq!(doc["asymptotic_claim"], true);
    let args = ["experiment", "disperser-flats", "--n", "12", "--k", "3", "--trials", "1", "--seed", "1", "--json"];
    let a = ok(&args, None);
    check_json(&a, "experiment_report.schema.json");
    assert_eq!(a, ok(&args, None));
    let doc = check_json(
        &ok(
            &[
                "experiment",
                "disperser-zero-restrictions",
                "--n",
                "16",
                "--trials",
                "20",
                "--per-trial",
                "5",
                "--json",
                "--timing",
            ],
            None,
        ),
        "experiment_report.schema.json",
    );
    assert_eq!(doc["k"], 10);
    assert!(doc["wall_clock_ms"].is_number());
    assert_eq!(run(&["experiment", "sampler-stats", "--n", "20", "--s", "3.5"], None).status.code(), Some(2));
}

#[test]
fn experiment_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let human = ok(
        &[
            "experiment",
            "sampler-stats",
            "--n",
            "10",
            "--trials",
            "5",
            "--out",
            out.to_str().unwrap(),
            "--csv",
            csv.to_str().unwrap(),
        ],
        None,
    );
    assert!(human.contains("sparsity mean"));
    check_json(&fs::read_to_string(&out).unwrap(), "experiment_report.schema.json");
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 6);
}

#[test]
fn thread_count_does_not_change_output() {
    let cases: Vec<Vec<&str>> = vec![
        vec![
            "experiment",
            "disperser-flats",
            "--n",
            "12",
            "--k",
            "3",
            "--trials",
            "40",
            "--per-trial",
            "10",
            "--seed",
            "0xBEEF",
            "--json",
        ],
        vec![
            "experiment",
            "disperser-zero-restrictions",
            "--n",
            "16",
            "--trials",
            "40",
            "--per-trial",
            "5",
            "--seed",
            "3",
            "--json",
        ],
        vec!["gen", "rand3-half", "--n", "12", "--seed", "99"],
        vec!["oracle", "normality", "-", "--json"],
    ];
    for args in cases {
        let stdin = Some("x1*x2*x3 + x2*x4 + x5");
        let base = ok(&args, stdin);
        for t in ["1", "3", "8"] {
            let mut with = vec!["--threads", t];
            with.extend(args.iter().copied());
            assert_eq!(ok(&with, stdin), base, "{with:?}");
        }
    }
}

#[test]
fn zero_threads_rejected() {
    assert_eq!(run(&["--threads", "0", "gen", "prop6"], None).status.code(), Some(2));
}
