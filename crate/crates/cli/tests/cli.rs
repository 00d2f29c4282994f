use std::path::Path;
use std::process::{Command, Output};

use qcomp_core::comparator_synth::{build_comparator, lower_toffoli, parse_qasm, ComparatorSpec};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_qcomp");

fn qcomp(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("QCOMP_OUTPUT_DIR")
        .output()
        .expect("spawn qcomp")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_valid(schema_src: &str, doc: &Value) {
    let schema: Value = serde_json::from_str(schema_src).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

#[test]
fn run_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str, seed: &str| {
        let out = dir.path().join(sub);
        let o = qcomp(&[
            "run", "--n", "3,4", "--shots", "5000", "--noise", "tied", "--p2", "0.003",
            "--seed", seed, "--records", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        (
            std::fs::read(out.join("report.json")).unwrap(),
            std::fs::read(out.join("records.csv")).unwrap(),
        )
    };
    let a = run("a", "17");
    let b = run("b", "17");
    let c = run("c", "18");
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
}

#[test]
fn run_json_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let o = qcomp(&[
        "run", "--n", "2,3", "--shots", "300", "--noise", "model", "--p2", "0.01",
        "--readout-flip", "0.01", "--records", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc = read_json(&dir.path().join("report.json"));
    assert_valid(qcomp_cli::output::RUN_SCHEMA_JSON, &doc);
    assert_eq!(doc["records"][1]["records"].as_array().unwrap().len(), 300);

    let mut broken = doc.clone();
    broken["reports"][0]["conventional_rate"] = Value::from(1.5);
    let schema: Value = serde_json::from_str(qcomp_cli::output::RUN_SCHEMA_JSON).unwrap();
    assert!(!jsonschema::validator_for(&schema).unwrap().is_valid(&broken));
}

#[test]
fn default_run_uses_protocol_and_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .arg("run")
        .env("QCOMP_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc = read_json(&dir.path().join("report.json"));
    let ns: Vec<u64> = doc["reports"].as_array().unwrap().iter().map(|r| r["n"].as_u64().unwrap()).collect();
    assert_eq!(ns, [3, 5, 7, 9]);
    for r in doc["reports"].as_array().unwrap() {
        assert_eq!(r["shots"], 100);
        assert_eq!(r["conventional_rate"], 1.0);
        assert_eq!(r["strict_rate"], 1.0);
        assert!(r["dominant_failure"].is_null());
    }
    assert!(doc.get("records").is_none());
}

#[test]
fn csv_report_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "n_values = 3\nshots = 200\nformat = csv\nseed = 1\n").unwrap();
    let o = qcomp(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "n,category,count,rate_conventional,rate_strict,ci_low,ci_high");
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("3,ancilla_inclusive_success,200,1,1,"));
    let records = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 201);
    for line in records.lines().skip(1) {
        let f: Vec<u64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(f[5], u64::from(f[2] < f[3]));
        assert_eq!(f[4], 0);
    }
}

#[test]
fn bad_configuration_exits_two_with_every_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "n_values = 3, 40\nshots = -5\nnoise = tied\n").unwrap();
    let o = qcomp(&["run", "--config", cfg.to_str().unwrap(), "--format", "xml"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for field in ["n_values", "shots", "p2", "format"] {
        assert!(err.contains(field), "missing {field} in {err}");
    }

    let o = qcomp(&["run", "--n", "3", "--shots", "10", "--out", "/proc/qcomp-no-such-dir/out"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("/proc/qcomp-no-such-dir"));

    let o = qcomp(&["run", "--config", "/nonexistent/qcomp.cfg"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn synth_outputs_and_usage_errors() {
    let o = qcomp(&["synth", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    let o = qcomp(&["synth", "32"]);
    assert_eq!(o.status.code(), Some(2));

    let o = qcomp(&["synth", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let parsed = parse_qasm(&stdout(&o)).unwrap();
    assert_eq!(parsed, build_comparator(ComparatorSpec::new(4)).unwrap());
    assert!(stderr(&o).contains("depth=21"), "{}", stderr(&o));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.qasm");
    let o = qcomp(&["synth", "3", "--lower", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let lowered = lower_toffoli(&build_comparator(ComparatorSpec::new(3)).unwrap()).unwrap();
    assert_eq!(parse_qasm(&std::fs::read_to_string(&path).unwrap()).unwrap(), lowered);
}

#[test]
fn verify_passes_and_catches_mutation() {
    let o = qcomp(&["verify", "--n-max", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("n=5: ok (2048 inputs, exhaustive)"));
    assert!(out.contains("n=9: ok (100000 inputs, random)"));

    for k in ["0", "3", "4"] {
        let o = qcomp(&["verify", "--n-max", "4", "--drop-cnot", k]);
        assert_eq!(o.status.code(), Some(1), "drop {k}: {}", stdout(&o));
        let out = stdout(&o);
        let line = out.lines().find(|l| l.starts_with("counterexample")).expect("counterexample printed");
        for key in ["n=", "a=", "b=", "c="] {
            assert!(line.contains(key), "{line}");
        }
    }

    let o = qcomp(&["verify", "--n-max", "1", "--drop-cnot", "99"]);
    assert_eq!(o.status.code(), Some(2));
}

/// Calibrates against the reference rates, then checks the rerun with the
/// fitted model at 10^5 shots through both `reproduce` and `run`.
#[test]
fn reproduce_with_fitted_model() {
    let dir = tempfile::tempdir().unwrap();
    let o = qcomp(&["reproduce", "--shots", "100000", "--seed", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc = read_json(&dir.path().join("reproduce.json"));
    assert_valid(qcomp_cli::output::REPRODUCE_SCHEMA_JSON, &doc);

    let targets = qcomp_cli::commands::reference_targets();
    let reports = doc["reports"].as_array().unwrap();
    let mut prev_conv = f64::INFINITY;
    for r in reports {
        let n = r["n"].as_u64().unwrap() as usize;
        let conv = r["conventional_rate"].as_f64().unwrap();
        let strict = r["strict_rate"].as_f64().unwrap();
        assert!((conv - targets[&n]).abs() <= 0.05, "n={n} conventional {conv}");
        assert!(strict <= conv);
        assert!(conv <= prev_conv, "conventional rate rose at n={n}");
        prev_conv = conv;
        let total: u64 = r["category_counts"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
        assert_eq!(total, 100_000);
    }
    assert_eq!(doc["checks"]["counts_sum_to_shots"], true);

    let conv_csv = std::fs::read_to_string(dir.path().join("conventional.csv")).unwrap();
    assert_eq!(conv_csv.lines().count(), 5);
    let cat_csv = std::fs::read_to_string(dir.path().join("categories.csv")).unwrap();
    assert_eq!(cat_csv.lines().count(), 1 + 4 * 6);

    let p2 = doc["calibration"]["p2"].as_f64().unwrap().to_string();
    let run_dir = dir.path().join("run");
    let o = qcomp(&[
        "run", "--noise", "tied", "--p2", &p2, "--shots", "100000", "--seed", "11",
        "--out", run_dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let run = read_json(&run_dir.join("report.json"));
    for r in run["reports"].as_array().unwrap() {
        let n = r["n"].as_u64().unwrap() as usize;
        let conv = r["conventional_rate"].as_f64().unwrap();
        assert!((conv - targets[&n]).abs() <= 0.05, "run n={n} conventional {conv}");
    }
}
