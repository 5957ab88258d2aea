use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tactile(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tactile"));
    cmd.args(args).env_remove("TACTILE_OUTPUT_DIR");
    if let Some(d) = out_dir {
        cmd.env("TACTILE_OUTPUT_DIR", d);
    }
    cmd.output().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_is_deterministic_and_reports_module_mse() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(
        dir.path(),
        "s.toml",
        "version = 1\nseed = 9\n[channels.forward]\nsigma2 = 1e-8\ndelay = { kind = \"random_walk\", min = 0, max = 3 }\n",
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ra = tactile(&["run", &sc], Some(&a));
    assert_eq!(
        ra.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ra.stderr)
    );
    let rb = tactile(&["run", &sc], Some(&b));
    assert_eq!(rb.status.code(), Some(0));
    for name in ["trace_oracle.csv", "trace_hybrid.csv"] {
        let x = std::fs::read(a.join(name)).unwrap();
        assert_eq!(
            x,
            std::fs::read(b.join(name)).unwrap(),
            "{name} differs between runs"
        );
    }
    let summary = json(&ra);
    assert_eq!(summary["mse"].as_array().unwrap().len(), 15);
    assert_eq!(summary["samples"], 1200);
    let on_disk: Value =
        serde_json::from_slice(&std::fs::read(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(on_disk, summary);

    let header = std::fs::read_to_string(a.join("trace_oracle.csv")).unwrap();
    let first = header.lines().next().unwrap();
    assert!(first.starts_with("n,b1,b2,b3,c_x"), "{first}");
    assert_eq!(first.split(',').count(), 31);
}

#[test]
fn relative_output_dir_follows_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(
        dir.path(),
        "s.toml",
        "version = 1\nseed = 1\nbackends = [\"oracle\"]\n[output]\ndir = \"results\"\n",
    );
    let o = tactile(&["run", &sc], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("results/trace_oracle.csv").exists());
    assert!(json(&o)["mse"].as_array().is_some());
}

#[test]
fn config_errors_exit_1_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(
        dir.path(),
        "bad.toml",
        "version = 1\nseed = 1\n[cordic]\nformat = \"s16.40\"\n",
    );
    let o = tactile(&["run", &sc], Some(dir.path()));
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("format"), "{err}");

    let sc = write(dir.path(), "noseed.toml", "version = 1\n");
    let o = tactile(&["run", &sc], Some(dir.path()));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));

    let o = tactile(&["run", "/nonexistent/scenario.toml"], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unreachable_sample_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(
        dir.path(),
        "far.toml",
        "version = 1\nseed = 1\n[geometry]\nl1 = 0.135\nl2 = 0.135\nl3 = 0.025\nl4 = 0.170\n[channels.forward]\nsigma2 = 1.0\n",
    );
    let o = tactile(&["run", &sc], Some(dir.path()));
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(String::from_utf8_lossy(&o.stderr).contains("sample"));
}

#[test]
fn mse_of_trace_against_itself_is_zero_and_truncation_fails() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(
        dir.path(),
        "s.toml",
        "version = 1\nseed = 2\nbackends = [\"oracle\"]\n",
    );
    assert_eq!(
        tactile(&["run", &sc], Some(dir.path())).status.code(),
        Some(0)
    );
    let trace = dir.path().join("trace_oracle.csv");
    let t = trace.to_str().unwrap();
    let o = tactile(&["mse", t, t], None);
    assert_eq!(o.status.code(), Some(0));
    let report = json(&o);
    assert_eq!(report["rows"], 1200);
    let cols = report["mse"].as_array().unwrap();
    assert_eq!(cols.len(), 30);
    assert!(cols.iter().all(|c| c["mse"] == 0.0));

    let text = std::fs::read_to_string(&trace).unwrap();
    let short: String = text.lines().take(500).map(|l| format!("{l}\n")).collect();
    let cut = write(dir.path(), "short.csv", &short);
    let o = tactile(&["mse", t, &cut], None);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("1200 rows") && err.contains("499 rows"),
        "{err}"
    );
}

#[test]
fn latency_reports_speedups() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(
        dir.path(),
        "t.json",
        r#"{"fk": 47, "kff": 70, "ik": 218, "fbf": 21}"#,
    );
    let o = tactile(&["latency", "--targets", &t], None);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    assert_eq!(r["t_hardware_ns"], 403.0);
    let s: Vec<u64> = r["speedups"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["speedup"].as_u64().unwrap())
        .collect();
    assert_eq!(s, [93, 930]);

    let one = write(dir.path(), "one.json", r#"{"ik": 218}"#);
    let r = json(&tactile(&["latency", "--targets", &one], None));
    let fit = &r["calibration"]["modules"][0];
    assert!(fit["residual_ns"].as_f64().unwrap().abs() < 1e-6, "{fit}");

    let empty = write(dir.path(), "empty.json", "{}");
    assert_eq!(
        tactile(&["latency", "--targets", &empty], None)
            .status
            .code(),
        Some(1)
    );
}
