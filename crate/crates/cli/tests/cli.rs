use std::io::Write;
use std::path::Path;
use std::process::{Command as Process, Output, Stdio};

use serde_json::{json, Value};
use split_nls_cli::trajectory_io::read_trajectory;
use split_nls_cli::{parse_config, run_command, Command};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_split-nls");

fn plane_wave_config(lambda: f64) -> Value {
    json!({
        "equation": {"d": 1, "p": 2, "lambda": lambda},
        "grid": {"box_length": [std::f64::consts::TAU], "points": [32]},
        "data": {"kind": "plane_wave", "amplitude": 0.6, "modes": [2]},
        "scheme": {"kind": "strang", "tau": 0.01, "horizon": 1.0},
        "experiment": {"ladder": {"tau0": 0.1, "levels": 4}, "error_tolerance": 1e-10},
        "reference": {"kind": "analytic"}
    })
}

fn invoke(command: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let dir = out.parent().unwrap();
    let path = dir.join(format!("{command}-config.json"));
    std::fs::write(&path, config).unwrap();
    Process::new(BIN).arg(command).arg("--config").arg(&path).arg("--out").arg(out).args(extra).output().unwrap()
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn plane_wave_converge_is_exact() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let result = invoke("converge", &plane_wave_config(-1.0).to_string(), &out, &["--jobs", "2"]);
    assert_eq!(result.status.code(), Some(0), "{}", String::from_utf8_lossy(&result.stderr));
    let doc = report(&out);
    assert_eq!(doc["pass"], true);
    assert!(doc["flags"].as_array().unwrap().iter().any(|f| f == "exact regime"));
    assert_eq!(doc["provenance"]["command"], "converge");
    assert_eq!(doc["config"]["reference"]["kind"], "analytic");
    for name in ["rows.csv", "plot.svg"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let csv = std::fs::read_to_string(out.join("rows.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn simulate_against_closed_form_and_dump_trajectory() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let mut config = plane_wave_config(1.0);
    config["scheme"] = json!({"kind": "lie", "tau": 0.1, "horizon": 1.0, "record_every": 5});
    config["output"] = json!({"formats": ["json"], "trajectory": true});
    let result = invoke("simulate", &config.to_string(), &out, &[]);
    assert_eq!(result.status.code(), Some(0), "{}", String::from_utf8_lossy(&result.stderr));
    let doc = report(&out);
    assert_eq!(doc["checks"]["closed_form_error"], true);
    assert_eq!(doc["checks"]["mass_behaviour"], true);
    assert!(!out.join("rows.csv").exists());
    let dump = read_trajectory(std::fs::File::open(out.join("trajectory.bin")).unwrap()).unwrap();
    assert_eq!(dump.points, vec![32]);
    assert_eq!(dump.samples.len(), 3);
    assert!((dump.sample_spacing - 0.5).abs() < 1e-15);
}

#[test]
fn blow_up_exits_1() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let mut config = plane_wave_config(1.0);
    config["data"] = json!({"kind": "plane_wave", "amplitude": 1e200, "modes": [0]});
    config["scheme"] = json!({"kind": "lie", "tau": 0.1, "horizon": 1.0});
    let result = invoke("simulate", &config.to_string(), &out, &[]);
    assert_eq!(result.status.code(), Some(1));
    let doc = report(&out);
    assert_eq!(doc["complete"], false);
    assert_eq!(doc["metrics"]["last_finite_time"], 0.0);
}

#[test]
fn failed_checks_exit_2() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let mut config = plane_wave_config(-1.0);
    config["scheme"] = json!({"kind": "lie", "tau": 0.1, "horizon": 1.0});
    config["data"] = json!({"kind": "gaussian"});
    config["grid"] = json!({"box_length": [20.0], "points": [64]});
    config["experiment"] = json!({"ladder": {"tau0": 0.1, "levels": 4}, "rate_band": [5.0, 6.0]});
    config["reference"] = json!({"kind": "self", "ratio": 8});
    let result = invoke("converge", &config.to_string(), &out, &[]);
    assert_eq!(result.status.code(), Some(2), "{}", String::from_utf8_lossy(&result.stderr));
    assert_eq!(report(&out)["checks"]["rate_band"], false);
}

#[test]
fn malformed_configs_exit_3_4_5() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let syntax = invoke("simulate", "{\"equation\": ", &out, &[]);
    assert_eq!(syntax.status.code(), Some(3));

    let mut schema = plane_wave_config(1.0);
    schema["scheme"]["colour"] = json!("red");
    let result = invoke("simulate", &schema.to_string(), &out, &[]);
    assert_eq!(result.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&result.stderr).contains("scheme"));

    let mut constraint = plane_wave_config(1.0);
    constraint["scheme"]["tau"] = json!(-0.1);
    let result = invoke("simulate", &constraint.to_string(), &out, &[]);
    assert_eq!(result.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&result.stderr).contains("scheme.tau"));
    assert!(!out.join("report.json").exists());
}

#[test]
fn missing_config_file_is_a_runtime_error() {
    let tmp = TempDir::new().unwrap();
    let result = Process::new(BIN)
        .args(["simulate", "--config"])
        .arg(tmp.path().join("absent.json"))
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(1));
}

#[test]
fn config_from_stdin() {
    let tmp = TempDir::new().unwrap();
    let mut child = Process::new(BIN)
        .args(["probe", "--config", "-", "--out"])
        .arg(tmp.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut config = plane_wave_config(1.0);
    config["experiment"] = json!({"samples": 2000, "fields": 3});
    child.stdin.take().unwrap().write_all(config.to_string().as_bytes()).unwrap();
    let result = child.wait_with_output().unwrap();
    assert_eq!(result.status.code(), Some(0), "{}", String::from_utf8_lossy(&result.stderr));
    let doc = report(tmp.path());
    assert_eq!(doc["rows"].as_array().unwrap().len(), 5);
    assert!(doc["rows"][0]["tau"].is_null());
}

#[test]
fn reports_are_byte_stable() {
    let tmp = TempDir::new().unwrap();
    let mut config = plane_wave_config(-1.0);
    config["data"] = json!({"kind": "rough", "decay_exponent": 1.55});
    config["grid"] = json!({"box_length": [20.0], "points": [128]});
    config["experiment"] = json!({"ladder": {"tau0": 0.05, "levels": 4}});
    config["scheme"] = json!({"kind": "modified_lie", "horizon": 0.5});
    config["seed"] = json!(7);
    config["reference"] = json!({"kind": "self"});
    let config = parse_config(&config.to_string()).unwrap();
    let a = run_command(&config, Command::Stability, &tmp.path().join("a")).unwrap();
    let b = run_command(&config, Command::Stability, &tmp.path().join("b")).unwrap();
    assert_eq!(a.report_json, b.report_json);
    for name in ["report.json", "plot.svg"] {
        let x = std::fs::read(tmp.path().join("a").join(name)).unwrap();
        let y = std::fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
    // wall_ms is the only column allowed to differ
    let without_timing = |dir: &str| {
        let csv = std::fs::read_to_string(tmp.path().join(dir).join("rows.csv")).unwrap();
        csv.lines()
            .map(|line| {
                let mut cells: Vec<&str> = line.split(',').collect();
                cells.remove(3);
                cells.join(",")
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(without_timing("a"), without_timing("b"));
    assert_eq!(a.report.rows.len(), 8);
}

#[test]
fn defect_runs_through_the_cli() {
    let tmp = TempDir::new().unwrap();
    let mut config = plane_wave_config(-1.0);
    config["data"] = json!({"kind": "gaussian"});
    config["grid"] = json!({"box_length": [20.0], "points": [64]});
    config["scheme"] = json!({"profile": "sharp", "horizon": 0.5});
    config["experiment"] = json!({"ladder": {"tau0": 0.0625, "levels": 4}});
    config["reference"] = json!({"kind": "self"});
    let config = parse_config(&config.to_string()).unwrap();
    let outcome = run_command(&config, Command::Defect, tmp.path()).unwrap();
    assert_eq!(outcome.report.rows.len(), 4);
    assert!(outcome.report.rows.iter().all(|r| r.valid && r.metric > 0.0));
}
