use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn perkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perkit"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const CX_CIRCUIT: &str = r#"[{"n_qubits": 2, "gates": [
    {"kind": "h", "qubits": [0]},
    {"kind": "cx", "qubits": [0, 1]},
    {"kind": "rx", "qubits": [1], "angle": 0.3}
]}]"#;

const PLANTED: [(&str, f64); 6] = [
    ("XI", 0.004),
    ("IZ", 0.010),
    ("ZZ", 0.006),
    ("XY", 0.003),
    ("YI", 0.008),
    ("ZX", 0.005),
];

fn planted_spec() -> String {
    let terms: Vec<String> = PLANTED
        .iter()
        .map(|(p, l)| format!(r#"{{"pauli": "{p}", "lambda": {l}}}"#))
        .collect();
    format!(
        r#"{{"n_qubits": 2, "layers": [{{"layer": {{"n_qubits": 2, "gates": [{{"kind": "cx", "qubits": [0, 1]}}]}},
            "terms": [{}]}}], "readout": [[0.02, 0.02], [0.01, 0.01]]}}"#,
        terms.join(",")
    )
}

fn learned_rates(dir: &Path) -> Vec<(String, f64)> {
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.join("noise_model.json")).unwrap()).unwrap();
    let layers: Vec<&Value> = v.as_object().unwrap().iter().filter(|(k, _)| *k != "spam").map(|(_, l)| l).collect();
    assert_eq!(layers.len(), 1);
    layers[0]["terms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| (t["pauli"].as_str().unwrap().to_string(), t["lambda"].as_f64().unwrap()))
        .collect()
}

#[test]
fn overhead_table_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = perkit(dir.path(), &["overhead", "--gamma", "1.73", "--xi", "0,1", "--depth", "8"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let last = out.lines().last().unwrap();
    let cols: Vec<f64> = last.split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(cols[0], 8.0);
    assert!((cols[1] - 80.2).abs() < 0.1);
    assert_eq!(cols[2], 1.0);

    let o = perkit(dir.path(), &["overhead", "--gamma", "2.67", "--xi", "0", "--depth", "1"]);
    assert!(stdout(&o).lines().last().unwrap().ends_with(",2.670000"));
}

#[test]
fn overhead_rejects_gamma_below_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = perkit(dir.path(), &["overhead", "--gamma", "0.9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("at least 1"));
}

#[test]
fn overhead_from_qpd_problem_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = 0.327_354_f64;
    let s = 1.0 - p;
    let diag = |signs: [f64; 4]| -> Vec<Vec<f64>> {
        (0..4)
            .map(|i| (0..4).map(|j| if i == j { signs[i] * if i == 0 { 1.0 } else { s } } else { 0.0 }).collect())
            .collect()
    };
    let problem = serde_json::json!({
        "n_qubits": 1,
        "basis": [
            {"name": "noisy_i", "ptm": diag([1.0, 1.0, 1.0, 1.0])},
            {"name": "noisy_x", "ptm": diag([1.0, 1.0, -1.0, -1.0])},
            {"name": "noisy_y", "ptm": diag([1.0, -1.0, 1.0, -1.0])},
            {"name": "noisy_z", "ptm": diag([1.0, -1.0, -1.0, 1.0])},
        ],
        "target": [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, -1.0, 0.0], [0.0, 0.0, 0.0, -1.0]],
    });
    let path = dir.path().join("problem.json");
    fs::write(&path, problem.to_string()).unwrap();
    let o = perkit(dir.path(), &["overhead", "--problem", path.to_str().unwrap(), "--xi", "0", "--depth", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = stdout(&o).lines().next().unwrap().to_string();
    let gamma: f64 = first.trim_start_matches("gamma = ").parse().unwrap();
    assert!((gamma - (1.0 + p / 2.0) / (1.0 - p)).abs() < 1e-5);
}

#[test]
fn tomo_recovers_planted_rates() {
    let dir = tempfile::tempdir().unwrap();
    let circuits = dir.path().join("circuits.json");
    let spec = dir.path().join("noise.json");
    fs::write(&circuits, CX_CIRCUIT).unwrap();
    fs::write(&spec, planted_spec()).unwrap();
    let out = dir.path().join("out");
    let o = perkit(
        &out,
        &[
            "--noise-spec",
            spec.to_str().unwrap(),
            "--seed",
            "3",
            "tomo",
            "--circuits",
            circuits.to_str().unwrap(),
            "--shots",
            "2000",
            "--samples",
            "64",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rates = learned_rates(&out);
    assert_eq!(rates.len(), 15);
    for (p, l) in rates {
        let truth = PLANTED.iter().find(|(q, _)| *q == p).map_or(0.0, |t| t.1);
        assert!((l - truth).abs() < 3e-3, "{p}: {l} vs {truth}");
    }
    let csv = fs::read_to_string(out.join("decay.csv")).unwrap();
    assert!(csv.starts_with("layer_id,term,partner,depth,mean,stderr"));
    assert_eq!(csv.lines().count(), 1 + 15 * 4);
}

#[test]
fn tomo_on_noiseless_simulator_learns_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let circuits = dir.path().join("circuits.json");
    fs::write(&circuits, CX_CIRCUIT).unwrap();
    let o = perkit(dir.path(), &["tomo", "--circuits", circuits.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(learned_rates(dir.path()).iter().all(|(_, l)| l.abs() <= 1e-3));
}

#[test]
fn tomo_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let circuits = dir.path().join("circuits.json");
    let spec = dir.path().join("noise.json");
    fs::write(&circuits, CX_CIRCUIT).unwrap();
    fs::write(&spec, planted_spec()).unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = perkit(
            &out,
            &["--noise-spec", spec.to_str().unwrap(), "tomo", "--circuits", circuits.to_str().unwrap(), "--samples", "8"],
        );
        assert!(o.status.success());
        (
            fs::read(out.join("noise_model.json")).unwrap(),
            fs::read(out.join("decay.csv")).unwrap(),
        )
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn file_executor_without_counts_is_an_executor_error() {
    let dir = tempfile::tempdir().unwrap();
    let circuits = dir.path().join("circuits.json");
    fs::write(&circuits, CX_CIRCUIT).unwrap();
    let exchange = dir.path().join("exchange");
    let executor = format!("files:{}", exchange.display());
    let o = perkit(dir.path(), &["--executor", &executor, "tomo", "--circuits", circuits.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("batch_0000.counts.json"));
    assert!(exchange.join("batch_0000.json").exists());
}

#[test]
fn bad_inputs_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let circuits = dir.path().join("circuits.json");
    fs::write(&circuits, CX_CIRCUIT).unwrap();
    let c = circuits.to_str().unwrap();
    for args in [
        vec!["tomo", "--circuits", c, "--depths", "3,4"],
        vec!["tomo", "--circuits", c, "--connectivity", "0-5"],
        vec!["tomo", "--circuits", "/nonexistent.json"],
        vec!["--executor", "cloud", "tomo", "--circuits", c],
    ] {
        let o = perkit(dir.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

fn write_model(dir: &Path) -> (String, String) {
    let circuits = dir.join("circuits.json");
    let spec = dir.join("noise.json");
    fs::write(&circuits, CX_CIRCUIT).unwrap();
    fs::write(&spec, planted_spec()).unwrap();
    let o = perkit(
        dir,
        &["--noise-spec", spec.to_str().unwrap(), "tomo", "--circuits", circuits.to_str().unwrap(), "--samples", "8"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    (circuits.to_str().unwrap().to_string(), spec.to_str().unwrap().to_string())
}

#[test]
fn per_writes_manifest_and_results() {
    let dir = tempfile::tempdir().unwrap();
    let (circuits, spec) = write_model(dir.path());
    let model = dir.path().join("noise_model.json");
    let o = perkit(
        dir.path(),
        &[
            "--noise-spec",
            &spec,
            "per",
            "--circuits",
            &circuits,
            "--noise-model",
            model.to_str().unwrap(),
            "--observables",
            "ZI,IZ,ZZ",
            "--per-samples",
            "50",
            "--shots",
            "100",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("per_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["samples"], 50);
    assert_eq!(manifest["noise_strengths"], serde_json::json!([0.5, 1.0, 2.0]));
    let results: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("per_results.json")).unwrap()).unwrap();
    let results = results.as_array().unwrap();
    assert_eq!(results.len(), 3);
    for r in results {
        assert_eq!(r["estimates"].as_array().unwrap().len(), 3);
        assert!(r["fit"]["a"].is_f64());
    }
    let csv = fs::read_to_string(dir.path().join("per_results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 3);
}

#[test]
fn per_with_unit_strength_only_has_no_fit() {
    let dir = tempfile::tempdir().unwrap();
    let (circuits, spec) = write_model(dir.path());
    let model = dir.path().join("noise_model.json");
    let o = Command::new(env!("CARGO_BIN_EXE_perkit"))
        .args(["--out", dir.path().to_str().unwrap(), "--noise-spec", &spec, "per", "--circuits", &circuits])
        .args(["--noise-model", model.to_str().unwrap(), "--observables", "ZZ", "--noise-strengths", "1"])
        .args(["--per-samples", "20", "--shots", "50"])
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(stderr(&o).contains("no extrapolation"));
    let results: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("per_results.json")).unwrap()).unwrap();
    assert!(results[0]["fit"].is_null());
}

#[test]
fn per_with_uncovered_layer_is_a_coverage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (_, spec) = write_model(dir.path());
    let other = dir.path().join("other.json");
    fs::write(&other, r#"{"n_qubits": 2, "gates": [{"kind": "cz", "qubits": [0, 1]}]}"#).unwrap();
    let model = dir.path().join("noise_model.json");
    let o = perkit(
        dir.path(),
        &[
            "--noise-spec",
            &spec,
            "per",
            "--circuits",
            other.to_str().unwrap(),
            "--noise-model",
            model.to_str().unwrap(),
            "--observables",
            "ZZ",
        ],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("layer"));
}

#[test]
fn demo_with_zero_steps_reads_full_magnetization() {
    let dir = tempfile::tempdir().unwrap();
    let o = perkit(
        dir.path(),
        &["demo-tfim", "--steps", "0", "--samples", "2", "--single-samples", "2", "--per-samples", "10", "--shots", "64"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("magnetization.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "0");
    assert_eq!(row[1].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn demo_without_noise_matches_exact_curve() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("noiseless.json");
    fs::write(&spec, r#"{"n_qubits": 4}"#).unwrap();
    let o = perkit(
        dir.path(),
        &[
            "--noise-spec",
            spec.to_str().unwrap(),
            "demo-tfim",
            "--steps",
            "3",
            "--samples",
            "4",
            "--single-samples",
            "4",
            "--per-samples",
            "40",
            "--shots",
            "256",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("samples for precision delta"));
    let csv = fs::read_to_string(dir.path().join("magnetization.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let (exact, unmitigated, u_se, vzne, v_se) = (v[1], v[2], v[3], v[4], v[5]);
        assert!((unmitigated - exact).abs() <= 4.0 * u_se + 1e-12, "{line}");
        assert!((vzne - exact).abs() <= 4.0 * v_se + 1e-12, "{line}");
    }
    for name in ["estimators.csv", "per_results.csv", "decay.csv", "noise_model.json", "summary.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}
