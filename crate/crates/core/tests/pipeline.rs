use std::collections::BTreeMap;
use std::fs;

use perkit::clifford::{CliffordGate, CliffordKind};
use perkit::executor::{execute, outcome_distribution, Counts, ExactExecutor, FileExecutor, SimExecutor};
use perkit::noise::NoiseSpec as Spec;
use perkit::per::{PerConfig, PerExperiment};
use perkit::pnt::{NoiseDataFrame, TomographyConfig, TomographyExperiment};
use perkit::{
    enumerate_model_terms, Circuit, CliffordLayer, Error, Gate, NoiseSpec, PauliString, SparseNoiseModel,
    SparseNoiseModelF32,
};

fn cx_layer() -> CliffordLayer {
    CliffordLayer::new(2, vec![CliffordGate::new(CliffordKind::Cx, vec![0, 1]).unwrap()]).unwrap()
}

fn planted() -> (SparseNoiseModel, NoiseSpec) {
    let layer = cx_layer();
    let terms = enumerate_model_terms(&[(0, 1)], 2);
    let rates = (0..terms.len()).map(|k| 0.001 * (k % 4) as f64).collect();
    let model = SparseNoiseModel::new(layer.id(), terms, rates).unwrap();
    let spec = NoiseSpec::noiseless(2)
        .with_layer(model.clone())
        .with_readout(vec![(0.02, 0.03), (0.01, 0.01)]);
    (model, spec)
}

fn small_config() -> TomographyConfig {
    TomographyConfig {
        depths: vec![2, 4, 8],
        samples: 4,
        single_samples: 6,
        shots: 100,
        seed: 9,
    }
}

#[derive(serde::Deserialize)]
struct Batch {
    shots: u64,
    circuits: Vec<Circuit>,
}

#[test]
fn file_executor_round_trip_matches_simulator() {
    let dir = tempfile::tempdir().unwrap();
    let (model, spec) = planted();
    let exp = TomographyExperiment::new(vec![cx_layer()], model.terms().to_vec(), small_config()).unwrap();

    let mut files = FileExecutor::new(dir.path());
    let err = exp.run(&mut files).unwrap_err();
    assert!(matches!(err, Error::Executor(_)));

    let batch: Batch = serde_json::from_str(&fs::read_to_string(files.batch_path(0)).unwrap()).unwrap();
    let counts = execute(&batch.circuits, batch.shots, &spec, 21).unwrap();
    let maps: Vec<BTreeMap<String, u64>> = counts.iter().map(Counts::to_bitstring_map).collect();
    fs::write(files.counts_path(0), serde_json::to_string(&maps).unwrap()).unwrap();

    let from_files = exp.run(&mut FileExecutor::new(dir.path())).unwrap();
    let direct = exp.run(&mut SimExecutor::new(spec, 21)).unwrap();
    assert_eq!(from_files.frame.to_json().unwrap(), direct.frame.to_json().unwrap());
}

#[test]
fn single_and_double_precision_simulations_agree() {
    let (model, spec) = planted();
    let spec = spec.with_damping(vec![0.01, 0.02]);
    let m32 = SparseNoiseModelF32::new(
        model.layer_id,
        model.terms().to_vec(),
        model.rates().iter().map(|&r| r as f32).collect(),
    )
    .unwrap();
    let spec32 = Spec::<f32>::noiseless(2)
        .with_layer(m32)
        .with_damping(vec![0.01, 0.02])
        .with_readout(vec![(0.02, 0.03), (0.01, 0.01)]);
    let c = Circuit::with_gates(
        2,
        vec![
            Gate::H(0),
            Gate::Ry(1, 0.7),
            Gate::Cx(0, 1),
            Gate::Rz(0, -0.4),
            Gate::Cx(0, 1),
            Gate::Rx(1, 1.1),
        ],
    )
    .unwrap();
    let a = outcome_distribution(&c, &spec, 10).unwrap();
    let b = outcome_distribution(&c, &spec32, 10).unwrap();
    for (x, y) in a.probs.iter().zip(&b.probs) {
        assert!((x - y).abs() < 1e-5, "{x} vs {y}");
    }
}

#[test]
fn learned_model_feeds_per_without_bias() {
    let (_, spec) = planted();
    let circuit = Circuit::with_gates(
        2,
        vec![Gate::Ry(0, 0.9), Gate::Cx(0, 1), Gate::Ry(1, 0.5), Gate::Cx(0, 1), Gate::Rx(0, 0.3)],
    )
    .unwrap();
    let terms = enumerate_model_terms(&[(0, 1)], 2);
    let tomo = TomographyExperiment::new(vec![cx_layer()], terms, small_config()).unwrap();
    let learned = tomo.run(&mut ExactExecutor::new(spec.clone())).unwrap();
    let json = learned.frame.to_json().unwrap();
    let frame = NoiseDataFrame::from_json(&json).unwrap();

    let observables: Vec<PauliString> = ["ZI", "IZ", "ZZ"].iter().map(|s| s.parse().unwrap()).collect();
    let config = PerConfig {
        noise_strengths: vec![0.0, 1.0],
        samples: 400,
        shots: 1,
        seed: 2,
    };
    let exp = PerExperiment::new(std::slice::from_ref(&circuit), observables, frame, config).unwrap();
    let results = exp.run(&mut ExactExecutor::new(spec)).unwrap();
    for r in results {
        let ideal = perkit::executor::noiseless_expectation(&circuit, &r.observable).unwrap();
        let e = &r.estimates[0].summary;
        assert!((e.mean - ideal).abs() <= 4.0 * e.stderr + 1e-9, "{}: {} vs {ideal}", r.observable, e.mean);
    }
}
