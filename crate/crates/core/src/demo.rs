//! Transverse-field Ising Trotter demo: tomography, PER at several noise
//! strengths and vZNE on the magnetization, against planted noise.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circuit::Circuit;
use crate::dressed::{distinct_clifford_layers, parse_dressed};
use crate::error::{Error, Result};
use crate::executor::{derive_seed, noiseless_expectation, Executor};
use crate::noise::{NoiseSpec, SparseNoiseModel};
use crate::pauli::{enumerate_model_terms, path_edges};
use crate::per::{results_csv, vzne_fit, PerConfig, PerExperiment, PerResult};
use crate::pnt::{TomographyConfig, TomographyExperiment};
use crate::stats::summarize;
use crate::trotter::{magnetization_observables, trotter_circuit};

#[derive(Clone, Debug, PartialEq)]
pub struct TfimConfig {
    pub n_qubits: usize,
    pub steps: usize,
    pub j: f64,
    pub h: f64,
    pub dt: f64,
    /// `γ^(0)` of the deepest circuit under the planted noise.
    pub gamma_target: f64,
    /// Per-qubit `(P(1|0), P(0|1))`.
    pub readout: Vec<(f64, f64)>,
    pub tomography: TomographyConfig,
    pub per: PerConfig,
    /// Replaces the planted noise when set.
    pub noise: Option<NoiseSpec<f64>>,
}

impl Default for TfimConfig {
    fn default() -> Self {
        Self {
            n_qubits: 4,
            steps: 15,
            j: 0.15,
            h: 1.0,
            dt: 0.2,
            gamma_target: 7.25,
            readout: vec![(0.02, 0.03), (0.015, 0.025), (0.03, 0.02), (0.01, 0.02)],
            tomography: TomographyConfig {
                shots: 1024,
                ..TomographyConfig::default()
            },
            per: PerConfig::default(),
            noise: None,
        }
    }
}

impl TfimConfig {
    pub fn circuits(&self) -> Vec<Circuit> {
        (0..=self.steps)
            .map(|k| trotter_circuit(self.n_qubits, k, self.h, self.j, self.dt))
            .collect()
    }
}

/// Random sparse Pauli noise on every distinct layer of `circuits`, scaled so
/// that the deepest circuit has `γ^(0) = gamma_target`, plus readout flips.
pub fn planted_noise(
    circuits: &[Circuit],
    gamma_target: f64,
    readout: &[(f64, f64)],
    seed: u64,
) -> Result<NoiseSpec<f64>> {
    let n = circuits
        .first()
        .map(|c| c.n_qubits)
        .ok_or_else(|| Error::Argument("no circuits".into()))?;
    if !(gamma_target >= 1.0) {
        return Err(Error::Argument(format!("target overhead {gamma_target} below 1")));
    }
    let dressed = circuits.iter().map(parse_dressed).collect::<Result<Vec<_>>>()?;
    let depth = dressed.iter().map(|d| d.noisy_layers().count()).max().unwrap_or(0);
    let terms = enumerate_model_terms(&path_edges(n), n);
    let mut spec = NoiseSpec::noiseless(n);
    if depth > 0 {
        let per_layer = gamma_target.ln() / (2.0 * depth as f64);
        for layer in distinct_clifford_layers(&dressed) {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, layer.id().0, 1));
            let u: Vec<f64> = terms.iter().map(|_| rng.gen::<f64>()).collect();
            let total: f64 = u.iter().sum();
            let rates = u.iter().map(|v| v / total * per_layer).collect();
            spec = spec.with_layer(SparseNoiseModel::new(layer.id(), terms.clone(), rates)?);
        }
    }
    if !readout.is_empty() {
        spec = spec.with_readout((0..n).map(|q| readout[q % readout.len()]).collect());
    }
    spec.validate()?;
    Ok(spec)
}

/// Total `γ^(ξ)` of `circuit` under the layer models of `spec`.
pub fn circuit_gamma(circuit: &Circuit, spec: &NoiseSpec<f64>, xi: f64) -> Result<f64> {
    if xi >= 1.0 {
        return Ok(1.0);
    }
    let d = parse_dressed(circuit)?;
    let total: f64 = d
        .noisy_layers()
        .filter_map(|l| spec.layers.get(&l.layer_id))
        .map(|m| m.total_rate())
        .sum();
    Ok((2.0 * (1.0 - xi) * total).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRow {
    pub step: usize,
    pub exact: f64,
    pub unmitigated: f64,
    pub unmitigated_stderr: f64,
    pub vzne: f64,
    pub vzne_stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TfimSummary {
    pub steps: usize,
    pub noise_strengths: Vec<f64>,
    /// `γ^(ξ)` of the deepest circuit under the planted (or supplied) noise.
    pub true_gamma: BTreeMap<String, f64>,
    /// The same under the learned model.
    pub learned_gamma: BTreeMap<String, f64>,
    /// Samples for precision `δ` are this many over `δ²`: PEC at `ξ = 0`.
    pub pec_samples_factor: f64,
    /// Same for PER summed over the configured strengths.
    pub per_samples_factor: f64,
    pub mae_unmitigated: f64,
    pub mae_vzne: f64,
}

#[derive(Clone, Debug)]
pub struct TfimOutput {
    pub rows: Vec<StepRow>,
    pub per_results: Vec<PerResult>,
    pub summary: TfimSummary,
    /// Output files by name.
    pub files: BTreeMap<String, String>,
}

fn xi_key(xi: f64) -> String {
    format!("{xi}")
}

/// Runs tomography and PER for every step on `executor`; `noise` is only used
/// for reporting the true overheads.
pub fn run_tfim<E: Executor>(config: &TfimConfig, noise: &NoiseSpec<f64>, executor: &mut E) -> Result<TfimOutput> {
    let circuits = config.circuits();
    let n = config.n_qubits;
    let edges = path_edges(n);

    let tomo = TomographyExperiment::from_circuits(&circuits, &edges, config.tomography.clone())?;
    let learned = tomo.run(executor)?;

    let observables = magnetization_observables(n);
    let per = PerExperiment::new(&circuits, observables.clone(), learned.frame.clone(), config.per.clone())?;
    let results = per.run(executor)?;

    let xis = &config.per.noise_strengths;
    let unmitigated_k = xis.iter().position(|&x| x == 1.0);
    let mut rows = Vec::new();
    let mut estimator_csv = String::from("step,xi,gamma,mean,stderr,count\n");
    for (step, circuit) in circuits.iter().enumerate() {
        let exact = observables
            .iter()
            .map(|o| noiseless_expectation(circuit, o))
            .sum::<Result<f64>>()?
            / n as f64;
        let mine: Vec<&PerResult> = results.iter().filter(|r| r.circuit_index == step).collect();
        // Per-instance magnetization: all observables come from the same instance.
        let mut points = Vec::new();
        for (k, &xi) in xis.iter().enumerate() {
            let count = mine[0].samples[k].len();
            let mz: Vec<f64> = (0..count)
                .map(|s| mine.iter().map(|r| r.samples[k][s]).sum::<f64>() / n as f64)
                .collect();
            let summary = summarize(&mz);
            let _ = writeln!(
                estimator_csv,
                "{step},{xi},{:.10},{:.10},{:.10},{}",
                mine[0].estimates[k].gamma, summary.mean, summary.stderr, summary.count
            );
            points.push((xi, summary.mean, summary.stderr));
        }
        let (unmitigated, unmitigated_stderr) = unmitigated_k.map_or((f64::NAN, f64::NAN), |k| (points[k].1, points[k].2));
        let (vzne, vzne_stderr) = if xis.len() >= 2 {
            let f = vzne_fit(&points)?;
            (f.a, f.a_stderr)
        } else {
            (f64::NAN, f64::NAN)
        };
        rows.push(StepRow {
            step,
            exact,
            unmitigated,
            unmitigated_stderr,
            vzne,
            vzne_stderr,
        });
    }

    let deepest = circuits.last().expect("at least step 0");
    let mut true_gamma = BTreeMap::new();
    let mut learned_gamma = BTreeMap::new();
    let mut learned_spec = NoiseSpec::noiseless(n);
    for (_, m) in learned.frame.layers.values() {
        learned_spec = learned_spec.with_layer(m.clone());
    }
    for xi in [0.0, 0.5].iter().chain(xis.iter()) {
        true_gamma.insert(xi_key(*xi), circuit_gamma(deepest, noise, *xi)?);
        learned_gamma.insert(xi_key(*xi), circuit_gamma(deepest, &learned_spec, *xi)?);
    }
    let pec_samples_factor = true_gamma[&xi_key(0.0)].powi(2);
    let per_samples_factor = xis.iter().map(|x| true_gamma[&xi_key(*x)].powi(2)).sum();
    let scored: Vec<&StepRow> = rows.iter().filter(|r| r.step >= 1).collect();
    let mae = |f: fn(&StepRow) -> f64| {
        if scored.is_empty() {
            f64::NAN
        } else {
            scored.iter().map(|r| (f(r) - r.exact).abs()).sum::<f64>() / scored.len() as f64
        }
    };
    let summary = TfimSummary {
        steps: config.steps,
        noise_strengths: xis.clone(),
        true_gamma,
        learned_gamma,
        pec_samples_factor,
        per_samples_factor,
        mae_unmitigated: mae(|r| r.unmitigated),
        mae_vzne: mae(|r| r.vzne),
    };

    let mut magnetization = String::from("step,exact,unmitigated,unmitigated_stderr,vzne,vzne_stderr\n");
    for r in &rows {
        let _ = writeln!(
            magnetization,
            "{},{:.10},{:.10},{:.10},{:.10},{:.10}",
            r.step, r.exact, r.unmitigated, r.unmitigated_stderr, r.vzne, r.vzne_stderr
        );
    }
    let layers: Vec<_> = learned.frame.layers.values().map(|(l, _)| l.clone()).collect();
    let mut files = BTreeMap::new();
    files.insert("magnetization.csv".to_string(), magnetization);
    files.insert("estimators.csv".to_string(), estimator_csv);
    files.insert("per_results.csv".to_string(), results_csv(&results));
    files.insert("decay.csv".to_string(), learned.decay_csv());
    files.insert("noise_model.json".to_string(), learned.frame.to_json()?);
    files.insert("planted_noise.json".to_string(), noise.to_json(&layers)?);
    files.insert("summary.json".to_string(), serde_json::to_string_pretty(&summary)?);
    files.insert("summary.txt".to_string(), summary_text(&summary));
    Ok(TfimOutput {
        rows,
        per_results: results,
        summary,
        files,
    })
}

pub fn summary_text(s: &TfimSummary) -> String {
    let mut t = String::new();
    let g = |m: &BTreeMap<String, f64>, xi: f64| m.get(&xi_key(xi)).copied().unwrap_or(f64::NAN);
    let _ = writeln!(t, "Trotter steps: {}", s.steps);
    let _ = writeln!(
        t,
        "overhead of the deepest circuit: gamma(0) = {:.2}, gamma(0.5) = {:.2} (learned model: {:.2}, {:.2})",
        g(&s.true_gamma, 0.0),
        g(&s.true_gamma, 0.5),
        g(&s.learned_gamma, 0.0),
        g(&s.learned_gamma, 0.5)
    );
    let strengths: Vec<String> = s.noise_strengths.iter().map(|x| x.to_string()).collect();
    let _ = writeln!(
        t,
        "samples for precision delta: PEC {:.0}/delta^2 ({:.2}), PER at {{{}}} {:.0}/delta^2 ({:.2})",
        s.pec_samples_factor,
        s.pec_samples_factor,
        strengths.join(", "),
        s.per_samples_factor,
        s.per_samples_factor
    );
    let _ = writeln!(
        t,
        "mean absolute error of M_z over steps 1..{}: unmitigated {:.4}, vZNE {:.4}",
        s.steps, s.mae_unmitigated, s.mae_vzne
    );
    t
}
