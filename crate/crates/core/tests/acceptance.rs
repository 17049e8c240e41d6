//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints one PASS/FAIL line; exits non-zero if any fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use perkit::clifford::{CliffordGate, CliffordKind};
use perkit::demo::{circuit_gamma, planted_noise, run_tfim, summary_text, TfimConfig};
use perkit::density::DensityMatrix;
use perkit::executor::{noiseless_expectation, ExactExecutor, SimExecutor};
use perkit::per::{partial_inverse, PerConfig, PerExperiment};
use perkit::pnt::{NoiseDataFrame, TomographyConfig, TomographyExperiment};
use perkit::qpd::{depolarizing_for_gamma, noise_scaled_rep, overhead, sample_qpd, QpdProblem};
use perkit::stats::{sample_variance, summarize};
use perkit::{
    enumerate_model_terms, path_edges, Circuit, CliffordLayer, Gate, NoiseSpec, PauliString, SparseNoiseModel,
};

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cx_layer() -> CliffordLayer {
    CliffordLayer::new(2, vec![CliffordGate::new(CliffordKind::Cx, vec![0, 1]).unwrap()]).unwrap()
}

fn random_model(layer: &CliffordLayer, terms: &[PauliString], max: f64, seed: u64) -> SparseNoiseModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rates = terms.iter().map(|_| rng.gen_range(0.0..max)).collect();
    SparseNoiseModel::new(layer.id(), terms.to_vec(), rates).unwrap()
}

fn fig3_config() -> TomographyConfig {
    TomographyConfig {
        depths: vec![2, 4, 8, 16],
        samples: 32,
        single_samples: 200,
        shots: 250,
        seed: 11,
    }
}

fn criterion_1() -> Check {
    let pec8 = overhead(1.73f64, 0.0).powi(8);
    let layer = cx_layer();
    let terms = enumerate_model_terms(&[(0, 1)], 2);
    let model = random_model(&layer, &terms, 0.05, 1);
    let g0 = partial_inverse(&model, 0.0).map_err(|e| e.to_string())?.gamma;
    let g1 = partial_inverse(&model, 1.0).map_err(|e| e.to_string())?.gamma;
    let g5 = partial_inverse(&model, 0.5).map_err(|e| e.to_string())?.gamma;

    let config = TfimConfig::default();
    let circuits = config.circuits();
    let noise = planted_noise(&circuits, 7.25, &config.readout, 0).map_err(|e| e.to_string())?;
    let deepest = circuits.last().unwrap();
    let t0 = circuit_gamma(deepest, &noise, 0.0).map_err(|e| e.to_string())?;
    let t5 = circuit_gamma(deepest, &noise, 0.5).map_err(|e| e.to_string())?;
    let t1 = circuit_gamma(deepest, &noise, 1.0).map_err(|e| e.to_string())?;
    let detail = format!(
        "1.73^8 = {pec8:.3}; layer gamma(1) = {g1}, gamma(0.5) - sqrt(gamma(0)) = {:.1e}; circuit gamma(0) = {t0:.4}, gamma(0.5) = {t5:.4}",
        g5 - g0.sqrt()
    );
    ensure(
        (pec8 - 80.2).abs() <= 0.1
            && g1 == 1.0
            && t1 == 1.0
            && overhead(1.73, 1.0) == 1.0
            && (g5 - g0.sqrt()).abs() <= 1e-12 * g0
            && (t5 - t0.sqrt()).abs() <= 1e-12 * t0
            && format!("{t0:.2}") == "7.25"
            && format!("{t5:.2}") == "2.69",
        detail,
    )
}

/// `Tr(P Λ(P)) / 2^n` by evolving the operator `P` through the simulator's channels.
fn brute_fidelity(p: &PauliString, model: &SparseNoiseModel, damping: f64) -> f64 {
    let n = p.n_qubits();
    let m = p.dense_matrix::<f64>(n).unwrap();
    let mut rho = DensityMatrix::from_matrix(&m).unwrap();
    rho.apply_pauli_channel(model).unwrap();
    for q in 0..n {
        rho.amplitude_damping(q, damping);
    }
    rho.expectation(p).unwrap() / (1 << n) as f64
}

fn criterion_2() -> Check {
    let layer = cx_layer();
    let terms = enumerate_model_terms(&[(0, 1)], 2);
    let model = random_model(&layer, &terms, 0.02, 2);
    let noise = NoiseSpec::noiseless(2)
        .with_layer(model.clone())
        .with_damping(vec![0.01, 0.01]);
    let exp = TomographyExperiment::new(vec![layer.clone()], terms, fig3_config()).map_err(|e| e.to_string())?;
    let result = exp.run(&mut SimExecutor::new(noise, 12)).map_err(|e| e.to_string())?;
    let records = &result.layers[0].records;
    let linear = records
        .iter()
        .filter(|r| r.fit.is_some_and(|f| f.r_squared >= 0.98))
        .count();
    let mut devs = Vec::new();
    for r in records {
        let fit = r.fit.ok_or_else(|| format!("no fit for {}", r.term))?;
        let truth = brute_fidelity(&r.term, &model, 0.01) * brute_fidelity(&r.partner, &model, 0.01);
        devs.push(((-2.0 * fit.b).exp() - truth).abs());
    }
    let max = devs.iter().cloned().fold(0.0, f64::max);
    let mean = devs.iter().sum::<f64>() / devs.len() as f64;
    let frac = linear as f64 / records.len() as f64;
    ensure(
        frac >= 0.9 && max <= 0.02 && mean <= 0.01,
        format!(
            "R^2 >= 0.98 for {linear}/{} terms; pair fidelity deviation max {max:.4}, mean {mean:.4}",
            records.len()
        ),
    )
}

fn max_rate_error(learned: &SparseNoiseModel, truth: &SparseNoiseModel) -> f64 {
    learned
        .rates()
        .iter()
        .zip(truth.rates())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn criterion_3() -> Check {
    let layer = cx_layer();
    let terms = enumerate_model_terms(&[(0, 1)], 2);
    let truth = random_model(&layer, &terms, 0.02, 3);
    let noise = NoiseSpec::noiseless(2)
        .with_layer(truth.clone())
        .with_readout(vec![(0.02, 0.02), (0.01, 0.01)]);
    let exp = TomographyExperiment::new(vec![layer.clone()], terms, fig3_config()).map_err(|e| e.to_string())?;
    let exact = exp.run(&mut ExactExecutor::new(noise.clone())).map_err(|e| e.to_string())?;
    let exact_err = max_rate_error(exact.frame.model(layer.id()).unwrap(), &truth);
    let shots = exp.run(&mut SimExecutor::new(noise, 13)).map_err(|e| e.to_string())?;
    let shot_err = max_rate_error(shots.frame.model(layer.id()).unwrap(), &truth);
    ensure(
        exact_err <= 1e-8 && shot_err <= 2e-3,
        format!(
            "exact max|dlambda| = {exact_err:.2e} (residual {:.1e}); with shot noise {shot_err:.2e}",
            exact.layers[0].solve.residual
        ),
    )
}

type Super = Vec<Vec<Complex64>>;

fn matmul(a: &Super, b: &Super) -> Super {
    let d = a.len();
    (0..d)
        .map(|i| (0..d).map(|j| (0..d).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

fn max_diff(a: &Super, b: &Super) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn identity_super(d: usize) -> Super {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).collect())
        .collect()
}

/// Row-major vectorization: column `(k, l)` holds `vec(Λ(|k⟩⟨l|))`.
fn simulator_super(model: &SparseNoiseModel, n: usize) -> Super {
    let dim = 1 << n;
    let mut s = vec![vec![Complex64::new(0.0, 0.0); dim * dim]; dim * dim];
    for k in 0..dim {
        for l in 0..dim {
            let mut m = perkit::linalg::CMatrix::<f64>::zeros(dim);
            m[(k, l)] = Complex64::new(1.0, 0.0);
            let mut rho = DensityMatrix::from_matrix(&m).unwrap();
            rho.apply_pauli_channel(model).unwrap();
            let out = rho.to_matrix();
            for i in 0..dim {
                for j in 0..dim {
                    s[i * dim + j][k * dim + l] = out[(i, j)];
                }
            }
        }
    }
    s
}

/// `∏_k (c_I 𝟙 + c_P P⊗P̄)` from the sampled per-term coefficients.
fn quasi_channel_super(coeffs: &[(PauliString, f64, f64)], n: usize) -> Super {
    let dim = 1 << n;
    let mut s = identity_super(dim * dim);
    for (p, ci, cp) in coeffs {
        let m = p.dense_matrix::<f64>(n).unwrap();
        let mut t = vec![vec![Complex64::new(0.0, 0.0); dim * dim]; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        // vec(P ρ P†) with P Hermitian: P_ik ρ_kl P_jl^*.
                        let mut v = m[(i, k)] * m[(j, l)].conj() * *cp;
                        if i == k && j == l {
                            v += *ci;
                        }
                        t[i * dim + j][k * dim + l] = v;
                    }
                }
            }
        }
        s = matmul(&t, &s);
    }
    s
}

fn criterion_4() -> Check {
    let mut worst = [0.0f64; 4];
    for n in [1usize, 2] {
        let edges = path_edges(n);
        let layer = if n == 2 { cx_layer() } else { CliffordLayer::empty(1) };
        let terms = enumerate_model_terms(&edges, n);
        for seed in 0..3 {
            let model = random_model(&layer, &terms, 0.05, 40 + seed);
            let lambda = simulator_super(&model, n);
            let per = |xi: f64| {
                let params = partial_inverse(&model, xi).unwrap();
                quasi_channel_super(&params.term_coefficients(), n)
            };
            let id = identity_super(1 << (2 * n));
            worst[0] = worst[0].max(max_diff(&matmul(&per(0.0), &lambda), &id));
            worst[1] = worst[1].max(max_diff(&per(1.0), &id));
            worst[2] = worst[2].max(max_diff(&per(2.0), &lambda));
            // Partial inverse at ξ = 0.5 leaves rates ξλ: compare with the simulator.
            let half = SparseNoiseModel::new(
                layer.id(),
                terms.clone(),
                model.rates().iter().map(|r| 0.5 * r).collect(),
            )
            .unwrap();
            worst[3] = worst[3].max(max_diff(&matmul(&per(0.5), &lambda), &simulator_super(&half, n)));
        }
    }
    ensure(
        worst.iter().all(|&w| w <= 1e-10),
        format!(
            "max deviation: xi=0 inverse∘noise vs identity {:.1e}, xi=1 vs identity {:.1e}, xi=2 vs noise {:.1e}, xi=0.5 vs half-rate noise {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn random_circuit(rng: &mut ChaCha8Rng) -> Circuit {
    let mut c = Circuit::new(3);
    for _ in 0..4 {
        for q in 0..3 {
            c.push(Gate::Ry(q, rng.gen_range(-1.2..1.2)));
            c.push(Gate::Rz(q, rng.gen_range(-3.1..3.1)));
        }
        let (a, b) = if rng.gen::<bool>() { (0, 1) } else { (1, 2) };
        if rng.gen::<bool>() {
            c.push(Gate::Cx(a, b));
        } else {
            c.push(Gate::Cx(b, a));
        }
    }
    for q in 0..3 {
        c.push(Gate::Ry(q, rng.gen_range(-0.6..0.6)));
    }
    c
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let observables: Vec<PauliString> = ["ZII", "IZI", "IIZ", "ZZZ"].iter().map(|s| s.parse().unwrap()).collect();
    let mut worst_z: f64 = 0.0;
    let mut ratios = Vec::new();
    for c in 0..2 {
        let circuit = random_circuit(&mut rng);
        let noise = planted_noise(std::slice::from_ref(&circuit), 9.0, &[], 50 + c).map_err(|e| e.to_string())?;
        let mut frame = NoiseDataFrame::default();
        let dressed = perkit::parse_dressed(&circuit).map_err(|e| e.to_string())?;
        for layer in perkit::distinct_clifford_layers(&[dressed]) {
            frame
                .layers
                .insert(layer.id(), (layer.clone(), noise.layers[&layer.id()].clone()));
        }
        let config = PerConfig {
            noise_strengths: vec![0.0, 0.5],
            samples: 100_000,
            shots: 1,
            seed: 60 + c,
        };
        let exp = PerExperiment::new(std::slice::from_ref(&circuit), observables.clone(), frame, config)
            .map_err(|e| e.to_string())?;
        let results = exp.run(&mut SimExecutor::new(noise.clone(), 70 + c)).map_err(|e| e.to_string())?;
        for r in &results {
            let exact = noiseless_expectation(&circuit, &r.observable).map_err(|e| e.to_string())?;
            let e0 = &r.estimates[0];
            worst_z = worst_z.max((e0.summary.mean - exact).abs() / e0.summary.stderr);
            let (v0, v5) = (sample_variance(&r.samples[0]), sample_variance(&r.samples[1]));
            let expected = (r.estimates[0].gamma / r.estimates[1].gamma).powi(2);
            ratios.push((v0 / v5) / expected);
        }
    }
    let worst_ratio = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    ensure(
        worst_z <= 3.0 && worst_ratio <= 0.2,
        format!(
            "max |z| at xi=0 over 2 circuits x 4 observables = {worst_z:.2}; variance ratio / (gamma0/gamma0.5)^2 in [{:.3}, {:.3}]",
            ratios.iter().cloned().fold(f64::INFINITY, f64::min),
            ratios.iter().cloned().fold(0.0, f64::max)
        ),
    )
}

fn criterion_6() -> Check {
    let config = TfimConfig::default();
    let noise = planted_noise(&config.circuits(), config.gamma_target, &config.readout, 0).map_err(|e| e.to_string())?;
    let out = run_tfim(&config, &noise, &mut SimExecutor::new(noise.clone(), 0)).map_err(|e| e.to_string())?;
    let s = &out.summary;
    let text = summary_text(s);
    let budget_line = text.lines().find(|l| l.starts_with("samples")).unwrap_or_default().to_string();
    ensure(
        s.mae_vzne <= 0.5 * s.mae_unmitigated
            && format!("{:.0}", s.pec_samples_factor) == "53"
            && format!("{:.0}", s.per_samples_factor) == "9"
            && budget_line.contains("PEC 53/delta^2")
            && budget_line.contains("9/delta^2"),
        format!(
            "MAE unmitigated {:.4}, vZNE {:.4}; {budget_line}",
            s.mae_unmitigated,
            s.mae_vzne,
        ),
    )
}

fn criterion_7() -> Check {
    let mut recon: f64 = 0.0;
    let mut gamma_err: f64 = 0.0;
    for p in [0.01, 0.1, depolarizing_for_gamma(1.73), 0.5] {
        let problem = QpdProblem::depolarizing_x(p).map_err(|e| e.to_string())?;
        let rep = problem.solve().map_err(|e| e.to_string())?;
        let target = problem.target_superoperator().map_err(|e| e.to_string())?;
        recon = recon.max(rep.reconstruct().ptm.max_abs_diff(&target.ptm));
        gamma_err = gamma_err.max((rep.gamma() - (1.0 + p / 2.0) / (1.0 - p)).abs());
    }

    // Noisy X on |0⟩, ⟨Z⟩ read out one shot at a time.
    let problem = QpdProblem::depolarizing_x(depolarizing_for_gamma(1.73)).map_err(|e| e.to_string())?;
    let rep = problem.solve().map_err(|e| e.to_string())?;
    let zero = perkit::qpd::pauli_vector(
        &perkit::linalg::CMatrix::from_real_rows(&[[1.0, 0.0], [0.0, 0.0]]),
        1,
    )
    .map_err(|e| e.to_string())?;
    let z_index = PauliString::all(1).position(|p| p.to_string() == "Z").unwrap();
    let z_of = |i: usize| rep.basis[i].apply(&zero)[z_index];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 200_000;
    let mut rows = Vec::new();
    for xi in [1.0, 0.5, 0.0] {
        let scaled = noise_scaled_rep(&rep, xi).map_err(|e| e.to_string())?;
        let exact_mean: f64 = scaled
            .outcomes()
            .iter()
            .map(|&(i, sign, prob)| prob * sign * scaled.gamma() * z_of(i))
            .sum();
        let est: Vec<f64> = (0..n)
            .map(|_| {
                let s = sample_qpd(&scaled, &mut rng);
                let z = z_of(s.index);
                let outcome = if rng.gen::<f64>() < (1.0 + z) / 2.0 { 1.0 } else { -1.0 };
                s.sign * s.weight * outcome
            })
            .collect();
        rows.push((xi, scaled.gamma(), exact_mean, summarize(&est), sample_variance(&est)));
    }
    let monotone = rows.windows(2).all(|w| w[1].2 < w[0].2 && w[1].4 > w[0].4);
    let converges = (rows[2].2 + 1.0).abs() < 1e-9;
    let unbiased = rows.iter().all(|r| (r.3.mean - r.2).abs() <= 3.0 * r.3.stderr);
    // Single-shot ±1 outcomes: Var = γ² − mean².
    let variance_ok = rows
        .iter()
        .all(|r| ((r.4 - (r.1 * r.1 - r.2 * r.2)) / (r.1 * r.1)).abs() <= 0.02);
    let path: Vec<String> = rows
        .iter()
        .map(|r| format!("xi={} <Z>={:.4}±{:.4} var={:.3} gamma^2={:.3}", r.0, r.3.mean, r.3.stderr, r.4, r.1 * r.1))
        .collect();
    ensure(
        recon <= 1e-8 && gamma_err <= 1e-6 && monotone && converges && unbiased && variance_ok,
        format!(
            "reconstruction {recon:.1e}, gamma error {gamma_err:.1e}; {}",
            path.join("; ")
        ),
    )
}

fn small_tfim() -> TfimConfig {
    TfimConfig {
        steps: 3,
        tomography: TomographyConfig {
            samples: 4,
            single_samples: 8,
            shots: 64,
            ..TomographyConfig::default()
        },
        per: PerConfig {
            samples: 20,
            shots: 64,
            seed: 8,
            ..PerConfig::default()
        },
        ..TfimConfig::default()
    }
}

fn criterion_8() -> Check {
    let run = || -> Result<BTreeMap<String, String>, String> {
        let config = small_tfim();
        let noise = planted_noise(&config.circuits(), 3.0, &config.readout, 8).map_err(|e| e.to_string())?;
        let out = run_tfim(&config, &noise, &mut SimExecutor::new(noise.clone(), 8)).map_err(|e| e.to_string())?;
        Ok(out.files)
    };
    let (a, b) = (run()?, run()?);
    let same = a == b;
    let bytes: usize = a.values().map(String::len).sum();
    ensure(same, format!("{} output files, {bytes} bytes, identical: {same}", a.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("overhead formulas", criterion_1),
        ("decay fits and pair fidelities", criterion_2),
        ("noise-model round trip", criterion_3),
        ("partial-inverse channel identities", criterion_4),
        ("estimator unbiasedness and variance", criterion_5),
        ("TFIM demo", criterion_6),
        ("QPD path", criterion_7),
        ("determinism", criterion_8),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {} ({name}): PASS [{secs:.1} s] {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL [{secs:.1} s] {d}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
