//! Probabilistic error reduction.
//!
//! Each noisy layer `l` is followed by a random Pauli drawn from the partial
//! inverse of its learned noise at strength `ξ`. For `ξ < 1` every inserted
//! term flips the estimator sign and the result is scaled by the product of
//! the layer overheads; for `ξ > 1` the insertions amplify the noise at no
//! cost. Estimates at several `ξ` are extrapolated to zero by fitting
//! `a·e^{-bξ}`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::clifford::LayerId;
use crate::dressed::{parse_dressed, DressedCircuit, DressedLayer};
use crate::error::{Error, Result};
use crate::executor::{derive_seed, Executor, Outcomes};
use crate::noise::{lindblad_weight, SparseNoiseModel};
use crate::pauli::{Pauli, PauliString};
use crate::pnt::{basis_measure_gates, parity_expectation, pauli_gates, random_pauli, random_readout_twirl, NoiseDataFrame};
use crate::stats::{summarize, weighted_line, Summary};

pub const DEFAULT_NOISE_STRENGTHS: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Clone, Debug, PartialEq)]
pub struct PartialInverseParams {
    pub layer_id: LayerId,
    pub xi: f64,
    pub terms: Vec<PauliString>,
    /// Probability of inserting nothing for each term.
    pub weights: Vec<f64>,
    /// `true` when insertions carry a minus sign (`ξ < 1`).
    pub negative: bool,
    pub gamma: f64,
}

pub fn partial_inverse(model: &SparseNoiseModel<f64>, xi: f64) -> Result<PartialInverseParams> {
    if !(xi >= 0.0) || !xi.is_finite() {
        return Err(Error::Argument(format!("noise strength must be finite and non-negative, got {xi}")));
    }
    let scale = (1.0 - xi).abs();
    let weights = model.rates().iter().map(|&l| lindblad_weight(scale * l)).collect();
    let gamma = if xi < 1.0 {
        (2.0 * (1.0 - xi) * model.total_rate()).exp()
    } else {
        1.0
    };
    Ok(PartialInverseParams {
        layer_id: model.layer_id,
        xi,
        terms: model.terms().to_vec(),
        weights,
        negative: xi < 1.0,
        gamma,
    })
}

impl PartialInverseParams {
    /// Per-term map `ρ ↦ c_I ρ + c_P P ρ P`, returned as `(P, c_I, c_P)`.
    /// Composing these over all terms gives the sampled quasi-channel
    /// including its overhead.
    pub fn term_coefficients(&self) -> Vec<(PauliString, f64, f64)> {
        self.terms
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| {
                if self.negative {
                    let g = 1.0 / (2.0 * w - 1.0);
                    (*p, g * w, -g * (1.0 - w))
                } else {
                    (*p, w, 1.0 - w)
                }
            })
            .collect()
    }

    /// Draws one Pauli correction; returns the product of the inserted
    /// terms and how many were inserted.
    pub fn sample(&self, n_qubits: usize, rng: &mut impl Rng) -> (PauliString, usize) {
        let mut q = PauliString::identity(n_qubits);
        let mut count = 0;
        for (p, &w) in self.terms.iter().zip(&self.weights) {
            if rng.gen::<f64>() >= w {
                q = q.product(p);
                count += 1;
            }
        }
        (q, count)
    }
}

/// One sampled PER circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct PerInstance {
    pub circuit_index: usize,
    pub group_index: usize,
    pub xi: f64,
    /// Product of inserted terms after each noisy layer.
    pub insertions: Vec<PauliString>,
    /// Number of non-identity terms drawn across all layers.
    pub inserted_terms: usize,
    pub twirls: Vec<PauliString>,
    pub readout_twirl: u64,
    /// `(-1)^{#insertions}` for `ξ < 1`, else `+1`.
    pub sign: f64,
    /// Signed estimator scale: `sign · ∏ γ_l` for `ξ < 1`, else 1.
    pub alpha: f64,
    pub basis: PauliString,
    pub circuit: Circuit,
}

/// Builds one PER circuit from a dressed circuit. `params` must cover every
/// noisy layer.
pub fn sample_per_circuit(
    dressed: &DressedCircuit,
    params: &BTreeMap<LayerId, PartialInverseParams>,
    basis: &PauliString,
    rng: &mut impl Rng,
) -> Result<PerInstance> {
    let n = dressed.n_qubits;
    let mut layers: Vec<DressedLayer> = Vec::with_capacity(dressed.layers.len() + 1);
    let mut frame = PauliString::identity(n);
    let (mut insertions, mut twirls) = (Vec::new(), Vec::new());
    let (mut sign, mut overhead, mut inserted_terms) = (1.0, 1.0, 0);
    let mut xi = None;
    for layer in &dressed.layers {
        let mut block: Vec<Gate> = pauli_gates(&frame).collect();
        block.extend_from_slice(&layer.single_qubit_block);
        frame = PauliString::identity(n);
        if !layer.is_clifford_free() {
            let p = params.get(&layer.layer_id).ok_or_else(|| {
                Error::Coverage(format!("no noise model for layer {}", layer.layer_id))
            })?;
            if *xi.get_or_insert(p.xi) != p.xi {
                return Err(Error::Argument("layers sampled at different noise strengths".into()));
            }
            let twirl = random_pauli(n, rng);
            block.extend(pauli_gates(&twirl));
            let (q, count) = p.sample(n, rng);
            inserted_terms += count;
            if p.negative {
                overhead *= p.gamma;
                if count % 2 == 1 {
                    sign = -sign;
                }
            }
            frame = layer.clifford_layer.conjugate(&twirl)?.product(&q);
            insertions.push(q);
            twirls.push(twirl);
        }
        layers.push(DressedLayer::new(block, layer.clifford_layer.clone()));
    }
    let readout_twirl = random_readout_twirl(n, rng);
    let mut tail: Vec<Gate> = pauli_gates(&frame).collect();
    tail.extend(basis_measure_gates(basis));
    tail.extend((0..n).filter(|q| readout_twirl >> q & 1 == 1).map(Gate::X));
    if !tail.is_empty() {
        match layers.last_mut() {
            Some(last) if last.is_clifford_free() => last.single_qubit_block.extend(tail),
            _ => layers.push(DressedLayer::new(tail, crate::clifford::CliffordLayer::empty(n))),
        }
    }
    let circuit = DressedCircuit {
        n_qubits: n,
        layers,
        measure: dressed.measure.clone(),
    }
    .to_circuit();
    Ok(PerInstance {
        circuit_index: 0,
        group_index: 0,
        xi: xi.unwrap_or(1.0),
        insertions,
        inserted_terms,
        twirls,
        readout_twirl,
        sign,
        alpha: sign * overhead,
        basis: *basis,
        circuit,
    })
}

/// Readout-mitigated, sign- and overhead-corrected estimate of `observable`.
pub fn adjusted_expectation(
    instance: &PerInstance,
    outcomes: &impl Outcomes,
    observable: &PauliString,
    spam: &BTreeMap<usize, f64>,
) -> Result<f64> {
    let raw = parity_expectation(outcomes, &instance.basis, instance.readout_twirl, observable)?;
    let mut scale = 1.0;
    for q in observable.support() {
        let s = spam.get(&q).copied().unwrap_or(1.0);
        if !(s > 0.0) {
            return Err(Error::Mitigation(format!("readout coefficient {s} on qubit {q}")));
        }
        scale *= s;
    }
    Ok(raw / scale * instance.alpha)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VzneFit {
    /// Zero-noise estimate.
    pub a: f64,
    pub b: f64,
    /// Standard error of `a` propagated from the per-point standard errors.
    pub a_stderr: f64,
    /// Weighted sum of squared residuals.
    pub residual: f64,
    /// The exponential fit failed and `a` is a straight-line intercept.
    pub linear_fallback: bool,
}

/// Inverse-variance weights, or uniform ones when any standard error is
/// negligible next to its mean.
fn fit_weights(points: &[(f64, f64, f64)]) -> Vec<f64> {
    if points.iter().all(|p| p.2 > 1e-9 * p.1.abs().max(1e-6)) {
        points.iter().map(|p| 1.0 / (p.2 * p.2)).collect()
    } else {
        vec![1.0; points.len()]
    }
}

/// Standard error of `a` from the linearized covariance `(JᵀWJ)⁻¹` with
/// `W = diag(1/se²)`; `b` is treated as fixed when it sits on its bound.
fn a_stderr(points: &[(f64, f64, f64)], jac: impl Fn(f64) -> [f64; 2], b_free: bool) -> f64 {
    if points.iter().all(|p| p.2 == 0.0) {
        return 0.0;
    }
    if points.iter().any(|p| !(p.2 > 0.0)) {
        return f64::NAN;
    }
    let mut m = [[0.0; 2]; 2];
    for p in points {
        let g = jac(p.0);
        let w = 1.0 / (p.2 * p.2);
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] += w * g[i] * g[j];
            }
        }
    }
    if !b_free {
        return (1.0 / m[0][0]).sqrt();
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    (m[1][1] / det).sqrt()
}

fn exp_fit(points: &[(f64, f64, f64)], w: &[f64], a: f64, b: f64) -> VzneFit {
    VzneFit {
        a,
        b,
        a_stderr: a_stderr(points, |t| [(-b * t).exp(), -a * t * (-b * t).exp()], b > 0.0),
        residual: weighted_rss(points, w, |t| a * (-b * t).exp()),
        linear_fallback: false,
    }
}

fn weighted_rss(points: &[(f64, f64, f64)], w: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    points.iter().zip(w).map(|(p, k)| k * (p.1 - f(p.0)).powi(2)).sum()
}

fn degenerate_fit() -> Error {
    Error::Fit {
        context: "vZNE".into(),
        reason: "weights leave fewer than two effective noise strengths".into(),
    }
}

/// Fits `mean(ξ) = a·e^{-bξ}`, `b ≥ 0`, to `(ξ, mean, stderr)` points.
pub fn vzne_fit(points: &[(f64, f64, f64)]) -> Result<VzneFit> {
    let mut xs: Vec<u64> = points.iter().map(|p| p.0.to_bits()).collect();
    xs.sort_unstable();
    xs.dedup();
    if xs.len() < 2 {
        return Err(Error::Fit {
            context: "vZNE".into(),
            reason: "need at least two distinct noise strengths".into(),
        });
    }
    let w = fit_weights(points);
    let positive = points.iter().all(|p| p.1 > 0.0);
    let negative = points.iter().all(|p| p.1 < 0.0);
    if positive || negative {
        let s = if positive { 1.0 } else { -1.0 };
        let x: Vec<f64> = points.iter().map(|p| p.0).collect();
        let y: Vec<f64> = points.iter().map(|p| (s * p.1).ln()).collect();
        // Relative weights on the log scale: var(ln m) ≈ (se/m)².
        let lw: Vec<f64> = points.iter().zip(&w).map(|(p, k)| k * p.1 * p.1).collect();
        let line = weighted_line(&x, &y, &lw).ok_or_else(degenerate_fit)?;
        let (mut a, mut b) = (s * line.intercept.exp(), -line.slope);
        if b < 0.0 {
            b = 0.0;
            let sw: f64 = lw.iter().sum();
            a = s * (y.iter().zip(&lw).map(|(v, k)| v * k).sum::<f64>() / sw).exp();
        }
        return Ok(exp_fit(points, &w, a, b));
    }
    match gauss_newton(points, &w) {
        Some((a, b)) => Ok(exp_fit(points, &w, a, b)),
        None => {
            warn!("vZNE exponential fit failed on sign-mixed data; using a straight line");
            let x: Vec<f64> = points.iter().map(|p| p.0).collect();
            let y: Vec<f64> = points.iter().map(|p| p.1).collect();
            let line = weighted_line(&x, &y, &w).ok_or_else(degenerate_fit)?;
            Ok(VzneFit {
                a: line.intercept,
                b: f64::NAN,
                a_stderr: a_stderr(points, |t| [1.0, t], true),
                residual: weighted_rss(points, &w, |xi| line.intercept + line.slope * xi),
                linear_fallback: true,
            })
        }
    }
}

/// Damped Gauss-Newton on `a·e^{-bξ}`; `None` unless it converges with `b ≥ 0`.
fn gauss_newton(points: &[(f64, f64, f64)], w: &[f64]) -> Option<(f64, f64)> {
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let line = weighted_line(&x, &y, w)?;
    let (mut a, mut b) = (line.intercept, 0.0);
    if line.intercept != 0.0 {
        b = (-line.slope / line.intercept).max(0.0);
    }
    let mut lambda = 1e-3;
    let mut rss = weighted_rss(points, w, |t| a * (-b * t).exp());
    for _ in 0..200 {
        let (mut jtj, mut jtr) = ([[0.0; 2]; 2], [0.0; 2]);
        for ((&t, &v), &k) in x.iter().zip(&y).zip(w) {
            let e = (-b * t).exp();
            let g = [e, -a * t * e];
            let r = v - a * e;
            for i in 0..2 {
                jtr[i] += k * g[i] * r;
                for j in 0..2 {
                    jtj[i][j] += k * g[i] * g[j];
                }
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let m = [[jtj[0][0] * (1.0 + lambda), jtj[0][1]], [jtj[1][0], jtj[1][1] * (1.0 + lambda)]];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det.abs() < 1e-300 {
                lambda *= 10.0;
                continue;
            }
            let da = (m[1][1] * jtr[0] - m[0][1] * jtr[1]) / det;
            let db = (m[0][0] * jtr[1] - m[1][0] * jtr[0]) / det;
            let (na, nb) = (a + da, (b + db).max(0.0));
            let nrss = weighted_rss(points, w, |t| na * (-nb * t).exp());
            if nrss <= rss {
                let converged = (rss - nrss) <= 1e-14 * rss.max(1e-300) && da.abs() + db.abs() < 1e-12 * (1.0 + a.abs() + b);
                a = na;
                b = nb;
                rss = nrss;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if converged {
                    return Some((a, b));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No downhill step left: accept a stationary point.
            return (a.is_finite() && b.is_finite()).then_some((a, b));
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementGroup {
    pub basis: PauliString,
    /// Indices into the planned observable list.
    pub observables: Vec<usize>,
}

/// Greedy grouping of qubit-wise compatible observables; unused qubits are
/// measured in `Z`.
pub fn plan_measurements(observables: &[PauliString]) -> Vec<MeasurementGroup> {
    let mut groups: Vec<(PauliString, Vec<usize>)> = Vec::new();
    for (i, o) in observables.iter().enumerate() {
        match groups.iter_mut().find(|(b, _)| b.qubitwise_compatible(o)) {
            Some((b, members)) => {
                for q in o.support() {
                    b.set(q, o.letter(q));
                }
                members.push(i);
            }
            None => groups.push((*o, vec![i])),
        }
    }
    groups
        .into_iter()
        .map(|(mut basis, observables)| {
            for q in 0..basis.n_qubits() {
                if basis.letter(q) == Pauli::I {
                    basis.set(q, Pauli::Z);
                }
            }
            MeasurementGroup { basis, observables }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerConfig {
    pub noise_strengths: Vec<f64>,
    /// PER circuits per circuit, measurement group and noise strength.
    pub samples: usize,
    pub shots: u64,
    pub seed: u64,
}

impl Default for PerConfig {
    fn default() -> Self {
        Self {
            noise_strengths: DEFAULT_NOISE_STRENGTHS.to_vec(),
            samples: 1000,
            shots: 1024,
            seed: 0,
        }
    }
}

/// Everything needed to regenerate a PER run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerManifest {
    pub circuits: Vec<Circuit>,
    pub observables: Vec<PauliString>,
    pub noise_strengths: Vec<f64>,
    pub samples: usize,
    pub shots: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiEstimate {
    pub xi: f64,
    pub gamma: f64,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerResult {
    pub circuit_index: usize,
    pub observable: PauliString,
    pub estimates: Vec<XiEstimate>,
    #[serde(skip)]
    pub samples: Vec<Vec<f64>>,
    pub fit: Option<VzneFit>,
}

impl PerResult {
    pub fn zero_noise_estimate(&self) -> Option<f64> {
        self.fit.map(|f| f.a)
    }

    pub fn at(&self, xi: f64) -> Option<&XiEstimate> {
        self.estimates.iter().find(|e| e.xi == xi)
    }
}

pub struct PerExperiment {
    pub circuits: Vec<DressedCircuit>,
    pub observables: Vec<PauliString>,
    pub frame: NoiseDataFrame,
    pub config: PerConfig,
    groups: Vec<MeasurementGroup>,
}

impl PerExperiment {
    pub fn new(circuits: &[Circuit], observables: Vec<PauliString>, frame: NoiseDataFrame, config: PerConfig) -> Result<Self> {
        if config.noise_strengths.is_empty() || config.samples == 0 || config.shots == 0 {
            return Err(Error::Argument("noise strengths, samples and shots must be non-empty".into()));
        }
        for &xi in &config.noise_strengths {
            if !(xi >= 0.0) || !xi.is_finite() {
                return Err(Error::Argument(format!("invalid noise strength {xi}")));
            }
        }
        let dressed = circuits.iter().map(parse_dressed).collect::<Result<Vec<_>>>()?;
        for (c, d) in circuits.iter().zip(&dressed) {
            if let Some(o) = observables.iter().find(|o| o.n_qubits() != c.n_qubits) {
                return Err(Error::Dimension {
                    expected: c.n_qubits,
                    found: o.n_qubits(),
                });
            }
            for l in d.noisy_layers() {
                if frame.model(l.layer_id).is_none() {
                    return Err(Error::Coverage(format!("no learned model for layer {}", l.layer_id)));
                }
            }
        }
        let groups = plan_measurements(&observables);
        Ok(Self {
            circuits: dressed,
            observables,
            frame,
            config,
            groups,
        })
    }

    pub fn groups(&self) -> &[MeasurementGroup] {
        &self.groups
    }

    pub fn manifest(&self) -> PerManifest {
        PerManifest {
            circuits: self.circuits.iter().map(DressedCircuit::to_circuit).collect(),
            observables: self.observables.clone(),
            noise_strengths: self.config.noise_strengths.clone(),
            samples: self.config.samples,
            shots: self.config.shots,
            seed: self.config.seed,
        }
    }

    pub fn params(&self, xi: f64) -> Result<BTreeMap<LayerId, PartialInverseParams>> {
        self.frame
            .layers
            .iter()
            .map(|(id, (_, m))| Ok((*id, partial_inverse(m, xi)?)))
            .collect()
    }

    /// Total overhead of circuit `index` at `xi`.
    pub fn gamma(&self, index: usize, xi: f64) -> Result<f64> {
        let params = self.params(xi)?;
        Ok(self.circuits[index]
            .noisy_layers()
            .map(|l| params[&l.layer_id].gamma)
            .product())
    }

    /// Instances ordered by circuit, noise strength, group, sample.
    pub fn generate(&self) -> Result<Vec<PerInstance>> {
        let mut all = Vec::new();
        for ci in 0..self.circuits.len() {
            all.extend(self.generate_for(ci)?);
        }
        Ok(all)
    }

    /// Instances of source circuit `ci`.
    pub fn generate_for(&self, ci: usize) -> Result<Vec<PerInstance>> {
        if ci >= self.circuits.len() {
            return Err(Error::Argument(format!("no circuit {ci}")));
        }
        let mut jobs = Vec::new();
        for (xk, &xi) in self.config.noise_strengths.iter().enumerate() {
            for gi in 0..self.groups.len() {
                for s in 0..self.config.samples {
                    jobs.push((xk, xi, gi, s));
                }
            }
        }
        let params: Vec<BTreeMap<LayerId, PartialInverseParams>> = self
            .config
            .noise_strengths
            .iter()
            .map(|&xi| self.params(xi))
            .collect::<Result<_>>()?;
        let n_groups = self.groups.len() as u64;
        jobs.par_iter()
            .map(|&(xk, xi, gi, s)| {
                let stream = ((ci as u64 * self.config.noise_strengths.len() as u64 + xk as u64) * n_groups + gi as u64) + 1;
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.config.seed, stream, s as u64));
                let mut inst = sample_per_circuit(&self.circuits[ci], &params[xk], &self.groups[gi].basis, &mut rng)?;
                inst.circuit_index = ci;
                inst.group_index = gi;
                inst.xi = xi;
                Ok(inst)
            })
            .collect()
    }

    /// Runs one executor batch per source circuit.
    pub fn run<E: Executor>(&self, executor: &mut E) -> Result<Vec<PerResult>> {
        let mut values = self.empty_values();
        for ci in 0..self.circuits.len() {
            let instances = self.generate_for(ci)?;
            let circuits: Vec<Circuit> = instances.iter().map(|i| i.circuit.clone()).collect();
            let outcomes = executor.run(&circuits, self.config.shots)?;
            self.accumulate(&mut values, &instances, &outcomes)?;
        }
        self.finish(values)
    }

    pub fn analyze<O: Outcomes + Sync>(&self, instances: &[PerInstance], outcomes: &[O]) -> Result<Vec<PerResult>> {
        let mut values = self.empty_values();
        self.accumulate(&mut values, instances, outcomes)?;
        self.finish(values)
    }

    fn empty_values(&self) -> BTreeMap<(usize, usize), Vec<Vec<f64>>> {
        let mut values = BTreeMap::new();
        for ci in 0..self.circuits.len() {
            for oi in 0..self.observables.len() {
                values.insert((ci, oi), vec![Vec::new(); self.config.noise_strengths.len()]);
            }
        }
        values
    }

    fn accumulate<O: Outcomes + Sync>(
        &self,
        values: &mut BTreeMap<(usize, usize), Vec<Vec<f64>>>,
        instances: &[PerInstance],
        outcomes: &[O],
    ) -> Result<()> {
        if instances.len() != outcomes.len() {
            return Err(Error::Dimension {
                expected: instances.len(),
                found: outcomes.len(),
            });
        }
        let xis = &self.config.noise_strengths;
        let estimates: Vec<Vec<(usize, f64)>> = instances
            .par_iter()
            .zip(outcomes.par_iter())
            .map(|(inst, out)| {
                self.groups[inst.group_index]
                    .observables
                    .iter()
                    .map(|&oi| Ok((oi, adjusted_expectation(inst, out, &self.observables[oi], &self.frame.spam)?)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        for (inst, est) in instances.iter().zip(estimates) {
            let xk = xis
                .iter()
                .position(|&x| x == inst.xi)
                .ok_or_else(|| Error::Validation(format!("instance at unplanned noise strength {}", inst.xi)))?;
            for (oi, v) in est {
                values.get_mut(&(inst.circuit_index, oi)).expect("planned")[xk].push(v);
            }
        }
        Ok(())
    }

    fn finish(&self, values: BTreeMap<(usize, usize), Vec<Vec<f64>>>) -> Result<Vec<PerResult>> {
        let xis = &self.config.noise_strengths;
        let mut results = Vec::new();
        for ((ci, oi), per_xi) in values {
            let mut estimates = Vec::new();
            for (k, &xi) in xis.iter().enumerate() {
                estimates.push(XiEstimate {
                    xi,
                    gamma: self.gamma(ci, xi)?,
                    summary: summarize(&per_xi[k]),
                });
            }
            let points: Vec<(f64, f64, f64)> = estimates.iter().map(|e| (e.xi, e.summary.mean, e.summary.stderr)).collect();
            let fit = if xis.len() >= 2 { Some(vzne_fit(&points)?) } else { None };
            results.push(PerResult {
                circuit_index: ci,
                observable: self.observables[oi],
                estimates,
                samples: per_xi,
                fit,
            });
        }
        Ok(results)
    }
}

pub fn results_json(results: &[PerResult]) -> Result<String> {
    Ok(serde_json::to_string_pretty(results)?)
}

/// One row per circuit, observable and noise strength, with the fit repeated.
pub fn results_csv(results: &[PerResult]) -> String {
    let mut s = String::from("circuit,observable,xi,gamma,mean,stderr,count,vzne_a,vzne_a_stderr,vzne_b,vzne_residual,linear_fallback\n");
    for r in results {
        let (a, ase, b, res, lin) = r.fit.map_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN, false), |f| {
            (f.a, f.a_stderr, f.b, f.residual, f.linear_fallback)
        });
        for e in &r.estimates {
            let _ = writeln!(
                s,
                "{},{},{},{:.10},{:.10},{:.10},{},{:.10},{:.10},{:.10},{:.10},{}",
                r.circuit_index,
                r.observable,
                e.xi,
                e.gamma,
                e.summary.mean,
                e.summary.stderr,
                e.summary.count,
                a,
                ase,
                b,
                res,
                lin
            );
        }
    }
    s
}
