//! The executor contract (circuits and shots in, counts out) and its
//! implementations: the density-matrix simulator, an exact-distribution
//! variant of it, and a file hand-off for external backends.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::density::{apply_readout_confusion, DensityMatrix, DEFAULT_SIM_CAP};
use crate::dressed::parse_dressed;
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::pauli::PauliString;
use crate::real::Real;

/// Anything that assigns non-negative weights to computational-basis outcomes.
/// Outcome indices use qubit 0 as the most significant bit.
pub trait Outcomes {
    fn n_qubits(&self) -> usize;
    fn total(&self) -> f64;
    fn entries(&self) -> Vec<(usize, f64)>;
}

/// Shot counts keyed by outcome index; serialized as bitstring → count.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub n_qubits: usize,
    pub counts: BTreeMap<usize, u64>,
}

impl Counts {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            counts: BTreeMap::new(),
        }
    }

    pub fn shots(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn get(&self, bitstring: &str) -> u64 {
        parse_bitstring(bitstring)
            .and_then(|i| self.counts.get(&i).copied())
            .unwrap_or(0)
    }

    pub fn to_bitstring_map(&self) -> BTreeMap<String, u64> {
        self.counts
            .iter()
            .map(|(&i, &c)| (format_bitstring(i, self.n_qubits), c))
            .collect()
    }

    pub fn from_bitstring_map(map: &BTreeMap<String, u64>) -> Result<Self> {
        let mut n = None;
        let mut counts = BTreeMap::new();
        for (s, &c) in map {
            let len = s.chars().count();
            if *n.get_or_insert(len) != len {
                return Err(Error::Parse(format!("bitstring `{s}` has inconsistent length")));
            }
            let i = parse_bitstring(s)
                .ok_or_else(|| Error::Parse(format!("invalid bitstring `{s}`")))?;
            *counts.entry(i).or_insert(0) += c;
        }
        Ok(Self {
            n_qubits: n.unwrap_or(0),
            counts,
        })
    }
}

impl Outcomes for Counts {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn total(&self) -> f64 {
        self.shots() as f64
    }

    fn entries(&self) -> Vec<(usize, f64)> {
        self.counts.iter().map(|(&i, &c)| (i, c as f64)).collect()
    }
}

/// Exact outcome probabilities, indexed by outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    pub n_qubits: usize,
    pub probs: Vec<f64>,
}

impl Outcomes for Distribution {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    fn entries(&self) -> Vec<(usize, f64)> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (i, p))
            .collect()
    }
}

pub fn format_bitstring(index: usize, n_qubits: usize) -> String {
    (0..n_qubits)
        .map(|q| if index >> (n_qubits - 1 - q) & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn parse_bitstring(s: &str) -> Option<usize> {
    s.chars().try_fold(0usize, |acc, c| match c {
        '0' => Some(acc << 1),
        '1' => Some(acc << 1 | 1),
        _ => None,
    })
}

pub trait Executor {
    type Output: Outcomes + Send + Sync;

    /// Runs one batch. Implementations may keep state such as a batch counter.
    fn run(&mut self, circuits: &[Circuit], shots: u64) -> Result<Vec<Self::Output>>;
}

/// Seed for circuit `index` of batch `batch` under `master`.
pub fn derive_seed(master: u64, batch: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ batch) ^ index)
}

/// Final state of `circuit` under `noise`: noise and damping follow every
/// non-empty Clifford layer; layers without a model are noiseless.
pub fn simulate<R: Real>(circuit: &Circuit, noise: &NoiseSpec<R>, cap: usize) -> Result<DensityMatrix<R>> {
    if circuit.n_qubits != noise.n_qubits {
        return Err(Error::Dimension {
            expected: noise.n_qubits,
            found: circuit.n_qubits,
        });
    }
    let dressed = parse_dressed(circuit)?;
    let mut rho = DensityMatrix::zero_state(circuit.n_qubits, cap)?;
    for layer in &dressed.layers {
        for g in &layer.single_qubit_block {
            rho.apply_gate(g);
        }
        if layer.is_clifford_free() {
            continue;
        }
        for g in layer.clifford_layer.circuit_gates() {
            rho.apply_gate(&g);
        }
        if let Some(model) = noise.layers.get(&layer.layer_id) {
            rho.apply_pauli_channel(model)?;
        }
        if let Some(damping) = &noise.damping {
            for (q, &p) in damping.iter().enumerate() {
                rho.amplitude_damping(q, p);
            }
        }
    }
    Ok(rho)
}

/// Outcome distribution after readout confusion; unmeasured qubits read 0.
pub fn outcome_distribution<R: Real>(
    circuit: &Circuit,
    noise: &NoiseSpec<R>,
    cap: usize,
) -> Result<Distribution> {
    let rho = simulate(circuit, noise, cap)?;
    let n = circuit.n_qubits;
    let mut probs = rho.probabilities();
    if let Some(flips) = &noise.readout {
        apply_readout_confusion(&mut probs, n, flips);
    }
    let mut probs: Vec<f64> = probs.into_iter().map(|p| p.to_f64_lossy().max(0.0)).collect();
    if let Some(measured) = &circuit.measure {
        let keep = (0..n)
            .filter(|&q| measured.get(q).copied().unwrap_or(true))
            .fold(0usize, |m, q| m | 1 << (n - 1 - q));
        let mut marginal = vec![0.0; probs.len()];
        for (i, p) in probs.iter().enumerate() {
            marginal[i & keep] += p;
        }
        probs = marginal;
    }
    let total: f64 = probs.iter().sum();
    if total > 0.0 {
        probs.iter_mut().for_each(|p| *p /= total);
    }
    Ok(Distribution { n_qubits: n, probs })
}

pub fn sample_counts(dist: &Distribution, shots: u64, rng: &mut impl Rng) -> Counts {
    let mut cumulative = Vec::with_capacity(dist.probs.len());
    let mut acc = 0.0;
    for p in &dist.probs {
        acc += p;
        cumulative.push(acc);
    }
    let mut counts = Counts::new(dist.n_qubits);
    for _ in 0..shots {
        let u: f64 = rng.gen::<f64>() * acc;
        let i = cumulative
            .partition_point(|&c| c <= u)
            .min(cumulative.len() - 1);
        *counts.counts.entry(i).or_insert(0) += 1;
    }
    counts
}

/// Simulates every circuit and samples `shots` outcomes from each.
pub fn execute<R: Real>(
    circuits: &[Circuit],
    shots: u64,
    noise: &NoiseSpec<R>,
    seed: u64,
) -> Result<Vec<Counts>> {
    SimExecutor::new(noise.clone(), seed).run(circuits, shots)
}

/// Exact `Tr(P ρ)` for the noiseless evolution of `circuit`.
pub fn noiseless_expectation(circuit: &Circuit, observable: &PauliString) -> Result<f64> {
    let rho = simulate(circuit, &NoiseSpec::<f64>::noiseless(circuit.n_qubits), DEFAULT_SIM_CAP)?;
    rho.expectation(observable)
}

/// Shot-sampling density-matrix backend.
#[derive(Clone, Debug)]
pub struct SimExecutor<R = f64> {
    pub noise: NoiseSpec<R>,
    pub seed: u64,
    pub cap: usize,
    batch: u64,
}

impl<R: Real> SimExecutor<R> {
    pub fn new(noise: NoiseSpec<R>, seed: u64) -> Self {
        Self {
            noise,
            seed,
            cap: DEFAULT_SIM_CAP,
            batch: 0,
        }
    }
}

impl<R: Real> Executor for SimExecutor<R> {
    type Output = Counts;

    fn run(&mut self, circuits: &[Circuit], shots: u64) -> Result<Vec<Counts>> {
        if shots == 0 {
            return Err(Error::Argument("shots must be positive".into()));
        }
        self.noise.validate()?;
        let batch = self.batch;
        self.batch += 1;
        circuits
            .par_iter()
            .enumerate()
            .map(|(i, c)| {
                let dist = outcome_distribution(c, &self.noise, self.cap)?;
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, batch, i as u64));
                Ok(sample_counts(&dist, shots, &mut rng))
            })
            .collect()
    }
}

/// Shot-free backend returning exact outcome distributions.
#[derive(Clone, Debug)]
pub struct ExactExecutor<R = f64> {
    pub noise: NoiseSpec<R>,
    pub cap: usize,
}

impl<R: Real> ExactExecutor<R> {
    pub fn new(noise: NoiseSpec<R>) -> Self {
        Self {
            noise,
            cap: DEFAULT_SIM_CAP,
        }
    }
}

impl<R: Real> Executor for ExactExecutor<R> {
    type Output = Distribution;

    fn run(&mut self, circuits: &[Circuit], _shots: u64) -> Result<Vec<Distribution>> {
        self.noise.validate()?;
        circuits
            .par_iter()
            .map(|c| outcome_distribution(c, &self.noise, self.cap))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct BatchFile {
    shots: u64,
    circuits: Vec<Circuit>,
}

/// Hands batches to an external backend through a directory.
///
/// Batch `k` is written to `batch_k.json` as `{"shots", "circuits"}`. Counts are
/// read from `batch_k.counts.json`, a JSON array of `{bitstring: count}` maps in
/// circuit order. When that file is absent the run stops with an executor
/// error naming it; rerunning with the same seed regenerates identical batches.
#[derive(Clone, Debug)]
pub struct FileExecutor {
    dir: PathBuf,
    batch: u64,
}

impl FileExecutor {
    pub fn new(dir: impl AsRef<Path>) -> Self {
        Self {
            dir: dir.as_ref().to_path_buf(),
            batch: 0,
        }
    }

    pub fn batch_path(&self, batch: u64) -> PathBuf {
        self.dir.join(format!("batch_{batch:04}.json"))
    }

    pub fn counts_path(&self, batch: u64) -> PathBuf {
        self.dir.join(format!("batch_{batch:04}.counts.json"))
    }
}

impl Executor for FileExecutor {
    type Output = Counts;

    fn run(&mut self, circuits: &[Circuit], shots: u64) -> Result<Vec<Counts>> {
        let batch = self.batch;
        self.batch += 1;
        fs::create_dir_all(&self.dir)
            .map_err(|e| Error::Executor(format!("cannot create {}: {e}", self.dir.display())))?;
        let body = serde_json::to_string(&BatchFile {
            shots,
            circuits: circuits.to_vec(),
        })?;
        let out = self.batch_path(batch);
        fs::write(&out, body)
            .map_err(|e| Error::Executor(format!("cannot write {}: {e}", out.display())))?;
        let path = self.counts_path(batch);
        let text = fs::read_to_string(&path).map_err(|_| {
            Error::Executor(format!(
                "wrote {}; place counts for it at {}",
                out.display(),
                path.display()
            ))
        })?;
        let maps: Vec<BTreeMap<String, u64>> = serde_json::from_str(&text)
            .map_err(|e| Error::Executor(format!("{}: {e}", path.display())))?;
        if maps.len() != circuits.len() {
            return Err(Error::Executor(format!(
                "{} holds {} count tables for {} circuits",
                path.display(),
                maps.len(),
                circuits.len()
            )));
        }
        maps.iter()
            .zip(circuits)
            .map(|(m, c)| {
                let counts = Counts::from_bitstring_map(m)
                    .map_err(|e| Error::Executor(format!("{}: {e}", path.display())))?;
                if !m.is_empty() && counts.n_qubits != c.n_qubits {
                    return Err(Error::Executor(format!(
                        "{}: bitstrings of length {} for a {}-qubit circuit",
                        path.display(),
                        counts.n_qubits,
                        c.n_qubits
                    )));
                }
                Ok(Counts {
                    n_qubits: c.n_qubits,
                    counts: counts.counts,
                })
            })
            .collect()
    }
}
