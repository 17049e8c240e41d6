//! Pauli noise tomography of Clifford layers.
//!
//! Pair benchmarks repeat a twirled layer an even number of times between a
//! product-basis preparation and measurement; every model term diagonal in
//! that basis decays as `a·e^{-b d}` with `e^{-b} = √(f_a f_a')`. Single-depth
//! benchmarks prepare an eigenstate of `P_a`, apply the layer once and measure
//! `P_a'`, separating the two members of a degenerate pair. The sparse model
//! is then fitted by non-negative least squares on the log fidelities.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::circuit::{Circuit, Gate};
use crate::clifford::{CliffordLayer, LayerId};
use crate::density::index_mask;
use crate::dressed::{distinct_clifford_layers, parse_dressed};
use crate::error::{Error, Result};
use crate::executor::{derive_seed, Executor, Outcomes};
use crate::linalg::Matrix;
use crate::nnls::nnls;
use crate::noise::{SparseNoiseModel, TermRate};
use crate::pauli::{enumerate_model_terms, Pauli, PauliString};
use crate::stats::{summarize, weighted_line, Summary};

const LETTERS: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyConfig {
    pub depths: Vec<usize>,
    /// Pauli-twirl samples per pair basis and depth.
    pub samples: usize,
    /// Twirl samples per single-depth basis.
    pub single_samples: usize,
    pub shots: u64,
    pub seed: u64,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            depths: vec![2, 4, 8, 16],
            samples: 32,
            single_samples: 200,
            shots: 250,
            seed: 0,
        }
    }
}

impl TomographyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depths.is_empty() {
            return Err(Error::Argument("at least one depth is required".into()));
        }
        if let Some(d) = self.depths.iter().find(|&&d| d == 0 || d % 2 == 1) {
            return Err(Error::Argument(format!("depth {d} must be even and positive")));
        }
        if self.samples == 0 || self.single_samples == 0 || self.shots == 0 {
            return Err(Error::Argument("sample and shot counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BenchmarkKind {
    Pair { depth: usize },
    Single,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkInstance {
    pub layer_id: LayerId,
    pub kind: BenchmarkKind,
    pub prep_basis: PauliString,
    pub meas_basis: PauliString,
    /// One twirl Pauli per layer application.
    pub twirls: Vec<PauliString>,
    /// Qubits flipped by an `X` right before readout (bit `q` = qubit `q`).
    pub readout_twirl: u64,
    pub circuit: Circuit,
}

/// Preparation and measurement bases for a degeneracy-lifting run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SingleBasis {
    pub prep: PauliString,
    pub meas: PauliString,
}

/// Gates preparing the +1 eigenstate of every basis letter from `|0…0⟩`.
pub fn basis_prep_gates(basis: &PauliString) -> Vec<Gate> {
    let mut gates = Vec::new();
    for q in 0..basis.n_qubits() {
        match basis.letter(q) {
            Pauli::X => gates.push(Gate::H(q)),
            Pauli::Y => gates.extend([Gate::H(q), Gate::S(q)]),
            _ => {}
        }
    }
    gates
}

/// Gates rotating every basis letter onto `Z` before readout.
pub fn basis_measure_gates(basis: &PauliString) -> Vec<Gate> {
    let mut gates = Vec::new();
    for q in 0..basis.n_qubits() {
        match basis.letter(q) {
            Pauli::X => gates.push(Gate::H(q)),
            Pauli::Y => gates.extend([Gate::Sdg(q), Gate::H(q)]),
            _ => {}
        }
    }
    gates
}

pub fn pauli_gates(p: &PauliString) -> impl Iterator<Item = Gate> + '_ {
    (0..p.n_qubits()).filter_map(move |q| Gate::pauli(q, p.letter(q)))
}

pub fn random_pauli(n_qubits: usize, rng: &mut impl Rng) -> PauliString {
    let mask = if n_qubits == 64 { u64::MAX } else { (1u64 << n_qubits) - 1 };
    PauliString::from_bits(n_qubits, rng.gen::<u64>() & mask, rng.gen::<u64>() & mask)
        .expect("masked bits fit the register")
}

pub fn random_readout_twirl(n_qubits: usize, rng: &mut impl Rng) -> u64 {
    let mask = if n_qubits == 64 { u64::MAX } else { (1u64 << n_qubits) - 1 };
    rng.gen::<u64>() & mask
}

fn connectivity(terms: &[PauliString]) -> Vec<(usize, usize)> {
    let edges: BTreeSet<(usize, usize)> = terms
        .iter()
        .filter(|t| t.weight() == 2)
        .map(|t| {
            let s = t.support();
            (s[0], s[1])
        })
        .collect();
    edges.into_iter().collect()
}

/// Product bases in which every term is diagonal somewhere.
///
/// With a proper colouring of the connectivity graph in at most four colours,
/// the rows `(a, b, a+b, a+2b) mod 3` assign letters so that every pair of
/// distinct colours sees all nine letter pairs: nine bases for any such graph,
/// three without edges. Other cases fall back to a greedy cover.
pub fn select_pair_bases(terms: &[PauliString], n_qubits: usize) -> Vec<PauliString> {
    if n_qubits == 0 {
        return Vec::new();
    }
    let edges = connectivity(terms);
    let mut colour = vec![usize::MAX; n_qubits];
    for q in 0..n_qubits {
        let used: BTreeSet<usize> = edges
            .iter()
            .filter_map(|&(a, b)| match (a == q, b == q) {
                (true, _) => Some(colour[b]),
                (_, true) => Some(colour[a]),
                _ => None,
            })
            .collect();
        colour[q] = (0..).find(|c| !used.contains(c)).unwrap_or(0);
    }
    let wide = terms.iter().any(|t| t.weight() > 2);
    let bases = if colour.iter().all(|&c| c < 4) && !wide {
        let mut bases = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                let row = [a, b, (a + b) % 3, (a + 2 * b) % 3];
                let letters: Vec<Pauli> = colour.iter().map(|&c| LETTERS[row[c]]).collect();
                let basis = PauliString::from_letters(&letters);
                if !bases.contains(&basis) {
                    bases.push(basis);
                }
            }
        }
        bases
    } else {
        greedy_cover(terms, n_qubits)
    };
    // Keep only bases that cover something.
    bases
        .into_iter()
        .filter(|b| terms.is_empty() || terms.iter().any(|t| t.is_diagonal_in(b)))
        .collect()
}

fn greedy_cover(terms: &[PauliString], n_qubits: usize) -> Vec<PauliString> {
    let mut uncovered: Vec<PauliString> = terms.iter().filter(|t| !t.is_identity()).copied().collect();
    let mut bases = Vec::new();
    while !uncovered.is_empty() {
        let mut partial = PauliString::identity(n_qubits);
        for t in &uncovered {
            if t.qubitwise_compatible(&partial) {
                partial = partial.product(&PauliString::from_bits(n_qubits, t.x_bits() & !partial.support_mask(), t.z_bits() & !partial.support_mask()).expect("same register"));
            }
        }
        for q in 0..n_qubits {
            if partial.letter(q) == Pauli::I {
                partial.set(q, Pauli::Z);
            }
        }
        uncovered.retain(|t| !t.is_diagonal_in(&partial));
        bases.push(partial);
    }
    bases
}

/// Pairs `(P_a, P_a')` of distinct model terms exchanged by the layer, `P_a < P_a'`.
pub fn degenerate_pairs(layer: &CliffordLayer, terms: &[PauliString]) -> Result<Vec<(PauliString, PauliString)>> {
    let set: BTreeSet<&PauliString> = terms.iter().collect();
    let mut pairs = BTreeSet::new();
    for t in terms {
        let c = layer.conjugate(t)?;
        if c != *t && set.contains(&c) {
            pairs.insert(if *t < c { (*t, c) } else { (c, *t) });
        }
    }
    Ok(pairs.into_iter().collect())
}

/// Preparation/measurement basis pairs covering one orientation of every
/// degenerate pair, packed greedily.
pub fn select_single_bases(layer: &CliffordLayer, terms: &[PauliString]) -> Result<Vec<SingleBasis>> {
    let n = layer.n_qubits();
    let pairs = degenerate_pairs(layer, terms)?;
    let mut partial: Vec<(PauliString, PauliString)> = Vec::new();
    let merge = |a: &PauliString, b: &PauliString| -> PauliString {
        let free = !a.support_mask();
        a.product(&PauliString::from_bits(n, b.x_bits() & free, b.z_bits() & free).expect("same register"))
    };
    for (a, b) in pairs {
        let slot = partial.iter().position(|(p, m)| {
            (p.qubitwise_compatible(&a) && m.qubitwise_compatible(&b))
                || (p.qubitwise_compatible(&b) && m.qubitwise_compatible(&a))
        });
        match slot {
            Some(i) => {
                let (p, m) = partial[i];
                partial[i] = if p.qubitwise_compatible(&a) && m.qubitwise_compatible(&b) {
                    (merge(&p, &a), merge(&m, &b))
                } else {
                    (merge(&p, &b), merge(&m, &a))
                };
            }
            None => partial.push((a, b)),
        }
    }
    let fill = |mut p: PauliString| {
        for q in 0..n {
            if p.letter(q) == Pauli::I {
                p.set(q, Pauli::Z);
            }
        }
        p
    };
    Ok(partial
        .into_iter()
        .map(|(p, m)| SingleBasis {
            prep: fill(p),
            meas: fill(m),
        })
        .collect())
}

fn check_benchmarkable(layer: &CliffordLayer) -> Result<()> {
    if layer.is_empty() {
        return Err(Error::Argument("cannot benchmark an empty Clifford layer".into()));
    }
    if layer.gates().iter().any(|g| g.qubits.len() != 2) {
        return Err(Error::Argument(format!(
            "layer {layer} mixes single-qubit gates into the Clifford part"
        )));
    }
    Ok(())
}

/// Twirled circuit: prep(B) → [T_r, C, T_r'] × d → measure(B') → readout twirl.
fn benchmark_circuit(
    layer: &CliffordLayer,
    prep: &PauliString,
    meas: &PauliString,
    twirls: &[PauliString],
    readout_twirl: u64,
) -> Result<Circuit> {
    let n = layer.n_qubits();
    let mut c = Circuit::new(n);
    c.gates.extend(basis_prep_gates(prep));
    let mut frame = PauliString::identity(n);
    for t in twirls {
        c.gates.extend(pauli_gates(&frame.product(t)));
        c.gates.extend(layer.circuit_gates());
        frame = layer.conjugate(t)?;
    }
    c.gates.extend(pauli_gates(&frame));
    c.gates.extend(basis_measure_gates(meas));
    c.gates.extend((0..n).filter(|q| readout_twirl >> q & 1 == 1).map(Gate::X));
    Ok(c)
}

/// Pair and single-depth benchmark circuits for one layer.
pub fn generate_benchmarks(
    layer: &CliffordLayer,
    terms: &[PauliString],
    config: &TomographyConfig,
) -> Result<Vec<BenchmarkInstance>> {
    config.validate()?;
    check_benchmarkable(layer)?;
    let n = layer.n_qubits();
    let id = layer.id();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, id.0, 0));
    let mut out = Vec::new();
    for basis in select_pair_bases(terms, n) {
        for &depth in &config.depths {
            for _ in 0..config.samples {
                let twirls: Vec<PauliString> = (0..depth).map(|_| random_pauli(n, &mut rng)).collect();
                let readout_twirl = random_readout_twirl(n, &mut rng);
                let circuit = benchmark_circuit(layer, &basis, &basis, &twirls, readout_twirl)?;
                out.push(BenchmarkInstance {
                    layer_id: id,
                    kind: BenchmarkKind::Pair { depth },
                    prep_basis: basis,
                    meas_basis: basis,
                    twirls,
                    readout_twirl,
                    circuit,
                });
            }
        }
    }
    for sb in select_single_bases(layer, terms)? {
        for _ in 0..config.single_samples {
            let twirls = vec![random_pauli(n, &mut rng)];
            let readout_twirl = random_readout_twirl(n, &mut rng);
            let circuit = benchmark_circuit(layer, &sb.prep, &sb.meas, &twirls, readout_twirl)?;
            out.push(BenchmarkInstance {
                layer_id: id,
                kind: BenchmarkKind::Single,
                prep_basis: sb.prep,
                meas_basis: sb.meas,
                twirls,
                readout_twirl,
                circuit,
            });
        }
    }
    Ok(out)
}

/// Parity expectation of `term` from outcomes measured in `basis`, undoing
/// the readout twirl.
pub fn parity_expectation(
    outcomes: &impl Outcomes,
    basis: &PauliString,
    readout_twirl: u64,
    term: &PauliString,
) -> Result<f64> {
    if !term.is_diagonal_in(basis) {
        return Err(Error::Basis {
            observable: term.to_string(),
            basis: basis.to_string(),
        });
    }
    let n = term.n_qubits();
    let mask = index_mask(term.support_mask(), n);
    let flip = (readout_twirl & term.support_mask()).count_ones() % 2 == 1;
    let total = outcomes.total();
    if total <= 0.0 {
        return Err(Error::Executor("empty outcome table".into()));
    }
    let s: f64 = outcomes
        .entries()
        .iter()
        .map(|&(i, w)| if (i & mask).count_ones() % 2 == 1 { -w } else { w })
        .sum();
    let e = s / total;
    Ok(if flip { -e } else { e })
}

pub fn estimate_expectation(
    instance: &BenchmarkInstance,
    outcomes: &impl Outcomes,
    term: &PauliString,
) -> Result<f64> {
    parity_expectation(outcomes, &instance.meas_basis, instance.readout_twirl, term)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairFit {
    /// SPAM coefficient.
    pub a: f64,
    /// Decay per layer application; `e^{-b} = √(f_a f_a')`.
    pub b: f64,
    pub r_squared: f64,
}

/// Fits `mean(d) = a·e^{-b d}` on the log scale. Points are `(depth, mean,
/// stderr)`; non-positive means are dropped, and inverse-variance weights are
/// used when every retained point has a non-negligible standard error.
pub fn fit_pair_decay(points: &[(f64, f64, f64)]) -> Result<PairFit> {
    let usable: Vec<&(f64, f64, f64)> = points.iter().filter(|p| p.1 > 0.0).collect();
    let distinct: BTreeSet<u64> = usable.iter().map(|p| p.0.to_bits()).collect();
    if distinct.len() < 2 {
        return Err(Error::Fit {
            context: "pair decay".into(),
            reason: format!("{} usable depths, need at least 2", distinct.len()),
        });
    }
    let x: Vec<f64> = usable.iter().map(|p| p.0).collect();
    let y: Vec<f64> = usable.iter().map(|p| p.1.ln()).collect();
    // A numerically zero standard error would swamp the other depths.
    let w: Vec<f64> = if usable.iter().all(|p| p.2 > 1e-9 * p.1) {
        usable.iter().map(|p| (p.1 / p.2).powi(2)).collect()
    } else {
        vec![1.0; usable.len()]
    };
    let line = weighted_line(&x, &y, &w).ok_or_else(|| Error::Fit {
        context: "pair decay".into(),
        reason: "degenerate depths".into(),
    })?;
    let (mut a, mut b) = (line.intercept.exp(), -line.slope);
    if b < 0.0 {
        b = 0.0;
        let sw: f64 = w.iter().sum();
        a = (y.iter().zip(&w).map(|(v, k)| v * k).sum::<f64>() / sw).exp();
    }
    Ok(PairFit {
        a,
        b,
        r_squared: line.r_squared,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub term: PauliString,
    /// `P_a'` with `C P_a C† = ±P_a'`.
    pub partner: PauliString,
    pub partner_negative: bool,
    /// Both members are model terms and differ.
    pub degenerate: bool,
    pub depths: BTreeMap<usize, Summary>,
    pub fit: Option<PairFit>,
    /// Single-depth estimates of this term's own fidelity (sign removed).
    pub single: Option<Summary>,
    /// Resolved fidelity `f_a`; for a partner outside the model this is the
    /// pair value `√(f_a f_a')`.
    pub fidelity: f64,
    pub clamped: bool,
}

impl TermRecord {
    fn pair(&self) -> Result<f64> {
        self.fit.map(|f| (-f.b).exp()).ok_or_else(|| Error::Fit {
            context: self.term.to_string(),
            reason: "no pair decay fit".into(),
        })
    }
}

/// Resolves `f_a` for every record from the pair fits and single-depth data.
pub fn resolve_fidelities(records: &mut [TermRecord]) -> Result<()> {
    let index: BTreeMap<PauliString, usize> = records.iter().enumerate().map(|(i, r)| (r.term, i)).collect();
    for i in 0..records.len() {
        if !records[i].degenerate {
            records[i].fidelity = records[i].pair()?;
            continue;
        }
        let j = index[&records[i].partner];
        if j < i {
            continue;
        }
        // Both members decay at the same pair rate; use both fits.
        let product = records[i].pair()? * records[j].pair()?;
        // Measure whichever member has single-depth data; the other follows from the pair.
        let (measured, other) = if records[j].single.is_some() {
            (j, i)
        } else if records[i].single.is_some() {
            (i, j)
        } else {
            return Err(Error::Coverage(format!(
                "no single-depth data for degenerate pair {} / {}",
                records[i].term, records[j].term
            )));
        };
        let spam = records[measured].fit.map(|f| f.a).unwrap_or(1.0);
        if spam <= 0.0 {
            return Err(Error::Mitigation(format!(
                "non-positive SPAM coefficient for {}",
                records[measured].term
            )));
        }
        let raw = records[measured].single.expect("checked above").mean / spam;
        let f = raw.clamp(product, 1.0);
        let clamped = f != raw;
        if clamped {
            warn!(
                "fidelity of {} clamped from {raw:.6} to {f:.6} to keep f_a f_a' <= 1",
                records[measured].term
            );
        }
        records[measured].fidelity = f;
        records[other].fidelity = product / f;
        records[measured].clamped = clamped;
        records[other].clamped = clamped;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSolve {
    pub model: SparseNoiseModel<f64>,
    pub residual: f64,
}

/// Fits `λ ≥ 0` to `(M₁ + M₂) λ = −ln b`, one row per record.
pub fn solve_noise_model(layer_id: LayerId, terms: &[PauliString], records: &[TermRecord]) -> Result<ModelSolve> {
    let sp = |a: &PauliString, k: &PauliString| if a.anticommutes_unchecked(k) { 1.0 } else { 0.0 };
    let mut rows = Vec::with_capacity(records.len());
    let mut rhs = Vec::with_capacity(records.len());
    for r in records {
        let value = r.fidelity;
        if !(value > 0.0) {
            return Err(Error::Fit {
                context: r.term.to_string(),
                reason: format!("non-positive fidelity {value}"),
            });
        }
        let second = if r.degenerate || r.partner == r.term { &r.term } else { &r.partner };
        rows.push(terms.iter().map(|k| sp(&r.term, k) + sp(second, k)).collect::<Vec<f64>>());
        rhs.push(-value.ln());
    }
    let m = Matrix::from_rows(&rows);
    let sol = nnls(&m, &rhs)?;
    Ok(ModelSolve {
        model: SparseNoiseModel::new(layer_id, terms.to_vec(), sol.x)?,
        residual: sol.residual,
    })
}

/// Learned noise for every benchmarked layer plus per-qubit readout SPAM.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NoiseDataFrame {
    pub layers: BTreeMap<LayerId, (CliffordLayer, SparseNoiseModel<f64>)>,
    pub spam: BTreeMap<usize, f64>,
}

#[derive(Serialize, Deserialize)]
struct LayerEntry {
    layer: CliffordLayer,
    terms: Vec<TermRate>,
}

impl NoiseDataFrame {
    pub fn model(&self, id: LayerId) -> Option<&SparseNoiseModel<f64>> {
        self.layers.get(&id).map(|(_, m)| m)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut map = Map::new();
        for (id, (layer, model)) in &self.layers {
            map.insert(
                id.to_string(),
                serde_json::to_value(LayerEntry {
                    layer: layer.clone(),
                    terms: model.to_records(),
                })?,
            );
        }
        let spam: Map<String, Value> = self.spam.iter().map(|(q, v)| (q.to_string(), json!(v))).collect();
        map.insert("spam".into(), Value::Object(spam));
        Ok(serde_json::to_string_pretty(&Value::Object(map))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let Value::Object(map) = serde_json::from_str::<Value>(s)? else {
            return Err(Error::Parse("noise model must be a JSON object".into()));
        };
        let mut frame = NoiseDataFrame::default();
        for (key, value) in map {
            if key == "spam" {
                let spam: BTreeMap<String, f64> = serde_json::from_value(value)?;
                for (q, v) in spam {
                    let q: usize = q.parse().map_err(|_| Error::Parse(format!("bad qubit key `{q}`")))?;
                    frame.spam.insert(q, v);
                }
                continue;
            }
            let id: LayerId = key.parse()?;
            let entry: LayerEntry = serde_json::from_value(value)?;
            if entry.layer.id() != id {
                return Err(Error::Validation(format!(
                    "layer key {id} does not match its gate list ({})",
                    entry.layer.id()
                )));
            }
            let model = SparseNoiseModel::from_records(id, &entry.terms)?;
            frame.layers.insert(id, (entry.layer, model));
        }
        Ok(frame)
    }
}

/// Tomography results for one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerTomography {
    pub layer: CliffordLayer,
    pub records: Vec<TermRecord>,
    pub solve: ModelSolve,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TomographyResult {
    pub frame: NoiseDataFrame,
    pub layers: Vec<LayerTomography>,
}

impl TomographyResult {
    /// Per-term decay data: one row per depth with the term's fit repeated.
    pub fn decay_csv(&self) -> String {
        let mut s = String::from("layer_id,term,partner,depth,mean,stderr,count,a,b,r_squared,fidelity\n");
        for l in &self.layers {
            for r in &l.records {
                let (a, b, r2) = r.fit.map_or((f64::NAN, f64::NAN, f64::NAN), |f| (f.a, f.b, f.r_squared));
                for (d, m) in &r.depths {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{:.10},{:.10},{},{:.10},{:.10},{:.10},{:.10}",
                        l.layer.id(),
                        r.term,
                        r.partner,
                        d,
                        m.mean,
                        m.stderr,
                        m.count,
                        a,
                        b,
                        r2,
                        r.fidelity
                    );
                }
            }
        }
        s
    }
}

/// Tomography over a set of layers sharing one set of model terms.
#[derive(Clone, Debug)]
pub struct TomographyExperiment {
    pub layers: Vec<CliffordLayer>,
    pub terms: Vec<PauliString>,
    pub config: TomographyConfig,
}

impl TomographyExperiment {
    pub fn new(layers: Vec<CliffordLayer>, terms: Vec<PauliString>, config: TomographyConfig) -> Result<Self> {
        config.validate()?;
        for l in &layers {
            check_benchmarkable(l)?;
            if let Some(t) = terms.iter().find(|t| t.n_qubits() != l.n_qubits()) {
                return Err(Error::Dimension {
                    expected: l.n_qubits(),
                    found: t.n_qubits(),
                });
            }
        }
        Ok(Self { layers, terms, config })
    }

    /// Benchmarks every distinct Clifford layer of `circuits`.
    pub fn from_circuits(circuits: &[Circuit], edges: &[(usize, usize)], config: TomographyConfig) -> Result<Self> {
        let n = circuits
            .first()
            .map(|c| c.n_qubits)
            .ok_or_else(|| Error::Argument("no circuits given".into()))?;
        let dressed = circuits.iter().map(parse_dressed).collect::<Result<Vec<_>>>()?;
        let layers = distinct_clifford_layers(&dressed);
        Self::new(layers, enumerate_model_terms(edges, n), config)
    }

    pub fn generate(&self) -> Result<Vec<BenchmarkInstance>> {
        let mut all = Vec::new();
        for l in &self.layers {
            all.extend(generate_benchmarks(l, &self.terms, &self.config)?);
        }
        Ok(all)
    }

    pub fn run<E: Executor>(&self, executor: &mut E) -> Result<TomographyResult> {
        let instances = self.generate()?;
        let circuits: Vec<Circuit> = instances.iter().map(|i| i.circuit.clone()).collect();
        let outcomes = executor.run(&circuits, self.config.shots)?;
        self.analyze(&instances, &outcomes)
    }

    pub fn analyze<O: Outcomes>(&self, instances: &[BenchmarkInstance], outcomes: &[O]) -> Result<TomographyResult> {
        if instances.len() != outcomes.len() {
            return Err(Error::Dimension {
                expected: instances.len(),
                found: outcomes.len(),
            });
        }
        let mut frame = NoiseDataFrame::default();
        let mut layers = Vec::new();
        let mut spam_acc: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for layer in &self.layers {
            let id = layer.id();
            let mut records = self.layer_records(layer, instances, outcomes)?;
            resolve_fidelities(&mut records)?;
            let solve = solve_noise_model(id, &self.terms, &records)?;
            for r in records.iter().filter(|r| r.term.weight() == 1) {
                if let Some(f) = r.fit {
                    spam_acc.entry(r.term.support()[0]).or_default().push(f.a);
                }
            }
            frame.layers.insert(id, (layer.clone(), solve.model.clone()));
            layers.push(LayerTomography {
                layer: layer.clone(),
                records,
                solve,
            });
        }
        frame.spam = spam_acc
            .into_iter()
            .map(|(q, v)| (q, v.iter().sum::<f64>() / v.len() as f64))
            .collect();
        Ok(TomographyResult { frame, layers })
    }

    fn layer_records<O: Outcomes>(
        &self,
        layer: &CliffordLayer,
        instances: &[BenchmarkInstance],
        outcomes: &[O],
    ) -> Result<Vec<TermRecord>> {
        let id = layer.id();
        let model: BTreeSet<&PauliString> = self.terms.iter().collect();
        let mut records = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let (partner, partner_negative) = layer.conjugate_signed(t)?;
            records.push(TermRecord {
                term: *t,
                partner,
                partner_negative,
                degenerate: partner != *t && model.contains(&partner),
                depths: BTreeMap::new(),
                fit: None,
                single: None,
                fidelity: f64::NAN,
                clamped: false,
            });
        }
        let mut pair_values: Vec<BTreeMap<usize, Vec<f64>>> = vec![BTreeMap::new(); records.len()];
        let mut single_values: Vec<Vec<f64>> = vec![Vec::new(); records.len()];
        for (inst, out) in instances.iter().zip(outcomes).filter(|(i, _)| i.layer_id == id) {
            for (k, r) in records.iter().enumerate() {
                match inst.kind {
                    BenchmarkKind::Pair { depth } => {
                        if r.term.is_diagonal_in(&inst.meas_basis) {
                            let e = estimate_expectation(inst, out, &r.term)?;
                            pair_values[k].entry(depth).or_default().push(e);
                        }
                    }
                    BenchmarkKind::Single => {
                        // Record k measured after preparing its preimage under the layer.
                        let (pre, negative) = layer.conjugate_signed(&r.term)?;
                        if r.degenerate && pre.is_diagonal_in(&inst.prep_basis) && r.term.is_diagonal_in(&inst.meas_basis) {
                            let e = estimate_expectation(inst, out, &r.term)?;
                            single_values[k].push(if negative { -e } else { e });
                        }
                    }
                }
            }
        }
        for (k, r) in records.iter_mut().enumerate() {
            r.depths = pair_values[k].iter().map(|(&d, v)| (d, summarize(v))).collect();
            let points: Vec<(f64, f64, f64)> = r
                .depths
                .iter()
                .map(|(&d, s)| (d as f64, s.mean, s.stderr))
                .collect();
            if points.is_empty() {
                return Err(Error::Coverage(format!("term {} is not measured by any pair basis", r.term)));
            }
            r.fit = Some(fit_pair_decay(&points).map_err(|e| Error::Fit {
                context: format!("term {} on layer {id}", r.term),
                reason: e.to_string(),
            })?);
            if !single_values[k].is_empty() {
                r.single = Some(summarize(&single_values[k]));
            }
        }
        Ok(records)
    }
}
