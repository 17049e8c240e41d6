//! Sparse Pauli-Lindblad noise models and the simulator's ground-truth noise spec.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clifford::{CliffordLayer, LayerId};
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::real::Real;

/// Noise attached to one Clifford layer:
/// `Λ = ∏_k (w_k·id + (1 - w_k)·P_k · P_k)` with `w_k = (1 + e^{-2λ_k}) / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseNoiseModel<R> {
    pub layer_id: LayerId,
    terms: Vec<PauliString>,
    rates: Vec<R>,
}

impl<R: Real> SparseNoiseModel<R> {
    pub fn new(layer_id: LayerId, terms: Vec<PauliString>, rates: Vec<R>) -> Result<Self> {
        if terms.len() != rates.len() {
            return Err(Error::Dimension {
                expected: terms.len(),
                found: rates.len(),
            });
        }
        if let Some(first) = terms.first() {
            if let Some(bad) = terms.iter().find(|t| t.n_qubits() != first.n_qubits()) {
                return Err(Error::Dimension {
                    expected: first.n_qubits(),
                    found: bad.n_qubits(),
                });
            }
        }
        if let Some((t, r)) = terms
            .iter()
            .zip(&rates)
            .find(|(_, r)| !(r.is_finite() && **r >= R::zero()))
        {
            return Err(Error::Argument(format!(
                "rate for {t} must be finite and non-negative, got {r}"
            )));
        }
        Ok(Self {
            layer_id,
            terms,
            rates,
        })
    }

    /// Model with every rate set to zero.
    pub fn noiseless(layer_id: LayerId, terms: Vec<PauliString>) -> Self {
        let rates = vec![R::zero(); terms.len()];
        Self {
            layer_id,
            terms,
            rates,
        }
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn rates(&self) -> &[R] {
        &self.rates
    }

    pub fn n_qubits(&self) -> Option<usize> {
        self.terms.first().map(PauliString::n_qubits)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, R)> + '_ {
        self.terms.iter().zip(self.rates.iter().copied())
    }

    /// Probability of *not* applying each generator Pauli, `w_k`.
    pub fn weights(&self) -> Vec<R> {
        self.rates.iter().map(|&l| lindblad_weight(l)).collect()
    }

    pub fn total_rate(&self) -> R {
        self.rates.iter().copied().sum()
    }

    /// Pauli fidelity `f_a = exp(-2 Σ_{k: {P_a, P_k} = 0} λ_k)`.
    pub fn fidelity(&self, pauli: &PauliString) -> R {
        let s: R = self
            .iter()
            .filter(|(t, _)| t.anticommutes_unchecked(pauli))
            .map(|(_, r)| r)
            .sum();
        (-(s + s)).exp()
    }

    /// Fidelities of every Pauli on the register, in [`PauliString::all`] order.
    pub fn ptm_diagonal(&self, n_qubits: usize) -> Vec<R> {
        PauliString::all(n_qubits).map(|p| self.fidelity(&p)).collect()
    }
}

#[inline]
pub fn lindblad_weight<R: Real>(rate: R) -> R {
    let two = R::one() + R::one();
    (R::one() + (-(rate * two)).exp()) / two
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRate {
    pub pauli: PauliString,
    pub lambda: f64,
}

impl<R: Real> SparseNoiseModel<R> {
    pub fn to_records(&self) -> Vec<TermRate> {
        self.iter()
            .map(|(p, r)| TermRate {
                pauli: *p,
                lambda: r.to_f64_lossy(),
            })
            .collect()
    }

    pub fn from_records(layer_id: LayerId, records: &[TermRate]) -> Result<Self> {
        Self::new(
            layer_id,
            records.iter().map(|r| r.pauli).collect(),
            records.iter().map(|r| R::of(r.lambda)).collect(),
        )
    }
}

/// Simulator ground truth: per-layer Pauli noise, optional amplitude damping
/// applied after every Clifford layer, and per-qubit readout flips.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec<R> {
    pub n_qubits: usize,
    pub layers: BTreeMap<LayerId, SparseNoiseModel<R>>,
    /// Amplitude-damping probability per qubit.
    pub damping: Option<Vec<R>>,
    /// `(p01, p10)` per qubit: probability of reading 1 given 0 and 0 given 1.
    pub readout: Option<Vec<(R, R)>>,
}

impl<R: Real> NoiseSpec<R> {
    pub fn noiseless(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            layers: BTreeMap::new(),
            damping: None,
            readout: None,
        }
    }

    pub fn with_layer(mut self, model: SparseNoiseModel<R>) -> Self {
        self.layers.insert(model.layer_id, model);
        self
    }

    pub fn with_damping(mut self, p: Vec<R>) -> Self {
        self.damping = Some(p);
        self
    }

    pub fn with_readout(mut self, flips: Vec<(R, R)>) -> Self {
        self.readout = Some(flips);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |v: R| v >= R::zero() && v <= R::one();
        if let Some(d) = &self.damping {
            if d.len() != self.n_qubits || !d.iter().all(|&p| prob(p)) {
                return Err(Error::Validation(
                    "damping needs one probability in [0,1] per qubit".into(),
                ));
            }
        }
        if let Some(r) = &self.readout {
            if r.len() != self.n_qubits || !r.iter().all(|&(a, b)| prob(a) && prob(b)) {
                return Err(Error::Validation(
                    "readout needs one (p01, p10) pair in [0,1] per qubit".into(),
                ));
            }
        }
        for m in self.layers.values() {
            if m.n_qubits().is_some_and(|n| n != self.n_qubits) {
                return Err(Error::Dimension {
                    expected: self.n_qubits,
                    found: m.n_qubits().unwrap_or(0),
                });
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct LayerNoiseRecord {
    layer: CliffordLayer,
    terms: Vec<TermRate>,
}

#[derive(Serialize, Deserialize)]
struct NoiseSpecRecord {
    n_qubits: usize,
    #[serde(default)]
    layers: Vec<LayerNoiseRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    damping: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    readout: Option<Vec<(f64, f64)>>,
}

impl NoiseSpec<f64> {
    /// JSON form keyed by explicit layer gate lists (ids are recomputed on load).
    pub fn to_json(&self, layers: &[CliffordLayer]) -> Result<String> {
        let by_id: BTreeMap<LayerId, &CliffordLayer> = layers.iter().map(|l| (l.id(), l)).collect();
        let records = self
            .layers
            .values()
            .map(|m| {
                let layer = by_id.get(&m.layer_id).ok_or_else(|| {
                    Error::Coverage(format!("no gate list supplied for layer {}", m.layer_id))
                })?;
                Ok(LayerNoiseRecord {
                    layer: (*layer).clone(),
                    terms: m.to_records(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(serde_json::to_string_pretty(&NoiseSpecRecord {
            n_qubits: self.n_qubits,
            layers: records,
            damping: self.damping.clone(),
            readout: self.readout.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: NoiseSpecRecord = serde_json::from_str(s)?;
        let mut spec = NoiseSpec::noiseless(r.n_qubits);
        for l in r.layers {
            let id = l.layer.id();
            spec.layers
                .insert(id, SparseNoiseModel::from_records(id, &l.terms)?);
        }
        spec.damping = r.damping;
        spec.readout = r.readout;
        spec.validate()?;
        Ok(spec)
    }
}
