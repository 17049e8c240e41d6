//! Decomposition of circuits into dressed layers: a block of single-qubit
//! gates followed by a self-adjoint Clifford layer.
//!
//! The scan is greedy and left to right. Single-qubit gates accumulate; the
//! first two-qubit gate opens a Clifford layer, which absorbs further
//! two-qubit gates until one overlaps it, or a single-qubit gate lands on a
//! qubit it touches. Single-qubit gates on untouched qubits that arrive while
//! a layer is open are deferred to the next block, and a two-qubit gate on
//! such a qubit also closes the layer. Gates after the last Clifford layer
//! form a trailing Clifford-free layer.

use std::collections::BTreeMap;

use crate::circuit::{Circuit, Gate};
use crate::clifford::{CliffordLayer, LayerId};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DressedLayer {
    pub single_qubit_block: Vec<Gate>,
    pub clifford_layer: CliffordLayer,
    pub layer_id: LayerId,
}

impl DressedLayer {
    pub fn new(single_qubit_block: Vec<Gate>, clifford_layer: CliffordLayer) -> Self {
        let layer_id = clifford_layer.id();
        Self {
            single_qubit_block,
            clifford_layer,
            layer_id,
        }
    }

    /// True when the layer carries no entangling part (and hence no noise model).
    pub fn is_clifford_free(&self) -> bool {
        self.clifford_layer.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DressedCircuit {
    pub n_qubits: usize,
    pub layers: Vec<DressedLayer>,
    pub measure: Option<Vec<bool>>,
}

impl DressedCircuit {
    /// Flattens back into a plain circuit, layer by layer.
    ///
    /// Within a layer, gates that touch the previous layer or this layer's
    /// single-qubit block are emitted first, so that reparsing closes the
    /// previous layer at the same place.
    pub fn to_circuit(&self) -> Circuit {
        let mut gates = Vec::new();
        let mut previous = 0u64;
        for l in &self.layers {
            gates.extend_from_slice(&l.single_qubit_block);
            let singles = l
                .single_qubit_block
                .iter()
                .flat_map(|g| g.qubits())
                .fold(0u64, |m, q| m | 1 << q);
            let mut layer = l.clifford_layer.circuit_gates();
            layer.sort_by_key(|g| {
                let mask = g.qubits().iter().fold(0u64, |m, &q| m | 1 << q);
                mask & (previous | singles) == 0
            });
            gates.extend(layer);
            previous = l.clifford_layer.support_mask();
        }
        Circuit {
            n_qubits: self.n_qubits,
            gates,
            measure: self.measure.clone(),
        }
    }

    /// Layers that carry a noise model, in circuit order.
    pub fn noisy_layers(&self) -> impl Iterator<Item = &DressedLayer> {
        self.layers.iter().filter(|l| !l.is_clifford_free())
    }
}

/// Splits `circuit` into dressed layers.
pub fn parse_dressed(circuit: &Circuit) -> Result<DressedCircuit> {
    circuit.validate()?;
    let n = circuit.n_qubits;
    let mut layers = Vec::new();
    let mut block: Vec<Gate> = Vec::new();
    let mut open: Vec<Gate> = Vec::new();
    let mut touched = 0u64;
    // Singles seen while a layer is open, bound for the next block.
    let mut pending: Vec<Gate> = Vec::new();
    let mut pending_mask = 0u64;

    let mut close = |block: &mut Vec<Gate>, open: &mut Vec<Gate>| -> Result<()> {
        let cl = CliffordLayer::from_gates(n, open)?;
        layers.push(DressedLayer::new(std::mem::take(block), cl));
        open.clear();
        Ok(())
    };

    for gate in &circuit.gates {
        let mask = gate.qubits().iter().fold(0u64, |m, &q| m | 1 << q);
        if gate.is_two_qubit() {
            if !open.is_empty() && (mask & (touched | pending_mask)) != 0 {
                close(&mut block, &mut open)?;
                block = std::mem::take(&mut pending);
                pending_mask = 0;
                touched = 0;
            }
            if open.is_empty() {
                block.append(&mut pending);
                pending_mask = 0;
            }
            open.push(*gate);
            touched |= mask;
        } else {
            match gate {
                Gate::Rx(..)
                | Gate::Ry(..)
                | Gate::Rz(..)
                | Gate::H(_)
                | Gate::S(_)
                | Gate::Sdg(_)
                | Gate::X(_)
                | Gate::Y(_)
                | Gate::Z(_) => {}
                other => return Err(Error::UnsupportedGate(other.name().to_string())),
            }
            if open.is_empty() {
                block.push(*gate);
            } else if mask & touched != 0 {
                close(&mut block, &mut open)?;
                block = std::mem::take(&mut pending);
                block.push(*gate);
                pending_mask = 0;
                touched = 0;
            } else {
                pending.push(*gate);
                pending_mask |= mask;
            }
        }
    }
    if !open.is_empty() {
        close(&mut block, &mut open)?;
        block = pending;
    }
    if !block.is_empty() {
        close(&mut block, &mut open)?;
    }
    Ok(DressedCircuit {
        n_qubits: n,
        layers,
        measure: circuit.measure.clone(),
    })
}

/// Distinct non-empty Clifford layers across `circuits`, ordered by layer id.
pub fn distinct_clifford_layers(circuits: &[DressedCircuit]) -> Vec<CliffordLayer> {
    let mut set: BTreeMap<LayerId, CliffordLayer> = BTreeMap::new();
    for c in circuits {
        for l in c.noisy_layers() {
            set.entry(l.layer_id)
                .or_insert_with(|| l.clifford_layer.clone());
        }
    }
    set.into_values().collect()
}
