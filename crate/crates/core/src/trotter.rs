//! First-order Trotter circuits for the one-dimensional transverse-field Ising chain.
//!
//! One step applies `RX(-2 h dt)` on every qubit, then `CX · RZ(2 J dt) · CX`
//! on the even bonds `(0,1), (2,3), …` followed by the odd bonds
//! `(1,2), (3,4), …`, with the `RZ` on the bond's second qubit. The step
//! realizes `exp(-i dt H)` to first order for `H = J Σ Z_j Z_{j+1} - h Σ X_j`.

use crate::circuit::{Circuit, Gate};
use crate::pauli::{Pauli, PauliString};

pub fn trotter_step(n_qubits: usize, h: f64, j: f64, dt: f64) -> Vec<Gate> {
    let mut gates: Vec<Gate> = (0..n_qubits).map(|q| Gate::Rx(q, -2.0 * h * dt)).collect();
    for parity in [0, 1] {
        let bonds: Vec<usize> = (parity..n_qubits.saturating_sub(1)).step_by(2).collect();
        gates.extend(bonds.iter().map(|&a| Gate::Cx(a, a + 1)));
        gates.extend(bonds.iter().map(|&a| Gate::Rz(a + 1, 2.0 * j * dt)));
        gates.extend(bonds.iter().map(|&a| Gate::Cx(a, a + 1)));
    }
    gates
}

/// `steps` repetitions of [`trotter_step`] starting from `|0…0⟩`.
pub fn trotter_circuit(n_qubits: usize, steps: usize, h: f64, j: f64, dt: f64) -> Circuit {
    let step = trotter_step(n_qubits, h, j, dt);
    let mut c = Circuit::new(n_qubits);
    for _ in 0..steps {
        c.gates.extend_from_slice(&step);
    }
    c
}

/// Single-qubit `Z` observables whose average is the magnetization.
pub fn magnetization_observables(n_qubits: usize) -> Vec<PauliString> {
    (0..n_qubits)
        .map(|q| PauliString::single(n_qubits, q, Pauli::Z))
        .collect()
}
