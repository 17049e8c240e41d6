//! Self-adjoint Clifford layers and their action on Pauli operators.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::pauli::{Pauli, PauliString};
use crate::real::Real;

/// Gate kinds allowed inside a Clifford layer. All of them are self-adjoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CliffordKind {
    Cx,
    Cz,
    Swap,
    H,
    X,
    Y,
    Z,
}

impl CliffordKind {
    pub fn arity(self) -> usize {
        match self {
            CliffordKind::Cx | CliffordKind::Cz | CliffordKind::Swap => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CliffordGate {
    pub kind: CliffordKind,
    pub qubits: Vec<usize>,
}

impl CliffordGate {
    pub fn new(kind: CliffordKind, qubits: Vec<usize>) -> Result<Self> {
        if qubits.len() != kind.arity() {
            return Err(Error::Argument(format!(
                "{kind:?} takes {} qubit(s), got {}",
                kind.arity(),
                qubits.len()
            )));
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(Error::Argument(format!("{kind:?} repeats qubit {}", qubits[0])));
        }
        Ok(Self { kind, qubits })
    }

    /// Symmetric gates store their qubits sorted so equal gates compare equal.
    fn canonical(mut self) -> Self {
        if matches!(self.kind, CliffordKind::Cz | CliffordKind::Swap) {
            self.qubits.sort_unstable();
        }
        self
    }

    pub fn to_gate(&self) -> Gate {
        let q = &self.qubits;
        match self.kind {
            CliffordKind::Cx => Gate::Cx(q[0], q[1]),
            CliffordKind::Cz => Gate::Cz(q[0], q[1]),
            CliffordKind::Swap => Gate::Swap(q[0], q[1]),
            CliffordKind::H => Gate::H(q[0]),
            CliffordKind::X => Gate::X(q[0]),
            CliffordKind::Y => Gate::Y(q[0]),
            CliffordKind::Z => Gate::Z(q[0]),
        }
    }

    pub fn from_gate(gate: &Gate) -> Result<Self> {
        let (kind, qubits) = match *gate {
            Gate::Cx(a, b) => (CliffordKind::Cx, vec![a, b]),
            Gate::Cz(a, b) => (CliffordKind::Cz, vec![a, b]),
            Gate::Swap(a, b) => (CliffordKind::Swap, vec![a, b]),
            Gate::H(q) => (CliffordKind::H, vec![q]),
            Gate::X(q) => (CliffordKind::X, vec![q]),
            Gate::Y(q) => (CliffordKind::Y, vec![q]),
            Gate::Z(q) => (CliffordKind::Z, vec![q]),
            other => return Err(Error::UnsupportedGate(other.name().to_string())),
        };
        Self::new(kind, qubits)
    }

    /// Conjugates `(x, z, sign)` in place; `sign` tracks the ±1 of a Hermitian Pauli.
    fn conjugate(&self, x: &mut u64, z: &mut u64, negative: &mut bool) {
        let bit = |v: u64, q: usize| v >> q & 1 == 1;
        let flip = |v: &mut u64, q: usize, on: bool| {
            if on {
                *v ^= 1 << q;
            }
        };
        match self.kind {
            CliffordKind::Cx => {
                let (c, t) = (self.qubits[0], self.qubits[1]);
                let (xc, zc, xt, zt) = (bit(*x, c), bit(*z, c), bit(*x, t), bit(*z, t));
                *negative ^= xc && zt && (xt == zc);
                flip(x, t, xc);
                flip(z, c, zt);
            }
            CliffordKind::Cz => {
                let (a, b) = (self.qubits[0], self.qubits[1]);
                let (xa, za, xb, zb) = (bit(*x, a), bit(*z, a), bit(*x, b), bit(*z, b));
                *negative ^= xa && xb && (za != zb);
                flip(z, a, xb);
                flip(z, b, xa);
            }
            CliffordKind::Swap => {
                let (a, b) = (self.qubits[0], self.qubits[1]);
                for v in [x, z] {
                    let (va, vb) = (bit(*v, a), bit(*v, b));
                    flip(v, a, va != vb);
                    flip(v, b, va != vb);
                }
            }
            CliffordKind::H => {
                let q = self.qubits[0];
                let (xq, zq) = (bit(*x, q), bit(*z, q));
                *negative ^= xq && zq;
                flip(x, q, xq != zq);
                flip(z, q, xq != zq);
            }
            CliffordKind::X | CliffordKind::Y | CliffordKind::Z => {
                let q = self.qubits[0];
                let (gx, gz) = match self.kind {
                    CliffordKind::X => (true, false),
                    CliffordKind::Y => (true, true),
                    _ => (false, true),
                };
                // Sign flips when the gate Pauli anticommutes with the letter.
                *negative ^= (gx && bit(*z, q)) != (gz && bit(*x, q));
            }
        }
    }
}

impl fmt::Display for CliffordGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_gate())
    }
}

/// Stable identifier of a Clifford layer, independent of gate order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LayerId(pub u64);

impl fmt::Display for LayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl std::str::FromStr for LayerId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        u64::from_str_radix(s, 16)
            .map(LayerId)
            .map_err(|_| Error::Parse(format!("invalid layer id `{s}`")))
    }
}

impl Serialize for LayerId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LayerId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Layer of self-adjoint Clifford gates with pairwise disjoint supports.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "LayerRecord", into = "LayerRecord")]
pub struct CliffordLayer {
    n_qubits: usize,
    /// Canonical (sorted) gate list.
    gates: Vec<CliffordGate>,
}

#[derive(Serialize, Deserialize)]
struct LayerRecord {
    n_qubits: usize,
    gates: Vec<CliffordGate>,
}

impl TryFrom<LayerRecord> for CliffordLayer {
    type Error = Error;
    fn try_from(r: LayerRecord) -> Result<Self> {
        CliffordLayer::new(r.n_qubits, r.gates)
    }
}

impl From<CliffordLayer> for LayerRecord {
    fn from(l: CliffordLayer) -> Self {
        LayerRecord {
            n_qubits: l.n_qubits,
            gates: l.gates,
        }
    }
}

impl CliffordLayer {
    pub fn new(n_qubits: usize, gates: Vec<CliffordGate>) -> Result<Self> {
        let mut used = 0u64;
        for g in &gates {
            for &q in &g.qubits {
                if q >= n_qubits {
                    return Err(Error::Argument(format!(
                        "layer gate {g} outside {n_qubits}-qubit register"
                    )));
                }
                if used >> q & 1 == 1 {
                    return Err(Error::Argument(format!(
                        "qubit {q} appears in two gates of one Clifford layer"
                    )));
                }
                used |= 1 << q;
            }
        }
        let mut gates: Vec<CliffordGate> = gates.into_iter().map(CliffordGate::canonical).collect();
        gates.sort();
        Ok(Self { n_qubits, gates })
    }

    pub fn empty(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
        }
    }

    /// Builds a layer from circuit gates (two-qubit or self-adjoint single-qubit Cliffords).
    pub fn from_gates(n_qubits: usize, gates: &[Gate]) -> Result<Self> {
        let gates = gates
            .iter()
            .map(CliffordGate::from_gate)
            .collect::<Result<Vec<_>>>()?;
        Self::new(n_qubits, gates)
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[CliffordGate] {
        &self.gates
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn support_mask(&self) -> u64 {
        self.gates
            .iter()
            .flat_map(|g| g.qubits.iter())
            .fold(0, |m, &q| m | 1 << q)
    }

    pub fn circuit_gates(&self) -> Vec<Gate> {
        self.gates.iter().map(CliffordGate::to_gate).collect()
    }

    /// Hash of the canonical gate list.
    pub fn id(&self) -> LayerId {
        let mut h = Sha256::new();
        h.update(self.canonical_string().as_bytes());
        let digest = h.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        LayerId(u64::from_be_bytes(bytes))
    }

    /// Human-readable canonical form, e.g. `n4:cx(0,1);cx(2,3)`.
    pub fn canonical_string(&self) -> String {
        let gates: Vec<String> = self
            .gates
            .iter()
            .map(|g| {
                let qs: Vec<String> = g.qubits.iter().map(ToString::to_string).collect();
                format!("{}({})", g.to_gate().name(), qs.join(","))
            })
            .collect();
        format!("n{}:{}", self.n_qubits, gates.join(";"))
    }

    /// Pauli `Q` with `C P C† = ±Q`.
    pub fn conjugate(&self, p: &PauliString) -> Result<PauliString> {
        Ok(self.conjugate_signed(p)?.0)
    }

    /// `C P C† = (-1)^negative · Q`, returning `(Q, negative)`.
    pub fn conjugate_signed(&self, p: &PauliString) -> Result<(PauliString, bool)> {
        if p.n_qubits() != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: p.n_qubits(),
            });
        }
        let (mut x, mut z, mut neg) = (p.x_bits(), p.z_bits(), false);
        for g in &self.gates {
            g.conjugate(&mut x, &mut z, &mut neg);
        }
        Ok((PauliString::from_bits(self.n_qubits, x, z)?, neg))
    }

    /// Conjugation of a product-basis string; identity letters become `Z`.
    pub fn conjugate_basis(&self, basis: &PauliString) -> Result<PauliString> {
        let mut out = self.conjugate(basis)?;
        for q in 0..self.n_qubits {
            if out.letter(q) == Pauli::I {
                out.set(q, Pauli::Z);
            }
        }
        Ok(out)
    }

    pub fn unitary<R: Real>(&self, cap: usize) -> Result<CMatrix<R>> {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.circuit_gates(),
            measure: None,
        }
        .unitary(cap)
    }
}

impl fmt::Display for CliffordLayer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;
    use proptest::prelude::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn cx01() -> CliffordLayer {
        CliffordLayer::from_gates(2, &[Gate::Cx(0, 1)]).unwrap()
    }

    /// Dense oracle: returns (Q, negative) by brute-force search over ±Q.
    fn dense_conjugate(layer: &CliffordLayer, pauli: &PauliString) -> (PauliString, bool) {
        let n = layer.n_qubits();
        let u = layer.unitary::<f64>(6).unwrap();
        let m = pauli.dense_matrix::<f64>(6).unwrap();
        let image = &(&u * &m) * &u.adjoint();
        for q in PauliString::all(n) {
            let qm = q.dense_matrix::<f64>(6).unwrap();
            if image.max_abs_diff(&qm) < 1e-12 {
                return (q, false);
            }
            if image.max_abs_diff(&qm.scaled(Complex::new(-1.0, 0.0))) < 1e-12 {
                return (q, true);
            }
        }
        panic!("image of {pauli} is not a Pauli");
    }

    #[test]
    fn conjugation_examples() {
        let l = cx01();
        assert_eq!(l.conjugate(&p("II")).unwrap(), p("II"));
        assert_eq!(l.conjugate(&p("XI")).unwrap(), p("XX"));
        assert_eq!(l.conjugate(&p("IZ")).unwrap(), p("ZZ"));
        assert_eq!(dense_conjugate(&l, &p("XI")).0, p("XX"));
        assert_eq!(dense_conjugate(&l, &p("IZ")).0, p("ZZ"));
    }

    #[test]
    fn overlapping_gates_rejected() {
        assert!(CliffordLayer::from_gates(3, &[Gate::Cx(0, 1), Gate::Cz(1, 2)]).is_err());
    }

    #[test]
    fn rotation_is_not_a_layer_gate() {
        assert!(matches!(
            CliffordLayer::from_gates(1, &[Gate::Rz(0, 0.1)]),
            Err(Error::UnsupportedGate(_))
        ));
    }

    #[test]
    fn layer_id_is_order_insensitive() {
        let a = CliffordLayer::from_gates(4, &[Gate::Cx(0, 1), Gate::Cz(3, 2)]).unwrap();
        let b = CliffordLayer::from_gates(4, &[Gate::Cz(2, 3), Gate::Cx(0, 1)]).unwrap();
        assert_eq!(a.id(), b.id());
        let c = CliffordLayer::from_gates(4, &[Gate::Cx(1, 0), Gate::Cz(3, 2)]).unwrap();
        assert_ne!(a.id(), c.id());
    }

    #[test]
    fn layers_are_self_adjoint() {
        let layers = [
            CliffordLayer::from_gates(3, &[Gate::Cx(0, 1), Gate::H(2)]).unwrap(),
            CliffordLayer::from_gates(3, &[Gate::Cz(2, 0), Gate::Y(1)]).unwrap(),
            CliffordLayer::from_gates(3, &[Gate::Swap(0, 2), Gate::X(1)]).unwrap(),
        ];
        for l in layers {
            let u = l.unitary::<f64>(6).unwrap();
            assert!((&u * &u).max_abs_diff(&CMatrix::identity(8)) < 1e-12, "{l}");
        }
    }

    #[test]
    fn signed_conjugation_matches_dense_oracle_exhaustively() {
        let layers = [
            CliffordLayer::from_gates(2, &[Gate::Cx(0, 1)]).unwrap(),
            CliffordLayer::from_gates(2, &[Gate::Cx(1, 0)]).unwrap(),
            CliffordLayer::from_gates(2, &[Gate::Cz(0, 1)]).unwrap(),
            CliffordLayer::from_gates(2, &[Gate::Swap(0, 1)]).unwrap(),
            CliffordLayer::from_gates(2, &[Gate::H(0), Gate::Y(1)]).unwrap(),
            CliffordLayer::from_gates(2, &[Gate::X(0), Gate::Z(1)]).unwrap(),
            CliffordLayer::from_gates(3, &[Gate::Cx(2, 0), Gate::H(1)]).unwrap(),
        ];
        for l in &layers {
            for q in PauliString::all(l.n_qubits()) {
                assert_eq!(l.conjugate_signed(&q).unwrap(), dense_conjugate(l, &q), "{l} on {q}");
            }
        }
    }

    fn arb_layer() -> impl Strategy<Value = CliffordLayer> {
        // Random 3-qubit layers built from a shuffled qubit order.
        (0usize..6, 0usize..7, 0usize..7).prop_map(|(perm, k1, k2)| {
            let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let o = orders[perm];
            let kinds = [
                CliffordKind::Cx,
                CliffordKind::Cz,
                CliffordKind::Swap,
                CliffordKind::H,
                CliffordKind::X,
                CliffordKind::Y,
                CliffordKind::Z,
            ];
            let mut gates = Vec::new();
            let k1 = kinds[k1];
            let mut next = 0;
            if k1.arity() == 2 {
                gates.push(CliffordGate::new(k1, vec![o[0], o[1]]).unwrap());
                next = 2;
            } else {
                gates.push(CliffordGate::new(k1, vec![o[0]]).unwrap());
                next += 1;
            }
            let k2 = kinds[k2];
            if k2.arity() == 1 {
                gates.push(CliffordGate::new(k2, vec![o[next]]).unwrap());
            }
            CliffordLayer::new(3, gates).unwrap()
        })
    }

    proptest! {
        #[test]
        fn conjugation_is_an_involution(layer in arb_layer(), x in 0u64..8, z in 0u64..8) {
            let q = PauliString::from_bits(3, x, z).unwrap();
            let once = layer.conjugate(&q).unwrap();
            prop_assert_eq!(layer.conjugate(&once).unwrap(), q);
        }

        #[test]
        fn conjugation_preserves_commutation(
            layer in arb_layer(),
            xa in 0u64..8, za in 0u64..8, xb in 0u64..8, zb in 0u64..8,
        ) {
            let a = PauliString::from_bits(3, xa, za).unwrap();
            let b = PauliString::from_bits(3, xb, zb).unwrap();
            let ca = layer.conjugate(&a).unwrap();
            let cb = layer.conjugate(&b).unwrap();
            prop_assert_eq!(a.symplectic_product(&b).unwrap(), ca.symplectic_product(&cb).unwrap());
        }
    }
}
