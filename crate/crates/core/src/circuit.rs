//! Circuit intermediate representation and its JSON wire format.
//!
//! ```json
//! {"n_qubits": 2, "gates": [{"kind": "rx", "qubits": [0], "angle": 0.3},
//!                           {"kind": "cx", "qubits": [0, 1]}]}
//! ```

use std::fmt;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::pauli::Pauli;
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    /// Control, target.
    Cx(usize, usize),
    Cz(usize, usize),
    Swap(usize, usize),
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::Rx(..) => "rx",
            Gate::Ry(..) => "ry",
            Gate::Rz(..) => "rz",
            Gate::H(_) => "h",
            Gate::S(_) => "s",
            Gate::Sdg(_) => "sdg",
            Gate::X(_) => "x",
            Gate::Y(_) => "y",
            Gate::Z(_) => "z",
            Gate::Cx(..) => "cx",
            Gate::Cz(..) => "cz",
            Gate::Swap(..) => "swap",
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Rx(q, _) | Gate::Ry(q, _) | Gate::Rz(q, _) => vec![q],
            Gate::H(q) | Gate::S(q) | Gate::Sdg(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) => {
                vec![q]
            }
            Gate::Cx(a, b) | Gate::Cz(a, b) | Gate::Swap(a, b) => vec![a, b],
        }
    }

    #[inline]
    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cx(..) | Gate::Cz(..) | Gate::Swap(..))
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rx(_, a) | Gate::Ry(_, a) | Gate::Rz(_, a) => Some(a),
            _ => None,
        }
    }

    /// Pauli gate carrying `letter` on `qubit`, or `None` for the identity.
    pub fn pauli(qubit: usize, letter: Pauli) -> Option<Gate> {
        match letter {
            Pauli::I => None,
            Pauli::X => Some(Gate::X(qubit)),
            Pauli::Y => Some(Gate::Y(qubit)),
            Pauli::Z => Some(Gate::Z(qubit)),
        }
    }

    /// Local unitary (2×2 or 4×4, first listed qubit most significant).
    pub fn matrix<R: Real>(&self) -> CMatrix<R> {
        let c = |re: f64, im: f64| Complex::new(R::of(re), R::of(im));
        let (o, z) = (Complex::<R>::one(), Complex::<R>::zero());
        let rows = match *self {
            Gate::Rx(_, t) => {
                let (s, co) = (t / 2.0).sin_cos();
                vec![vec![c(co, 0.0), c(0.0, -s)], vec![c(0.0, -s), c(co, 0.0)]]
            }
            Gate::Ry(_, t) => {
                let (s, co) = (t / 2.0).sin_cos();
                vec![vec![c(co, 0.0), c(-s, 0.0)], vec![c(s, 0.0), c(co, 0.0)]]
            }
            Gate::Rz(_, t) => {
                let (s, co) = (t / 2.0).sin_cos();
                vec![vec![c(co, -s), z], vec![z, c(co, s)]]
            }
            Gate::H(_) => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                vec![vec![c(h, 0.0), c(h, 0.0)], vec![c(h, 0.0), c(-h, 0.0)]]
            }
            Gate::S(_) => vec![vec![o, z], vec![z, c(0.0, 1.0)]],
            Gate::Sdg(_) => vec![vec![o, z], vec![z, c(0.0, -1.0)]],
            Gate::X(_) => return Pauli::X.matrix(),
            Gate::Y(_) => return Pauli::Y.matrix(),
            Gate::Z(_) => return Pauli::Z.matrix(),
            Gate::Cx(..) => vec![
                vec![o, z, z, z],
                vec![z, o, z, z],
                vec![z, z, z, o],
                vec![z, z, o, z],
            ],
            Gate::Cz(..) => vec![
                vec![o, z, z, z],
                vec![z, o, z, z],
                vec![z, z, o, z],
                vec![z, z, z, -o],
            ],
            Gate::Swap(..) => vec![
                vec![o, z, z, z],
                vec![z, z, o, z],
                vec![z, o, z, z],
                vec![z, z, z, o],
            ],
        };
        CMatrix::from_rows(&rows)
    }

    /// Full `2^n × 2^n` unitary (qubit 0 is the most significant index bit).
    pub fn full_matrix<R: Real>(&self, n_qubits: usize) -> CMatrix<R> {
        embed(&self.matrix(), &self.qubits(), n_qubits)
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        if let Some(&q) = qs.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::InvalidCircuit(format!(
                "{} acts on qubit {q} outside a {n_qubits}-qubit register",
                self.name()
            )));
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::InvalidCircuit(format!(
                "{} repeats qubit {}",
                self.name(),
                qs[0]
            )));
        }
        if let Some(a) = self.angle() {
            if !a.is_finite() {
                return Err(Error::InvalidCircuit(format!(
                    "{} has non-finite angle",
                    self.name()
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let qs = self.qubits();
        match self.angle() {
            Some(a) => write!(f, "{}({a})", self.name())?,
            None => write!(f, "{}", self.name())?,
        }
        for q in qs {
            write!(f, " q{q}")?;
        }
        Ok(())
    }
}

/// Embeds a local unitary acting on `qubits` into an `n`-qubit register.
pub fn embed<R: Real>(local: &CMatrix<R>, qubits: &[usize], n_qubits: usize) -> CMatrix<R> {
    let dim = 1usize << n_qubits;
    let k = qubits.len();
    assert_eq!(local.dim(), 1 << k);
    let shifts: Vec<usize> = qubits.iter().map(|&q| n_qubits - 1 - q).collect();
    let local_mask: usize = shifts.iter().map(|&s| 1usize << s).sum();
    let sub = |i: usize| -> usize {
        shifts
            .iter()
            .fold(0usize, |acc, &s| (acc << 1) | ((i >> s) & 1))
    };
    let mut out = CMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            if i & !local_mask == j & !local_mask {
                out[(i, j)] = local[(sub(i), sub(j))];
            }
        }
    }
    out
}

/// Ordered gate list on a fixed register.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    /// Which qubits are read out; `None` means all.
    pub measure: Option<Vec<bool>>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
            measure: None,
        }
    }

    pub fn with_gates(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let c = Self {
            n_qubits,
            gates,
            measure: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.gates.push(gate);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::InvalidCircuit("circuit has no qubits".into()));
        }
        for g in &self.gates {
            g.validate(self.n_qubits)?;
        }
        if let Some(m) = &self.measure {
            if m.len() != self.n_qubits {
                return Err(Error::InvalidCircuit(format!(
                    "measurement flags cover {} of {} qubits",
                    m.len(),
                    self.n_qubits
                )));
            }
        }
        Ok(())
    }

    /// Dense unitary of the whole circuit.
    pub fn unitary<R: Real>(&self, cap: usize) -> Result<CMatrix<R>> {
        if self.n_qubits > cap {
            return Err(Error::ResourceLimit {
                what: "dense circuit unitary",
                requested: self.n_qubits,
                cap,
            });
        }
        let mut u = CMatrix::identity(1 << self.n_qubits);
        for g in &self.gates {
            u = &g.full_matrix(self.n_qubits) * &u;
        }
        Ok(u)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Circuit = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Serialize, Deserialize)]
struct GateRecord {
    kind: String,
    qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle: Option<f64>,
}

impl TryFrom<GateRecord> for Gate {
    type Error = Error;

    fn try_from(r: GateRecord) -> Result<Gate> {
        let kind = r.kind.to_ascii_lowercase();
        let one = |qs: &[usize]| -> Result<usize> {
            match qs {
                [q] => Ok(*q),
                _ => Err(Error::Parse(format!("gate `{}` takes one qubit", r.kind))),
            }
        };
        let two = |qs: &[usize]| -> Result<(usize, usize)> {
            match qs {
                [a, b] => Ok((*a, *b)),
                _ => Err(Error::Parse(format!("gate `{}` takes two qubits", r.kind))),
            }
        };
        let angle = || {
            r.angle
                .ok_or_else(|| Error::Parse(format!("gate `{}` needs an angle", r.kind)))
        };
        Ok(match kind.as_str() {
            "rx" => Gate::Rx(one(&r.qubits)?, angle()?),
            "ry" => Gate::Ry(one(&r.qubits)?, angle()?),
            "rz" => Gate::Rz(one(&r.qubits)?, angle()?),
            "h" => Gate::H(one(&r.qubits)?),
            "s" => Gate::S(one(&r.qubits)?),
            "sdg" | "sdag" | "s†" => Gate::Sdg(one(&r.qubits)?),
            "x" => Gate::X(one(&r.qubits)?),
            "y" => Gate::Y(one(&r.qubits)?),
            "z" => Gate::Z(one(&r.qubits)?),
            "cx" | "cnot" => {
                let (a, b) = two(&r.qubits)?;
                Gate::Cx(a, b)
            }
            "cz" => {
                let (a, b) = two(&r.qubits)?;
                Gate::Cz(a, b)
            }
            "swap" => {
                let (a, b) = two(&r.qubits)?;
                Gate::Swap(a, b)
            }
            _ => return Err(Error::UnsupportedGate(r.kind)),
        })
    }
}

impl From<&Gate> for GateRecord {
    fn from(g: &Gate) -> Self {
        GateRecord {
            kind: g.name().to_string(),
            qubits: g.qubits(),
            angle: g.angle(),
        }
    }
}

impl Serialize for Gate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GateRecord::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Gate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = GateRecord::deserialize(d)?;
        Gate::try_from(r).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct CircuitRecord {
    n_qubits: usize,
    gates: Vec<Gate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    measure: Option<Vec<bool>>,
}

impl Serialize for Circuit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CircuitRecord {
            n_qubits: self.n_qubits,
            gates: self.gates.clone(),
            measure: self.measure.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Circuit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = CircuitRecord::deserialize(d)?;
        let c = Circuit {
            n_qubits: r.n_qubits,
            gates: r.gates,
            measure: r.measure,
        };
        c.validate().map_err(serde::de::Error::custom)?;
        Ok(c)
    }
}
