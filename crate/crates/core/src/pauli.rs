//! n-qubit Pauli operators in symplectic form.
//!
//! A [`PauliString`] stores one x-bit and one z-bit per qubit; `(1, 1)` is Y.
//! Global phases are not tracked: Pauli twirls and Pauli channels only ever
//! use an operator through `P ρ P`, where the phase cancels. The one place a
//! sign matters (the observable measured after a single Clifford layer) uses
//! [`crate::clifford::CliffordLayer::conjugate_signed`].
//!
//! Text form is a string over `{I, X, Y, Z}` whose leftmost character acts on
//! qubit 0.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::real::Real;

/// Largest register a [`PauliString`] can describe.
pub const MAX_QUBITS: usize = 64;

/// Default qubit cap for dense-matrix oracles.
pub const DEFAULT_DENSE_CAP: usize = 6;

/// Single-qubit Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    pub const NON_IDENTITY: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    #[inline]
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    #[inline]
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn matrix<R: Real>(self) -> CMatrix<R> {
        let (o, z) = (Complex::<R>::one(), Complex::<R>::zero());
        let i = Complex::new(R::zero(), R::one());
        let rows = match self {
            Pauli::I => vec![vec![o, z], vec![z, o]],
            Pauli::X => vec![vec![z, o], vec![o, z]],
            Pauli::Y => vec![vec![z, -i], vec![i, z]],
            Pauli::Z => vec![vec![o, z], vec![z, -o]],
        };
        CMatrix::from_rows(&rows)
    }
}

/// Phase-free n-qubit Pauli operator.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: u8,
    x: u64,
    z: u64,
}

#[inline]
fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        Self {
            n_qubits: n_qubits as u8,
            x: 0,
            z: 0,
        }
    }

    /// Builds a Pauli from raw bit masks (bit `q` belongs to qubit `q`).
    pub fn from_bits(n_qubits: usize, x: u64, z: u64) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::ResourceLimit {
                what: "Pauli register size",
                requested: n_qubits,
                cap: MAX_QUBITS,
            });
        }
        if (x | z) & !mask(n_qubits) != 0 {
            return Err(Error::Argument(format!(
                "bit masks {x:#x}/{z:#x} exceed {n_qubits} qubits"
            )));
        }
        Ok(Self {
            n_qubits: n_qubits as u8,
            x,
            z,
        })
    }

    pub fn single(n_qubits: usize, qubit: usize, letter: Pauli) -> Self {
        let mut p = Self::identity(n_qubits);
        p.set(qubit, letter);
        p
    }

    pub fn from_letters(letters: &[Pauli]) -> Self {
        let mut p = Self::identity(letters.len());
        for (q, &l) in letters.iter().enumerate() {
            p.set(q, l);
        }
        p
    }

    /// Pauli acting with `letters[i]` on `qubits[i]` and identity elsewhere.
    pub fn from_sparse(n_qubits: usize, qubits: &[usize], letters: &[Pauli]) -> Self {
        assert_eq!(qubits.len(), letters.len());
        let mut p = Self::identity(n_qubits);
        for (&q, &l) in qubits.iter().zip(letters) {
            p.set(q, l);
        }
        p
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits as usize
    }

    #[inline]
    pub fn x_bits(&self) -> u64 {
        self.x
    }

    #[inline]
    pub fn z_bits(&self) -> u64 {
        self.z
    }

    #[inline]
    pub fn letter(&self, qubit: usize) -> Pauli {
        debug_assert!(qubit < self.n_qubits());
        Pauli::from_bits(self.x >> qubit & 1 == 1, self.z >> qubit & 1 == 1)
    }

    pub fn set(&mut self, qubit: usize, letter: Pauli) {
        assert!(qubit < self.n_qubits(), "qubit {qubit} outside register");
        let (x, z) = letter.bits();
        let bit = 1u64 << qubit;
        self.x = if x { self.x | bit } else { self.x & !bit };
        self.z = if z { self.z | bit } else { self.z & !bit };
    }

    pub fn letters(&self) -> Vec<Pauli> {
        (0..self.n_qubits()).map(|q| self.letter(q)).collect()
    }

    #[inline]
    pub fn is_identity(&self) -> bool {
        self.x | self.z == 0
    }

    /// Bit mask of qubits acted on non-trivially.
    #[inline]
    pub fn support_mask(&self) -> u64 {
        self.x | self.z
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n_qubits())
            .filter(|&q| self.support_mask() >> q & 1 == 1)
            .collect()
    }

    #[inline]
    pub fn weight(&self) -> usize {
        self.support_mask().count_ones() as usize
    }

    /// Symplectic inner product: `1` if the operators anticommute, `0` otherwise.
    pub fn symplectic_product(&self, other: &Self) -> Result<u8> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits(),
                found: other.n_qubits(),
            });
        }
        Ok(self.anticommutes_unchecked(other) as u8)
    }

    /// Anticommutation test without the register-size check.
    #[inline]
    pub fn anticommutes_unchecked(&self, other: &Self) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones() & 1 == 1
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        !self.anticommutes_unchecked(other)
    }

    /// Operator product with the phase dropped.
    pub fn product(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        Self {
            n_qubits: self.n_qubits,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
        }
    }

    /// True when every non-identity letter of `self` equals the basis letter on that qubit.
    pub fn is_diagonal_in(&self, basis: &PauliString) -> bool {
        let s = self.support_mask();
        self.x & s == basis.x & s && self.z & s == basis.z & s && basis.support_mask() & s == s
    }

    /// Qubit-wise compatibility: no qubit carries two different non-identity letters.
    pub fn qubitwise_compatible(&self, other: &Self) -> bool {
        let both = self.support_mask() & other.support_mask();
        (self.x ^ other.x) & both == 0 && (self.z ^ other.z) & both == 0
    }

    /// Dense `2^n × 2^n` matrix (qubit 0 is the most significant tensor factor).
    pub fn dense_matrix<R: Real>(&self, cap: usize) -> Result<CMatrix<R>> {
        if self.n_qubits() > cap {
            return Err(Error::ResourceLimit {
                what: "dense Pauli matrix",
                requested: self.n_qubits(),
                cap,
            });
        }
        let mut m = CMatrix::identity(1);
        for q in 0..self.n_qubits() {
            m = m.kron(&self.letter(q).matrix());
        }
        Ok(m)
    }

    /// Ordering key used for model terms: weight, then support, then letters.
    fn term_key(&self) -> (usize, Vec<usize>, Vec<Pauli>) {
        let support = self.support();
        let letters = support.iter().map(|&q| self.letter(q)).collect();
        (self.weight(), support, letters)
    }

    /// Deterministic order: weight, qubit indices, letters (I < X < Y < Z).
    pub fn term_order(&self, other: &Self) -> Ordering {
        self.n_qubits
            .cmp(&other.n_qubits)
            .then_with(|| self.term_key().cmp(&other.term_key()))
    }

    /// Every Pauli on `n_qubits` qubits, identity first, in little-endian
    /// base-4 order over `(I, X, Y, Z)` with qubit 0 as the most significant digit.
    pub fn all(n_qubits: usize) -> impl Iterator<Item = PauliString> {
        let total = 1usize << (2 * n_qubits);
        (0..total).map(move |index| Self::from_index(n_qubits, index))
    }

    /// Index of this Pauli in [`PauliString::all`].
    pub fn index(&self) -> usize {
        let mut idx = 0usize;
        for q in 0..self.n_qubits() {
            let digit = match self.letter(q) {
                Pauli::I => 0,
                Pauli::X => 1,
                Pauli::Y => 2,
                Pauli::Z => 3,
            };
            idx = idx * 4 + digit;
        }
        idx
    }

    pub fn from_index(n_qubits: usize, mut index: usize) -> Self {
        let mut p = Self::identity(n_qubits);
        for q in (0..n_qubits).rev() {
            p.set(q, Pauli::ALL[index % 4]);
            index /= 4;
        }
        p
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.term_order(other)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n_qubits() {
            write!(f, "{}", self.letter(q).as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty Pauli string".into()));
        }
        if s.chars().count() > MAX_QUBITS {
            return Err(Error::ResourceLimit {
                what: "Pauli register size",
                requested: s.chars().count(),
                cap: MAX_QUBITS,
            });
        }
        let letters = s
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| Error::Parse(format!("invalid Pauli letter `{c}` in `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_letters(&letters))
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Sparse-model terms for a device: every weight-one Pauli plus all nine
/// weight-two Paulis on each connected pair, sorted by [`PauliString::term_order`].
pub fn enumerate_model_terms(edges: &[(usize, usize)], n_qubits: usize) -> Vec<PauliString> {
    let mut terms = Vec::with_capacity(3 * n_qubits + 9 * edges.len());
    for q in 0..n_qubits {
        for l in Pauli::NON_IDENTITY {
            terms.push(PauliString::single(n_qubits, q, l));
        }
    }
    for &(a, b) in edges {
        assert!(a < n_qubits && b < n_qubits, "edge ({a}, {b}) outside register");
        if a == b {
            continue;
        }
        for la in Pauli::NON_IDENTITY {
            for lb in Pauli::NON_IDENTITY {
                terms.push(PauliString::from_sparse(n_qubits, &[a, b], &[la, lb]));
            }
        }
    }
    terms.sort();
    terms.dedup();
    terms
}

/// Nearest-neighbour chain `0-1-…-(n-1)`.
pub fn path_edges(n_qubits: usize) -> Vec<(usize, usize)> {
    (1..n_qubits).map(|q| (q - 1, q)).collect()
}
