//! Dense density-matrix state with the channels the simulator needs.
//!
//! Index bit `n - 1 - q` holds qubit `q`, so qubit 0 is the most significant
//! bit and the leftmost character of a printed bitstring.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::circuit::Gate;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::noise::{lindblad_weight, SparseNoiseModel};
use crate::pauli::PauliString;
use crate::real::Real;

/// Largest register the density-matrix backend accepts by default.
pub const DEFAULT_SIM_CAP: usize = 10;

/// Maps a qubit mask (bit `q` = qubit `q`) to an index mask (bit `n-1-q`).
#[inline]
pub fn index_mask(qubit_mask: u64, n_qubits: usize) -> usize {
    if n_qubits == 0 {
        return 0;
    }
    (qubit_mask.reverse_bits() >> (64 - n_qubits)) as usize
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<R> {
    n_qubits: usize,
    dim: usize,
    data: Vec<Complex<R>>,
}

impl<R: Real> DensityMatrix<R> {
    /// `|0…0⟩⟨0…0|` on `n_qubits`, refusing registers above `cap`.
    pub fn zero_state(n_qubits: usize, cap: usize) -> Result<Self> {
        if n_qubits > cap {
            return Err(Error::ResourceLimit {
                what: "density-matrix qubits",
                requested: n_qubits,
                cap,
            });
        }
        let dim = 1usize << n_qubits;
        let mut data = vec![Complex::zero(); dim * dim];
        data[0] = Complex::one();
        Ok(Self {
            n_qubits,
            dim,
            data,
        })
    }

    pub fn from_matrix(m: &CMatrix<R>) -> Result<Self> {
        let dim = m.dim();
        if !dim.is_power_of_two() {
            return Err(Error::Dimension {
                expected: dim.next_power_of_two(),
                found: dim,
            });
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            dim,
            data: m.as_slice().to_vec(),
        })
    }

    pub fn to_matrix(&self) -> CMatrix<R> {
        let rows: Vec<Vec<Complex<R>>> = self.data.chunks(self.dim).map(<[_]>::to_vec).collect();
        CMatrix::from_rows(&rows)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> Complex<R> {
        self.data[i * self.dim + j]
    }

    pub fn trace(&self) -> R {
        (0..self.dim).map(|i| self.at(i, i).re).sum()
    }

    fn check(&self, p: &PauliString) -> Result<()> {
        if p.n_qubits() != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: p.n_qubits(),
            });
        }
        Ok(())
    }

    fn shift(&self, q: usize) -> usize {
        self.n_qubits - 1 - q
    }

    /// `ρ ← U ρ U†` for a local unitary on one or two qubits.
    pub fn apply_local(&mut self, u: &CMatrix<R>, qubits: &[usize]) {
        let k = qubits.len();
        let local = 1usize << k;
        debug_assert_eq!(u.dim(), local);
        let bits: Vec<usize> = qubits.iter().map(|&q| 1usize << self.shift(q)).collect();
        let mask: usize = bits.iter().sum();
        let offsets: Vec<usize> = (0..local)
            .map(|s| {
                bits.iter()
                    .enumerate()
                    .filter(|(b, _)| s >> (k - 1 - b) & 1 == 1)
                    .map(|(_, &v)| v)
                    .sum()
            })
            .collect();
        let dim = self.dim;
        let mut buf = vec![Complex::zero(); local];
        // Rows: ρ ← U ρ.
        for base in (0..dim).filter(|i| i & mask == 0) {
            for j in 0..dim {
                for (a, slot) in buf.iter_mut().enumerate() {
                    *slot = (0..local)
                        .map(|b| u[(a, b)] * self.data[(base + offsets[b]) * dim + j])
                        .fold(Complex::zero(), |s, v| s + v);
                }
                for (a, v) in buf.iter().enumerate() {
                    self.data[(base + offsets[a]) * dim + j] = *v;
                }
            }
        }
        // Columns: ρ ← ρ U†.
        for i in 0..dim {
            let row = &mut self.data[i * dim..(i + 1) * dim];
            for base in (0..dim).filter(|j| j & mask == 0) {
                for (a, slot) in buf.iter_mut().enumerate() {
                    *slot = (0..local)
                        .map(|b| row[base + offsets[b]] * u[(a, b)].conj())
                        .fold(Complex::zero(), |s, v| s + v);
                }
                for (a, v) in buf.iter().enumerate() {
                    row[base + offsets[a]] = *v;
                }
            }
        }
    }

    /// `ρ_{ij} ← ρ_{π(i) π(j)}` for an involutive index permutation.
    fn permute(&mut self, pi: impl Fn(usize) -> usize) {
        let dim = self.dim;
        let old = self.data.clone();
        for i in 0..dim {
            let pi_i = pi(i);
            for j in 0..dim {
                self.data[i * dim + j] = old[pi_i * dim + pi(j)];
            }
        }
    }

    pub fn apply_gate(&mut self, gate: &Gate) {
        match *gate {
            Gate::X(q) | Gate::Y(q) | Gate::Z(q) => {
                let letter = match gate {
                    Gate::X(_) => crate::pauli::Pauli::X,
                    Gate::Y(_) => crate::pauli::Pauli::Y,
                    _ => crate::pauli::Pauli::Z,
                };
                let p = PauliString::single(self.n_qubits, q, letter);
                self.conjugate_by_pauli(&p);
            }
            Gate::Cx(c, t) => {
                let (bc, bt) = (1 << self.shift(c), 1 << self.shift(t));
                self.permute(|i| if i & bc != 0 { i ^ bt } else { i });
            }
            Gate::Swap(a, b) => {
                let (sa, sb) = (self.shift(a), self.shift(b));
                self.permute(|i| {
                    let d = ((i >> sa) ^ (i >> sb)) & 1;
                    i ^ (d << sa) ^ (d << sb)
                });
            }
            Gate::Cz(a, b) => {
                let m = (1 << self.shift(a)) | (1 << self.shift(b));
                let dim = self.dim;
                for i in 0..dim {
                    for j in 0..dim {
                        if (i & m == m) != (j & m == m) {
                            self.data[i * dim + j] = -self.data[i * dim + j];
                        }
                    }
                }
            }
            _ => self.apply_local(&gate.matrix(), &gate.qubits()),
        }
    }

    /// Sign of `P_{k⊕x, k}` relative to the global `i^{#Y}` factor.
    #[inline]
    fn pauli_sign(k: usize, z: usize) -> bool {
        (k & z).count_ones() & 1 == 1
    }

    /// `ρ ← P ρ P`.
    pub fn conjugate_by_pauli(&mut self, p: &PauliString) {
        let x = index_mask(p.x_bits(), self.n_qubits);
        let z = index_mask(p.z_bits(), self.n_qubits);
        let dim = self.dim;
        let old = self.data.clone();
        for i in 0..dim {
            let si = Self::pauli_sign(i ^ x, z);
            for j in 0..dim {
                let v = old[(i ^ x) * dim + (j ^ x)];
                self.data[i * dim + j] = if si != Self::pauli_sign(j ^ x, z) { -v } else { v };
            }
        }
    }

    /// Applies `ρ ← w ρ + (1 - w) P ρ P` for every term of `model`, in order.
    pub fn apply_pauli_channel(&mut self, model: &SparseNoiseModel<R>) -> Result<()> {
        let dim = self.dim;
        let mut out = vec![Complex::zero(); dim * dim];
        for (p, rate) in model.iter() {
            self.check(p)?;
            if rate == R::zero() {
                continue;
            }
            let w = lindblad_weight(rate);
            let v = R::one() - w;
            let x = index_mask(p.x_bits(), self.n_qubits);
            let z = index_mask(p.z_bits(), self.n_qubits);
            for i in 0..dim {
                let si = Self::pauli_sign(i ^ x, z);
                for j in 0..dim {
                    let flip = self.data[(i ^ x) * dim + (j ^ x)];
                    let flip = if si != Self::pauli_sign(j ^ x, z) { -flip } else { flip };
                    out[i * dim + j] = self.data[i * dim + j] * w + flip * v;
                }
            }
            std::mem::swap(&mut self.data, &mut out);
        }
        Ok(())
    }

    /// Amplitude damping with decay probability `p` on qubit `q`.
    pub fn amplitude_damping(&mut self, q: usize, p: R) {
        if p == R::zero() {
            return;
        }
        let b = 1usize << self.shift(q);
        let keep = (R::one() - p).sqrt();
        let dim = self.dim;
        for i in (0..dim).filter(|i| i & b == 0) {
            for j in (0..dim).filter(|j| j & b == 0) {
                let (i1, j1) = (i | b, j | b);
                let r11 = self.data[i1 * dim + j1];
                self.data[i * dim + j] += r11 * p;
                self.data[i1 * dim + j1] = r11 * (R::one() - p);
                self.data[i * dim + j1] *= keep;
                self.data[i1 * dim + j] *= keep;
            }
        }
    }

    /// `ρ ← Σ K ρ K†` for single-qubit Kraus operators on qubit `q`.
    pub fn apply_kraus(&mut self, ops: &[CMatrix<R>], q: usize) {
        let start = self.clone();
        let mut acc = vec![Complex::zero(); self.data.len()];
        for k in ops {
            let mut term = start.clone();
            term.apply_local(k, &[q]);
            for (a, t) in acc.iter_mut().zip(&term.data) {
                *a += *t;
            }
        }
        self.data = acc;
    }

    /// `Tr(P ρ)`.
    pub fn expectation(&self, p: &PauliString) -> Result<R> {
        self.check(p)?;
        let x = index_mask(p.x_bits(), self.n_qubits);
        let z = index_mask(p.z_bits(), self.n_qubits);
        // Tr(Pρ) = Σ_k P_{k⊕x,k} ρ_{k,k⊕x}, P_{k⊕x,k} = i^{#Y} (-1)^{|k∧z|}.
        let mut s = Complex::<R>::zero();
        for k in 0..self.dim {
            let v = self.at(k, k ^ x);
            s += if Self::pauli_sign(k, z) { -v } else { v };
        }
        let phase = match p.letters().iter().filter(|l| **l == crate::pauli::Pauli::Y).count() % 4 {
            0 => Complex::new(R::one(), R::zero()),
            1 => Complex::new(R::zero(), R::one()),
            2 => Complex::new(-R::one(), R::zero()),
            _ => Complex::new(R::zero(), -R::one()),
        };
        Ok((s * phase).re)
    }

    /// Computational-basis probabilities, clipped at zero.
    pub fn probabilities(&self) -> Vec<R> {
        (0..self.dim)
            .map(|i| self.at(i, i).re.max(R::zero()))
            .collect()
    }
}

/// Applies independent per-qubit readout flips `(p01, p10)` to a distribution.
pub fn apply_readout_confusion<R: Real>(probs: &mut [R], n_qubits: usize, flips: &[(R, R)]) {
    for (q, &(p01, p10)) in flips.iter().enumerate() {
        let b = 1usize << (n_qubits - 1 - q);
        for i in (0..probs.len()).filter(|i| i & b == 0) {
            let (p0, p1) = (probs[i], probs[i | b]);
            probs[i] = p0 * (R::one() - p01) + p1 * p10;
            probs[i | b] = p0 * p01 + p1 * (R::one() - p10);
        }
    }
}
