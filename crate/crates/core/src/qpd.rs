//! Quasiprobability decompositions over user-supplied noisy channels and
//! canonical noise scaling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::Gate;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Matrix};
use crate::pauli::PauliString;
use crate::real::Real;

/// Channels beyond this many qubits are refused (PTMs grow as 16^n).
pub const MAX_PTM_QUBITS: usize = 3;

/// Pauli transfer matrix in the `(I, X, Y, Z)^{⊗n}` order of [`PauliString::all`].
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator<R> {
    pub n_qubits: usize,
    pub ptm: Matrix<R>,
}

fn check_qubits(n: usize) -> Result<()> {
    if n > MAX_PTM_QUBITS {
        return Err(Error::ResourceLimit {
            what: "Pauli transfer matrix",
            requested: n,
            cap: MAX_PTM_QUBITS,
        });
    }
    Ok(())
}

impl<R: Real> Superoperator<R> {
    pub fn new(n_qubits: usize, ptm: Matrix<R>) -> Result<Self> {
        check_qubits(n_qubits)?;
        let d = 1 << (2 * n_qubits);
        if ptm.rows() != d || ptm.cols() != d {
            return Err(Error::Dimension {
                expected: d,
                found: ptm.rows().max(ptm.cols()),
            });
        }
        Ok(Self { n_qubits, ptm })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, Matrix::identity(1 << (2 * n_qubits)))
    }

    pub fn dim(&self) -> usize {
        self.ptm.rows()
    }

    /// `self ∘ other`: `other` acts first.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            ptm: &self.ptm * &other.ptm,
        })
    }

    pub fn scaled(&self, s: R) -> Self {
        Self {
            n_qubits: self.n_qubits,
            ptm: self.ptm.scaled(s),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            n_qubits: self.n_qubits,
            ptm: self.ptm.add(&other.ptm),
        }
    }

    pub fn is_trace_preserving(&self, tol: R) -> bool {
        (0..self.dim()).all(|j| {
            let want = if j == 0 { R::one() } else { R::zero() };
            (self.ptm[(0, j)] - want).abs() <= tol
        })
    }

    /// Maps a Pauli vector `r_a = Tr(P_a ρ)`.
    pub fn apply(&self, r: &[R]) -> Vec<R> {
        self.ptm.matvec(r)
    }
}

/// Pauli vector `Tr(P_a ρ)` of a density matrix.
pub fn pauli_vector<R: Real>(rho: &CMatrix<R>, n_qubits: usize) -> Result<Vec<R>> {
    check_qubits(n_qubits)?;
    PauliString::all(n_qubits)
        .map(|p| {
            let m = p.dense_matrix::<R>(n_qubits)?;
            Ok((&m * rho).trace().re)
        })
        .collect()
}

/// `S_ab = 2^{-n} Tr(P_a Σ_k K_k P_b K_k†)`.
pub fn ptm_from_kraus<R: Real>(ops: &[CMatrix<R>]) -> Result<Superoperator<R>> {
    let dim = ops
        .first()
        .map(CMatrix::dim)
        .ok_or_else(|| Error::Validation("empty Kraus set".into()))?;
    if !dim.is_power_of_two() || ops.iter().any(|k| k.dim() != dim) {
        return Err(Error::Validation("Kraus operators must share a 2^n dimension".into()));
    }
    let n = dim.trailing_zeros() as usize;
    check_qubits(n)?;
    let mut sum = CMatrix::zeros(dim);
    for k in ops {
        sum = sum.add(&(&k.adjoint() * k));
    }
    let tol = R::of(1e-10).max(R::epsilon() * R::of(64.0));
    if sum.max_abs_diff(&CMatrix::identity(dim)) > tol {
        return Err(Error::Validation("Kraus operators are not trace preserving".into()));
    }
    let paulis: Vec<CMatrix<R>> = PauliString::all(n)
        .map(|p| p.dense_matrix(n))
        .collect::<Result<_>>()?;
    let d = paulis.len();
    let norm = R::of(dim as f64);
    let mut ptm = Matrix::zeros(d, d);
    for (b, pb) in paulis.iter().enumerate() {
        let mut image = CMatrix::zeros(dim);
        for k in ops {
            image = image.add(&(&(k * pb) * &k.adjoint()));
        }
        for (a, pa) in paulis.iter().enumerate() {
            ptm[(a, b)] = (pa * &image).trace().re / norm;
        }
    }
    Superoperator::new(n, ptm)
}

pub fn ptm_from_unitary<R: Real>(u: &CMatrix<R>) -> Result<Superoperator<R>> {
    ptm_from_kraus(std::slice::from_ref(u))
}

/// `ρ ↦ (1 − 3p/4) ρ + (p/4)(XρX + YρY + ZρZ)` on one qubit: PTM `diag(1, 1−p, 1−p, 1−p)`.
pub fn depolarizing<R: Real>(p: R) -> Result<Superoperator<R>> {
    if !(p >= R::zero() && p <= R::of(4.0 / 3.0)) {
        return Err(Error::Argument(format!("depolarizing parameter {p} outside [0, 4/3]")));
    }
    let a = (R::one() - R::of(0.75) * p).sqrt();
    let b = (p / R::of(4.0)).sqrt();
    let ops: Vec<CMatrix<R>> = [Gate::X(0), Gate::Y(0), Gate::Z(0)]
        .iter()
        .map(|g| g.matrix::<R>().scaled(num_complex::Complex::new(b, R::zero())))
        .chain(std::iter::once(CMatrix::identity(2).scaled(num_complex::Complex::new(a, R::zero()))))
        .collect();
    ptm_from_kraus(&ops)
}

/// Minimize `cᵀx` subject to `A x ≤ b`, `x ≥ 0`, by two-phase simplex with
/// Bland's rule. Infeasibility is reported with the phase-one optimum.
pub fn linprog<R: Real>(c: &[R], a: &Matrix<R>, b: &[R]) -> Result<Vec<R>> {
    let (m, n) = (a.rows(), a.cols());
    if c.len() != n || b.len() != m {
        return Err(Error::Dimension {
            expected: n,
            found: c.len(),
        });
    }
    let negative: Vec<usize> = (0..m).filter(|&i| b[i] < R::zero()).collect();
    let n_art = negative.len();
    let cols = n + m + n_art;
    let mut t = vec![vec![R::zero(); cols + 1]; m];
    let mut basis = vec![0; m];
    let mut art = 0;
    for i in 0..m {
        let s = if b[i] < R::zero() { -R::one() } else { R::one() };
        for j in 0..n {
            t[i][j] = s * a[(i, j)];
        }
        t[i][n + i] = s;
        t[i][cols] = s * b[i];
        if b[i] < R::zero() {
            t[i][n + m + art] = R::one();
            basis[i] = n + m + art;
            art += 1;
        } else {
            basis[i] = n + i;
        }
    }
    let scale = a
        .as_slice()
        .iter()
        .chain(b)
        .fold(R::one(), |s, v| s.max(v.abs()));
    let tol = R::pivot_tolerance() * scale;

    let mut allowed = vec![true; cols];
    if n_art > 0 {
        let mut cost = vec![R::zero(); cols];
        cost[n + m..].iter_mut().for_each(|v| *v = R::one());
        simplex(&mut t, &mut basis, &cost, &allowed, tol)?;
        let infeasibility: R = (0..m).filter(|&i| basis[i] >= n + m).map(|i| t[i][cols]).sum();
        if infeasibility > tol * R::of(m as f64) {
            return Err(Error::Decomposition {
                residual: infeasibility.to_f64_lossy(),
            });
        }
        // Drive remaining zero-level artificials out of the basis.
        for i in 0..m {
            if basis[i] >= n + m {
                if let Some(j) = (0..n + m).find(|&j| t[i][j].abs() > tol) {
                    pivot(&mut t, &mut basis, i, j);
                }
            }
        }
        allowed[n + m..].iter_mut().for_each(|v| *v = false);
    }
    let mut cost = vec![R::zero(); cols];
    cost[..n].copy_from_slice(c);
    simplex(&mut t, &mut basis, &cost, &allowed, tol)?;
    let mut x = vec![R::zero(); n];
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = t[i][cols];
        }
    }
    Ok(x)
}

fn pivot<R: Real>(t: &mut [Vec<R>], basis: &mut [usize], row: usize, col: usize) {
    let p = t[row][col];
    t[row].iter_mut().for_each(|v| *v /= p);
    let pivot_row = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i == row {
            continue;
        }
        let f = r[col];
        if f != R::zero() {
            for (v, &pv) in r.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
    }
    basis[row] = col;
}

fn simplex<R: Real>(t: &mut [Vec<R>], basis: &mut [usize], cost: &[R], allowed: &[bool], tol: R) -> Result<()> {
    let m = t.len();
    let cols = cost.len();
    let max_iter = 50 * (m + cols);
    for iteration in 0..max_iter {
        let entering = (0..cols).filter(|&j| allowed[j] && !basis.contains(&j)).find(|&j| {
            let reduced = cost[j] - (0..m).map(|i| cost[basis[i]] * t[i][j]).sum::<R>();
            reduced < -tol
        });
        let Some(j) = entering else { return Ok(()) };
        let mut best: Option<(R, usize)> = None;
        for i in 0..m {
            if t[i][j] > tol {
                let ratio = t[i][cols] / t[i][j];
                let better = match best {
                    None => true,
                    Some((r, k)) => ratio < r - tol || (ratio <= r + tol && basis[i] < basis[k]),
                };
                if better {
                    best = Some((ratio, i));
                }
            }
        }
        let Some((_, row)) = best else {
            return Err(Error::Numeric {
                reason: "linear program is unbounded".into(),
                iterations: iteration,
                residual: f64::INFINITY,
            });
        };
        pivot(t, basis, row, j);
    }
    Err(Error::Numeric {
        reason: "simplex iteration limit".into(),
        iterations: max_iter,
        residual: f64::NAN,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpdRepresentation<R> {
    pub basis: Vec<Superoperator<R>>,
    pub eta: Vec<R>,
}

impl<R: Real> QpdRepresentation<R> {
    pub fn gamma_plus(&self) -> R {
        self.eta.iter().filter(|&&e| e > R::zero()).copied().sum()
    }

    pub fn gamma_minus(&self) -> R {
        self.eta.iter().filter(|&&e| e < R::zero()).map(|e| -*e).sum()
    }

    pub fn gamma(&self) -> R {
        self.eta.iter().map(|e| e.abs()).sum()
    }

    /// `Σ η_α 𝒪_α`.
    pub fn reconstruct(&self) -> Superoperator<R> {
        let mut acc = self.basis[0].scaled(R::zero());
        for (o, &e) in self.basis.iter().zip(&self.eta) {
            acc = acc.add(&o.scaled(e));
        }
        acc
    }

    fn mixture(&self, positive: bool) -> Option<Superoperator<R>> {
        let pick = |e: R| if positive { e > R::zero() } else { e < R::zero() };
        let total: R = self.eta.iter().filter(|&&e| pick(e)).map(|e| e.abs()).sum();
        if total <= R::zero() {
            return None;
        }
        let mut acc = self.basis[0].scaled(R::zero());
        for (o, &e) in self.basis.iter().zip(&self.eta) {
            if pick(e) {
                acc = acc.add(&o.scaled(e.abs() / total));
            }
        }
        Some(acc)
    }

    /// Normalized positive mixture `Φ⁺`.
    pub fn phi_plus(&self) -> Option<Superoperator<R>> {
        self.mixture(true)
    }

    /// Normalized negative mixture `Φ⁻`.
    pub fn phi_minus(&self) -> Option<Superoperator<R>> {
        self.mixture(false)
    }
}

/// Minimum one-norm `η` with `Σ η_α 𝒪_α = 𝒢` entrywise within `1e-10`.
pub fn optimal_representation<R: Real>(target: &Superoperator<R>, basis: &[Superoperator<R>]) -> Result<QpdRepresentation<R>> {
    if basis.is_empty() {
        return Err(Error::Argument("empty basis".into()));
    }
    if let Some(o) = basis.iter().find(|o| o.n_qubits != target.n_qubits) {
        return Err(Error::Dimension {
            expected: target.n_qubits,
            found: o.n_qubits,
        });
    }
    let k = basis.len();
    let entries = target.ptm.as_slice().len();
    let slack = R::of(1e-10).max(R::epsilon() * R::of(1e3));
    // Variables (η⁺, η⁻); rows ±(Σ (η⁺ − η⁻) 𝒪 − 𝒢) ≤ slack.
    let mut a = Matrix::zeros(2 * entries, 2 * k);
    let mut b = vec![R::zero(); 2 * entries];
    for e in 0..entries {
        for (j, o) in basis.iter().enumerate() {
            let v = o.ptm.as_slice()[e];
            a[(e, j)] = v;
            a[(e, k + j)] = -v;
            a[(entries + e, j)] = -v;
            a[(entries + e, k + j)] = v;
        }
        let g = target.ptm.as_slice()[e];
        b[e] = g + slack;
        b[entries + e] = -g + slack;
    }
    let x = linprog(&vec![R::one(); 2 * k], &a, &b)?;
    Ok(QpdRepresentation {
        basis: basis.to_vec(),
        eta: (0..k).map(|j| x[j] - x[k + j]).collect(),
    })
}

/// Canonical noise scaling overhead `γ − ξ(γ − 1)`.
pub fn overhead<R: Real>(gamma: R, xi: R) -> R {
    gamma - xi * (gamma - R::one())
}

/// Two-component representation of the noise-scaled map at strength `ξ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledQpd<R> {
    pub rep: QpdRepresentation<R>,
    pub xi: R,
    /// Signed weight of `Φ⁺`: `γ⁺ − ξγ⁻`.
    pub plus: R,
    /// Signed weight of `Φ⁻`: `−(1 − ξ)γ⁻`.
    pub minus: R,
}

pub fn noise_scaled_rep<R: Real>(rep: &QpdRepresentation<R>, xi: R) -> Result<ScaledQpd<R>> {
    let (gp, gm) = (rep.gamma_plus(), rep.gamma_minus());
    let upper = if gm > R::zero() { gp / gm } else { R::infinity() };
    if !(xi >= R::zero() && xi <= upper) {
        return Err(Error::Argument(format!("noise strength {xi} outside [0, {upper}]")));
    }
    Ok(ScaledQpd {
        rep: rep.clone(),
        xi,
        plus: gp - xi * gm,
        minus: -(R::one() - xi) * gm,
    })
}

impl<R: Real> ScaledQpd<R> {
    pub fn gamma(&self) -> R {
        self.plus.abs() + self.minus.abs()
    }

    /// `plus·Φ⁺ + minus·Φ⁻`.
    pub fn map(&self) -> Superoperator<R> {
        let zero = self.rep.basis[0].scaled(R::zero());
        let p = self.rep.phi_plus().map_or(zero.clone(), |s| s.scaled(self.plus));
        let m = self.rep.phi_minus().map_or(zero, |s| s.scaled(self.minus));
        p.add(&m)
    }

    /// Every `(basis index, sign, probability)` the sampler can return.
    pub fn outcomes(&self) -> Vec<(usize, R, R)> {
        let g = self.gamma();
        let (gp, gm) = (self.rep.gamma_plus(), self.rep.gamma_minus());
        let mut out = Vec::new();
        for (i, &e) in self.rep.eta.iter().enumerate() {
            let (weight, total) = if e > R::zero() {
                (self.plus, gp)
            } else if e < R::zero() {
                (self.minus, gm)
            } else {
                continue;
            };
            if weight == R::zero() {
                continue;
            }
            let sign = if weight > R::zero() { R::one() } else { -R::one() };
            out.push((i, sign, weight.abs() / g * e.abs() / total));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QpdSample<R> {
    pub index: usize,
    pub sign: R,
    /// Estimator scale `γ^(ξ)`.
    pub weight: R,
}

pub fn sample_qpd<R: Real>(scaled: &ScaledQpd<R>, rng: &mut impl Rng) -> QpdSample<R> {
    let g = scaled.gamma();
    let u = R::of(rng.gen::<f64>());
    let outcomes = scaled.outcomes();
    let mut acc = R::zero();
    for &(index, sign, p) in &outcomes {
        acc += p;
        if u < acc {
            return QpdSample { index, sign, weight: g };
        }
    }
    let (index, sign, _) = *outcomes.last().expect("non-empty representation");
    QpdSample { index, sign, weight: g }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedPtm {
    pub name: String,
    pub ptm: Vec<Vec<f64>>,
}

/// Target and noisy basis channels, as read from a PTM file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpdProblem {
    pub n_qubits: usize,
    pub basis: Vec<NamedPtm>,
    pub target: Vec<Vec<f64>>,
}

impl NamedPtm {
    pub fn new(name: impl Into<String>, s: &Superoperator<f64>) -> Self {
        Self {
            name: name.into(),
            ptm: s.ptm.to_rows(),
        }
    }

    pub fn superoperator(&self, n_qubits: usize) -> Result<Superoperator<f64>> {
        rows_to_superoperator(&self.name, &self.ptm, n_qubits)
    }
}

fn rows_to_superoperator(name: &str, rows: &[Vec<f64>], n_qubits: usize) -> Result<Superoperator<f64>> {
    check_qubits(n_qubits)?;
    let d = 1 << (2 * n_qubits);
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Validation(format!("PTM `{name}` must be {d}×{d}")));
    }
    Superoperator::new(n_qubits, Matrix::from_rows(rows))
}

impl QpdProblem {
    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        p.target_superoperator()?;
        for b in &p.basis {
            b.superoperator(p.n_qubits)?;
        }
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn target_superoperator(&self) -> Result<Superoperator<f64>> {
        rows_to_superoperator("target", &self.target, self.n_qubits)
    }

    pub fn solve(&self) -> Result<QpdRepresentation<f64>> {
        let target = self.target_superoperator()?;
        let basis = self
            .basis
            .iter()
            .map(|b| b.superoperator(self.n_qubits))
            .collect::<Result<Vec<_>>>()?;
        optimal_representation(&target, &basis)
    }

    /// Ideal `X` over depolarized `{I, X, Y, Z}`; `γ = (1 + p/2)/(1 − p)`.
    pub fn depolarizing_x(p: f64) -> Result<Self> {
        let d = depolarizing(p)?;
        let unitary = |g: Gate| ptm_from_unitary(&g.matrix::<f64>());
        let mut basis = vec![NamedPtm::new("noisy_i", &d)];
        for (name, g) in [("noisy_x", Gate::X(0)), ("noisy_y", Gate::Y(0)), ("noisy_z", Gate::Z(0))] {
            basis.push(NamedPtm::new(name, &d.compose(&unitary(g)?)?));
        }
        Ok(Self {
            n_qubits: 1,
            basis,
            target: unitary(Gate::X(0))?.ptm.to_rows(),
        })
    }
}

/// Depolarizing strength giving overhead `γ` in [`QpdProblem::depolarizing_x`].
pub fn depolarizing_for_gamma(gamma: f64) -> f64 {
    (gamma - 1.0) / (gamma + 0.5)
}
