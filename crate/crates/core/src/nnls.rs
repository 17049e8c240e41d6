//! Non-negative least squares by the Lawson-Hanson active-set method.

use crate::error::{Error, Result};
use crate::linalg::{lstsq, Matrix};
use crate::real::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct NnlsSolution<R> {
    pub x: Vec<R>,
    /// Euclidean norm of `A x - b`.
    pub residual: R,
    pub iterations: usize,
}

/// Solves `min ‖A x − b‖₂` subject to `x ≥ 0`.
pub fn nnls<R: Real>(a: &Matrix<R>, b: &[R]) -> Result<NnlsSolution<R>> {
    nnls_with_limit(a, b, 30 * a.cols().max(1))
}

pub fn nnls_with_limit<R: Real>(a: &Matrix<R>, b: &[R], max_iter: usize) -> Result<NnlsSolution<R>> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(Error::Dimension {
            expected: m,
            found: b.len(),
        });
    }
    let scale = b
        .iter()
        .chain(a.as_slice())
        .fold(R::one(), |s, v| s.max(v.abs()));
    let tol = R::pivot_tolerance() * scale * scale * R::of((m.max(n)) as f64);

    let mut x = vec![R::zero(); n];
    let mut passive = vec![false; n];
    // Columns found to be dependent on the passive set; skipped until the set changes.
    let mut blocked = vec![false; n];
    let mut iterations = 0;

    loop {
        let w = gradient(a, b, &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && !blocked[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap_or(std::cmp::Ordering::Equal));
        let Some(t) = candidate else { break };
        passive[t] = true;

        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::Numeric {
                    reason: "non-negative least squares did not converge".into(),
                    iterations,
                    residual: residual_norm(a, b, &x).to_f64_lossy(),
                });
            }
            let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let sub = Matrix::from_fn(m, cols.len(), |i, k| a[(i, cols[k])]);
            let Some(z_sub) = lstsq(&sub, b) else {
                // The newest column is dependent on the others.
                passive[t] = false;
                blocked[t] = true;
                break;
            };
            let mut z = vec![R::zero(); n];
            for (k, &j) in cols.iter().enumerate() {
                z[j] = z_sub[k];
            }
            if cols.iter().all(|&j| z[j] > R::zero()) {
                x = z;
                blocked.iter_mut().for_each(|b| *b = false);
                break;
            }
            let alpha = cols
                .iter()
                .filter(|&&j| z[j] <= R::zero())
                .map(|&j| x[j] / (x[j] - z[j]))
                .fold(R::infinity(), R::min);
            for j in 0..n {
                let step = z[j] - x[j];
                x[j] += alpha * step;
                if passive[j] && x[j] <= R::pivot_tolerance() {
                    passive[j] = false;
                    x[j] = R::zero();
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    Ok(NnlsSolution {
        residual: residual_norm(a, b, &x),
        x,
        iterations,
    })
}

/// `Aᵀ (b − A x)`.
fn gradient<R: Real>(a: &Matrix<R>, b: &[R], x: &[R]) -> Vec<R> {
    let ax = a.matvec(x);
    let r: Vec<R> = b.iter().zip(&ax).map(|(&bi, &v)| bi - v).collect();
    (0..a.cols())
        .map(|j| (0..a.rows()).map(|i| a[(i, j)] * r[i]).sum())
        .collect()
}

fn residual_norm<R: Real>(a: &Matrix<R>, b: &[R], x: &[R]) -> R {
    a.matvec(x)
        .iter()
        .zip(b)
        .map(|(&v, &bi)| (v - bi) * (v - bi))
        .sum::<R>()
        .sqrt()
}
