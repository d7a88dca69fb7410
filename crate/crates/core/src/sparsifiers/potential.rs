//! Barrier potentials and the per-column gain functions of the greedy samplers.
//!
//! Gains are evaluated in the eigenbasis of the accumulated matrix: with
//! `M = Q diag(λ) Q^T` and `w = Q^T v`, every quadratic form
//! `v^T (M - sI)^{-p} v` is `Σ w_j^2 / (λ_j - s)^p`.

use crate::error::{Error, Result};
use crate::matrix::{dot, sym_eig, DenseMatrix};

/// `φ(l, M) = Σ 1/(λ_i - l)`, defined for `l < λ_min(M)`.
pub fn lower_potential(shift_point: f64, m: &DenseMatrix) -> Result<f64> {
    let eig = sym_eig(m)?;
    lower_potential_of(shift_point, &eig.eigenvalues)
}

/// `φ̂(u, M) = Σ 1/(u - λ_i)`, defined for `u > λ_max(M)`.
pub fn upper_potential(shift_point: f64, m: &DenseMatrix) -> Result<f64> {
    let eig = sym_eig(m)?;
    upper_potential_of(shift_point, &eig.eigenvalues)
}

pub(crate) fn lower_potential_of(shift: f64, eigenvalues: &[f64]) -> Result<f64> {
    let lmin = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(shift < lmin) {
        return Err(Error::BarrierViolation { shift, eigenvalue: lmin });
    }
    Ok(eigenvalues.iter().map(|l| 1.0 / (l - shift)).sum())
}

pub(crate) fn upper_potential_of(shift: f64, eigenvalues: &[f64]) -> Result<f64> {
    let lmax = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(shift > lmax) {
        return Err(Error::BarrierViolation { shift, eigenvalue: lmax });
    }
    Ok(eigenvalues.iter().map(|l| 1.0 / (shift - l)).sum())
}

/// Gain evaluator for a fixed spectrum, barrier and shift.
///
/// For the lower barrier `inv_j = 1/(λ_j - l')` and the gain is
/// `Σ w²inv² / (φ(l') - φ(l)) - Σ w²inv`. For the upper barrier
/// `inv_j = 1/(u' - λ_j)` and the gain is `Σ w²inv² / (φ̂(u) - φ̂(u')) + Σ w²inv`.
#[derive(Debug, Clone)]
pub(crate) struct GainKernel {
    inv: Vec<f64>,
    denom: f64,
    sign: f64,
}

impl GainKernel {
    pub(crate) fn lower(eigenvalues: &[f64], barrier: f64, shift: f64) -> Result<Self> {
        let shifted = barrier + shift;
        let lmin = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if !(shifted < lmin) {
            return Err(Error::BarrierViolation { shift: shifted, eigenvalue: lmin });
        }
        let inv: Vec<f64> = eigenvalues.iter().map(|l| 1.0 / (l - shifted)).collect();
        // 1/(λ-l') - 1/(λ-l) = δ / ((λ-l')(λ-l)), free of cancellation.
        let denom: f64 = eigenvalues
            .iter()
            .zip(&inv)
            .map(|(l, i)| shift * i / (l - barrier))
            .sum();
        Self::finish(inv, denom, -1.0)
    }

    pub(crate) fn upper(eigenvalues: &[f64], barrier: f64, shift: f64) -> Result<Self> {
        let shifted = barrier + shift;
        let lmax = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(barrier > lmax && shifted > lmax) {
            return Err(Error::BarrierViolation { shift: barrier.min(shifted), eigenvalue: lmax });
        }
        let inv: Vec<f64> = eigenvalues.iter().map(|l| 1.0 / (shifted - l)).collect();
        let denom: f64 = eigenvalues
            .iter()
            .zip(&inv)
            .map(|(l, i)| shift * i / (barrier - l))
            .sum();
        Self::finish(inv, denom, 1.0)
    }

    fn finish(inv: Vec<f64>, denom: f64, sign: f64) -> Result<Self> {
        if !(denom > 0.0 && denom.is_finite()) {
            return Err(Error::DegeneratePotential);
        }
        Ok(Self { inv, denom, sign })
    }

    /// Gain of a vector already expressed in the eigenbasis.
    #[inline]
    pub(crate) fn eval(&self, w: &[f64]) -> f64 {
        let mut quad2 = 0.0;
        let mut quad1 = 0.0;
        for (&x, &i) in w.iter().zip(&self.inv) {
            let xi = x * x * i;
            quad1 += xi;
            quad2 += xi * i;
        }
        quad2 / self.denom + self.sign * quad1
    }

    /// Gain for a standard basis vector `e_j` when the matrix is diagonal.
    #[inline]
    pub(crate) fn eval_basis(&self, j: usize) -> f64 {
        let i = self.inv[j];
        i * i / self.denom + self.sign * i
    }
}

fn check_vector(len: usize, m: &DenseMatrix) -> Result<()> {
    if m.rows() != len {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {len} against {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

/// Lower-barrier gain `L(v, δ_L, M, l)` with `l' = l + δ_L`.
pub fn lower_gain(v: &[f64], shift: f64, m: &DenseMatrix, barrier: f64) -> Result<f64> {
    check_vector(v.len(), m)?;
    let eig = sym_eig(m)?;
    let kernel = GainKernel::lower(&eig.eigenvalues, barrier, shift)?;
    Ok(kernel.eval(&eig.project(v)))
}

/// Frobenius upper gain `U(z, δ) = z^T z / δ`.
pub fn upper_gain_frob(z: &[f64], delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta = {delta} must be positive")));
    }
    Ok(dot(z, z) / delta)
}

/// Spectral upper gain `Û(q, δ_Q, M, u)` with `u' = u + δ_Q`.
pub fn upper_gain_spec(q: &[f64], shift: f64, m: &DenseMatrix, barrier: f64) -> Result<f64> {
    check_vector(q.len(), m)?;
    let eig = sym_eig(m)?;
    let kernel = GainKernel::upper(&eig.eigenvalues, barrier, shift)?;
    Ok(kernel.eval(&eig.project(q)))
}
