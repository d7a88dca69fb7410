//! Deterministic dual-set greedy samplers.
//!
//! Both samplers pick one column per step. A lower spectral barrier
//! `l_τ = τ - sqrt(rk)` on `A_τ = Σ t v v^T` is advanced by one each step
//! while a second barrier bounds the companion set: the total squared
//! Frobenius mass (sampler one) or the largest eigenvalue of
//! `B_τ = Σ t q q^T` (sampler two). At step `τ` the first column `i` (in
//! ascending order) with `0 < U_i <= L_i` is taken with
//! `t = 2 / (U_i + L_i)`, the reciprocal midpoint of the admissible interval.

use serde::Serialize;

use super::plan::SamplingPlan;
use super::potential::GainKernel;
use crate::error::{Error, Result};
use crate::matrix::{sym_eig, DenseMatrix};

/// Allowed deviation of `V V^T` (and `Q Q^T`) from the identity.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Relative slack for the end-of-run barrier checks.
pub const BARRIER_SLACK: f64 = 1e-9;

/// Barrier state at the start of one greedy step.
#[derive(Debug, Clone, Serialize)]
pub struct BarrierStep {
    pub step: usize,
    pub lower_barrier: f64,
    pub lambda_min: f64,
    pub upper_barrier: Option<f64>,
    pub lambda_max: Option<f64>,
    /// Selected column (0-based) and its raw step size.
    pub index: usize,
    pub t: f64,
    pub lower_gain: f64,
    pub upper_gain: f64,
}

/// Per-step barrier history plus the final state after `r` steps.
#[derive(Debug, Clone, Serialize)]
pub struct SamplerTrace {
    pub steps: Vec<BarrierStep>,
    pub final_lower_barrier: f64,
    pub final_lambda_min: f64,
    pub final_upper_barrier: Option<f64>,
    pub final_lambda_max: Option<f64>,
}

impl SamplerTrace {
    /// Whether `λ_min(A_τ) > l_τ` and `λ_max(B_τ) < u_τ` at every recorded state.
    pub fn barriers_respected(&self) -> bool {
        let lower_ok = |lam: f64, bar: f64| lam > bar;
        let upper_ok = |lam: Option<f64>, bar: Option<f64>| match (lam, bar) {
            (Some(l), Some(b)) => l < b,
            _ => true,
        };
        self.steps.iter().all(|s| {
            lower_ok(s.lambda_min, s.lower_barrier) && upper_ok(s.lambda_max, s.upper_barrier)
        }) && lower_ok(self.final_lambda_min, self.final_lower_barrier)
            && upper_ok(self.final_lambda_max, self.final_upper_barrier)
    }
}

/// The companion-set barrier of a greedy run.
trait UpperBarrier {
    fn prepare(&mut self, step: usize) -> Result<()>;
    fn gain(&self, i: usize) -> f64;
    fn update(&mut self, i: usize, t: f64);
    /// Current (barrier, λ_max) for spectral barriers.
    fn state(&self) -> Option<(f64, f64)>;
    /// Barrier value after the final step.
    fn final_state(&mut self, r: usize) -> Result<Option<(f64, f64)>>;
}

struct FrobeniusBarrier {
    gains: Vec<f64>,
}

impl FrobeniusBarrier {
    fn new(b: &DenseMatrix, k: usize, r: usize) -> Self {
        let norms = b.column_norms_sq();
        let total: f64 = norms.iter().sum();
        let gains = if total > 0.0 {
            let delta = total / (1.0 - (k as f64 / r as f64).sqrt());
            norms.iter().map(|x| x / delta).collect()
        } else {
            vec![0.0; norms.len()]
        };
        Self { gains }
    }
}

impl UpperBarrier for FrobeniusBarrier {
    fn prepare(&mut self, _step: usize) -> Result<()> {
        Ok(())
    }
    fn gain(&self, i: usize) -> f64 {
        self.gains[i]
    }
    fn update(&mut self, _i: usize, _t: f64) {}
    fn state(&self) -> Option<(f64, f64)> {
        None
    }
    fn final_state(&mut self, _r: usize) -> Result<Option<(f64, f64)>> {
        Ok(None)
    }
}

/// `δ_Q = (1 + sqrt(ℓ2/r)) / (1 - sqrt(k/r))`, the smallest shift for which
/// the summed upper gains stay below the summed lower gains and the final
/// spectral norm lands at `1 + sqrt(ℓ2/r)`.
pub fn spectral_shift(k: usize, l2: usize, r: usize) -> f64 {
    (1.0 + (l2 as f64 / r as f64).sqrt()) / (1.0 - (k as f64 / r as f64).sqrt())
}

fn upper_barrier_at(step: usize, delta: f64, l2: usize, r: usize) -> f64 {
    delta * (step as f64 + ((l2 * r) as f64).sqrt())
}

/// `Q = I_n`: `B_τ` stays diagonal, so each gain is O(1).
struct DiagonalSpectralBarrier {
    diag: Vec<f64>,
    delta: f64,
    r: usize,
    barrier: f64,
    kernel: Option<GainKernel>,
}

impl UpperBarrier for DiagonalSpectralBarrier {
    fn prepare(&mut self, step: usize) -> Result<()> {
        self.barrier = upper_barrier_at(step, self.delta, self.diag.len(), self.r);
        self.kernel = Some(GainKernel::upper(&self.diag, self.barrier, self.delta)?);
        Ok(())
    }
    fn gain(&self, i: usize) -> f64 {
        self.kernel.as_ref().expect("prepared").eval_basis(i)
    }
    fn update(&mut self, i: usize, t: f64) {
        self.diag[i] += t;
    }
    fn state(&self) -> Option<(f64, f64)> {
        Some((self.barrier, self.diag.iter().copied().fold(f64::NEG_INFINITY, f64::max)))
    }
    fn final_state(&mut self, r: usize) -> Result<Option<(f64, f64)>> {
        let barrier = upper_barrier_at(r, self.delta, self.diag.len(), self.r);
        Ok(Some((barrier, self.diag.iter().copied().fold(f64::NEG_INFINITY, f64::max))))
    }
}

/// General `Q` with orthonormal rows; eigendecomposition of `B_τ` each step.
struct DenseSpectralBarrier {
    /// Q^T, n×ℓ2: row i is q_i.
    q_cols: DenseMatrix,
    accum: DenseMatrix,
    delta: f64,
    r: usize,
    barrier: f64,
    lambda_max: f64,
    kernel: Option<GainKernel>,
    /// Row i is q_i in the eigenbasis of `accum`.
    projected: DenseMatrix,
}

impl UpperBarrier for DenseSpectralBarrier {
    fn prepare(&mut self, step: usize) -> Result<()> {
        let l2 = self.accum.rows();
        self.barrier = upper_barrier_at(step, self.delta, l2, self.r);
        let eig = sym_eig(&self.accum)?;
        self.lambda_max = eig.max();
        self.kernel = Some(GainKernel::upper(&eig.eigenvalues, self.barrier, self.delta)?);
        self.projected = self.q_cols.matmul(&eig.eigenvectors)?;
        Ok(())
    }
    fn gain(&self, i: usize) -> f64 {
        self.kernel.as_ref().expect("prepared").eval(self.projected.row(i))
    }
    fn update(&mut self, i: usize, t: f64) {
        rank_one_update(&mut self.accum, self.q_cols.row(i), t);
    }
    fn state(&self) -> Option<(f64, f64)> {
        Some((self.barrier, self.lambda_max))
    }
    fn final_state(&mut self, r: usize) -> Result<Option<(f64, f64)>> {
        let barrier = upper_barrier_at(r, self.delta, self.accum.rows(), self.r);
        Ok(Some((barrier, sym_eig(&self.accum)?.max())))
    }
}

fn rank_one_update(m: &mut DenseMatrix, v: &[f64], t: f64) {
    for (i, &vi) in v.iter().enumerate() {
        for (j, &vj) in v.iter().enumerate() {
            m[(i, j)] += t * vi * vj;
        }
    }
}

fn check_orthonormal_rows(m: &DenseMatrix, name: &str) -> Result<()> {
    let dev = m
        .outer_gram()
        .sub(&DenseMatrix::identity(m.rows()))?
        .max_abs();
    if dev > ORTHONORMAL_TOL {
        return Err(Error::InvalidArgument(format!(
            "{name} must have orthonormal rows (max deviation {dev:e})"
        )));
    }
    Ok(())
}

fn check_sizes(vt: &DenseMatrix, r: usize) -> Result<()> {
    let k = vt.rows();
    if r <= k {
        return Err(Error::InvalidArgument(format!("r = {r} must exceed k = {k}")));
    }
    check_orthonormal_rows(vt, "V^T")
}

fn greedy(vt: &DenseMatrix, upper: &mut dyn UpperBarrier, r: usize) -> Result<(SamplingPlan, SamplerTrace)> {
    let (k, n) = vt.shape();
    let v_cols = vt.transpose();
    let sqrt_rk = ((r * k) as f64).sqrt();
    let mut accum = DenseMatrix::zeros(k, k);
    let mut indices = Vec::with_capacity(r);
    let mut steps_t = Vec::with_capacity(r);
    let mut steps = Vec::with_capacity(r);

    for step in 0..r {
        let barrier = step as f64 - sqrt_rk;
        let eig = sym_eig(&accum)?;
        let kernel = GainKernel::lower(&eig.eigenvalues, barrier, 1.0)?;
        let projected = v_cols.matmul(&eig.eigenvectors)?;
        upper.prepare(step)?;

        let mut best_lower = f64::NEG_INFINITY;
        let mut best_upper = f64::INFINITY;
        let mut chosen = None;
        for i in 0..n {
            let lg = kernel.eval(projected.row(i));
            let ug = upper.gain(i);
            if lg > 0.0 && ug <= lg {
                chosen = Some((i, lg, ug));
                break;
            }
            best_lower = best_lower.max(lg);
            best_upper = best_upper.min(ug);
        }
        let (i, lg, ug) = chosen.ok_or(Error::NumericalSearch { step, barrier, best_lower, best_upper })?;
        let t = 2.0 / (ug + lg);

        let (upper_barrier, lambda_max) = upper.state().unzip();
        steps.push(BarrierStep {
            step,
            lower_barrier: barrier,
            lambda_min: eig.min(),
            upper_barrier,
            lambda_max,
            index: i,
            t,
            lower_gain: lg,
            upper_gain: ug,
        });
        rank_one_update(&mut accum, v_cols.row(i), t);
        upper.update(i, t);
        indices.push(i);
        steps_t.push(t);
    }

    let final_lower_barrier = r as f64 - sqrt_rk;
    let final_lambda_min = sym_eig(&accum)?.min();
    let (final_upper_barrier, final_lambda_max) = upper.final_state(r)?.unzip();
    let trace = SamplerTrace {
        steps,
        final_lower_barrier,
        final_lambda_min,
        final_upper_barrier,
        final_lambda_max,
    };

    if final_lambda_min <= final_lower_barrier - BARRIER_SLACK * final_lower_barrier.abs().max(1.0) {
        return Err(Error::BarrierViolation { shift: final_lower_barrier, eigenvalue: final_lambda_min });
    }
    if let (Some(u), Some(l)) = (final_upper_barrier, final_lambda_max) {
        if l >= u + BARRIER_SLACK * u.abs().max(1.0) {
            return Err(Error::BarrierViolation { shift: u, eigenvalue: l });
        }
    }

    let scale = ((1.0 - (k as f64 / r as f64).sqrt()) / r as f64).sqrt();
    let weights = steps_t.iter().map(|t| t.sqrt() * scale).collect();
    Ok((SamplingPlan::new(n, indices, weights)?, trace))
}

/// Dual-set sampler with a Frobenius companion: `σ_k(V^T Ω S) ≥ 1 - sqrt(k/r)`
/// and `‖B Ω S‖_F ≤ ‖B‖_F`.
pub fn deterministic_sampling_one(vt: &DenseMatrix, b: &DenseMatrix, r: usize) -> Result<SamplingPlan> {
    deterministic_sampling_one_traced(vt, b, r).map(|(p, _)| p)
}

pub fn deterministic_sampling_one_traced(
    vt: &DenseMatrix,
    b: &DenseMatrix,
    r: usize,
) -> Result<(SamplingPlan, SamplerTrace)> {
    check_sizes(vt, r)?;
    if b.cols() != vt.cols() {
        return Err(Error::DimensionMismatch(format!(
            "B has {} columns, V^T has {}",
            b.cols(),
            vt.cols()
        )));
    }
    let mut upper = FrobeniusBarrier::new(b, vt.rows(), r);
    greedy(vt, &mut upper, r)
}

/// Dual-set sampler with a spectral companion: `σ_k(V^T Ω S) ≥ 1 - sqrt(k/r)`
/// and `‖Q Ω S‖_2 ≤ 1 + sqrt(ℓ2/r)`.
///
/// An exact identity `Q` takes the diagonal fast path.
pub fn deterministic_sampling_two(vt: &DenseMatrix, q: &DenseMatrix, r: usize) -> Result<SamplingPlan> {
    deterministic_sampling_two_traced(vt, q, r).map(|(p, _)| p)
}

pub fn deterministic_sampling_two_traced(
    vt: &DenseMatrix,
    q: &DenseMatrix,
    r: usize,
) -> Result<(SamplingPlan, SamplerTrace)> {
    if q.cols() != vt.cols() {
        return Err(Error::DimensionMismatch(format!(
            "Q has {} columns, V^T has {}",
            q.cols(),
            vt.cols()
        )));
    }
    if q.is_square() && *q == DenseMatrix::identity(q.rows()) {
        return deterministic_sampling_two_identity_traced(vt, r);
    }
    check_sizes(vt, r)?;
    check_orthonormal_rows(q, "Q")?;
    let l2 = q.rows();
    let mut upper = DenseSpectralBarrier {
        q_cols: q.transpose(),
        accum: DenseMatrix::zeros(l2, l2),
        delta: spectral_shift(vt.rows(), l2, r),
        r,
        barrier: 0.0,
        lambda_max: 0.0,
        kernel: None,
        projected: DenseMatrix::zeros(1, 1),
    };
    greedy(vt, &mut upper, r)
}

/// [`deterministic_sampling_two`] with `Q = I_n` without materializing it.
pub fn deterministic_sampling_two_identity(vt: &DenseMatrix, r: usize) -> Result<SamplingPlan> {
    deterministic_sampling_two_identity_traced(vt, r).map(|(p, _)| p)
}

pub fn deterministic_sampling_two_identity_traced(
    vt: &DenseMatrix,
    r: usize,
) -> Result<(SamplingPlan, SamplerTrace)> {
    check_sizes(vt, r)?;
    let n = vt.cols();
    let mut upper = DiagonalSpectralBarrier {
        diag: vec![0.0; n],
        delta: spectral_shift(vt.rows(), n, r),
        r,
        barrier: 0.0,
        kernel: None,
    };
    greedy(vt, &mut upper, r)
}
