//! ADMM for signed-Laplacian targets.
//!
//! The precision is parameterized as `Θ = PΞPᵀ` with `P` an orthonormal basis of `1^⊥`, so
//! every iterate has exact zero row sums. The same solver serves the Laplacian-constrained
//! Gaussian model (input `S_OO`) and the Hüsler–Reiss surrogate (input `−Γ̄/2`).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extremes::VariogramMatrix;
use crate::gauss_admm::{check_square_input, drive, solve_quadratic_block, AdmmParams, Iterates};
use crate::matcore::{log_det_pd, log_pseudo_det, ProjectionBasis, SymMatrix};
use crate::penalty::{golazo_value, GolazoBounds};

/// Output of [`solve_latent_laplacian`].
#[derive(Clone, Debug, Serialize)]
pub struct LaplacianResult {
    /// `Θ̂ = PΞ̂Pᵀ`.
    pub theta: SymMatrix,
    /// `Ξ̂`, the `(d−1)×(d−1)` compressed precision.
    pub xi: SymMatrix,
    pub sparse: SymMatrix,
    pub low_rank: SymMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub rel_chg_trace: Vec<f64>,
    pub ier_trace: Vec<f64>,
    pub objective_trace: Vec<f64>,
}

impl LaplacianResult {
    pub fn final_rel_chg(&self) -> f64 {
        self.rel_chg_trace.last().copied().unwrap_or(f64::NAN)
    }

    pub fn final_ier(&self) -> f64 {
        self.ier_trace.last().copied().unwrap_or(f64::NAN)
    }
}

fn check_basis(dim: usize, basis: &ProjectionBasis) -> Result<()> {
    if basis.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: basis.dim(),
        });
    }
    Ok(())
}

fn xi_update_inner(
    s_in: &SymMatrix,
    a_k: &SymMatrix,
    b_k: &SymMatrix,
    dual_k: &SymMatrix,
    xi_k: &SymMatrix,
    basis: &ProjectionBasis,
    params: &AdmmParams,
) -> Result<(SymMatrix, SymMatrix, f64)> {
    let sigma = params.augmentation;
    let inner = &(s_in + &(b_k - a_k).scale(sigma)) - dual_k;
    let mut v = basis.compress(&inner);
    if params.proximal_weight != 0.0 {
        v = &v - &xi_k.scale(params.proximal_weight * sigma);
    }
    let (xi, log_det) = solve_quadratic_block(&v, params, "Xi-update matrix")?;
    let theta = basis.expand(&xi);
    Ok((xi, theta, log_det))
}

/// Closed-form `Ξ`-subproblem. Eigendecomposes
/// `Pᵀ(S_in + σ(B_k − A_k) − Λ_k)P − ρσΞ_k` and applies the same eigenvalue map as
/// [`m_update`](crate::gauss_admm::m_update). Returns `(Ξ_next, PΞ_nextPᵀ)`.
pub fn xi_update(
    s_in: &SymMatrix,
    a_k: &SymMatrix,
    b_k: &SymMatrix,
    dual_k: &SymMatrix,
    xi_k: &SymMatrix,
    basis: &ProjectionBasis,
    params: &AdmmParams,
) -> Result<(SymMatrix, SymMatrix)> {
    params.validate()?;
    check_basis(s_in.dim(), basis)?;
    if xi_k.dim() + 1 != s_in.dim() {
        return Err(Error::DimensionMismatch {
            expected: s_in.dim() - 1,
            got: xi_k.dim(),
        });
    }
    let (xi, theta, _) = xi_update_inner(s_in, a_k, b_k, dual_k, xi_k, basis, params)?;
    Ok((xi, theta))
}

/// Estimates `(Θ̂, Â, B̂)` with `Θ̂ = Â − B̂` a signed Laplacian.
pub fn solve_latent_laplacian(
    s_in: &SymMatrix,
    bounds: &GolazoBounds,
    params: &AdmmParams,
    basis: &ProjectionBasis,
) -> Result<LaplacianResult> {
    params.validate()?;
    check_square_input(s_in, bounds)?;
    check_basis(s_in.dim(), basis)?;
    let d = s_in.dim();
    if d < 2 {
        return Err(Error::InvalidDimension(format!(
            "Laplacian models need at least 2 variables, got {d}"
        )));
    }
    let mut xi = SymMatrix::identity(d - 1);
    let start = Iterates {
        primary: basis.expand(&xi),
        sparse: SymMatrix::identity(d),
        low_rank: SymMatrix::zeros(d),
        dual: SymMatrix::zeros(d),
    };
    let out = drive(start, bounds, params, |it| {
        let (xi_next, theta, log_det) =
            xi_update_inner(s_in, &it.sparse, &it.low_rank, &it.dual, &xi, basis, params)?;
        xi = xi_next;
        Ok((theta.clone(), -log_det + theta.dot(s_in)))
    })?;
    Ok(LaplacianResult {
        theta: out.iterates.primary,
        xi,
        sparse: out.iterates.sparse,
        low_rank: out.iterates.low_rank,
        iterations: out.iterations,
        converged: out.converged,
        rel_chg_trace: out.rel_chg_trace,
        ier_trace: out.ier_trace,
        objective_trace: out.objective_trace,
    })
}

/// Penalized objective `−log det(PᵀΘP) + tr(ΘS_in) + ‖A‖_LU + λ tr(B)`.
pub fn latent_laplacian_objective(
    s_in: &SymMatrix,
    theta: &SymMatrix,
    sparse: &SymMatrix,
    low_rank: &SymMatrix,
    bounds: &GolazoBounds,
    trace_penalty: f64,
    basis: &ProjectionBasis,
) -> Result<f64> {
    check_basis(s_in.dim(), basis)?;
    let xi = basis.compress(theta);
    Ok(-log_det_pd(&xi, "compressed precision")?
        + theta.dot(s_in)
        + golazo_value(sparse, bounds)?
        + trace_penalty * low_rank.trace())
}

/// Hüsler–Reiss surrogate log-likelihood `log Det(Θ) + ½ tr(ΘΓ̄)`.
///
/// This is the Gaussian-type surrogate, not the exact Hüsler–Reiss likelihood.
pub fn surrogate_loglik(theta: &SymMatrix, gamma: &VariogramMatrix) -> Result<f64> {
    if theta.dim() != gamma.dim() {
        return Err(Error::DimensionMismatch {
            expected: theta.dim(),
            got: gamma.dim(),
        });
    }
    Ok(log_pseudo_det(theta)? + 0.5 * theta.dot(gamma.as_sym()))
}

/// Laplacian-constrained Gaussian log-likelihood `log Det(Θ) − tr(ΘS)`.
pub fn lcggm_loglik(theta: &SymMatrix, s: &SymMatrix) -> Result<f64> {
    if theta.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: theta.dim(),
            got: s.dim(),
        });
    }
    Ok(log_pseudo_det(theta)? - theta.dot(s))
}
