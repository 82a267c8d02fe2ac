//! Stabilizing solution of the discrete algebraic Riccati equation via
//! fixed-point value iteration, plus the byproducts consumed by the
//! rate-distortion program: the feedback gain K, the sensitivity matrix
//! Θ = Kᵀ(BᵀSB + R)K, and the full-information cost floor Tr(WS).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::plant::{spectral_radius, PlantModel};

/// Residual threshold that stops value iteration.
const VALUE_ITER_TOL: f64 = 1e-12;
/// Iteration budget for value iteration.
const VALUE_ITER_BUDGET: usize = 1_000_000;

/// Stabilizing DARE solution and derived quantities.
#[derive(Debug, Clone)]
pub struct DareSolution {
    /// Riccati fixed point S, m×m symmetric PSD.
    pub s: DMatrix<f64>,
    /// Optimal feedback gain K = −(BᵀSB + R)⁻¹BᵀSA, u×m.
    pub k: DMatrix<f64>,
    /// Θ = Kᵀ(BᵀSB + R)K, m×m symmetric PSD.
    pub theta: DMatrix<f64>,
    /// Tr(WS), the LQG cost of the full-information controller.
    pub min_cost: f64,
}

/// Frobenius norm of `AᵀSA − S − AᵀSB(BᵀSB + R)⁻¹BᵀSA + Q`.
pub fn dare_residual(model: &PlantModel, s: &DMatrix<f64>) -> f64 {
    match riccati_map(model, s) {
        Ok(next) => (&next - s).norm(),
        Err(_) => f64::INFINITY,
    }
}

/// One application of the Riccati operator
/// `S ↦ Q + AᵀSA − AᵀSB(BᵀSB + R)⁻¹BᵀSA`, symmetrized.
fn riccati_map(model: &PlantModel, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let at_s = model.a.transpose() * s;
    let bt_s_b_r = model.b.transpose() * s * &model.b + &model.r;
    let chol = bt_s_b_r.clone().cholesky().ok_or_else(|| {
        Error::NotPositiveDefinite("BᵀSB + R must be positive definite".into())
    })?;
    let bt_s_a = model.b.transpose() * s * &model.a;
    let gain_term = at_s * &model.b * chol.solve(&bt_s_a);
    let next = &model.q + model.a.transpose() * s * &model.a - gain_term;
    Ok((&next + next.transpose()) * 0.5)
}

/// Feedback gain for a given fixed point.
fn feedback_gain(model: &PlantModel, s: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let h = model.b.transpose() * s * &model.b + &model.r;
    let chol = h
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("BᵀSB + R must be positive definite".into()))?;
    let k = -chol.solve(&(model.b.transpose() * s * &model.a));
    Ok((k, h))
}

/// Solves the DARE by value iteration from S₀ = Q and returns the
/// stabilizing solution. Fails if the residual does not fall below 1e-12
/// within the budget or if the resulting closed loop is not stable.
pub fn solve_dare(model: &PlantModel) -> Result<DareSolution> {
    solve_dare_detailed(model).map(|(sol, _)| sol)
}

/// Like [`solve_dare`] but also returns the residual history, one entry per
/// iteration, for convergence diagnostics.
pub fn solve_dare_detailed(model: &PlantModel) -> Result<(DareSolution, Vec<f64>)> {
    model.validate_strict()?;

    let mut s = (&model.q + model.q.transpose()) * 0.5;
    let mut residuals = Vec::new();
    let mut converged = false;
    for _ in 0..VALUE_ITER_BUDGET {
        let next = riccati_map(model, &s)?;
        let residual = (&next - &s).norm();
        residuals.push(residual);
        s = next;
        if residual < VALUE_ITER_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence {
            context: "DARE value iteration exhausted its budget".into(),
            residual: residuals.last().copied().unwrap_or(f64::NAN),
        });
    }

    let (k, h) = feedback_gain(model, &s)?;
    let closed_loop = &model.a + &model.b * &k;
    let rho = spectral_radius(&closed_loop);
    if rho >= 1.0 {
        return Err(Error::Convergence {
            context: format!("DARE fixed point is not stabilizing (spectral radius {rho:.6})"),
            residual: dare_residual(model, &s),
        });
    }

    let theta = k.transpose() * h * &k;
    let theta = (&theta + theta.transpose()) * 0.5;
    let min_cost = (&model.w * &s).trace();
    Ok((
        DareSolution {
            s,
            k,
            theta,
            min_cost,
        },
        residuals,
    ))
}
