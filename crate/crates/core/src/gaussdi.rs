//! Exact directed information for linear-Gaussian sensor/controller loops.
//!
//! For a sensor `y = C x + v`, `v ~ N(0, V)`, with Kalman filtering and
//! certainty-equivalent feedback, each directed-information summand reduces
//! to the log-det ratio of predicted and posterior state covariances. All
//! quantities here come from covariance recursions in closed form; nothing is
//! estimated from samples, so bound-consistency tests carry no statistical
//! noise.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::plant::{is_positive_definite, spectral_radius, PlantModel};
use crate::riccati::DareSolution;

/// Convergence threshold for covariance fixed points, relative Frobenius.
const STEADY_TOL: f64 = 1e-12;
/// Iteration budget for fixed points.
const STEADY_BUDGET: usize = 1_000_000;
/// Divergence guard on covariance traces.
const DIVERGE_TRACE: f64 = 1e18;

/// A concrete linear-Gaussian sensing-and-control policy: measurement map C,
/// measurement noise covariance V, and feedback gain K applied to the
/// filtered state estimate.
#[derive(Debug, Clone)]
pub struct LinearSensorPolicy {
    /// Measurement map, p×m.
    pub c: DMatrix<f64>,
    /// Measurement-noise covariance, p×p, positive definite.
    pub v: DMatrix<f64>,
    /// Feedback gain applied to the posterior estimate, u×m.
    pub k: DMatrix<f64>,
}

impl LinearSensorPolicy {
    pub fn validate(&self, model: &PlantModel) -> Result<()> {
        let m = model.state_dim();
        if self.c.ncols() != m {
            return Err(Error::Dimension(format!(
                "C has {} columns, state dimension is {m}",
                self.c.ncols()
            )));
        }
        let p = self.c.nrows();
        if self.v.nrows() != p || self.v.ncols() != p {
            return Err(Error::Dimension(format!(
                "V must be {p}x{p}, got {}x{}",
                self.v.nrows(),
                self.v.ncols()
            )));
        }
        if self.k.ncols() != m || self.k.nrows() != model.input_dim() {
            return Err(Error::Dimension(format!(
                "K must be {}x{m}, got {}x{}",
                model.input_dim(),
                self.k.nrows(),
                self.k.ncols()
            )));
        }
        if !is_positive_definite(&self.v) {
            return Err(Error::NotPositiveDefinite(
                "measurement covariance V".into(),
            ));
        }
        Ok(())
    }
}

/// Directed-information ledger of a Kalman recursion: per-step bits, the
/// steady-state rate, and the covariance sequences that generated them.
#[derive(Debug, Clone)]
pub struct DIAccount {
    /// ½·log₂(det pred / det post) per step, always ≥ 0.
    pub per_step_bits: Vec<f64>,
    /// Fixed-point value of the per-step bits.
    pub steady_state_bits: f64,
    /// Predicted covariances, one per step (index 0 holds X0).
    pub pred_cov: Vec<DMatrix<f64>>,
    /// Posterior covariances, one per step.
    pub post_cov: Vec<DMatrix<f64>>,
}

impl DIAccount {
    /// Total information conveyed over the horizon, Σ per-step bits.
    pub fn total_bits(&self) -> f64 {
        self.per_step_bits.iter().sum()
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Measurement update `P − P Cᵀ (C P Cᵀ + V)⁻¹ C P`.
fn measurement_update(
    pred: &DMatrix<f64>,
    c: &DMatrix<f64>,
    v: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let innov = c * pred * c.transpose() + v;
    let chol = innov
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("innovation covariance".into()))?;
    let cp = c * pred;
    let post = pred - cp.transpose() * chol.solve(&cp);
    Ok(symmetrize(&post))
}

/// Per-step information in bits. Uses the identity
/// det(pred)/det(post) = det(I + pred·CᵀV⁻¹C), which stays well-defined when
/// the covariances are singular (e.g. X0 = 0) and is nonnegative by
/// construction.
fn step_bits(pred: &DMatrix<f64>, c: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<f64> {
    let m = pred.nrows();
    let v_inv = v
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("measurement covariance V".into()))?
        .inverse();
    let g = DMatrix::identity(m, m) + pred * c.transpose() * v_inv * c;
    let det = g.determinant();
    if det <= 0.0 {
        return Err(Error::NotPositiveDefinite(
            "information ratio determinant".into(),
        ));
    }
    Ok(0.5 * det.log2().max(0.0))
}

/// Runs the Kalman covariance recursion for `horizon` steps from X0 and
/// accounts the directed information it implies. `steady_state_bits` comes
/// from continuing the recursion to its fixed point.
pub fn kalman_recursion(
    model: &PlantModel,
    policy: &LinearSensorPolicy,
    horizon: usize,
) -> Result<DIAccount> {
    if horizon < 1 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    policy.validate(model)?;

    let mut pred_cov = Vec::with_capacity(horizon + 1);
    let mut post_cov = Vec::with_capacity(horizon + 1);
    let mut per_step_bits = Vec::with_capacity(horizon + 1);

    let mut pred = symmetrize(&model.x0);
    for _ in 0..=horizon {
        let post = measurement_update(&pred, &policy.c, &policy.v)?;
        per_step_bits.push(step_bits(&pred, &policy.c, &policy.v)?);
        pred_cov.push(pred.clone());
        post_cov.push(post.clone());
        pred = symmetrize(&(&model.a * &post * model.a.transpose() + &model.w));
        if pred.trace() > DIVERGE_TRACE {
            return Err(Error::Unstable(format!(
                "prediction covariance diverged (trace {:.3e})",
                pred.trace()
            )));
        }
    }

    let steady = steady_state_pred(model, policy, pred.clone())?;
    let steady_state_bits = step_bits(&steady, &policy.c, &policy.v)?;

    Ok(DIAccount {
        per_step_bits,
        steady_state_bits,
        pred_cov,
        post_cov,
    })
}

/// Continues the prediction-covariance recursion to its fixed point.
fn steady_state_pred(
    model: &PlantModel,
    policy: &LinearSensorPolicy,
    start: DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let mut pred = start;
    for _ in 0..STEADY_BUDGET {
        let post = measurement_update(&pred, &policy.c, &policy.v)?;
        let next = symmetrize(&(&model.a * &post * model.a.transpose() + &model.w));
        let delta = (&next - &pred).norm();
        let scale = 1.0 + pred.norm();
        pred = next;
        if delta < STEADY_TOL * scale {
            return Ok(pred);
        }
        if pred.trace() > DIVERGE_TRACE {
            return Err(Error::Unstable(format!(
                "prediction covariance diverged (trace {:.3e})",
                pred.trace()
            )));
        }
    }
    Err(Error::Convergence {
        context: "prediction covariance fixed point".into(),
        residual: f64::NAN,
    })
}

/// Steady-state LQG cost of the policy, from covariance algebra alone.
///
/// With posterior error e ⟂ estimate z and u = K z, the stationary estimate
/// covariance solves Z = (A+BK) Z (A+BK)ᵀ + (P_pred − P_post) and the cost is
/// Tr(Q (Z + P_post)) + Tr(R K Z Kᵀ). Requires ρ(A + BK) < 1.
pub fn closed_loop_cost(model: &PlantModel, policy: &LinearSensorPolicy) -> Result<f64> {
    policy.validate(model)?;
    let pred = steady_state_pred(model, policy, symmetrize(&model.x0))?;
    let post = measurement_update(&pred, &policy.c, &policy.v)?;

    let closed = &model.a + &model.b * &policy.k;
    if spectral_radius(&closed) >= 1.0 {
        return Err(Error::Unstable(
            "A + BK is not Schur stable; closed-loop cost is infinite".into(),
        ));
    }

    let drive = &pred - &post;
    let mut z = DMatrix::zeros(model.state_dim(), model.state_dim());
    for _ in 0..STEADY_BUDGET {
        let next = symmetrize(&(&closed * &z * closed.transpose() + &drive));
        let delta = (&next - &z).norm();
        let scale = 1.0 + z.norm();
        z = next;
        if delta < STEADY_TOL * scale {
            break;
        }
    }

    let state_cov = &z + &post;
    let input_cov = &policy.k * &z * policy.k.transpose();
    Ok((&model.q * state_cov).trace() + (&model.r * input_cov).trace())
}

/// Minimum steady-state DI rate over scalar linear-Gaussian sensors whose
/// closed-loop cost stays within γ, swept over a log grid of measurement
/// noise variances (C = 1, K = the LQR gain). Upper-bounds R(γ) and
/// approaches it as the grid refines.
pub fn min_di_over_scalar_sensors(
    model: &PlantModel,
    dare: &DareSolution,
    gamma: f64,
) -> Result<f64> {
    min_di_over_scalar_sensors_with_grid(model, dare, gamma, 1e-9, 1e9, 4000)
}

/// See [`min_di_over_scalar_sensors`]; exposes the V sweep grid.
pub fn min_di_over_scalar_sensors_with_grid(
    model: &PlantModel,
    dare: &DareSolution,
    gamma: f64,
    v_min: f64,
    v_max: f64,
    steps: usize,
) -> Result<f64> {
    if model.state_dim() != 1 || model.input_dim() != 1 {
        return Err(Error::Dimension(
            "scalar sensor sweep requires m = u = 1".into(),
        ));
    }
    if gamma <= dare.min_cost {
        return Err(Error::Infeasible(format!(
            "gamma {gamma} is below the cost floor Tr(WS) = {}",
            dare.min_cost
        )));
    }
    if v_min <= 0.0 || v_max <= v_min || steps < 2 {
        return Err(Error::Domain("V grid must be positive and increasing".into()));
    }

    let log_lo = v_min.ln();
    let log_hi = v_max.ln();
    let mut best: Option<f64> = None;
    for i in 0..steps {
        let v = (log_lo + (log_hi - log_lo) * i as f64 / (steps - 1) as f64).exp();
        let policy = LinearSensorPolicy {
            c: DMatrix::from_element(1, 1, 1.0),
            v: DMatrix::from_element(1, 1, v),
            k: dare.k.clone(),
        };
        let cost = match closed_loop_cost(model, &policy) {
            Ok(c) => c,
            Err(Error::Unstable(_)) => continue,
            Err(e) => return Err(e),
        };
        if cost > gamma {
            continue;
        }
        let pred = steady_state_pred(model, &policy, symmetrize(&model.x0))?;
        let bits = step_bits(&pred, &policy.c, &policy.v)?;
        best = Some(match best {
            Some(b) => b.min(bits),
            None => bits,
        });
    }
    best.ok_or_else(|| Error::Infeasible("no sensor in the sweep met the cost budget".into()))
}
