//! Linear plant model, trajectory simulation, and quadratic cost accounting.
//!
//! The plant is the discrete-time system `x' = A x + B u + w` with Gaussian
//! process noise `w ~ N(0, W)`, initial state `x_0 ~ N(0, X0)`, and running
//! cost `|x'|²_Q + |u|²_R`.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Relative rank tolerance for the PBH stabilizability test.
const PBH_RANK_TOL: f64 = 1e-9;

/// LTI plant with noise statistics and quadratic cost weights.
#[derive(Debug, Clone)]
pub struct PlantModel {
    /// State transition matrix, m×m.
    pub a: DMatrix<f64>,
    /// Input gain matrix, m×u.
    pub b: DMatrix<f64>,
    /// Process-noise covariance, m×m, positive definite.
    pub w: DMatrix<f64>,
    /// Initial-state covariance, m×m, positive semidefinite.
    pub x0: DMatrix<f64>,
    /// State cost weight, m×m, positive semidefinite.
    pub q: DMatrix<f64>,
    /// Input cost weight, u×u, positive definite.
    pub r: DMatrix<f64>,
}

impl PlantModel {
    /// Builds a model after checking that all matrix dimensions are mutually
    /// consistent. Definiteness and stabilizability are checked separately by
    /// [`PlantModel::validate`].
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        w: DMatrix<f64>,
        x0: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
    ) -> Result<Self> {
        let m = a.nrows();
        if a.ncols() != m {
            return Err(Error::Dimension(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != m {
            return Err(Error::Dimension(format!(
                "A is {m}x{m} but B has {} rows",
                b.nrows()
            )));
        }
        let u = b.ncols();
        for (name, mat, rows, cols) in [
            ("W", &w, m, m),
            ("X0", &x0, m, m),
            ("Q", &q, m, m),
            ("R", &r, u, u),
        ] {
            if mat.nrows() != rows || mat.ncols() != cols {
                return Err(Error::Dimension(format!(
                    "{name} must be {rows}x{cols}, got {}x{}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
        }
        Ok(Self { a, b, w, x0, q, r })
    }

    /// State dimension m.
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension u.
    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    /// Checks every model invariant and returns the list of violations,
    /// empty when the model is admissible. Each entry names the failed
    /// condition.
    pub fn validate(&self) -> Vec<String> {
        let mut report = Vec::new();
        if !is_symmetric(&self.w) {
            report.push("W not symmetric".into());
        } else if !is_positive_definite(&self.w) {
            report.push("W not positive definite".into());
        }
        if !is_symmetric(&self.r) {
            report.push("R not symmetric".into());
        } else if !is_positive_definite(&self.r) {
            report.push("R not positive definite".into());
        }
        if !is_symmetric(&self.q) {
            report.push("Q not symmetric".into());
        } else if !is_positive_semidefinite(&self.q) {
            report.push("Q not positive semidefinite".into());
        }
        if !is_symmetric(&self.x0) {
            report.push("X0 not symmetric".into());
        } else if !is_positive_semidefinite(&self.x0) {
            report.push("X0 not positive semidefinite".into());
        }
        if !is_stabilizable(&self.a, &self.b) {
            report.push("(A, B) not stabilizable".into());
        }
        report
    }

    /// Like [`PlantModel::validate`] but folds a non-empty report into an
    /// error.
    pub fn validate_strict(&self) -> Result<()> {
        let report = self.validate();
        if report.is_empty() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "invalid plant: {}",
                report.join("; ")
            )))
        }
    }

    /// One step of the plant dynamics: `A x + B u + w`.
    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>, w: &DVector<f64>) -> Result<DVector<f64>> {
        let m = self.state_dim();
        if x.len() != m {
            return Err(Error::Dimension(format!(
                "state has length {}, expected {m}",
                x.len()
            )));
        }
        if u.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input has length {}, expected {}",
                u.len(),
                self.input_dim()
            )));
        }
        if w.len() != m {
            return Err(Error::Dimension(format!(
                "noise has length {}, expected {m}",
                w.len()
            )));
        }
        Ok(&self.a * x + &self.b * u + w)
    }

    /// Simulates the closed loop `u_t = policy(t, x_t)` for `horizon + 1`
    /// steps (t = 0..=horizon), drawing `x_0 ~ N(0, X0)` and process noise
    /// from the seeded generator. Identical seeds give identical
    /// trajectories.
    pub fn simulate<F>(&self, horizon: usize, seed: u64, mut policy: F) -> Result<Trajectory>
    where
        F: FnMut(usize, &DVector<f64>) -> DVector<f64>,
    {
        let m = self.state_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise_factor = psd_factor(&self.w)?;
        let init_factor = psd_factor(&self.x0)?;

        let mut states = Vec::with_capacity(horizon + 2);
        let mut inputs = Vec::with_capacity(horizon + 1);
        let mut noises = Vec::with_capacity(horizon + 1);
        let mut per_step_cost = Vec::with_capacity(horizon + 1);

        states.push(&init_factor * standard_normal_vector(&mut rng, m));
        for t in 0..=horizon {
            let x = states[t].clone();
            let u = policy(t, &x);
            let w = &noise_factor * standard_normal_vector(&mut rng, m);
            let next = self.step(&x, &u, &w)?;
            per_step_cost.push(quadratic_form(&self.q, &next) + quadratic_form(&self.r, &u));
            states.push(next);
            inputs.push(u);
            noises.push(w);
        }

        Ok(Trajectory {
            states,
            inputs,
            noises,
            per_step_cost,
        })
    }
}

/// A realized closed-loop run: states x_0..x_{T+1}, inputs u_0..u_T, noises
/// w_0..w_T, and the per-step cost `|x_{t+1}|²_Q + |u_t|²_R`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    pub noises: Vec<DVector<f64>>,
    pub per_step_cost: Vec<f64>,
}

impl Trajectory {
    /// Number of simulated steps, T + 1.
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Time-averaged quadratic cost of a trajectory,
/// `(1/(T+1)) Σ_t (x_{t+1}ᵀ Q x_{t+1} + u_tᵀ R u_t)`.
pub fn lqg_cost_average(traj: &Trajectory, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<f64> {
    let steps = traj.inputs.len();
    if steps == 0 {
        return Err(Error::Domain("trajectory is empty".into()));
    }
    if traj.states.len() != steps + 1 {
        return Err(Error::Dimension(format!(
            "{} states for {steps} inputs; expected {}",
            traj.states.len(),
            steps + 1
        )));
    }
    let mut total = 0.0;
    for t in 0..steps {
        total += quadratic_form(q, &traj.states[t + 1]) + quadratic_form(r, &traj.inputs[t]);
    }
    Ok(total / steps as f64)
}

/// `vᵀ M v`.
pub fn quadratic_form(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (v.transpose() * m * v)[(0, 0)]
}

/// Largest eigenvalue modulus of a (not necessarily symmetric) matrix.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|l| l.norm())
        .fold(0.0, f64::max)
}

/// PBH test: (A, B) is stabilizable iff `[A − λI, B]` has full row rank for
/// every eigenvalue λ of A with |λ| ≥ 1. Rank is decided against
/// `1e-9 · σ_max`.
pub fn is_stabilizable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    let m = a.nrows();
    let eigs = a.complex_eigenvalues();
    for lambda in eigs.iter().filter(|l| l.norm() >= 1.0 - 1e-12) {
        let mut pencil = DMatrix::<Complex<f64>>::zeros(m, m + b.ncols());
        for i in 0..m {
            for j in 0..m {
                pencil[(i, j)] = Complex::new(a[(i, j)], 0.0);
            }
            pencil[(i, i)] -= lambda;
            for j in 0..b.ncols() {
                pencil[(i, m + j)] = Complex::new(b[(i, j)], 0.0);
            }
        }
        let svd = pencil.svd(false, false);
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > PBH_RANK_TOL * smax.max(1e-300))
            .count();
        if rank < m {
            return false;
        }
    }
    true
}

pub fn is_symmetric(m: &DMatrix<f64>) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 * scale {
                return false;
            }
        }
    }
    true
}

/// Strict definiteness via Cholesky success on the symmetrized matrix.
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    let sym = (m + m.transpose()) * 0.5;
    sym.cholesky().is_some()
}

/// Semidefiniteness via the smallest eigenvalue of the symmetrized matrix,
/// with a relative slack.
pub fn is_positive_semidefinite(m: &DMatrix<f64>) -> bool {
    let sym = (m + m.transpose()) * 0.5;
    let eigs = sym.symmetric_eigen().eigenvalues;
    let scale = eigs.iter().map(|e| e.abs()).fold(0.0, f64::max).max(1.0);
    eigs.iter().all(|&e| e >= -1e-10 * scale)
}

/// Factor F with F Fᵀ = M for a PSD matrix M. Uses Cholesky when M is
/// definite; otherwise an eigendecomposition with eigenvalues below 1e-12
/// clamped to zero, so sampling stays well-defined at the semidefinite
/// boundary.
pub fn psd_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    if let Some(chol) = sym.clone().cholesky() {
        return Ok(chol.l());
    }
    let eig = sym.symmetric_eigen();
    let scale = eig
        .eigenvalues
        .iter()
        .map(|e| e.abs())
        .fold(0.0, f64::max)
        .max(1.0);
    let mut lambda = eig.eigenvalues.clone();
    for v in lambda.iter_mut() {
        if *v < -1e-9 * scale {
            return Err(Error::NotPositiveDefinite(
                "matrix has a significantly negative eigenvalue".into(),
            ));
        }
        *v = if *v < 1e-12 { 0.0 } else { v.sqrt() };
    }
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&lambda))
}

fn standard_normal_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}
