//! Unscented Kalman filter over the six-component vehicle state.
//!
//! The measurement model is the identity: the on-board sensors observe every
//! component of the state, each with its own noise variance. The heading
//! component is an angle, so sigma-point means over it are circular means and
//! every residual along it is wrapped into `[-π, π)`.

use nalgebra::{Matrix2, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::SimError;
pub use crate::model::wrap_angle;
use crate::model::VehicleState;
use crate::motion::{ctra_transition, CtraConfig};

pub const STATE_DIM: usize = 6;
pub const SIGMA_COUNT: usize = 2 * STATE_DIM + 1;
/// Index of the heading component in the state vector.
pub const HEADING: usize = 2;

pub type Vec6 = SVector<f64, STATE_DIM>;
pub type Mat6 = SMatrix<f64, STATE_DIM, STATE_DIM>;

const PSD_TOLERANCE: f64 = 1e-9;
const JITTER: f64 = 1e-9;
const JITTER_RETRIES: usize = 3;

/// Mean and covariance of a state estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: Vec6,
    pub cov: Mat6,
}

impl GaussianState {
    pub fn new(mean: Vec6, cov: Mat6) -> Self {
        Self { mean, cov }
    }

    pub fn from_state(state: &VehicleState, cov: Mat6) -> Self {
        Self {
            mean: Vec6::from(state.to_array()),
            cov,
        }
    }

    pub fn state(&self) -> VehicleState {
        VehicleState::from_array(self.mean.into())
    }

    pub fn position(&self) -> (f64, f64) {
        (self.mean[0], self.mean[1])
    }

    /// The (x, y) block of the covariance.
    pub fn position_cov(&self) -> Matrix2<f64> {
        self.cov.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.cov.symmetric_eigenvalues().min()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UkfParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    /// Process-noise intensity per slot; the process covariance is `q·I`.
    pub q: f64,
}

impl Default for UkfParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 2.0,
            kappa: 0.0,
            q: 1e-2,
        }
    }
}

impl UkfParams {
    pub fn lambda(&self) -> f64 {
        let n = STATE_DIM as f64;
        self.alpha * self.alpha * (n + self.kappa) - n
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let n = STATE_DIM as f64;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(SimError::Config(format!("ukf alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(n + self.lambda() > 0.0) {
            return Err(SimError::Config("ukf scaling gives n + lambda <= 0".into()));
        }
        if !(self.q >= 0.0 && self.q.is_finite()) || !self.beta.is_finite() {
            return Err(SimError::Config(format!("ukf q must be finite and >= 0, got {}", self.q)));
        }
        Ok(())
    }

    fn weights(&self) -> ([f64; SIGMA_COUNT], [f64; SIGMA_COUNT]) {
        let lambda = self.lambda();
        let c = STATE_DIM as f64 + lambda;
        let mut wm = [0.5 / c; SIGMA_COUNT];
        let mut wc = wm;
        wm[0] = lambda / c;
        wc[0] = wm[0] + 1.0 - self.alpha * self.alpha + self.beta;
        (wm, wc)
    }
}

/// Diagonal sensor noise in state layout `[x, y, h, u, a, ω]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementNoise {
    pub diag: [f64; STATE_DIM],
}

impl Default for MeasurementNoise {
    fn default() -> Self {
        Self {
            diag: [1.18535, 1.18535, 0.09211, 0.5, 0.39, 0.01587],
        }
    }
}

impl MeasurementNoise {
    pub fn matrix(&self) -> Mat6 {
        Mat6::from_diagonal(&Vec6::from(self.diag))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            diag: self.diag.map(|v| v * factor),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.diag.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(SimError::Config(format!("measurement noise must be positive: {:?}", self.diag)))
        }
    }
}

/// The 2n+1 points of the scaled unscented transform with their weights.
#[derive(Debug, Clone)]
pub struct SigmaPoints {
    pub points: [Vec6; SIGMA_COUNT],
    pub mean_weights: [f64; SIGMA_COUNT],
    pub cov_weights: [f64; SIGMA_COUNT],
}

/// A lower-triangular or symmetric square root of a PSD matrix.
fn matrix_sqrt(m: &Mat6) -> Result<Mat6, SimError> {
    if let Some(ch) = m.cholesky() {
        return Ok(ch.l());
    }
    let eig = m.symmetric_eigen();
    let scale = m.diagonal().amax().max(1.0);
    if eig.eigenvalues.min() >= -PSD_TOLERANCE * scale {
        let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        return Ok(eig.eigenvectors * Mat6::from_diagonal(&root) * eig.eigenvectors.transpose());
    }
    for k in 1..=JITTER_RETRIES {
        let shifted = m + Mat6::identity() * (JITTER * k as f64);
        if let Some(ch) = shifted.cholesky() {
            return Ok(ch.l());
        }
    }
    Err(SimError::Factorization)
}

fn symmetrize(m: &Mat6) -> Mat6 {
    (m + m.transpose()) * 0.5
}

fn sigma_points_impl(g: &GaussianState, p: &UkfParams, angular: Option<usize>) -> Result<SigmaPoints, SimError> {
    let c = STATE_DIM as f64 + p.lambda();
    let root = matrix_sqrt(&(symmetrize(&g.cov) * c))?;
    let mut points = [g.mean; SIGMA_COUNT];
    for i in 0..STATE_DIM {
        let col = root.column(i);
        points[1 + i] = g.mean + col;
        points[1 + STATE_DIM + i] = g.mean - col;
    }
    if let Some(k) = angular {
        for pt in points.iter_mut() {
            pt[k] = wrap_angle(pt[k]);
        }
    }
    let (mean_weights, cov_weights) = p.weights();
    Ok(SigmaPoints {
        points,
        mean_weights,
        cov_weights,
    })
}

pub fn sigma_points(g: &GaussianState, p: &UkfParams) -> Result<SigmaPoints, SimError> {
    sigma_points_impl(g, p, Some(HEADING))
}

fn weighted_mean(points: &[Vec6; SIGMA_COUNT], wm: &[f64; SIGMA_COUNT], angular: Option<usize>) -> Vec6 {
    let mut mean = Vec6::zeros();
    for (pt, w) in points.iter().zip(wm) {
        mean += pt * *w;
    }
    if let Some(k) = angular {
        let (s, c) = points
            .iter()
            .zip(wm)
            .fold((0.0, 0.0), |(s, c), (pt, w)| (s + w * pt[k].sin(), c + w * pt[k].cos()));
        mean[k] = wrap_angle(s.atan2(c));
    }
    mean
}

fn residual(a: &Vec6, b: &Vec6, angular: Option<usize>) -> Vec6 {
    let mut d = a - b;
    if let Some(k) = angular {
        d[k] = wrap_angle(d[k]);
    }
    d
}

/// Unscented prediction through an arbitrary process function.
pub fn unscented_predict<F>(g: &GaussianState, p: &UkfParams, process: F, angular: Option<usize>) -> Result<GaussianState, SimError>
where
    F: Fn(&Vec6) -> Vec6,
{
    let sp = sigma_points_impl(g, p, angular)?;
    let mut moved = sp.points;
    for pt in moved.iter_mut() {
        *pt = process(pt);
        if let Some(k) = angular {
            pt[k] = wrap_angle(pt[k]);
        }
    }
    let mean = weighted_mean(&moved, &sp.mean_weights, angular);
    let mut cov = Mat6::identity() * p.q;
    for (pt, w) in moved.iter().zip(&sp.cov_weights) {
        let d = residual(pt, &mean, angular);
        cov += d * d.transpose() * *w;
    }
    Ok(GaussianState::new(mean, symmetrize(&cov)))
}

/// Unscented update with an identity measurement model and full noise matrix.
pub fn unscented_update(
    g: &GaussianState,
    obs: &Vec6,
    noise: &Mat6,
    p: &UkfParams,
    angular: Option<usize>,
) -> Result<GaussianState, SimError> {
    let sp = sigma_points_impl(g, p, angular)?;
    let z_mean = weighted_mean(&sp.points, &sp.mean_weights, angular);
    let mut s = *noise;
    let mut cross = Mat6::zeros();
    // Prior covariance as seen by the sigma points. It equals `g.cov` unless
    // the angular spread wraps around, and using it keeps the posterior a
    // Schur complement of a Gram matrix, hence PSD.
    let mut prior = Mat6::zeros();
    for (pt, w) in sp.points.iter().zip(&sp.cov_weights) {
        let dz = residual(pt, &z_mean, angular);
        let dx = residual(pt, &g.mean, angular);
        s += dz * dz.transpose() * *w;
        cross += dx * dz.transpose() * *w;
        prior += dx * dx.transpose() * *w;
    }
    let s = symmetrize(&s);
    let s_chol = s.cholesky().ok_or(SimError::SingularInnovation)?;
    // K = Pxz S⁻¹, solved as S Kᵀ = Pxzᵀ.
    let gain = s_chol.solve(&cross.transpose()).transpose();
    let innovation = residual(obs, &z_mean, angular);
    let mut mean = g.mean + gain * innovation;
    if let Some(k) = angular {
        mean[k] = wrap_angle(mean[k]);
    }
    let cov = prior - gain * s * gain.transpose();
    Ok(GaussianState::new(mean, symmetrize(&cov)))
}

/// One CTRA prediction step.
pub fn ukf_predict(g: &GaussianState, cfg: &CtraConfig, p: &UkfParams) -> Result<GaussianState, SimError> {
    unscented_predict(
        g,
        p,
        |s| Vec6::from(ctra_transition(&(*s).into(), cfg)),
        Some(HEADING),
    )
}

/// Fuses a full-state observation.
pub fn ukf_update(g: &GaussianState, obs: &VehicleState, noise: &MeasurementNoise, p: &UkfParams) -> Result<GaussianState, SimError> {
    ukf_update_with_cov(g, obs, &noise.matrix(), p)
}

pub fn ukf_update_with_cov(g: &GaussianState, obs: &VehicleState, noise: &Mat6, p: &UkfParams) -> Result<GaussianState, SimError> {
    if !obs.is_finite() {
        return Err(SimError::Config("observation is not finite".into()));
    }
    unscented_update(g, &Vec6::from(obs.to_array()), noise, p, Some(HEADING))
}
