//! Constant turn rate and acceleration (CTRA) propagation.

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::model::{wrap_angle, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CtraConfig {
    /// Seconds per slot.
    pub dt: f64,
    /// Below this turn rate the series expansion of the arc is used.
    pub omega_eps: f64,
}

impl Default for CtraConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            omega_eps: 1e-4,
        }
    }
}

impl CtraConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.omega_eps > 0.0) {
            return Err(SimError::Config(format!(
                "ctra needs dt > 0 and omega_eps > 0: {self:?}"
            )));
        }
        Ok(())
    }
}

/// One CTRA step on a raw `[x, y, h, u, a, ω]` vector. Speed is not clamped,
/// so sigma points with negative speed propagate consistently.
pub fn ctra_transition(s: &[f64; 6], cfg: &CtraConfig) -> [f64; 6] {
    let [x, y, h, u, a, w] = *s;
    let dt = cfg.dt;
    let (dx, dy) = if w.abs() >= cfg.omega_eps {
        // Arc form rearranged with half-angle identities so the 1/ω² terms
        // stay well conditioned near the threshold.
        let d = w * dt;
        let h1 = h + d;
        let mid = h + 0.5 * d;
        let half = (0.5 * d).sin();
        let (s1, c1) = h1.sin_cos();
        let (sm, cm) = mid.sin_cos();
        let chord = 2.0 * half / w;
        let dx = u * chord * cm + a * (dt * s1 - chord * sm) / w;
        let dy = u * chord * sm + a * (chord * cm - dt * c1) / w;
        (dx, dy)
    } else {
        // Series of the arc integral in ω up to third order.
        let (sh, ch) = h.sin_cos();
        let i0 = u * dt + a * dt * dt / 2.0;
        let i1 = u * dt.powi(2) / 2.0 + a * dt.powi(3) / 3.0;
        let i2 = u * dt.powi(3) / 3.0 + a * dt.powi(4) / 4.0;
        let i3 = u * dt.powi(4) / 4.0 + a * dt.powi(5) / 5.0;
        let w2 = w * w / 2.0;
        let w3 = w * w * w / 6.0;
        let dx = ch * i0 - w * sh * i1 - w2 * ch * i2 + w3 * sh * i3;
        let dy = sh * i0 + w * ch * i1 - w2 * sh * i2 - w3 * ch * i3;
        (dx, dy)
    };
    [x + dx, y + dy, wrap_angle(h + w * dt), u + a * dt, a, w]
}

pub fn ctra_step(s: &VehicleState, cfg: &CtraConfig) -> VehicleState {
    VehicleState::from_array(ctra_transition(&s.to_array(), cfg))
}

/// `steps + 1` states; element 0 is the input.
pub fn ctra_propagate(s: &VehicleState, steps: usize, cfg: &CtraConfig) -> Vec<VehicleState> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut cur = *s;
    out.push(cur);
    for _ in 0..steps {
        cur = ctra_step(&cur, cfg);
        out.push(cur);
    }
    out
}
