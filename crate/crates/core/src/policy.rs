//! Beacon scheduling policies.
//!
//! Both policies share two forcing rules: a vehicle transmits once the
//! maximum inter-transmission period has elapsed, and right after it hears a
//! vehicle it was not tracking. On top of that the periodic policy transmits
//! every `period_s`, while the threshold policy keeps a predict-only replica
//! (the shadow) of the estimate its neighbors hold about it and transmits as
//! soon as its own a-posteriori estimate drifts more than `e_thr_m` away.

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::model::{state_distance, VehicleId};
use crate::motion::CtraConfig;
use crate::ukf::{ukf_predict, GaussianState, UkfParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    Periodic { period_s: f64 },
    Threshold { e_thr_m: f64 },
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Periodic { .. } => "periodic",
            PolicyKind::Threshold { .. } => "threshold",
        }
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            PolicyKind::Periodic { period_s } => period_s,
            PolicyKind::Threshold { e_thr_m } => e_thr_m,
        }
    }

    pub fn with_parameter(&self, value: f64) -> Self {
        match self {
            PolicyKind::Periodic { .. } => PolicyKind::Periodic { period_s: value },
            PolicyKind::Threshold { .. } => PolicyKind::Threshold { e_thr_m: value },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    #[serde(flatten)]
    pub kind: PolicyKind,
    #[serde(default = "default_max_period")]
    pub max_period_s: f64,
    #[serde(default = "default_slot_dt")]
    pub slot_dt: f64,
}

fn default_max_period() -> f64 {
    10.0
}

fn default_slot_dt() -> f64 {
    0.1
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self::new(PolicyKind::Threshold { e_thr_m: 5.0 })
    }
}

/// Whole slots covering `seconds`, tolerant to representation error.
pub fn slots_for(seconds: f64, slot_dt: f64) -> u64 {
    (seconds / slot_dt - 1e-9).ceil().max(0.0) as u64
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            max_period_s: default_max_period(),
            slot_dt: default_slot_dt(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.kind.parameter() >= 0.0 && self.kind.parameter().is_finite()) {
            return Err(SimError::Config(format!(
                "{} parameter must be finite and >= 0",
                self.kind.name()
            )));
        }
        if !(self.max_period_s > 0.0) || !(self.slot_dt > 0.0) {
            return Err(SimError::Config("max_period_s and slot_dt must be positive".into()));
        }
        Ok(())
    }

    pub fn max_period_slots(&self) -> u64 {
        slots_for(self.max_period_s, self.slot_dt).max(1)
    }

    /// Slots between scheduled transmissions, if the policy has a schedule.
    pub fn period_slots(&self) -> Option<u64> {
        match self.kind {
            PolicyKind::Periodic { period_s } => Some(slots_for(period_s, self.slot_dt)),
            PolicyKind::Threshold { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Transmit,
    Hold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    pub slots_since_tx: u64,
    /// What neighbors believe about this vehicle, reset at every transmission.
    pub shadow: GaussianState,
    pub force_tx_pending: bool,
}

impl PolicyState {
    pub fn new(initial: GaussianState, slots_since_tx: u64) -> Self {
        Self {
            slots_since_tx,
            shadow: initial,
            force_tx_pending: false,
        }
    }

    pub fn shadow_predict(&mut self, cfg: &CtraConfig, p: &UkfParams) -> Result<(), SimError> {
        self.shadow = ukf_predict(&self.shadow, cfg, p)?;
        self.slots_since_tx += 1;
        Ok(())
    }

    pub fn decide(&self, posterior: &GaussianState, cfg: &PolicyConfig) -> Decision {
        if self.force_tx_pending || self.slots_since_tx >= cfg.max_period_slots() {
            return Decision::Transmit;
        }
        let fire = match cfg.kind {
            PolicyKind::Periodic { .. } => {
                self.slots_since_tx >= cfg.period_slots().unwrap_or_default()
            }
            PolicyKind::Threshold { e_thr_m } => {
                state_distance(&posterior.state(), &self.shadow.state()) > e_thr_m
            }
        };
        if fire {
            Decision::Transmit
        } else {
            Decision::Hold
        }
    }

    /// A packet from a sender absent from `is_known` forces a broadcast.
    pub fn on_receive(&mut self, sender: VehicleId, is_known: impl Fn(VehicleId) -> bool) {
        if !is_known(sender) {
            self.force_tx_pending = true;
        }
    }

    pub fn on_transmit(&mut self, posterior: &GaussianState) {
        self.shadow = posterior.clone();
        self.slots_since_tx = 0;
        self.force_tx_pending = false;
    }
}
