//! Slotted broadcast medium with 1-persistent carrier sensing.
//!
//! A slot is resolved in three phases. Pending attempts first sense their
//! subcarrier: if any vehicle within range of the sender used it during the
//! previous slot, the attempt is deferred to the next slot with a freshly drawn
//! subcarrier. Every remaining attempt goes on air. Finally each in-range
//! receiver gets the packets addressed to it, except that two or more packets
//! on the same subcarrier destroy each other at that receiver.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::model::{point_distance, VehicleId};
use crate::ukf::GaussianState;

/// Total subcarriers of one channel; only a subset carries beacons.
pub const TOTAL_SUBCARRIERS: usize = 52;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Communication (and sensing) range in meters.
    pub range: f64,
    /// Subcarriers usable for beacons.
    pub n_sc: usize,
    pub delay_slots: u64,
    /// No deferrals and no collisions.
    pub ideal: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            range: 140.0,
            n_sc: 8,
            delay_slots: 1,
            ideal: false,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(1..TOTAL_SUBCARRIERS).contains(&self.n_sc) {
            return Err(SimError::Config(format!(
                "n_sc must lie in [1, {TOTAL_SUBCARRIERS}), got {}",
                self.n_sc
            )));
        }
        if self.delay_slots < 1 {
            return Err(SimError::Config("delay_slots must be >= 1".into()));
        }
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(SimError::Config(format!("range must be positive, got {}", self.range)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeaconPacket {
    pub sender: VehicleId,
    /// Slot in which the packet went on air.
    pub tx_slot: u64,
    pub estimate: GaussianState,
    pub subcarrier: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TxAttempt {
    pub sender: VehicleId,
    pub packet: BeaconPacket,
    pub deferred_since: u64,
}

/// Everything that happened on the medium in one slot.
#[derive(Debug, Clone, Default)]
pub struct SlotOutcome {
    pub transmitted: Vec<BeaconPacket>,
    pub deferred: Vec<TxAttempt>,
    /// Packets each receiver will get after the channel delay.
    pub deliveries: BTreeMap<VehicleId, Vec<BeaconPacket>>,
    /// `(receiver, sender)` pairs lost to same-subcarrier collisions.
    pub discarded: Vec<(VehicleId, VehicleId)>,
}

impl SlotOutcome {
    /// `(sender, subcarrier)` pairs to sense against in the next slot.
    pub fn activity(&self) -> Vec<(VehicleId, usize)> {
        self.transmitted.iter().map(|p| (p.sender, p.subcarrier)).collect()
    }

    /// Number of transmitted packets destroyed at one receiver or more.
    pub fn collided_packets(&self) -> usize {
        let mut senders: Vec<_> = self.discarded.iter().map(|&(_, s)| s).collect();
        senders.sort_unstable();
        senders.dedup();
        senders.len()
    }
}

pub fn pick_subcarrier<R: Rng + ?Sized>(rng: &mut R, n_sc: usize) -> usize {
    rng.random_range(0..n_sc)
}

pub fn resolve_slot<R: Rng + ?Sized>(
    slot: u64,
    attempts: Vec<TxAttempt>,
    prev_activity: &[(VehicleId, usize)],
    positions: &BTreeMap<VehicleId, (f64, f64)>,
    cfg: &ChannelConfig,
    rng: &mut R,
) -> SlotOutcome {
    let mut attempts = attempts;
    attempts.sort_by_key(|a| a.sender);
    let mut outcome = SlotOutcome::default();

    for mut attempt in attempts {
        let Some(&here) = positions.get(&attempt.sender) else {
            continue;
        };
        let busy = !cfg.ideal
            && prev_activity.iter().any(|&(other, sc)| {
                other != attempt.sender
                    && sc == attempt.packet.subcarrier
                    && positions
                        .get(&other)
                        .is_some_and(|&p| point_distance(here, p) < cfg.range)
            });
        if busy {
            attempt.packet.subcarrier = pick_subcarrier(rng, cfg.n_sc);
            outcome.deferred.push(attempt);
        } else {
            let mut packet = attempt.packet;
            packet.tx_slot = slot;
            outcome.transmitted.push(packet);
        }
    }

    for (&receiver, &at) in positions {
        let due: Vec<&BeaconPacket> = outcome
            .transmitted
            .iter()
            .filter(|p| p.sender != receiver && point_distance(positions[&p.sender], at) < cfg.range)
            .collect();
        if due.is_empty() {
            continue;
        }
        let mut per_subcarrier: BTreeMap<usize, usize> = BTreeMap::new();
        for p in &due {
            *per_subcarrier.entry(p.subcarrier).or_default() += 1;
        }
        let mut received = Vec::new();
        for p in due {
            if !cfg.ideal && per_subcarrier[&p.subcarrier] > 1 {
                outcome.discarded.push((receiver, p.sender));
            } else {
                received.push(p.clone());
            }
        }
        if !received.is_empty() {
            outcome.deliveries.insert(receiver, received);
        }
    }
    outcome
}
