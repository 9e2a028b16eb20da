//! Weighted positioning error, detection error and transmission statistics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::model::{logistic_weight, point_distance, state_distance, LogisticParams, VehicleId, VehicleState};
use crate::policy::PolicyKind;
use crate::track::TrackTable;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SlotRecord {
    pub slot: u64,
    /// Error function of every vehicle present in the slot, by id.
    pub per_vehicle: Vec<(VehicleId, f64)>,
    pub network_error: f64,
    pub undetected: usize,
    pub misdetected: usize,
    pub neighbors: usize,
    pub tx_attempted: usize,
    pub tx_sent: usize,
    pub tx_collided: usize,
}

impl SlotRecord {
    /// Nearest-rank 95th percentile over the vehicles of this slot.
    pub fn p95_error(&self) -> f64 {
        let values: Vec<f64> = self.per_vehicle.iter().map(|&(_, f)| f).collect();
        percentile_nearest_rank(&values, 95.0).unwrap_or(0.0)
    }
}

/// Per-vehicle transmission history.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VehicleTxLog {
    /// Slots in which the policy decided to transmit.
    pub decisions: Vec<u64>,
    /// Slots in which a packet actually went on air.
    pub sends: Vec<u64>,
    /// Number of slots the vehicle was part of the network.
    pub present_slots: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TxLog {
    pub vehicles: BTreeMap<VehicleId, VehicleTxLog>,
}

impl TxLog {
    pub fn entry(&mut self, id: VehicleId) -> &mut VehicleTxLog {
        self.vehicles.entry(id).or_default()
    }

    /// Mean over transmitting vehicles of observation window / packets sent.
    pub fn effective_intertx(&self, slot_dt: f64) -> f64 {
        let ratios: Vec<f64> = self
            .vehicles
            .values()
            .filter(|v| !v.sends.is_empty())
            .map(|v| v.present_slots as f64 * slot_dt / v.sends.len() as f64)
            .collect();
        if ratios.is_empty() {
            0.0
        } else {
            ratios.iter().sum::<f64>() / ratios.len() as f64
        }
    }

    /// Gaps, in slots, between consecutive transmission decisions of each vehicle.
    pub fn decision_gaps(&self) -> Vec<u64> {
        self.vehicles
            .values()
            .flat_map(|v| v.decisions.windows(2).map(|w| w[1] - w[0]))
            .collect()
    }

    /// Gaps, in slots, between consecutive packets actually sent.
    pub fn send_gaps(&self) -> Vec<u64> {
        self.vehicles
            .values()
            .flat_map(|v| v.sends.windows(2).map(|w| w[1] - w[0]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub policy: String,
    pub parameter: f64,
    pub seed: u64,
    pub slots: u64,
    pub vehicles: usize,
    pub mean_error_m: f64,
    /// Nearest-rank 95th percentile of the pooled per-vehicle, per-slot errors.
    pub p95_error_m: f64,
    /// Mean error of the worst 5% of vehicles, ranked by their time-averaged error.
    pub worst5_error_m: f64,
    pub detection_error: f64,
    pub eff_intertx_s: f64,
    pub tx_attempted: u64,
    pub tx_sent: u64,
    pub tx_collided: u64,
}

fn weighted_ego_error(
    i: VehicleId,
    truth: &BTreeMap<VehicleId, VehicleState>,
    est_self: &VehicleState,
    tracks: &TrackTable,
    weight: impl Fn(f64) -> f64,
) -> f64 {
    let Some(own) = truth.get(&i) else {
        return 0.0;
    };
    let mut sum = weight(0.0) * state_distance(est_self, own);
    let mut terms = 1usize;
    for (j, track) in tracks.iter() {
        // Vehicles that left the network have no truth to compare against.
        let Some(sj) = truth.get(&j) else { continue };
        sum += weight(state_distance(own, sj)) * state_distance(&track.estimate.state(), sj);
        terms += 1;
    }
    sum / terms as f64
}

/// Logistic-weighted mean positioning error of vehicle `i` over itself and its tracks.
pub fn ego_error(
    i: VehicleId,
    truth: &BTreeMap<VehicleId, VehicleState>,
    est_self: &VehicleState,
    tracks: &TrackTable,
    p: &LogisticParams,
) -> f64 {
    weighted_ego_error(i, truth, est_self, tracks, |d| logistic_weight(d, p))
}

/// Same as [`ego_error`] with every weight equal to one.
pub fn unweighted_ego_error(
    i: VehicleId,
    truth: &BTreeMap<VehicleId, VehicleState>,
    est_self: &VehicleState,
    tracks: &TrackTable,
) -> f64 {
    weighted_ego_error(i, truth, est_self, tracks, |_| 1.0)
}

pub fn network_error(per_vehicle: &BTreeMap<VehicleId, f64>) -> Result<f64, SimError> {
    if per_vehicle.is_empty() {
        return Err(SimError::Empty("network error over an empty vehicle set"));
    }
    Ok(per_vehicle.values().sum::<f64>() / per_vehicle.len() as f64)
}

/// `(undetected, misdetected)` counts for one ego vehicle.
///
/// A track is a misdetection when the tracked vehicle is gone or at least
/// `range` away from the ego vehicle.
pub fn detection_error(
    ego: (f64, f64),
    tracks: &TrackTable,
    true_neighbors: &BTreeSet<VehicleId>,
    positions: &BTreeMap<VehicleId, (f64, f64)>,
    range: f64,
) -> (usize, usize) {
    let undetected = true_neighbors.iter().filter(|j| !tracks.contains(**j)).count();
    let misdetected = tracks
        .ids()
        .filter(|j| positions.get(j).is_none_or(|&p| point_distance(ego, p) >= range))
        .count();
    (undetected, misdetected)
}

/// Nearest-rank percentile: the smallest sample with at least `pct`% of the
/// samples at or below it.
pub fn percentile_nearest_rank(values: &[f64], pct: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((pct / 100.0) * sorted.len() as f64 - 1e-9).ceil().max(1.0) as usize;
    Some(sorted[rank.min(sorted.len()) - 1])
}

/// Mean of the largest `frac` share (at least one) of `values`.
pub fn upper_tail_mean(values: &[f64], frac: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let k = ((frac * sorted.len() as f64 - 1e-9).ceil() as usize).clamp(1, sorted.len());
    Some(sorted[..k].iter().sum::<f64>() / k as f64)
}

pub fn summarize(
    records: &[SlotRecord],
    tx_log: &TxLog,
    slot_dt: f64,
    policy: &PolicyKind,
    seed: u64,
) -> Result<RunSummary, SimError> {
    if records.is_empty() {
        return Err(SimError::Empty("no slot records"));
    }
    // Slots with no vehicle on the map carry no error sample.
    let occupied: Vec<f64> = records
        .iter()
        .filter(|r| !r.per_vehicle.is_empty())
        .map(|r| r.network_error)
        .collect();
    let mean_error = if occupied.is_empty() {
        0.0
    } else {
        occupied.iter().sum::<f64>() / occupied.len() as f64
    };
    let pooled: Vec<f64> = records
        .iter()
        .flat_map(|r| r.per_vehicle.iter().map(|&(_, f)| f))
        .collect();
    let p95 = percentile_nearest_rank(&pooled, 95.0).unwrap_or(0.0);

    let mut per_vehicle: BTreeMap<VehicleId, (f64, usize)> = BTreeMap::new();
    for r in records {
        for &(id, f) in &r.per_vehicle {
            let e = per_vehicle.entry(id).or_default();
            e.0 += f;
            e.1 += 1;
        }
    }
    let vehicle_means: Vec<f64> = per_vehicle.values().map(|&(s, n)| s / n as f64).collect();
    let worst5 = upper_tail_mean(&vehicle_means, 0.05).unwrap_or(0.0);

    let events: usize = records.iter().map(|r| r.undetected + r.misdetected).sum();
    let neighbors: usize = records.iter().map(|r| r.neighbors).sum();
    let detection = if neighbors == 0 {
        0.0
    } else {
        events as f64 / neighbors as f64
    };

    Ok(RunSummary {
        policy: policy.name().to_string(),
        parameter: policy.parameter(),
        seed,
        slots: records.len() as u64,
        vehicles: per_vehicle.len(),
        mean_error_m: mean_error,
        p95_error_m: p95,
        worst5_error_m: worst5,
        detection_error: detection,
        eff_intertx_s: tx_log.effective_intertx(slot_dt),
        tx_attempted: records.iter().map(|r| r.tx_attempted as u64).sum(),
        tx_sent: records.iter().map(|r| r.tx_sent as u64).sum(),
        tx_collided: records.iter().map(|r| r.tx_collided as u64).sum(),
    })
}
