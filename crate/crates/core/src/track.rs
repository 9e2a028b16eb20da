//! Per-vehicle table of tracked neighbors.

use std::collections::BTreeMap;

use crate::model::VehicleId;
use crate::ukf::GaussianState;

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub estimate: GaussianState,
    /// Slot of the last packet fused into this track.
    pub last_update_slot: u64,
}

/// Neighbors an ego vehicle believes to be around it, keyed by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackTable {
    tracks: BTreeMap<VehicleId, Track>,
}

impl TrackTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn contains(&self, id: VehicleId) -> bool {
        self.tracks.contains_key(&id)
    }

    pub fn get(&self, id: VehicleId) -> Option<&Track> {
        self.tracks.get(&id)
    }

    pub fn get_mut(&mut self, id: VehicleId) -> Option<&mut Track> {
        self.tracks.get_mut(&id)
    }

    pub fn insert(&mut self, id: VehicleId, estimate: GaussianState, slot: u64) {
        self.tracks.insert(
            id,
            Track {
                estimate,
                last_update_slot: slot,
            },
        );
    }

    pub fn remove(&mut self, id: VehicleId) -> Option<Track> {
        self.tracks.remove(&id)
    }

    pub fn retain(&mut self, f: impl FnMut(&VehicleId, &mut Track) -> bool) {
        self.tracks.retain(f);
    }

    pub fn ids(&self) -> impl Iterator<Item = VehicleId> + '_ {
        self.tracks.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VehicleId, &Track)> {
        self.tracks.iter().map(|(&id, t)| (id, t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (VehicleId, &mut Track)> {
        self.tracks.iter_mut().map(|(&id, t)| (id, t))
    }
}

impl FromIterator<(VehicleId, GaussianState)> for TrackTable {
    fn from_iter<I: IntoIterator<Item = (VehicleId, GaussianState)>>(iter: I) -> Self {
        let mut t = TrackTable::new();
        for (id, g) in iter {
            t.insert(id, g, 0);
        }
        t
    }
}
