//! Vehicles, states and the geometric connectivity graph.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::SimError;

/// Dense vehicle identifier, `0..|V|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VehicleId(pub u32);

impl VehicleId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    if (-PI..PI).contains(&theta) {
        return theta;
    }
    let two_pi = 2.0 * PI;
    let mut w = (theta + PI).rem_euclid(two_pi) - PI;
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if w >= PI {
        w -= two_pi;
    }
    w
}

/// Planar kinematic state: position, heading, tangential speed and
/// acceleration, and turn rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    /// Heading in radians, counterclockwise from the x axis, kept in `[-π, π)`.
    pub h: f64,
    pub u: f64,
    pub a: f64,
    pub omega: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, h: f64, u: f64, a: f64, omega: f64) -> Self {
        Self {
            x,
            y,
            h: wrap_angle(h),
            u,
            a,
            omega,
        }
    }

    pub fn at(x: f64, y: f64) -> Self {
        Self::new(x, y, 0.0, 0.0, 0.0, 0.0)
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.x, self.y, self.h, self.u, self.a, self.omega]
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Euclidean distance between the positions of two states.
pub fn state_distance(s1: &VehicleState, s2: &VehicleState) -> f64 {
    point_distance(s1.position(), s2.position())
}

pub fn point_distance(p: (f64, f64), q: (f64, f64)) -> f64 {
    (p.0 - q.0).hypot(p.1 - q.1)
}

/// Generalised logistic proximity weight. `q_l` is the scale in front of the
/// exponential (kept apart from the process-noise constant).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticParams {
    pub a: f64,
    pub k: f64,
    pub c: f64,
    pub q_l: f64,
    pub b: f64,
    pub nu: f64,
    /// Safety distance in meters.
    pub d0: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            a: 1.0,
            k: 0.0,
            c: 1.0,
            q_l: 1.0,
            b: 0.05,
            nu: 0.2,
            d0: 42.0,
        }
    }
}

impl LogisticParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let finite = [self.a, self.k, self.c, self.q_l, self.b, self.nu, self.d0]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.nu <= 0.0 || self.c <= 0.0 || self.q_l < 0.0 {
            return Err(SimError::Config(format!(
                "logistic parameters need nu > 0, c > 0, q_l >= 0: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Weight given to an error about a vehicle at distance `d` from the ego vehicle.
pub fn logistic_weight(d: f64, p: &LogisticParams) -> f64 {
    let base = p.c + p.q_l * (-p.b * (d - p.d0)).exp();
    p.a + (p.k - p.a) / base.powf(1.0 / p.nu)
}

/// All vehicles strictly closer than `r` to `i`.
pub fn neighbors(
    positions: &BTreeMap<VehicleId, (f64, f64)>,
    r: f64,
    i: VehicleId,
) -> Result<BTreeSet<VehicleId>, SimError> {
    let own = *positions.get(&i).ok_or(SimError::UnknownVehicle(i))?;
    Ok(positions
        .iter()
        .filter(|(&j, &p)| j != i && point_distance(own, p) < r)
        .map(|(&j, _)| j)
        .collect())
}

/// Adjacency of the geometric graph at one slot.
#[derive(Debug, Clone, Default)]
pub struct ConnectivityGraph {
    range: f64,
    adjacency: BTreeMap<VehicleId, BTreeSet<VehicleId>>,
}

impl ConnectivityGraph {
    pub fn build(positions: &BTreeMap<VehicleId, (f64, f64)>, range: f64) -> Self {
        let ids: Vec<_> = positions.iter().map(|(&id, &p)| (id, p)).collect();
        let mut adjacency: BTreeMap<VehicleId, BTreeSet<VehicleId>> =
            ids.iter().map(|&(id, _)| (id, BTreeSet::new())).collect();
        for (n, &(i, pi)) in ids.iter().enumerate() {
            for &(j, pj) in &ids[n + 1..] {
                if point_distance(pi, pj) < range {
                    adjacency.get_mut(&i).unwrap().insert(j);
                    adjacency.get_mut(&j).unwrap().insert(i);
                }
            }
        }
        Self { range, adjacency }
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn neighbors(&self, i: VehicleId) -> Option<&BTreeSet<VehicleId>> {
        self.adjacency.get(&i)
    }

    pub fn contains_edge(&self, i: VehicleId, j: VehicleId) -> bool {
        self.adjacency.get(&i).is_some_and(|n| n.contains(&j))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(BTreeSet::len).sum::<usize>() / 2
    }
}
