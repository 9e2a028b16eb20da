//! Ground-truth trajectories: floating-car-data ingestion, the plain-text
//! trace format, a synthetic urban grid, and the noisy sensor model.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use quick_xml::events::{BytesStart, Event};
use quick_xml::{Reader, XmlVersion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::model::{wrap_angle, VehicleId, VehicleState};
use crate::ukf::MeasurementNoise;

/// Contiguous presence of one vehicle, one state per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub vehicle: VehicleId,
    pub enter_slot: u64,
    pub samples: Vec<VehicleState>,
}

impl Trajectory {
    /// First slot after the vehicle has left.
    pub fn exit_slot(&self) -> u64 {
        self.enter_slot + self.samples.len() as u64
    }

    pub fn state_at(&self, slot: u64) -> Option<&VehicleState> {
        slot.checked_sub(self.enter_slot)
            .and_then(|k| self.samples.get(k as usize))
    }
}

// ---------------------------------------------------------------------------
// Sensor model

/// Adds independent zero-mean Gaussian noise to every state component.
pub fn observe<R: Rng + ?Sized>(s: &VehicleState, noise: &MeasurementNoise, rng: &mut R) -> VehicleState {
    let mut v = s.to_array();
    for (c, var) in v.iter_mut().zip(noise.diag) {
        let z: f64 = rng.sample(StandardNormal);
        *c += z * var.max(0.0).sqrt();
    }
    VehicleState::from_array(v)
}

// ---------------------------------------------------------------------------
// Finite-difference derivation of acceleration and turn rate

struct RawSample {
    x: f64,
    y: f64,
    h: f64,
    u: f64,
}

fn derive_states(raw: &[RawSample], dt: f64) -> Vec<VehicleState> {
    let n = raw.len();
    let diff = |f: &dyn Fn(&RawSample, &RawSample) -> f64, k: usize| -> f64 {
        if n < 2 {
            0.0
        } else if k == 0 {
            f(&raw[1], &raw[0]) / dt
        } else if k == n - 1 {
            f(&raw[n - 1], &raw[n - 2]) / dt
        } else {
            f(&raw[k + 1], &raw[k - 1]) / (2.0 * dt)
        }
    };
    (0..n)
        .map(|k| {
            let a = diff(&|p, q| p.u - q.u, k);
            let omega = diff(&|p, q| wrap_angle(p.h - q.h), k);
            let r = &raw[k];
            VehicleState::new(r.x, r.y, r.h, r.u, a, omega)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Floating-car-data export

/// Parsed floating-car-data export. `names[i]` is the original id of `VehicleId(i)`.
#[derive(Debug, Clone, Default)]
pub struct FcdTrace {
    pub trajectories: Vec<Trajectory>,
    pub names: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
struct FcdRecord {
    x: f64,
    y: f64,
    angle_deg: f64,
    speed: f64,
}

/// Export angle (degrees clockwise from north) to heading (radians
/// counterclockwise from east).
pub fn heading_from_compass(angle_deg: f64) -> f64 {
    wrap_angle(FRAC_PI_2 - angle_deg.to_radians())
}

pub fn compass_from_heading(h: f64) -> f64 {
    (90.0 - h.to_degrees()).rem_euclid(360.0)
}

fn line_of(text: &str, pos: usize) -> usize {
    text.as_bytes()[..pos.min(text.len())]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
        + 1
}

fn attr_map(e: &BytesStart, line: usize) -> Result<BTreeMap<String, String>, SimError> {
    let mut out = BTreeMap::new();
    for attr in e.attributes() {
        let attr = attr.map_err(|err| SimError::parse(line, err.to_string()))?;
        let key = attr.key.0.to_owned();
        let value = attr
            .normalized_value(XmlVersion::default())
            .map_err(|err| SimError::parse(line, err.to_string()))?
            .into_owned();
        out.insert(key, value);
    }
    Ok(out)
}

fn number(attrs: &BTreeMap<String, String>, key: &str, line: usize) -> Result<f64, SimError> {
    let raw = attrs
        .get(key)
        .ok_or_else(|| SimError::parse(line, format!("missing attribute `{key}`")))?;
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| SimError::parse(line, format!("attribute `{key}` is not a number: {raw:?}")))?;
    if !v.is_finite() {
        return Err(SimError::parse(line, format!("attribute `{key}` is not finite")));
    }
    Ok(v)
}

/// Parses an XML floating-car-data export and resamples it to the slot grid.
pub fn parse_fcd(document: &str, slot_dt: f64) -> Result<FcdTrace, SimError> {
    let mut reader = Reader::from_str(document);
    let mut steps: Vec<(f64, Vec<(String, FcdRecord)>)> = Vec::new();
    loop {
        let pos = reader.buffer_position() as usize;
        let event = reader
            .read_event()
            .map_err(|e| SimError::parse(line_of(document, reader.error_position() as usize), e.to_string()))?;
        let line = line_of(document, pos);
        match event {
            Event::Start(e) | Event::Empty(e) => match e.name().as_ref() {
                "timestep" => {
                    let attrs = attr_map(&e, line)?;
                    steps.push((number(&attrs, "time", line)?, Vec::new()));
                }
                "vehicle" => {
                    let attrs = attr_map(&e, line)?;
                    let id = attrs
                        .get("id")
                        .cloned()
                        .ok_or_else(|| SimError::parse(line, "vehicle without `id`"))?;
                    let rec = FcdRecord {
                        x: number(&attrs, "x", line)?,
                        y: number(&attrs, "y", line)?,
                        angle_deg: number(&attrs, "angle", line)?,
                        speed: number(&attrs, "speed", line)?,
                    };
                    let (_, vehicles) = steps
                        .last_mut()
                        .ok_or_else(|| SimError::parse(line, "vehicle record outside a timestep"))?;
                    vehicles.push((id, rec));
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }
    if steps.is_empty() {
        return Ok(FcdTrace::default());
    }

    let spacing = if steps.len() > 1 { steps[1].0 - steps[0].0 } else { slot_dt };
    if !(spacing > 0.0) {
        return Err(SimError::parse(1, "timesteps must be strictly increasing"));
    }
    for w in steps.windows(2) {
        if ((w[1].0 - w[0].0) - spacing).abs() > 1e-6 * spacing.max(1.0) {
            return Err(SimError::parse(
                1,
                format!("non-uniform timestep spacing at time {}", w[1].0),
            ));
        }
    }

    // Contiguous runs of presence per vehicle, in order of first appearance.
    let mut names: Vec<String> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut runs: Vec<Vec<(usize, Vec<FcdRecord>)>> = Vec::new();
    for (k, (_, vehicles)) in steps.iter().enumerate() {
        for (name, rec) in vehicles {
            let id = *index.entry(name.clone()).or_insert_with(|| {
                names.push(name.clone());
                runs.push(Vec::new());
                names.len() - 1
            });
            let vruns = &mut runs[id];
            match vruns.last_mut() {
                Some((start, recs)) if *start + recs.len() == k => recs.push(*rec),
                _ => vruns.push((k, vec![*rec])),
            }
        }
    }

    let t0 = steps[0].0;
    let mut trajectories = Vec::new();
    for (id, vruns) in runs.into_iter().enumerate() {
        for (start, recs) in vruns {
            let t_start = t0 + start as f64 * spacing;
            let t_end = t_start + (recs.len() - 1) as f64 * spacing;
            let first_slot = ((t_start - t0) / slot_dt - 1e-9).ceil().max(0.0) as u64;
            let last_slot = ((t_end - t0) / slot_dt + 1e-9).floor() as u64;
            if last_slot < first_slot {
                continue;
            }
            let raw: Vec<RawSample> = (first_slot..=last_slot)
                .map(|slot| {
                    let mut pos = (t0 + slot as f64 * slot_dt - t_start) / spacing;
                    if (pos - pos.round()).abs() < 1e-6 {
                        pos = pos.round();
                    }
                    let i = (pos.floor().max(0.0) as usize).min(recs.len() - 1);
                    let j = (i + 1).min(recs.len() - 1);
                    let f = (pos - i as f64).clamp(0.0, 1.0);
                    let (p, q) = (&recs[i], &recs[j]);
                    let hp = heading_from_compass(p.angle_deg);
                    let hq = heading_from_compass(q.angle_deg);
                    RawSample {
                        x: p.x + f * (q.x - p.x),
                        y: p.y + f * (q.y - p.y),
                        h: wrap_angle(hp + f * wrap_angle(hq - hp)),
                        u: p.speed + f * (q.speed - p.speed),
                    }
                })
                .collect();
            trajectories.push(Trajectory {
                vehicle: VehicleId(id as u32),
                enter_slot: first_slot,
                samples: derive_states(&raw, slot_dt),
            });
        }
    }
    Ok(FcdTrace { trajectories, names })
}

/// Renders trajectories as a floating-car-data export (one timestep per slot).
pub fn write_fcd(trajectories: &[Trajectory], slot_dt: f64) -> String {
    let mut by_slot: BTreeMap<u64, Vec<(VehicleId, VehicleState)>> = BTreeMap::new();
    for t in trajectories {
        for (k, s) in t.samples.iter().enumerate() {
            by_slot.entry(t.enter_slot + k as u64).or_default().push((t.vehicle, *s));
        }
    }
    let mut out = String::from("<fcd-export>\n");
    if let (Some(&first), Some(&last)) = (by_slot.keys().next(), by_slot.keys().next_back()) {
        for slot in first..=last {
            let _ = writeln!(out, "  <timestep time=\"{}\">", slot as f64 * slot_dt);
            for (id, s) in by_slot.get(&slot).map(Vec::as_slice).unwrap_or_default() {
                let _ = writeln!(
                    out,
                    "    <vehicle id=\"veh{}\" x=\"{}\" y=\"{}\" angle=\"{}\" speed=\"{}\"/>",
                    id.0,
                    s.x,
                    s.y,
                    compass_from_heading(s.h),
                    s.u
                );
            }
            out.push_str("  </timestep>\n");
        }
    }
    out.push_str("</fcd-export>\n");
    out
}

// ---------------------------------------------------------------------------
// Plain-text trace: `slot id x y h u a omega`, one record per line

pub const TRACE_HEADER: &str = "# slot id x y h u a omega";

pub fn write_trace(trajectories: &[Trajectory]) -> String {
    let mut rows: Vec<(u64, VehicleId, VehicleState)> = trajectories
        .iter()
        .flat_map(|t| {
            t.samples
                .iter()
                .enumerate()
                .map(move |(k, s)| (t.enter_slot + k as u64, t.vehicle, *s))
        })
        .collect();
    rows.sort_by_key(|&(slot, id, _)| (slot, id));
    let mut out = String::with_capacity(rows.len() * 96);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for (slot, id, s) in rows {
        let _ = writeln!(out, "{slot} {id} {} {} {} {} {} {}", s.x, s.y, s.h, s.u, s.a, s.omega);
    }
    out
}

pub fn parse_trace(text: &str) -> Result<Vec<Trajectory>, SimError> {
    let mut per_vehicle: BTreeMap<VehicleId, Vec<(u64, VehicleState)>> = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(SimError::parse(line_no, format!("expected 8 fields, found {}", fields.len())));
        }
        let slot: u64 = fields[0]
            .parse()
            .map_err(|_| SimError::parse(line_no, "slot is not a non-negative integer"))?;
        let id: u32 = fields[1]
            .parse()
            .map_err(|_| SimError::parse(line_no, "id is not a non-negative integer"))?;
        let mut v = [0.0; 6];
        for (c, raw) in v.iter_mut().zip(&fields[2..]) {
            *c = raw
                .parse::<f64>()
                .map_err(|_| SimError::parse(line_no, format!("not a number: {raw:?}")))?;
            if !c.is_finite() {
                return Err(SimError::parse(line_no, "value is not finite"));
            }
        }
        per_vehicle
            .entry(VehicleId(id))
            .or_default()
            .push((slot, VehicleState::from_array(v)));
    }
    let mut out = Vec::new();
    for (vehicle, mut rows) in per_vehicle {
        rows.sort_by_key(|r| r.0);
        for w in rows.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(SimError::parse(0, format!("vehicle {vehicle} has two records for slot {}", w[0].0)));
            }
        }
        let mut current: Option<Trajectory> = None;
        for (slot, s) in rows {
            match current.as_mut() {
                Some(t) if t.exit_slot() == slot => t.samples.push(s),
                _ => {
                    out.extend(current.take());
                    current = Some(Trajectory {
                        vehicle,
                        enter_slot: slot,
                        samples: vec![s],
                    });
                }
            }
        }
        out.extend(current);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Synthetic Manhattan grid

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    /// Blocks per side of the square grid.
    pub grid_blocks: u32,
    /// Block edge length in meters.
    pub block_len: f64,
    pub v_max: f64,
    /// Vehicles per km².
    pub density: f64,
    /// Area in km² used with `density` to size the fleet.
    pub area: f64,
    pub turn_probability: f64,
    /// Probability of stopping at an intersection (red light).
    pub stop_probability: f64,
    pub stop_wait_s: (f64, f64),
    /// Rate of random slow-downs between intersections.
    pub slowdown_rate_hz: f64,
    pub accel_max: f64,
    /// Comfortable deceleration at which braking for a stop or a turn starts.
    pub decel_comfort: f64,
    pub decel_max: f64,
    pub turn_radius: f64,
    pub turn_speed: f64,
    /// Simulated time discarded before the first recorded slot, so that
    /// recorded traffic starts from the trips' steady state.
    pub warmup_s: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        let area = 0.5168;
        let grid_blocks = 7;
        Self {
            grid_blocks,
            block_len: (area * 1e6f64).sqrt() / grid_blocks as f64,
            v_max: 13.89,
            density: 120.0,
            area,
            turn_probability: 0.35,
            stop_probability: 0.3,
            stop_wait_s: (2.0, 20.0),
            slowdown_rate_hz: 0.03,
            accel_max: 2.0,
            decel_comfort: 1.5,
            decel_max: 4.5,
            turn_radius: 8.0,
            turn_speed: 5.0,
            warmup_s: 60.0,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn vehicle_count(&self) -> usize {
        (self.density * self.area).round().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            self.block_len,
            self.v_max,
            self.density,
            self.area,
            self.accel_max,
            self.decel_comfort,
            self.decel_max,
            self.turn_radius,
            self.turn_speed,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || self.grid_blocks < 1 {
            return Err(SimError::Config("synthetic grid parameters must be positive".into()));
        }
        if 2.0 * self.turn_radius >= self.block_len {
            return Err(SimError::Config("turn radius must be below half a block".into()));
        }
        for p in [self.turn_probability, self.stop_probability] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::Config("probabilities must lie in [0, 1]".into()));
            }
        }
        if self.stop_wait_s.0 < 0.0 || self.stop_wait_s.1 < self.stop_wait_s.0 || self.slowdown_rate_hz < 0.0 || !(self.warmup_s >= 0.0) {
            return Err(SimError::Config("invalid wait or slow-down parameters".into()));
        }
        if self.decel_comfort > self.decel_max {
            return Err(SimError::Config("decel_comfort must not exceed decel_max".into()));
        }
        Ok(())
    }
}

const DIRS: [(i32, i32); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Turn {
    Straight,
    Left,
    Right,
}

impl Turn {
    fn apply(self, dir: usize) -> usize {
        match self {
            Turn::Straight => dir,
            Turn::Left => (dir + 1) % 4,
            Turn::Right => (dir + 3) % 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    /// Along the straight part of a block; `s` from the block's start node.
    Line { s: f64 },
    /// On the quarter circle of a turn; `s` is arc length travelled.
    Arc { s: f64 },
}

struct Driver {
    node: (i32, i32),
    dir: usize,
    /// Intersection the current trip heads for.
    dest: (i32, i32),
    turn: Turn,
    /// Remaining wait at the stop line; `None` means no stop planned.
    stop: Option<f64>,
    entered_by_turn: bool,
    phase: Phase,
    u: f64,
    v_desired: f64,
    slowdown: Option<(f64, f64)>,
}

struct Grid<'a> {
    cfg: &'a SyntheticConfig,
}

impl Grid<'_> {
    fn valid(&self, node: (i32, i32), dir: usize) -> bool {
        let g = self.cfg.grid_blocks as i32;
        let (dx, dy) = DIRS[dir];
        let (nx, ny) = (node.0 + dx, node.1 + dy);
        (0..=g).contains(&nx) && (0..=g).contains(&ny)
    }

    fn point(&self, node: (i32, i32)) -> (f64, f64) {
        (node.0 as f64 * self.cfg.block_len, node.1 as f64 * self.cfg.block_len)
    }

    fn line_end(&self, d: &Driver) -> f64 {
        if d.turn == Turn::Straight {
            self.cfg.block_len
        } else {
            self.cfg.block_len - self.cfg.turn_radius
        }
    }

    fn stop_line(&self) -> f64 {
        self.cfg.block_len - self.cfg.turn_radius
    }

    fn arc_len(&self) -> f64 {
        self.cfg.turn_radius * FRAC_PI_2
    }

    fn random_node<R: Rng>(&self, rng: &mut R) -> (i32, i32) {
        let g = self.cfg.grid_blocks as i32;
        (rng.random_range(0..=g), rng.random_range(0..=g))
    }

    /// Route choice at `node` toward `dest`: moves that shorten the remaining
    /// Manhattan distance are preferred; when both going straight and turning
    /// do, the turn is taken with `turn_probability`.
    fn choose_turn<R: Rng>(&self, node: (i32, i32), dir: usize, dest: (i32, i32), rng: &mut R) -> Turn {
        let options: Vec<Turn> = [Turn::Straight, Turn::Left, Turn::Right]
            .into_iter()
            .filter(|t| self.valid(node, t.apply(dir)))
            .collect();
        let toward = |t: &Turn| {
            let (dx, dy) = DIRS[t.apply(dir)];
            dx * (dest.0 - node.0) > 0 || dy * (dest.1 - node.1) > 0
        };
        let useful: Vec<Turn> = options.iter().copied().filter(toward).collect();
        let pool = if useful.is_empty() { &options } else { &useful };
        let turns: Vec<Turn> = pool.iter().copied().filter(|t| *t != Turn::Straight).collect();
        let straight = pool.contains(&Turn::Straight);
        match (straight, turns.is_empty()) {
            (true, true) => Turn::Straight,
            (false, _) => turns[rng.random_range(0..turns.len())],
            (true, false) => {
                if useful.is_empty() || rng.random_bool(self.cfg.turn_probability) {
                    turns[rng.random_range(0..turns.len())]
                } else {
                    Turn::Straight
                }
            }
        }
    }

    fn plan_block<R: Rng>(&self, d: &mut Driver, rng: &mut R) {
        let (dx, dy) = DIRS[d.dir];
        let next = (d.node.0 + dx, d.node.1 + dy);
        while d.dest == next {
            d.dest = self.random_node(rng);
        }
        d.turn = self.choose_turn(next, d.dir, d.dest, rng);
        d.stop = rng
            .random_bool(self.cfg.stop_probability)
            .then(|| rng.random_range(self.cfg.stop_wait_s.0..=self.cfg.stop_wait_s.1));
    }

    /// Position, heading and curvature of the driver.
    fn pose(&self, d: &Driver) -> (f64, f64, f64, f64) {
        let (ox, oy) = self.point(d.node);
        let (dx, dy) = DIRS[d.dir];
        let heading = d.dir as f64 * FRAC_PI_2;
        match d.phase {
            Phase::Line { s } => (ox + dx as f64 * s, oy + dy as f64 * s, wrap_angle(heading), 0.0),
            Phase::Arc { s } => {
                let rho = self.cfg.turn_radius;
                let sign = if d.turn == Turn::Left { 1.0 } else { -1.0 };
                let start = (
                    ox + dx as f64 * (self.cfg.block_len - rho),
                    oy + dy as f64 * (self.cfg.block_len - rho),
                );
                // Center sits one radius to the inside of the turn.
                let (nx, ny) = (-(dy as f64) * sign, dx as f64 * sign);
                let center = (start.0 + nx * rho, start.1 + ny * rho);
                let swept = s / rho;
                let radial = heading - sign * FRAC_PI_2 + sign * swept;
                (
                    center.0 + rho * radial.cos(),
                    center.1 + rho * radial.sin(),
                    wrap_angle(heading + sign * swept),
                    sign / rho,
                )
            }
        }
    }

    /// Advances the driver by `ds` meters along its route.
    fn advance<R: Rng>(&self, d: &mut Driver, mut ds: f64, rng: &mut R) {
        loop {
            match d.phase {
                Phase::Line { s } => {
                    let end = self.line_end(d);
                    if s + ds < end {
                        d.phase = Phase::Line { s: s + ds };
                        return;
                    }
                    ds -= end - s;
                    if d.turn == Turn::Straight {
                        let (dx, dy) = DIRS[d.dir];
                        d.node = (d.node.0 + dx, d.node.1 + dy);
                        d.entered_by_turn = false;
                        d.phase = Phase::Line { s: 0.0 };
                        self.plan_block(d, rng);
                    } else {
                        d.phase = Phase::Arc { s: 0.0 };
                    }
                }
                Phase::Arc { s } => {
                    if s + ds < self.arc_len() {
                        d.phase = Phase::Arc { s: s + ds };
                        return;
                    }
                    ds -= self.arc_len() - s;
                    let (dx, dy) = DIRS[d.dir];
                    d.node = (d.node.0 + dx, d.node.1 + dy);
                    d.dir = d.turn.apply(d.dir);
                    d.entered_by_turn = true;
                    d.phase = Phase::Line {
                        s: self.cfg.turn_radius,
                    };
                    self.plan_block(d, rng);
                }
            }
        }
    }

    /// Acceleration for the coming slot.
    fn control<R: Rng>(&self, d: &mut Driver, dt: f64, rng: &mut R) -> f64 {
        let cfg = self.cfg;
        let mut target = d.v_desired;
        if let Some((speed, remaining)) = d.slowdown {
            target = target.min(speed);
            d.slowdown = (remaining > dt).then_some((speed, remaining - dt));
        } else if matches!(d.phase, Phase::Line { .. }) && rng.random_bool((cfg.slowdown_rate_hz * dt).min(1.0)) {
            let speed = d.v_desired * rng.random_range(0.2..0.7);
            d.slowdown = Some((speed, rng.random_range(2.0..6.0)));
            target = target.min(speed);
        }

        let mut accel = if d.u < target {
            cfg.accel_max.min((target - d.u) / dt)
        } else {
            // Sudden slow-downs brake hard, free-flow overshoot just eases off.
            let rate = if d.slowdown.is_some() { cfg.decel_max } else { cfg.decel_comfort };
            -(rate.min((d.u - target) / dt))
        };

        match d.phase {
            Phase::Arc { .. } => {
                if d.u + accel * dt > cfg.turn_speed {
                    accel = (cfg.turn_speed - d.u) / dt;
                }
            }
            Phase::Line { s } => {
                let stop_line = self.stop_line();
                let (limit, dist) = if d.stop.is_some() && s <= stop_line + 1e-6 {
                    (Some(0.0), stop_line - s)
                } else if d.turn != Turn::Straight {
                    (Some(cfg.turn_speed), self.line_end(d) - s)
                } else {
                    (None, f64::INFINITY)
                };
                if let Some(v_limit) = limit {
                    if let Some(wait) = d.stop {
                        if dist < 0.5 && d.u < 0.5 {
                            // Standing at the stop line.
                            if wait > dt {
                                d.stop = Some(wait - dt);
                                return -d.u / dt;
                            }
                            d.stop = None;
                            return cfg.accel_max;
                        }
                    }
                    if d.u > v_limit {
                        let needed = (d.u * d.u - v_limit * v_limit) / (2.0 * dist.max(0.05));
                        if needed >= cfg.decel_comfort {
                            accel = accel.min(-needed.min(cfg.decel_max));
                        } else {
                            accel = accel.min(0.0).max(accel);
                        }
                    }
                    // Never run past the limit point faster than allowed.
                    let next = d.u + accel * dt;
                    let reach = d.u * dt + 0.5 * accel * dt * dt;
                    if next > v_limit && reach + (next * next - v_limit * v_limit) / (2.0 * cfg.decel_max) > dist {
                        accel = accel.min(0.0);
                    }
                }
            }
        }
        accel
    }
}

/// Vehicles on random trips between intersections of a square street grid.
pub fn generate_synthetic(cfg: &SyntheticConfig, slots: u64, slot_dt: f64) -> Result<Vec<Trajectory>, SimError> {
    cfg.validate()?;
    let grid = Grid { cfg };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let g = cfg.grid_blocks as i32;
    let mut drivers = Vec::with_capacity(cfg.vehicle_count());
    for _ in 0..cfg.vehicle_count() {
        let (node, dir) = loop {
            let node = (rng.random_range(0..=g), rng.random_range(0..=g));
            let dir = rng.random_range(0..4);
            if grid.valid(node, dir) {
                break (node, dir);
            }
        };
        let v_desired = cfg.v_max * rng.random_range(0.75..=1.0);
        let mut d = Driver {
            node,
            dir,
            dest: grid.random_node(&mut rng),
            turn: Turn::Straight,
            stop: None,
            entered_by_turn: false,
            phase: Phase::Line {
                s: rng.random_range(cfg.turn_radius..cfg.block_len - 2.0 * cfg.turn_radius),
            },
            u: rng.random_range(0.0..=v_desired),
            v_desired,
            slowdown: None,
        };
        grid.plan_block(&mut d, &mut rng);
        drivers.push(d);
    }

    let mut out: Vec<Trajectory> = (0..drivers.len())
        .map(|i| Trajectory {
            vehicle: VehicleId(i as u32),
            enter_slot: 0,
            samples: Vec::with_capacity(slots as usize),
        })
        .collect();
    let warmup = (cfg.warmup_s / slot_dt).round() as u64;
    for k in 0..warmup + slots {
        for (d, traj) in drivers.iter_mut().zip(out.iter_mut()) {
            let accel = grid.control(d, slot_dt, &mut rng);
            let next_u = (d.u + accel * slot_dt).clamp(0.0, cfg.v_max);
            let accel = (next_u - d.u) / slot_dt;
            if k >= warmup {
                let (x, y, h, curvature) = grid.pose(d);
                traj.samples.push(VehicleState::new(x, y, h, d.u, accel, d.u * curvature));
            }
            let ds = d.u * slot_dt + 0.5 * accel * slot_dt * slot_dt;
            d.u = next_u;
            grid.advance(d, ds.max(0.0), &mut rng);
        }
    }
    Ok(out)
}
