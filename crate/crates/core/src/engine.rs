//! Slot-by-slot orchestration of the whole network and the Monte Carlo
//! sweep runner.
//!
//! Within a slot the order is fixed: ground truth, own sensing and
//! filtering, policy decisions, channel, packet processing, track
//! prediction, eviction, metrics.

use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{pick_subcarrier, resolve_slot, BeaconPacket, ChannelConfig, TxAttempt};
use crate::error::SimError;
use crate::metrics::{detection_error, ego_error, summarize, RunSummary, SlotRecord, TxLog};
use crate::mobility::{generate_synthetic, observe, parse_fcd, parse_trace, SyntheticConfig, Trajectory};
use crate::model::{point_distance, ConnectivityGraph, LogisticParams, VehicleId, VehicleState};
use crate::motion::CtraConfig;
use crate::theory::{first_passage_pmf, predict_only_cov, FirstPassagePmf, TheoryConfig};
use crate::policy::{slots_for, Decision, PolicyConfig, PolicyKind, PolicyState};
use crate::ukf::{ukf_predict, ukf_update, ukf_update_with_cov, GaussianState, Mat6, MeasurementNoise, UkfParams, Vec6};

pub use crate::track::{Track, TrackTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum MobilitySource {
    Synthetic(SyntheticConfig),
    /// Floating-car-data XML export.
    Fcd { path: PathBuf },
    /// Plain-text trace (`slot id x y h u a omega`).
    Trace { path: PathBuf },
}

impl Default for MobilitySource {
    fn default() -> Self {
        MobilitySource::Synthetic(SyntheticConfig::default())
    }
}

/// How a packet from an already tracked vehicle updates its track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    /// Treat the received estimate as a full-state measurement whose noise is
    /// the packet covariance.
    #[default]
    Update,
    /// Overwrite the track with the received estimate.
    Replace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Periods of the periodic policy, in seconds.
    pub periodic_s: Vec<f64>,
    /// Thresholds of the threshold policy, in meters.
    pub threshold_m: Vec<f64>,
    /// Add the ideal-channel, every-slot broadcasting reference row; the
    /// `--ideal` flag of `sweep` turns it on as well.
    pub ideal: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            periodic_s: vec![0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, 7.5, 10.0],
            threshold_m: (0..30).map(|k| 42.0 * k as f64 / 29.0).collect(),
            ideal: false,
        }
    }
}

impl SweepConfig {
    pub fn points(&self) -> Vec<PolicyKind> {
        self.periodic_s
            .iter()
            .map(|&period_s| PolicyKind::Periodic { period_s })
            .chain(self.threshold_m.iter().map(|&e_thr_m| PolicyKind::Threshold { e_thr_m }))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub duration_s: f64,
    pub slot_s: f64,
    pub seeds: Vec<u64>,
    /// Silence after which a track predicted out of range is dropped.
    pub eviction_silence_s: f64,
    pub fusion: FusionMode,
    pub channel: ChannelConfig,
    pub policy: PolicyConfig,
    pub ukf: UkfParams,
    pub noise: MeasurementNoise,
    pub ctra: CtraConfig,
    pub logistic: LogisticParams,
    pub mobility: MobilitySource,
    pub sweep: SweepConfig,
    pub theory: TheoryConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            duration_s: 300.0,
            slot_s: 0.1,
            seeds: vec![1],
            eviction_silence_s: 5.0,
            fusion: FusionMode::default(),
            channel: ChannelConfig::default(),
            policy: PolicyConfig::default(),
            ukf: UkfParams::default(),
            noise: MeasurementNoise::default(),
            ctra: CtraConfig::default(),
            logistic: LogisticParams::default(),
            mobility: MobilitySource::default(),
            sweep: SweepConfig::default(),
            theory: TheoryConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Makes relative input paths relative to `base`, normally the directory
    /// holding the configuration file.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.mobility {
            MobilitySource::Fcd { path } | MobilitySource::Trace { path } => fix(path),
            MobilitySource::Synthetic(_) => {}
        }
        if let Some(p) = &mut self.theory.empirical_log {
            fix(p);
        }
    }

    pub fn slots(&self) -> u64 {
        (self.duration_s / self.slot_s).round() as u64
    }

    /// Motion model with the step tied to the slot length.
    pub fn ctra_config(&self) -> CtraConfig {
        CtraConfig {
            dt: self.slot_s,
            ..self.ctra
        }
    }

    pub fn policy_config(&self) -> PolicyConfig {
        PolicyConfig {
            slot_dt: self.slot_s,
            ..self.policy
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.slot_s > 0.0 && self.slot_s.is_finite()) || !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(SimError::Config("duration_s and slot_s must be positive".into()));
        }
        let n = self.duration_s / self.slot_s;
        if (n - n.round()).abs() > 1e-6 {
            return Err(SimError::Config(format!(
                "duration_s ({}) must be a whole number of slots of {} s",
                self.duration_s, self.slot_s
            )));
        }
        if self.seeds.is_empty() {
            return Err(SimError::Config("at least one seed is required".into()));
        }
        if !(self.eviction_silence_s >= 0.0) {
            return Err(SimError::Config("eviction_silence_s must be >= 0".into()));
        }
        self.channel.validate()?;
        self.policy_config().validate()?;
        self.ukf.validate()?;
        self.noise.validate()?;
        self.ctra_config().validate()?;
        self.logistic.validate()?;
        if let MobilitySource::Synthetic(s) = &self.mobility {
            s.validate()?;
        }
        self.theory.validate()?;
        for v in self.sweep.periodic_s.iter().chain(&self.sweep.threshold_m) {
            if !(*v >= 0.0 && v.is_finite()) {
                return Err(SimError::Config(format!("sweep values must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

const STREAM_MOBILITY: u64 = 0;
const STREAM_NOISE: u64 = 1;
const STREAM_CHANNEL: u64 = 2;
const STREAM_POLICY: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Ground truth for one seed. Synthetic scenarios mix the seed into the
/// generator seed; recorded traces are the same for every seed.
pub fn load_trajectories(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<Trajectory>, SimError> {
    match &cfg.mobility {
        MobilitySource::Synthetic(s) => {
            let derived: u64 = stream(seed, STREAM_MOBILITY).random();
            let s = SyntheticConfig {
                seed: s.seed ^ derived,
                ..*s
            };
            generate_synthetic(&s, cfg.slots(), cfg.slot_s)
        }
        MobilitySource::Fcd { path } => Ok(parse_fcd(&std::fs::read_to_string(path)?, cfg.slot_s)?.trajectories),
        MobilitySource::Trace { path } => parse_trace(&std::fs::read_to_string(path)?),
    }
}

#[derive(Debug, Clone)]
struct Agent {
    own: GaussianState,
    policy: PolicyState,
    tracks: TrackTable,
    /// A decided packet is waiting for the medium.
    pending: bool,
}

/// Averages over all transmission decisions, for seeding the analytical model.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastStats {
    pub count: u64,
    pub mean_cov: Mat6,
    pub mean_speed: f64,
}

impl Default for BroadcastStats {
    fn default() -> Self {
        Self {
            count: 0,
            mean_cov: Mat6::zeros(),
            mean_speed: 0.0,
        }
    }
}

impl BroadcastStats {
    fn add(&mut self, g: &GaussianState) {
        self.count += 1;
        let k = self.count as f64;
        self.mean_cov += (g.cov - self.mean_cov) / k;
        self.mean_speed += (g.mean[3].abs() - self.mean_speed) / k;
    }
}

impl BroadcastStats {
    /// Typical broadcast estimate: mean covariance, straight-line motion at
    /// the mean speed. `None` before any broadcast.
    pub fn typical_state(&self) -> Option<GaussianState> {
        (self.count > 0).then(|| {
            let mut mean = Vec6::zeros();
            mean[3] = self.mean_speed;
            GaussianState::new(mean, self.mean_cov)
        })
    }
}

/// First-passage distributions for every configured threshold, starting from
/// `initial`. The horizon is `theory.steps` or else the maximum period.
pub fn theory_tables(cfg: &ScenarioConfig, initial: &GaussianState) -> Result<Vec<(f64, FirstPassagePmf)>, SimError> {
    let steps = cfg
        .theory
        .steps
        .unwrap_or(cfg.policy_config().max_period_slots() as usize);
    let seq = predict_only_cov(initial, steps, &cfg.ctra_config(), &cfg.ukf)?;
    cfg.theory
        .e_thr_m
        .iter()
        .map(|&e| Ok((e, first_passage_pmf(&seq, e)?)))
        .collect()
}

/// One simulation: the evolving state of every vehicle and the medium.
pub struct World<'a> {
    cfg: &'a ScenarioConfig,
    ctra: CtraConfig,
    policy_cfg: PolicyConfig,
    trajectories: Vec<&'a Trajectory>,
    next_entry: usize,
    active: Vec<&'a Trajectory>,
    agents: BTreeMap<VehicleId, Agent>,
    queue: Vec<TxAttempt>,
    prev_activity: Vec<(VehicleId, usize)>,
    in_flight: VecDeque<(u64, BTreeMap<VehicleId, Vec<BeaconPacket>>)>,
    noise_rng: ChaCha8Rng,
    channel_rng: ChaCha8Rng,
    policy_rng: ChaCha8Rng,
    pub tx_log: TxLog,
    pub broadcast: BroadcastStats,
}

impl<'a> World<'a> {
    pub fn new(cfg: &'a ScenarioConfig, trajectories: &'a [Trajectory], seed: u64) -> Result<Self, SimError> {
        cfg.validate()?;
        let mut sorted: Vec<&Trajectory> = trajectories.iter().filter(|t| !t.samples.is_empty()).collect();
        sorted.sort_by_key(|t| (t.enter_slot, t.vehicle));
        Ok(Self {
            cfg,
            ctra: cfg.ctra_config(),
            policy_cfg: cfg.policy_config(),
            trajectories: sorted,
            next_entry: 0,
            active: Vec::new(),
            agents: BTreeMap::new(),
            queue: Vec::new(),
            prev_activity: Vec::new(),
            in_flight: VecDeque::new(),
            noise_rng: stream(seed, STREAM_NOISE),
            channel_rng: stream(seed, STREAM_CHANNEL),
            policy_rng: stream(seed, STREAM_POLICY),
            tx_log: TxLog::default(),
            broadcast: BroadcastStats::default(),
        })
    }

    /// Tracks held by `id`, if the vehicle is in the network.
    pub fn tracks(&self, id: VehicleId) -> Option<&TrackTable> {
        self.agents.get(&id).map(|a| &a.tracks)
    }

    pub fn own_estimate(&self, id: VehicleId) -> Option<&GaussianState> {
        self.agents.get(&id).map(|a| &a.own)
    }

    fn initial_phase(&mut self) -> u64 {
        let span = self
            .policy_cfg
            .period_slots()
            .unwrap_or_else(|| self.policy_cfg.max_period_slots());
        if span <= 1 {
            0
        } else {
            self.policy_rng.random_range(0..span)
        }
    }

    fn truth_at(&mut self, slot: u64) -> BTreeMap<VehicleId, VehicleState> {
        self.active.retain(|t| t.exit_slot() > slot);
        while let Some(t) = self.trajectories.get(self.next_entry) {
            if t.enter_slot > slot {
                break;
            }
            if t.exit_slot() > slot {
                self.active.push(t);
            }
            self.next_entry += 1;
        }
        self.active
            .iter()
            .filter_map(|t| t.state_at(slot).map(|s| (t.vehicle, *s)))
            .collect()
    }

    fn deliver(&mut self, slot: u64, receiver: VehicleId, packet: BeaconPacket) -> Result<(), SimError> {
        let (ctra, ukf, fusion) = (self.ctra, self.cfg.ukf, self.cfg.fusion);
        let Some(agent) = self.agents.get_mut(&receiver) else {
            return Ok(());
        };
        // Bring the estimate to the end of the previous slot; the regular
        // track prediction of this slot then moves it to the present.
        let mut est = packet.estimate;
        for _ in packet.tx_slot + 1..slot {
            est = ukf_predict(&est, &ctra, &ukf)?;
        }
        let sender = packet.sender;
        agent.policy.on_receive(sender, |id| agent.tracks.contains(id));
        match agent.tracks.get_mut(sender) {
            Some(track) => {
                track.estimate = match fusion {
                    FusionMode::Update => ukf_update_with_cov(&track.estimate, &est.state(), &est.cov, &ukf)?,
                    FusionMode::Replace => est,
                };
                track.last_update_slot = slot;
            }
            None => agent.tracks.insert(sender, est, slot),
        }
        Ok(())
    }

    pub fn step(&mut self, slot: u64) -> Result<SlotRecord, SimError> {
        let cfg = self.cfg;
        let (ctra, ukf) = (self.ctra, cfg.ukf);

        // Ground truth; vehicles that left take their state with them.
        let truth = self.truth_at(slot);
        let positions: BTreeMap<VehicleId, (f64, f64)> = truth.iter().map(|(&id, s)| (id, s.position())).collect();
        self.agents.retain(|id, _| truth.contains_key(id));
        self.queue.retain(|a| truth.contains_key(&a.sender));

        // Sensing and own-state filtering. Noise is drawn for every vehicle
        // in every slot so that the stream does not depend on the policy.
        let mut fresh = Vec::new();
        let mut fresh_ids = Vec::new();
        for (&id, s) in &truth {
            let obs = observe(s, &cfg.noise, &mut self.noise_rng);
            self.tx_log.entry(id).present_slots += 1;
            match self.agents.get_mut(&id) {
                Some(agent) => {
                    let prior = ukf_predict(&agent.own, &ctra, &ukf)?;
                    agent.own = ukf_update(&prior, &obs, &cfg.noise, &ukf)?;
                }
                None => fresh.push((id, GaussianState::from_state(&obs, cfg.noise.matrix()))),
            }
        }
        for (id, own) in fresh {
            fresh_ids.push(id);
            let phase = self.initial_phase();
            self.agents.insert(
                id,
                Agent {
                    policy: PolicyState::new(own.clone(), phase),
                    own,
                    tracks: TrackTable::new(),
                    pending: false,
                },
            );
        }

        // Policy decisions.
        for (&id, agent) in self.agents.iter_mut() {
            if !fresh_ids.contains(&id) {
                agent.policy.shadow_predict(&ctra, &ukf)?;
            }
            if agent.pending || agent.policy.decide(&agent.own, &self.policy_cfg) == Decision::Hold {
                continue;
            }
            agent.policy.on_transmit(&agent.own);
            agent.pending = true;
            self.broadcast.add(&agent.own);
            self.tx_log.entry(id).decisions.push(slot);
            self.queue.push(TxAttempt {
                sender: id,
                packet: BeaconPacket {
                    sender: id,
                    tx_slot: slot,
                    estimate: agent.own.clone(),
                    subcarrier: pick_subcarrier(&mut self.channel_rng, cfg.channel.n_sc),
                },
                deferred_since: slot,
            });
        }

        // Medium.
        let attempts = std::mem::take(&mut self.queue);
        let tx_attempted = attempts.len();
        let outcome = resolve_slot(slot, attempts, &self.prev_activity, &positions, &cfg.channel, &mut self.channel_rng);
        for p in &outcome.transmitted {
            if let Some(agent) = self.agents.get_mut(&p.sender) {
                agent.pending = false;
            }
            self.tx_log.entry(p.sender).sends.push(slot);
        }
        let tx_sent = outcome.transmitted.len();
        let tx_collided = outcome.collided_packets();
        self.prev_activity = outcome.activity();
        self.queue = outcome.deferred;
        self.in_flight.push_back((slot + cfg.channel.delay_slots, outcome.deliveries));

        // Packets whose delay has elapsed.
        while self.in_flight.front().is_some_and(|(due, _)| *due <= slot) {
            let (_, deliveries) = self.in_flight.pop_front().expect("front exists");
            for (receiver, packets) in deliveries {
                for packet in packets {
                    self.deliver(slot, receiver, packet)?;
                }
            }
        }

        // Track prediction and eviction.
        let silence = slots_for(cfg.eviction_silence_s, cfg.slot_s);
        let give_up = silence + self.policy_cfg.max_period_slots();
        let range = cfg.channel.range;
        for agent in self.agents.values_mut() {
            for (_, track) in agent.tracks.iter_mut() {
                track.estimate = ukf_predict(&track.estimate, &ctra, &ukf)?;
            }
            let here = agent.own.position();
            agent.tracks.retain(|_, t| {
                let quiet = slot.saturating_sub(t.last_update_slot);
                let gone = point_distance(here, t.estimate.position()) >= range;
                !((quiet >= silence && gone) || quiet > give_up)
            });
        }

        // Metrics.
        let graph = ConnectivityGraph::build(&positions, range);
        let mut record = SlotRecord {
            slot,
            tx_attempted,
            tx_sent,
            tx_collided,
            ..SlotRecord::default()
        };
        for (&id, agent) in &self.agents {
            let f = ego_error(id, &truth, &agent.own.state(), &agent.tracks, &cfg.logistic);
            record.per_vehicle.push((id, f));
            let nb = graph.neighbors(id).expect("present vehicles are graph nodes");
            let (u, m) = detection_error(positions[&id], &agent.tracks, nb, &positions, range);
            record.undetected += u;
            record.misdetected += m;
            record.neighbors += nb.len();
        }
        if !record.per_vehicle.is_empty() {
            record.network_error = record.per_vehicle.iter().map(|p| p.1).sum::<f64>() / record.per_vehicle.len() as f64;
        }
        Ok(record)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<SlotRecord>,
    pub tx_log: TxLog,
    pub summary: RunSummary,
    pub broadcast: BroadcastStats,
}

/// Runs one replication on given ground truth.
pub fn run_with(cfg: &ScenarioConfig, trajectories: &[Trajectory], seed: u64) -> Result<RunOutput, SimError> {
    if trajectories.iter().all(|t| t.samples.is_empty()) {
        return Err(SimError::Empty("scenario without vehicles"));
    }
    let mut world = World::new(cfg, trajectories, seed)?;
    let records = (0..cfg.slots()).map(|slot| world.step(slot)).collect::<Result<Vec<_>, _>>()?;
    let summary = summarize(&records, &world.tx_log, cfg.slot_s, &cfg.policy.kind, seed)?;
    Ok(RunOutput {
        records,
        tx_log: world.tx_log,
        summary,
        broadcast: world.broadcast,
    })
}

pub fn run(cfg: &ScenarioConfig, seed: u64) -> Result<RunOutput, SimError> {
    cfg.validate()?;
    let trajectories = load_trajectories(cfg, seed)?;
    run_with(cfg, &trajectories, seed)
}

/// The every-slot broadcasting, collision-free reference configuration.
pub fn ideal_config(cfg: &ScenarioConfig) -> ScenarioConfig {
    let mut ideal = cfg.clone();
    ideal.channel.ideal = true;
    ideal.policy.kind = PolicyKind::Periodic { period_s: cfg.slot_s };
    ideal
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// `periodic`, `threshold`, or `ideal` for the reference row.
    pub policy: String,
    pub parameter: f64,
    pub eff_intertx_s: f64,
    pub mean_error_m: f64,
    pub p95_error_m: f64,
    pub worst5_error_m: f64,
    pub detection_error: f64,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    /// Sorted by effective inter-transmission time.
    pub rows: Vec<SweepRow>,
    /// Parameter with the lowest mean error, per policy.
    pub argmin: BTreeMap<String, SweepRow>,
    /// Every underlying replication, in (point, seed) order.
    pub runs: Vec<RunSummary>,
}

fn average(policy: &str, parameter: f64, runs: &[RunSummary]) -> SweepRow {
    let n = runs.len() as f64;
    let mean = |f: fn(&RunSummary) -> f64| runs.iter().map(f).sum::<f64>() / n;
    SweepRow {
        policy: policy.to_string(),
        parameter,
        eff_intertx_s: mean(|r| r.eff_intertx_s),
        mean_error_m: mean(|r| r.mean_error_m),
        p95_error_m: mean(|r| r.p95_error_m),
        worst5_error_m: mean(|r| r.worst5_error_m),
        detection_error: mean(|r| r.detection_error),
        seeds: runs.len(),
    }
}

/// Runs every (policy point, seed) pair in parallel and averages over seeds.
pub fn sweep(cfg: &ScenarioConfig, points: &[PolicyKind], seeds: &[u64], include_ideal: bool) -> Result<SweepTable, SimError> {
    cfg.validate()?;
    if points.is_empty() && !include_ideal {
        return Err(SimError::Empty("sweep grid"));
    }
    if seeds.is_empty() {
        return Err(SimError::Empty("seed list"));
    }
    let truths = seeds
        .par_iter()
        .map(|&seed| load_trajectories(cfg, seed))
        .collect::<Result<Vec<_>, _>>()?;

    let mut configs: Vec<(String, f64, ScenarioConfig)> = points
        .iter()
        .map(|kind| {
            let mut c = cfg.clone();
            c.policy.kind = *kind;
            (kind.name().to_string(), kind.parameter(), c)
        })
        .collect();
    if include_ideal {
        configs.push(("ideal".into(), cfg.slot_s, ideal_config(cfg)));
    }

    let jobs: Vec<(usize, usize)> = (0..configs.len()).flat_map(|c| (0..seeds.len()).map(move |s| (c, s))).collect();
    let runs = jobs
        .par_iter()
        .map(|&(c, s)| {
            run_with(&configs[c].2, &truths[s], seeds[s]).map(|o| RunSummary {
                policy: configs[c].0.clone(),
                ..o.summary
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows: Vec<SweepRow> = configs
        .iter()
        .enumerate()
        .map(|(c, (name, parameter, _))| average(name, *parameter, &runs[c * seeds.len()..(c + 1) * seeds.len()]))
        .collect();
    rows.sort_by(|a, b| {
        a.eff_intertx_s
            .total_cmp(&b.eff_intertx_s)
            .then_with(|| a.policy.cmp(&b.policy))
            .then_with(|| a.parameter.total_cmp(&b.parameter))
    });
    let mut argmin: BTreeMap<String, SweepRow> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.policy != "ideal") {
        let better = argmin.get(&row.policy).is_none_or(|best| row.mean_error_m < best.mean_error_m);
        if better {
            argmin.insert(row.policy.clone(), row.clone());
        }
    }
    Ok(SweepTable { rows, argmin, runs })
}
