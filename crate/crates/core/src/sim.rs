//! Time-slotted fleet environment.
//!
//! Each slot: every airborne device drains kinetic energy for its current
//! motion mix, devices holding a task execute their assigned (version, cut)
//! profile and additionally drain compute + radio energy, the server queue,
//! channels, task flags, families, and motion mixes are redrawn for the next
//! slot, and the episode ends once every battery is empty. All randomness
//! flows from one seeded stream, so a (seed, action sequence) pair fully
//! determines the trajectory.

use crate::cost::{evaluate_profile, ChannelState, CostBreakdown, ServerState};
use crate::oracle::ExecutionProfile;
use crate::profiles::ProfileStore;
use crate::reward::{fleet_reward, score_breakdown, RewardConfig, ScoreTriple};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// Fraction of a slot spent in each powered motion; the remainder hovers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityProfile {
    pub forward_frac: f64,
    pub vertical_frac: f64,
    pub rotational_frac: f64,
}

impl ActivityProfile {
    pub fn new(forward_frac: f64, vertical_frac: f64, rotational_frac: f64) -> Self {
        Self {
            forward_frac,
            vertical_frac,
            rotational_frac,
        }
    }

    /// High-mobility preset: mostly forward flight.
    pub fn high() -> Self {
        Self::new(0.8, 0.1, 0.1)
    }

    /// Moderate-mobility preset.
    pub fn moderate() -> Self {
        Self::new(0.5, 0.25, 0.25)
    }

    /// Low-mobility preset: dominated by vertical and rotational motion.
    pub fn low() -> Self {
        Self::new(0.2, 0.4, 0.4)
    }

    pub fn hover_frac(&self) -> f64 {
        (1.0 - self.forward_frac - self.vertical_frac - self.rotational_frac).max(0.0)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let fracs = [self.forward_frac, self.vertical_frac, self.rotational_frac];
        if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(SimError::InvalidConfig(
                "activity fractions must lie in [0,1]".into(),
            ));
        }
        if fracs.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(SimError::InvalidConfig(
                "activity fractions must sum to at most 1".into(),
            ));
        }
        Ok(())
    }
}

/// Power draw of each motion regime, in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KineticPowerModel {
    pub forward_w: f64,
    pub vertical_w: f64,
    pub rotational_w: f64,
    pub hover_w: f64,
}

impl KineticPowerModel {
    pub fn validate(&self) -> Result<(), SimError> {
        let powers = [self.forward_w, self.vertical_w, self.rotational_w, self.hover_w];
        if powers.iter().any(|p| !(*p > 0.0)) {
            return Err(SimError::InvalidConfig(
                "kinetic powers must all be positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for KineticPowerModel {
    fn default() -> Self {
        Self {
            forward_w: 150.0,
            vertical_w: 300.0,
            rotational_w: 80.0,
            hover_w: 100.0,
        }
    }
}

/// Static description of one fleet device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavSpec {
    pub id: String,
    pub build: String,
    pub battery_capacity_j: f64,
    pub activity: ActivityProfile,
    pub kinetics: KineticPowerModel,
    pub compute_power_w: f64,
    pub tx_power_w: f64,
}

impl UavSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.battery_capacity_j > 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "{}: battery capacity must be positive",
                self.id
            )));
        }
        if !(self.compute_power_w > 0.0) || self.tx_power_w < 0.0 {
            return Err(SimError::InvalidConfig(format!(
                "{}: power fields out of range",
                self.id
            )));
        }
        self.activity.validate()?;
        self.kinetics.validate()
    }
}

/// Kinetic energy one device burns over a slot with the given motion mix.
pub fn kinetic_energy_j(
    kinetics: &KineticPowerModel,
    activity: &ActivityProfile,
    slot_seconds: f64,
) -> f64 {
    slot_seconds
        * (activity.forward_frac * kinetics.forward_w
            + activity.vertical_frac * kinetics.vertical_w
            + activity.rotational_frac * kinetics.rotational_w
            + activity.hover_frac() * kinetics.hover_w)
}

/// Per-slot snapshot of one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceState {
    pub battery_j: f64,
    /// Quantized charge: 1–10 while any energy remains, 0 once empty.
    pub battery_level: u8,
    pub task_active: bool,
    pub channel: ChannelState,
    pub family: String,
    pub family_index: usize,
    pub activity_now: ActivityProfile,
}

/// Per-slot snapshot of the whole environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub devices: Vec<DeviceState>,
    pub server_queue_ms: f64,
    pub slot_index: u64,
}

/// Stochastic-process parameters of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub slot_seconds: f64,
    pub task_probability: f64,
    pub channel_set: Vec<ChannelState>,
    pub family_set: Vec<String>,
    /// External server jobs per slot (Poisson mean).
    pub server_arrival_rate: f64,
    /// Mean queue contribution per external job, milliseconds.
    pub server_service_ms: f64,
    /// Normalizer applied to the queue when encoding state vectors.
    #[serde(default = "default_queue_norm")]
    pub queue_norm_ms: f64,
    pub rng_seed: u64,
    #[serde(default)]
    pub latency_threshold_ms: Option<f64>,
    #[serde(default)]
    pub accuracy_threshold: Option<f64>,
}

fn default_queue_norm() -> f64 {
    2000.0
}

impl ScenarioConfig {
    pub fn validate(&self, store: &ProfileStore) -> Result<(), SimError> {
        if !(self.slot_seconds > 0.0) {
            return Err(SimError::InvalidConfig("slot_seconds must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.task_probability) {
            return Err(SimError::InvalidConfig(
                "task_probability must lie in [0,1]".into(),
            ));
        }
        if self.channel_set.is_empty() {
            return Err(SimError::InvalidConfig("channel_set must be non-empty".into()));
        }
        if self
            .channel_set
            .iter()
            .any(|c| !(c.bandwidth_bps > 0.0) || c.tx_power_w < 0.0)
        {
            return Err(SimError::InvalidConfig("channel fields out of range".into()));
        }
        if self.family_set.is_empty() {
            return Err(SimError::InvalidConfig("family_set must be non-empty".into()));
        }
        for fam in &self.family_set {
            store.family(fam).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        }
        if self.server_arrival_rate < 0.0 || self.server_service_ms < 0.0 {
            return Err(SimError::InvalidConfig("server rates must be non-negative".into()));
        }
        if !(self.queue_norm_ms > 0.0) {
            return Err(SimError::InvalidConfig("queue_norm_ms must be positive".into()));
        }
        Ok(())
    }
}

/// What happened to one device during a step.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceStepRecord {
    /// Present iff the device executed a task this slot.
    pub executed: Option<ExecutedTask>,
    /// Kinetic drain this slot (zero for a depleted, grounded device).
    pub kinetic_energy_j: f64,
}

/// Cost and scores of one executed task.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutedTask {
    pub profile: ExecutionProfile,
    pub breakdown: CostBreakdown,
    pub scores: ScoreTriple,
}

/// Result of advancing the environment by one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: EnvState,
    pub reward: f64,
    pub done: bool,
    pub per_device: Vec<DeviceStepRecord>,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("fleet must contain at least one device")]
    EmptyFleet,
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error("expected {expected} actions, got {got}")]
    ActionLength { expected: usize, got: usize },
}

/// A running environment instance. Single-owner; clone-free stepping.
#[derive(Debug, Clone)]
pub struct Env<'a> {
    config: ScenarioConfig,
    uavs: Vec<UavSpec>,
    store: &'a ProfileStore,
    state: EnvState,
    rng: ChaCha8Rng,
    max_bandwidth_bps: f64,
}

impl<'a> Env<'a> {
    /// Builds and resets an environment from validated inputs.
    pub fn new(
        config: ScenarioConfig,
        uavs: Vec<UavSpec>,
        store: &'a ProfileStore,
    ) -> Result<Self, SimError> {
        if uavs.is_empty() {
            return Err(SimError::EmptyFleet);
        }
        config.validate(store)?;
        for uav in &uavs {
            uav.validate()?;
        }
        let max_bandwidth_bps = config
            .channel_set
            .iter()
            .map(|c| c.bandwidth_bps)
            .fold(0.0, f64::max);
        let seed = config.rng_seed;
        let mut env = Self {
            config,
            uavs,
            store,
            state: EnvState {
                devices: Vec::new(),
                server_queue_ms: 0.0,
                slot_index: 0,
            },
            rng: ChaCha8Rng::seed_from_u64(seed),
            max_bandwidth_bps,
        };
        env.reset_with_seed(seed);
        Ok(env)
    }

    /// Restarts the episode from the config seed.
    pub fn reset(&mut self) -> &EnvState {
        self.reset_with_seed(self.config.rng_seed)
    }

    /// Restarts the episode from an explicit seed: full batteries, fresh
    /// queue/channel/task/family/motion draws. Deterministic per seed.
    pub fn reset_with_seed(&mut self, seed: u64) -> &EnvState {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let queue = self.draw_queue();
        let mut devices = Vec::with_capacity(self.uavs.len());
        for i in 0..self.uavs.len() {
            let (channel, family_index, task, activity) = self.draw_device_slot(i);
            let spec = &self.uavs[i];
            devices.push(DeviceState {
                battery_j: spec.battery_capacity_j,
                battery_level: 10,
                task_active: task,
                channel,
                family: self.config.family_set[family_index].clone(),
                family_index,
                activity_now: activity,
            });
        }
        self.state = EnvState {
            devices,
            server_queue_ms: queue,
            slot_index: 0,
        };
        &self.state
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn uavs(&self) -> &[UavSpec] {
        &self.uavs
    }

    pub fn store(&self) -> &'a ProfileStore {
        self.store
    }

    pub fn device_count(&self) -> usize {
        self.uavs.len()
    }

    pub fn is_done(&self) -> bool {
        self.state.devices.iter().all(|d| d.battery_j == 0.0)
    }

    /// Advances one slot. Devices with an active task execute their action
    /// when its indices are valid for the device's current family; idle,
    /// depleted, or invalidly-instructed devices skip execution. Batteries
    /// drain by kinetic plus any execution energy (floored at zero), then
    /// the next slot's stochastic state is drawn.
    pub fn step(
        &mut self,
        actions: &[ExecutionProfile],
        reward_cfg: &RewardConfig,
    ) -> Result<StepOutcome, SimError> {
        if actions.len() != self.state.devices.len() {
            return Err(SimError::ActionLength {
                expected: self.state.devices.len(),
                got: actions.len(),
            });
        }

        let mut per_device = Vec::with_capacity(actions.len());
        let mut active_scores = Vec::new();
        let queue = self.state.server_queue_ms;

        for (idx, action) in actions.iter().enumerate() {
            let device = &mut self.state.devices[idx];
            let spec = &self.uavs[idx];
            if device.battery_j == 0.0 {
                per_device.push(DeviceStepRecord {
                    executed: None,
                    kinetic_energy_j: 0.0,
                });
                continue;
            }

            let kinetic = kinetic_energy_j(
                &spec.kinetics,
                &device.activity_now,
                self.config.slot_seconds,
            );
            let mut executed = None;
            let mut exec_energy = 0.0;
            if device.task_active {
                if let Some((version, cut)) = self
                    .store
                    .family(&device.family)
                    .ok()
                    .and_then(|fam| fam.versions.get(action.version_index))
                    .and_then(|v| v.cut_points.get(action.cut_index).map(|c| (v, c)))
                {
                    let channel = ChannelState {
                        bandwidth_bps: device.channel.bandwidth_bps,
                        tx_power_w: spec.tx_power_w,
                    };
                    let breakdown =
                        evaluate_profile(cut, channel, ServerState { queue_time_ms: queue });
                    let scores = score_breakdown(version, &breakdown, reward_cfg);
                    exec_energy = breakdown.total_energy_j;
                    active_scores.push(scores);
                    executed = Some(ExecutedTask {
                        profile: *action,
                        breakdown,
                        scores,
                    });
                }
            }

            let drain = kinetic + exec_energy;
            device.battery_j = (device.battery_j - drain).max(0.0);
            per_device.push(DeviceStepRecord {
                executed,
                kinetic_energy_j: kinetic,
            });
        }

        let reward = fleet_reward(&active_scores, reward_cfg);

        // Draw the next slot's stochastic state. Draws happen for every
        // device regardless of charge so the random stream's layout does not
        // depend on when devices die.
        let next_queue = self.draw_queue();
        for idx in 0..self.state.devices.len() {
            let (channel, family_index, task, activity) = self.draw_device_slot(idx);
            let spec = &self.uavs[idx];
            let device = &mut self.state.devices[idx];
            let alive = device.battery_j > 0.0;
            device.battery_level = quantize_level(device.battery_j, spec.battery_capacity_j);
            device.task_active = alive && task;
            device.channel = channel;
            device.family = self.config.family_set[family_index].clone();
            device.family_index = family_index;
            device.activity_now = activity;
        }
        self.state.server_queue_ms = next_queue;
        self.state.slot_index += 1;

        let done = self.is_done();
        Ok(StepOutcome {
            next_state: self.state.clone(),
            reward,
            done,
            per_device,
        })
    }

    /// Fixed-length feature vector: per device
    /// `[battery_level/10, task, bandwidth/max_bandwidth, one-hot family, F, V, R]`
    /// (all zeros for a depleted device), then the normalized queue.
    /// Length is `n * (3 + |families| + 3) + 1`.
    pub fn encode_state(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.encoded_len());
        let n_fam = self.config.family_set.len();
        for device in &self.state.devices {
            if device.battery_j == 0.0 {
                out.extend(std::iter::repeat(0.0).take(6 + n_fam));
                continue;
            }
            out.push(device.battery_level as f64 / 10.0);
            out.push(if device.task_active { 1.0 } else { 0.0 });
            out.push(device.channel.bandwidth_bps / self.max_bandwidth_bps);
            for i in 0..n_fam {
                out.push(if i == device.family_index { 1.0 } else { 0.0 });
            }
            out.push(device.activity_now.forward_frac);
            out.push(device.activity_now.vertical_frac);
            out.push(device.activity_now.rotational_frac);
        }
        out.push(self.state.server_queue_ms / self.config.queue_norm_ms);
        out
    }

    pub fn encoded_len(&self) -> usize {
        self.uavs.len() * (6 + self.config.family_set.len()) + 1
    }

    fn draw_queue(&mut self) -> f64 {
        if self.config.server_arrival_rate <= 0.0 || self.config.server_service_ms <= 0.0 {
            return 0.0;
        }
        let poisson =
            Poisson::new(self.config.server_arrival_rate).expect("validated arrival rate");
        let arrivals: f64 = poisson.sample(&mut self.rng);
        arrivals * self.config.server_service_ms
    }

    fn draw_device_slot(
        &mut self,
        device_idx: usize,
    ) -> (ChannelState, usize, bool, ActivityProfile) {
        let channel_idx = self.rng.gen_range(0..self.config.channel_set.len());
        let family_idx = self.rng.gen_range(0..self.config.family_set.len());
        let task = self.rng.gen_bool(self.config.task_probability);
        let jitter = [
            self.rng.gen_range(0.8..1.2),
            self.rng.gen_range(0.8..1.2),
            self.rng.gen_range(0.8..1.2),
        ];
        (
            self.config.channel_set[channel_idx],
            family_idx,
            task,
            jittered_activity(&self.uavs[device_idx].activity, jitter),
        )
    }
}

/// Per-slot motion mix: each base fraction scaled by an independent
/// 0.8–1.2 factor, renormalized if the total exceeds one.
fn jittered_activity(base: &ActivityProfile, jitter: [f64; 3]) -> ActivityProfile {
    let mut f = base.forward_frac * jitter[0];
    let mut v = base.vertical_frac * jitter[1];
    let mut r = base.rotational_frac * jitter[2];
    let sum = f + v + r;
    if sum > 1.0 {
        f /= sum;
        v /= sum;
        r /= sum;
    }
    ActivityProfile::new(f, v, r)
}

fn quantize_level(battery_j: f64, capacity_j: f64) -> u8 {
    let level = (10.0 * battery_j / capacity_j).ceil();
    level.clamp(0.0, 10.0) as u8
}

/// On-disk scenario: stochastic config, fleet, and reward weights together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub scenario: ScenarioConfig,
    pub uavs: Vec<UavSpec>,
    #[serde(default)]
    pub reward: Option<RewardConfig>,
}

impl ScenarioFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            SimError::InvalidConfig(format!("cannot read {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| SimError::InvalidConfig(format!("cannot parse {}: {e}", path.display())))
    }

    pub fn reward_config(&self) -> RewardConfig {
        self.reward.unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_config(seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            slot_seconds: 30.0,
            task_probability: 0.9,
            channel_set: vec![
                ChannelState::new(8_000_000.0, 0.5),
                ChannelState::new(20_000_000.0, 0.5),
            ],
            family_set: vec!["VGG".into(), "ResNet".into(), "DenseNet".into()],
            server_arrival_rate: 1.0,
            server_service_ms: 20.0,
            queue_norm_ms: 2000.0,
            rng_seed: seed,
            latency_threshold_ms: None,
            accuracy_threshold: None,
        }
    }

    fn small_fleet(capacity_j: f64) -> Vec<UavSpec> {
        let kinetics = KineticPowerModel::default();
        [
            ("uav-high", ActivityProfile::high()),
            ("uav-moderate", ActivityProfile::moderate()),
            ("uav-low", ActivityProfile::low()),
        ]
        .into_iter()
        .map(|(id, activity)| UavSpec {
            id: id.into(),
            build: "quadrotor".into(),
            battery_capacity_j: capacity_j,
            activity,
            kinetics,
            compute_power_w: 6.056,
            tx_power_w: 0.5,
        })
        .collect()
    }

    fn env(seed: u64, capacity_j: f64) -> Env<'static> {
        Env::new(small_config(seed), small_fleet(capacity_j), ProfileStore::bundled()).unwrap()
    }

    fn full_local_action(env: &Env, device: usize) -> ExecutionProfile {
        let fam = env
            .store()
            .family(&env.state().devices[device].family)
            .unwrap();
        ExecutionProfile {
            version_index: 0,
            cut_index: fam.versions[0].cut_points.len() - 1,
        }
    }

    #[test]
    fn kinetic_energy_matches_frozen_presets() {
        let kin = KineticPowerModel::default();
        assert_relative_eq!(
            kinetic_energy_j(&kin, &ActivityProfile::high(), 30.0),
            4740.0
        );
        assert_relative_eq!(
            kinetic_energy_j(&kin, &ActivityProfile::moderate(), 30.0),
            5100.0
        );
        assert_relative_eq!(kinetic_energy_j(&kin, &ActivityProfile::low(), 30.0), 5460.0);
        // Pure hover: only the hover term contributes.
        assert_relative_eq!(
            kinetic_energy_j(&kin, &ActivityProfile::new(0.0, 0.0, 0.0), 30.0),
            3000.0
        );
    }

    #[test]
    fn reset_yields_full_fleet_and_is_seed_deterministic() {
        let mut a = env(42, 100_000.0);
        let mut b = env(42, 100_000.0);
        assert_eq!(a.state().devices.len(), 3);
        for d in &a.state().devices {
            assert_eq!(d.battery_level, 10);
            assert_eq!(d.battery_j, 100_000.0);
        }
        assert_eq!(a.reset_with_seed(9), b.reset_with_seed(9));
        assert_ne!(a.reset_with_seed(9), b.reset_with_seed(10));
    }

    #[test]
    fn empty_fleet_is_rejected() {
        let err = Env::new(small_config(1), Vec::new(), ProfileStore::bundled()).unwrap_err();
        assert!(matches!(err, SimError::EmptyFleet));
    }

    #[test]
    fn step_drains_kinetic_plus_execution_energy_exactly() {
        let mut env = env(3, 500_000.0);
        let cfg = RewardConfig::default();
        let actions: Vec<ExecutionProfile> = (0..3).map(|d| full_local_action(&env, d)).collect();
        let before: Vec<f64> = env.state().devices.iter().map(|d| d.battery_j).collect();
        let out = env.step(&actions, &cfg).unwrap();
        for (idx, rec) in out.per_device.iter().enumerate() {
            let exec = rec.executed.as_ref().map_or(0.0, |e| e.breakdown.total_energy_j);
            let after = out.next_state.devices[idx].battery_j;
            assert_eq!(after, (before[idx] - (rec.kinetic_energy_j + exec)).max(0.0));
        }
        assert!(
            out.per_device.iter().any(|r| r.executed.is_some()),
            "expected at least one active device on the first slot"
        );
    }

    #[test]
    fn invalid_action_indices_skip_execution_but_kinetics_still_drain() {
        let mut env = env(5, 500_000.0);
        let cfg = RewardConfig::default();
        let bogus = vec![
            ExecutionProfile {
                version_index: 9,
                cut_index: 0,
            };
            3
        ];
        let before: Vec<f64> = env.state().devices.iter().map(|d| d.battery_j).collect();
        let out = env.step(&bogus, &cfg).unwrap();
        assert_eq!(out.reward, 0.0);
        for (idx, rec) in out.per_device.iter().enumerate() {
            assert!(rec.executed.is_none());
            assert!(rec.kinetic_energy_j > 0.0);
            assert_eq!(
                out.next_state.devices[idx].battery_j,
                (before[idx] - rec.kinetic_energy_j).max(0.0)
            );
        }
    }

    #[test]
    fn action_length_mismatch_errors() {
        let mut env = env(8, 100_000.0);
        let err = env
            .step(&[], &RewardConfig::default())
            .unwrap_err();
        assert!(matches!(
            err,
            SimError::ActionLength { expected: 3, got: 0 }
        ));
    }

    #[test]
    fn episode_terminates_and_dead_fleet_is_absorbing() {
        let mut env = env(11, 20_000.0);
        let cfg = RewardConfig::default();
        let bound = (20_000.0_f64 / (80.0 * 30.0)).ceil() as u64 + 1;
        let mut steps = 0;
        while !env.is_done() {
            let actions: Vec<ExecutionProfile> =
                (0..3).map(|d| full_local_action(&env, d)).collect();
            env.step(&actions, &cfg).unwrap();
            steps += 1;
            assert!(steps <= bound, "episode failed to terminate within {bound}");
        }
        // Once everything is drained, further steps change no battery.
        let before: Vec<f64> = env.state().devices.iter().map(|d| d.battery_j).collect();
        let idle = vec![
            ExecutionProfile {
                version_index: 0,
                cut_index: 0
            };
            3
        ];
        let out = env.step(&idle, &cfg).unwrap();
        assert!(out.done);
        assert_eq!(out.reward, 0.0);
        let after: Vec<f64> = out.next_state.devices.iter().map(|d| d.battery_j).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn battery_level_is_quantized_one_to_ten_while_alive() {
        assert_eq!(quantize_level(100_000.0, 100_000.0), 10);
        assert_eq!(quantize_level(95_000.0, 100_000.0), 10);
        assert_eq!(quantize_level(90_000.0, 100_000.0), 9);
        assert_eq!(quantize_level(1.0, 100_000.0), 1);
        assert_eq!(quantize_level(0.0, 100_000.0), 0);
    }

    #[test]
    fn encode_state_layout_and_maxima() {
        let mut env = env(2, 100_000.0);
        // Draw slots until device 0 is active on the faster channel.
        let cfg = RewardConfig::default();
        for _ in 0..64 {
            let d0 = &env.state().devices[0];
            if d0.task_active && d0.channel.bandwidth_bps == 20_000_000.0 {
                break;
            }
            let actions = vec![
                ExecutionProfile {
                    version_index: 0,
                    cut_index: 0
                };
                3
            ];
            env.step(&actions, &cfg).unwrap();
        }
        let vec = env.encode_state();
        assert_eq!(vec.len(), 3 * 9 + 1);
        assert_eq!(vec.len(), env.encoded_len());
        let d0 = &env.state().devices[0];
        assert!(d0.task_active && d0.channel.bandwidth_bps == 20_000_000.0);
        assert_eq!(vec[0], d0.battery_level as f64 / 10.0);
        assert_eq!(vec[1], 1.0);
        assert_eq!(vec[2], 1.0);
        let one_hot: Vec<f64> = vec[3..6].to_vec();
        assert_eq!(one_hot.iter().sum::<f64>(), 1.0);
        assert_eq!(one_hot[d0.family_index], 1.0);
    }

    #[test]
    fn same_seed_and_actions_reproduce_bitwise_identical_trajectories() {
        let run = |seed: u64| {
            let mut env = env(seed, 60_000.0);
            let cfg = RewardConfig::default();
            let mut trace = Vec::new();
            while !env.is_done() {
                let actions: Vec<ExecutionProfile> =
                    (0..3).map(|d| full_local_action(&env, d)).collect();
                let out = env.step(&actions, &cfg).unwrap();
                trace.push((
                    out.reward.to_bits(),
                    out.next_state
                        .devices
                        .iter()
                        .map(|d| d.battery_j.to_bits())
                        .collect::<Vec<_>>(),
                ));
            }
            trace
        };
        assert_eq!(run(77), run(77));
        assert_ne!(run(77), run(78));
    }

    #[test]
    fn scenario_file_round_trips_and_defaults_reward() {
        let file = ScenarioFile {
            scenario: small_config(4),
            uavs: small_fleet(123.0),
            reward: None,
        };
        let text = serde_json::to_string(&file).unwrap();
        let back: ScenarioFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.reward_config(), RewardConfig::multi_objective());
    }

    #[test]
    fn jittered_activity_renormalizes_when_fractions_overflow() {
        let base = ActivityProfile::high();
        let j = jittered_activity(&base, [1.2, 1.2, 1.2]);
        assert_relative_eq!(
            j.forward_frac + j.vertical_frac + j.rotational_frac,
            1.0,
            epsilon = 1e-12
        );
        assert!(j.hover_frac() <= 1e-12);
        let j = jittered_activity(&base, [0.8, 0.8, 0.8]);
        assert!(j.hover_frac() > 0.0);
        j.validate().unwrap();
    }
}
