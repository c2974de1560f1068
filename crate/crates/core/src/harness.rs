//! Experiment harness: evaluation passes for the selection strategies,
//! training orchestration, weight-sensitivity sweeps, battery studies, and
//! the CSV artifacts they persist.
//!
//! Every entry point is deterministic for a fixed seed. Evaluation episodes
//! derive their environment and policy streams from [`episode_seed`], and all
//! batch work funnels through [`par_map`], which preserves input order, so
//! results are bit-identical with or without the `parallel` feature.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{
    episode_seed, A2cTrainer, ActorNetwork, AgentCheckpoint, AgentError, EpisodeRecord,
    TrainerConfig,
};
use crate::cost::{transmission_time_ms, ChannelState, ServerState};
use crate::oracle::{best_profile, rank_all, weight_sweep, ExecutionProfile, OracleError, SweepAxis};
use crate::par::par_map;
use crate::profiles::{ProfileError, ProfileStore};
use crate::reward::{RewardConfig, RewardError};
use crate::sim::{ActivityProfile, Env, ScenarioFile, SimError};

/// Episodes evaluated per strategy when the caller does not override it.
pub const DEFAULT_EVAL_EPISODES: usize = 100;
/// Window of the training moving-average diagnostic.
pub const MOVING_AVERAGE_WINDOW: usize = 100;
/// Episodes between checkpoint rewrites during a training run.
pub const CHECKPOINT_INTERVAL: usize = 250;

/// Salt separating the local-only policy stream from the environment stream.
const LOCAL_POLICY_SALT: u64 = 0xA5A5_5A5A_C3C3_3C3C;
/// Salt separating battery-study activity levels from one another.
const LEVEL_SALT: u64 = 0x9E37_79B9;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid harness input: {0}")]
    Invalid(String),
    #[error("unknown strategy `{0}` (expected AO, LO, EO, MO, LOCAL_ONLY, ORACLE, or TRAINED)")]
    UnknownStrategy(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// The profile-selection policies the harness can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyKind {
    /// Brute-force selection under accuracy-only weights.
    AccuracyOnly,
    /// Brute-force selection under latency-only weights.
    LatencyOnly,
    /// Brute-force selection under energy-only weights.
    EnergyOnly,
    /// Brute-force selection under equal weights.
    MultiObjective,
    /// Uniform-random version executed fully on device (final cut).
    LocalOnly,
    /// Brute-force selection under the scenario's own reward weights.
    Oracle,
    /// Greedy actions from a trained policy checkpoint.
    Trained,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 7] = [
        StrategyKind::AccuracyOnly,
        StrategyKind::LatencyOnly,
        StrategyKind::EnergyOnly,
        StrategyKind::MultiObjective,
        StrategyKind::LocalOnly,
        StrategyKind::Oracle,
        StrategyKind::Trained,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StrategyKind::AccuracyOnly => "AO",
            StrategyKind::LatencyOnly => "LO",
            StrategyKind::EnergyOnly => "EO",
            StrategyKind::MultiObjective => "MO",
            StrategyKind::LocalOnly => "LOCAL_ONLY",
            StrategyKind::Oracle => "ORACLE",
            StrategyKind::Trained => "TRAINED",
        }
    }

    pub fn parse(name: &str) -> Result<Self, HarnessError> {
        let canon = name.trim().to_ascii_uppercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.label() == canon)
            .ok_or_else(|| HarnessError::UnknownStrategy(name.to_string()))
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A concrete strategy to evaluate: a kind plus, for [`StrategyKind::Trained`],
/// the checkpoint to load.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    pub checkpoint: Option<PathBuf>,
}

impl StrategySpec {
    pub fn named(kind: StrategyKind) -> Self {
        Self {
            kind,
            checkpoint: None,
        }
    }

    pub fn parse(name: &str) -> Result<Self, HarnessError> {
        Ok(Self::named(StrategyKind::parse(name)?))
    }

    pub fn trained(checkpoint: impl Into<PathBuf>) -> Self {
        Self {
            kind: StrategyKind::Trained,
            checkpoint: Some(checkpoint.into()),
        }
    }

    /// The weights this strategy optimizes when picking profiles, if it picks
    /// by brute-force scoring. Sigmoid parameters are inherited from the
    /// measurement config so selection and measurement agree on the accuracy
    /// transform; only the objective weights differ.
    pub fn selection_weights(&self, measure: &RewardConfig) -> Option<RewardConfig> {
        let with = |a: f64, l: f64, e: f64| RewardConfig {
            w_accuracy: a,
            w_latency: l,
            w_energy: e,
            ..*measure
        };
        match self.kind {
            StrategyKind::AccuracyOnly => Some(with(1.0, 0.0, 0.0)),
            StrategyKind::LatencyOnly => Some(with(0.0, 1.0, 0.0)),
            StrategyKind::EnergyOnly => Some(with(0.0, 0.0, 1.0)),
            StrategyKind::MultiObjective => Some(with(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)),
            StrategyKind::Oracle => Some(*measure),
            StrategyKind::LocalOnly | StrategyKind::Trained => None,
        }
    }
}

/// How a prepared strategy chooses fleet actions each slot.
enum Decider {
    /// Brute-force best profile per active device under fixed weights.
    Score(RewardConfig),
    /// Uniform-random version, executed fully on device.
    LocalRandom,
    /// Greedy argmax actions from a trained policy.
    Greedy(ActorNetwork),
}

impl Decider {
    fn decide(
        &self,
        env: &Env,
        store: &ProfileStore,
        policy_rng: &mut ChaCha8Rng,
    ) -> Result<Vec<ExecutionProfile>, HarnessError> {
        match self {
            Decider::Greedy(actor) => Ok(actor.greedy(&env.encode_state())),
            Decider::LocalRandom => {
                let mut actions = Vec::with_capacity(env.device_count());
                // Draw for every device each slot so the policy stream's
                // layout is independent of task arrivals and battery deaths.
                for device in &env.state().devices {
                    let family = store.family(&device.family)?;
                    let version = policy_rng.gen_range(0..family.versions.len());
                    let cut = family.versions[version].cut_points.len() - 1;
                    actions.push(ExecutionProfile {
                        version_index: version,
                        cut_index: cut,
                    });
                }
                Ok(actions)
            }
            Decider::Score(cfg) => {
                let queue = env.state().server_queue_ms;
                let mut actions = Vec::with_capacity(env.device_count());
                for (idx, device) in env.state().devices.iter().enumerate() {
                    if device.battery_j == 0.0 || !device.task_active {
                        actions.push(ExecutionProfile {
                            version_index: 0,
                            cut_index: 0,
                        });
                        continue;
                    }
                    // Execution is billed at the device's drawn bandwidth but
                    // the platform's transmit power, so selection must score
                    // with the same composite channel.
                    let channel = ChannelState {
                        bandwidth_bps: device.channel.bandwidth_bps,
                        tx_power_w: env.uavs()[idx].tx_power_w,
                    };
                    let best = best_profile(
                        store,
                        &device.family,
                        channel,
                        ServerState {
                            queue_time_ms: queue,
                        },
                        cfg,
                        None,
                    )?;
                    actions.push(best.profile);
                }
                Ok(actions)
            }
        }
    }
}

fn prepare(
    file: &ScenarioFile,
    store: &ProfileStore,
    strategy: &StrategySpec,
    measure: &RewardConfig,
) -> Result<Decider, HarnessError> {
    match strategy.kind {
        StrategyKind::LocalOnly => Ok(Decider::LocalRandom),
        StrategyKind::Trained => {
            let path = strategy.checkpoint.as_deref().ok_or_else(|| {
                HarnessError::Invalid("TRAINED strategy needs a checkpoint path".into())
            })?;
            let (actor, _critic) = AgentCheckpoint::load(path)?.restore()?;
            let probe = Env::new(file.scenario.clone(), file.uavs.clone(), store)?;
            if actor.state_len() != probe.encoded_len()
                || actor.n_devices() != probe.device_count()
            {
                return Err(HarnessError::Invalid(format!(
                    "checkpoint expects state length {} and {} devices, scenario has {} and {}",
                    actor.state_len(),
                    actor.n_devices(),
                    probe.encoded_len(),
                    probe.device_count()
                )));
            }
            Ok(Decider::Greedy(actor))
        }
        _ => Ok(Decider::Score(
            strategy
                .selection_weights(measure)
                .expect("scoring strategies always define weights"),
        )),
    }
}

/// Evaluation batch controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub episodes: usize,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            episodes: DEFAULT_EVAL_EPISODES,
            seed: 0,
        }
    }
}

/// Aggregates of one evaluation pass over a strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub strategy: String,
    pub episodes: usize,
    /// Total simulated slots across all episodes.
    pub slots: usize,
    /// Total executed inference tasks across all episodes.
    pub tasks: usize,
    /// Mean per-slot fleet reward under the scenario's weights.
    pub mean_weighted_reward: f64,
    /// Mean top-1 accuracy of the versions chosen for executed tasks.
    pub mean_accuracy: f64,
    /// Mean end-to-end latency per executed task, milliseconds.
    pub mean_latency_ms: f64,
    /// Mean inference energy per executed task, joules.
    pub mean_energy_j: f64,
    /// Mean slots a device operates before its battery empties.
    pub mean_battery_life_slots: f64,
    /// 1 − latency ratio versus the local-only baseline on the same seeds.
    pub latency_improvement_vs_local: f64,
    /// 1 − energy ratio versus the local-only baseline on the same seeds.
    pub energy_improvement_vs_local: f64,
}

/// Sums accumulated over one episode.
struct EpisodeStats {
    slots: usize,
    tasks: usize,
    reward_sum: f64,
    accuracy_sum: f64,
    latency_sum_ms: f64,
    energy_sum_j: f64,
    alive_slots: Vec<usize>,
}

/// Episode-batch aggregates of one pass.
struct PassStats {
    slots: usize,
    tasks: usize,
    mean_reward: f64,
    mean_accuracy: f64,
    mean_latency_ms: f64,
    mean_energy_j: f64,
    mean_battery_life_slots: f64,
}

fn run_episode(
    file: &ScenarioFile,
    store: &ProfileStore,
    decider: &Decider,
    measure: &RewardConfig,
    env_seed: u64,
    policy_seed: u64,
) -> Result<EpisodeStats, HarnessError> {
    let mut env = Env::new(file.scenario.clone(), file.uavs.clone(), store)?;
    env.reset_with_seed(env_seed);
    let mut policy_rng = ChaCha8Rng::seed_from_u64(policy_seed);
    let mut stats = EpisodeStats {
        slots: 0,
        tasks: 0,
        reward_sum: 0.0,
        accuracy_sum: 0.0,
        latency_sum_ms: 0.0,
        energy_sum_j: 0.0,
        alive_slots: vec![0; env.device_count()],
    };
    loop {
        // Snapshot pre-step facts the outcome is attributed to: the family a
        // task belonged to and which devices still held charge.
        let families: Vec<String> = env
            .state()
            .devices
            .iter()
            .map(|d| d.family.clone())
            .collect();
        let alive: Vec<bool> = env.state().devices.iter().map(|d| d.battery_j > 0.0).collect();
        let actions = decider.decide(&env, store, &mut policy_rng)?;
        let outcome = env.step(&actions, measure)?;
        stats.slots += 1;
        stats.reward_sum += outcome.reward;
        for (idx, record) in outcome.per_device.iter().enumerate() {
            if alive[idx] {
                stats.alive_slots[idx] += 1;
            }
            if let Some(task) = &record.executed {
                stats.tasks += 1;
                stats.latency_sum_ms += task.breakdown.total_latency_ms;
                stats.energy_sum_j += task.breakdown.total_energy_j;
                let family = store.family(&families[idx])?;
                stats.accuracy_sum += family.versions[task.profile.version_index].top1_accuracy;
            }
        }
        if outcome.done {
            break;
        }
    }
    Ok(stats)
}

fn run_pass(
    file: &ScenarioFile,
    store: &ProfileStore,
    decider: &Decider,
    measure: &RewardConfig,
    opts: EvalOptions,
) -> Result<PassStats, HarnessError> {
    if opts.episodes == 0 {
        return Err(HarnessError::Invalid(
            "evaluation needs at least one episode".into(),
        ));
    }
    let episodes: Vec<usize> = (0..opts.episodes).collect();
    let per_episode = par_map(episodes, |ep| {
        run_episode(
            file,
            store,
            decider,
            measure,
            episode_seed(opts.seed, ep),
            episode_seed(opts.seed ^ LOCAL_POLICY_SALT, ep),
        )
    });
    let mut slots = 0usize;
    let mut tasks = 0usize;
    let mut reward_sum = 0.0;
    let mut accuracy_sum = 0.0;
    let mut latency_sum = 0.0;
    let mut energy_sum = 0.0;
    let mut life_sum = 0usize;
    let mut device_count = 0usize;
    for stats in per_episode {
        let stats = stats?;
        slots += stats.slots;
        tasks += stats.tasks;
        reward_sum += stats.reward_sum;
        accuracy_sum += stats.accuracy_sum;
        latency_sum += stats.latency_sum_ms;
        energy_sum += stats.energy_sum_j;
        life_sum += stats.alive_slots.iter().sum::<usize>();
        device_count += stats.alive_slots.len();
    }
    let per_task = |sum: f64| if tasks == 0 { 0.0 } else { sum / tasks as f64 };
    Ok(PassStats {
        slots,
        tasks,
        mean_reward: reward_sum / slots as f64,
        mean_accuracy: per_task(accuracy_sum),
        mean_latency_ms: per_task(latency_sum),
        mean_energy_j: per_task(energy_sum),
        mean_battery_life_slots: life_sum as f64 / device_count as f64,
    })
}

/// Evaluates one strategy over a seeded episode batch and reports aggregates
/// plus its latency/energy improvement over a local-only baseline run on the
/// same episode seeds.
pub fn run_experiment(
    file: &ScenarioFile,
    store: &ProfileStore,
    strategy: &StrategySpec,
    opts: EvalOptions,
) -> Result<ExperimentReport, HarnessError> {
    let measure = file.reward_config();
    measure.validate()?;
    let decider = prepare(file, store, strategy, &measure)?;
    let pass = run_pass(file, store, &decider, &measure, opts)?;
    let (baseline_latency, baseline_energy) = if strategy.kind == StrategyKind::LocalOnly {
        (pass.mean_latency_ms, pass.mean_energy_j)
    } else {
        let local = run_pass(file, store, &Decider::LocalRandom, &measure, opts)?;
        (local.mean_latency_ms, local.mean_energy_j)
    };
    let improvement = |ours: f64, base: f64| if base > 0.0 { 1.0 - ours / base } else { 0.0 };
    Ok(ExperimentReport {
        strategy: strategy.kind.label().to_string(),
        episodes: opts.episodes,
        slots: pass.slots,
        tasks: pass.tasks,
        mean_weighted_reward: pass.mean_reward,
        mean_accuracy: pass.mean_accuracy,
        mean_latency_ms: pass.mean_latency_ms,
        mean_energy_j: pass.mean_energy_j,
        mean_battery_life_slots: pass.mean_battery_life_slots,
        latency_improvement_vs_local: improvement(pass.mean_latency_ms, baseline_latency),
        energy_improvement_vs_local: improvement(pass.mean_energy_j, baseline_energy),
    })
}

/// Artifacts of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutcome {
    pub log: Vec<EpisodeRecord>,
    /// Moving average of per-episode mean reward over the final window.
    pub final_moving_average: f64,
    pub checkpoint_path: PathBuf,
    pub log_path: PathBuf,
}

/// Moving average of per-episode mean reward over the trailing `window`
/// entries (all entries when fewer). Zero for an empty log.
pub fn moving_average(log: &[EpisodeRecord], window: usize) -> f64 {
    if log.is_empty() {
        return 0.0;
    }
    let w = window.clamp(1, log.len());
    let tail = &log[log.len() - w..];
    tail.iter().map(|r| r.mean_reward).sum::<f64>() / w as f64
}

/// Trains an agent on the scenario, checkpointing every
/// [`CHECKPOINT_INTERVAL`] episodes and writing `training_log.csv` plus
/// `checkpoint.json` under `out_dir`. With `verbose`, prints the trailing
/// moving-average reward at each checkpoint.
pub fn run_training(
    file: &ScenarioFile,
    store: &ProfileStore,
    cfg: TrainerConfig,
    out_dir: &Path,
    verbose: bool,
) -> Result<TrainingOutcome, HarnessError> {
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let measure = file.reward_config();
    measure.validate()?;
    let mut env = Env::new(file.scenario.clone(), file.uavs.clone(), store)?;
    let mut trainer = A2cTrainer::for_env(&env, cfg)?;
    let checkpoint_path = out_dir.join("checkpoint.json");
    let mut log = Vec::with_capacity(cfg.episodes);
    trainer.checkpoint().save(&checkpoint_path)?;
    while trainer.episodes_run() < cfg.episodes {
        let chunk = CHECKPOINT_INTERVAL.min(cfg.episodes - trainer.episodes_run());
        let records = trainer.train_for(&mut env, &measure, chunk)?;
        log.extend(records);
        trainer.checkpoint().save(&checkpoint_path)?;
        if verbose {
            println!(
                "episode {:>6}  moving-average reward {:.4}",
                trainer.episodes_run(),
                moving_average(&log, MOVING_AVERAGE_WINDOW)
            );
        }
    }
    let log_path = out_dir.join("training_log.csv");
    write_training_log_csv(&log_path, &log)?;
    Ok(TrainingOutcome {
        final_moving_average: moving_average(&log, MOVING_AVERAGE_WINDOW),
        log,
        checkpoint_path,
        log_path,
    })
}

/// One row of a weight-sensitivity sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub weight: f64,
    pub family: String,
    pub bandwidth_bps: f64,
    pub version: String,
    pub cut_layer: u32,
    pub latency_ms: f64,
    pub energy_j: f64,
    pub weighted_score: f64,
}

/// The evaluation grid used when the caller does not override it.
pub fn default_weight_grid() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

/// Sweeps the given axes over `grid` for one family and channel, reporting
/// the winning profile at each grid point.
pub fn run_sensitivity(
    store: &ProfileStore,
    family: &str,
    channel: ChannelState,
    server: ServerState,
    axes: &[SweepAxis],
    grid: &[f64],
    version_filter: Option<&[usize]>,
) -> Result<Vec<SweepRow>, HarnessError> {
    let mut rows = Vec::with_capacity(axes.len() * grid.len());
    for &axis in axes {
        let swept = weight_sweep(store, family, channel, server, axis, grid, version_filter)?;
        for (weight, best) in swept {
            rows.push(SweepRow {
                axis: axis_label(axis).to_string(),
                weight,
                family: family.to_string(),
                bandwidth_bps: channel.bandwidth_bps,
                version: best.version_name.clone(),
                cut_layer: best.cut_layer,
                latency_ms: best.breakdown.total_latency_ms,
                energy_j: best.breakdown.total_energy_j,
                weighted_score: best.score,
            });
        }
    }
    Ok(rows)
}

fn axis_label(axis: SweepAxis) -> &'static str {
    match axis {
        SweepAxis::Accuracy => "accuracy",
        SweepAxis::Latency => "latency",
        SweepAxis::Energy => "energy",
    }
}

/// One row of the full profile ranking for a channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub family: String,
    pub version: String,
    pub cut_layer: u32,
    pub latency_ms: f64,
    pub energy_j: f64,
    pub acc_score: f64,
    pub lat_score: f64,
    pub energy_score: f64,
    pub weighted_score: f64,
}

/// Ranks every profile of every family on one channel, highest score first
/// within each family.
pub fn ranking_rows(
    store: &ProfileStore,
    channel: ChannelState,
    server: ServerState,
    cfg: &RewardConfig,
) -> Result<Vec<RankingRow>, HarnessError> {
    let mut rows = Vec::new();
    for family in store.families() {
        for entry in rank_all(store, &family.name, channel, server, cfg)? {
            rows.push(RankingRow {
                family: family.name.clone(),
                version: entry.version_name.clone(),
                cut_layer: entry.cut_layer,
                latency_ms: entry.breakdown.total_latency_ms,
                energy_j: entry.breakdown.total_energy_j,
                acc_score: entry.scores.accuracy_score,
                lat_score: entry.scores.latency_score,
                energy_score: entry.scores.energy_score,
                weighted_score: entry.score,
            });
        }
    }
    Ok(rows)
}

/// File-name-safe rendering of a link rate, e.g. `8mbps` or `2p5mbps`.
pub fn format_bandwidth(bandwidth_bps: f64) -> String {
    let mbps = bandwidth_bps / 1e6;
    if mbps.fract() == 0.0 {
        format!("{mbps:.0}mbps")
    } else {
        format!("{mbps}mbps").replace('.', "p")
    }
}

/// One sampled battery level during a battery study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryTraceRow {
    pub activity: String,
    pub seed: u64,
    pub slot: u64,
    pub device: String,
    pub battery_j: f64,
}

/// Slots one device survived in one battery-study run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepletionRow {
    pub activity: String,
    pub seed: u64,
    pub device: String,
    pub battery_life_slots: usize,
}

/// Results of a battery study across activity levels.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryStudy {
    pub traces: Vec<BatteryTraceRow>,
    pub depletion: Vec<DepletionRow>,
    /// Mean battery life per activity level, in study order
    /// (high, moderate, low).
    pub mean_life: Vec<(String, f64)>,
}

/// Runs the fleet to depletion `seeds` times per activity level (high,
/// moderate, low presets applied to every device), with profile selection by
/// the scenario-weighted oracle. Records per-slot battery traces when
/// `with_traces` is set, and per-device depletion times always.
pub fn run_battery_study(
    file: &ScenarioFile,
    store: &ProfileStore,
    seeds: usize,
    base_seed: u64,
    with_traces: bool,
) -> Result<BatteryStudy, HarnessError> {
    if seeds == 0 {
        return Err(HarnessError::Invalid(
            "battery study needs at least one seed".into(),
        ));
    }
    let measure = file.reward_config();
    measure.validate()?;
    let levels: [(&str, ActivityProfile); 3] = [
        ("high", ActivityProfile::high()),
        ("moderate", ActivityProfile::moderate()),
        ("low", ActivityProfile::low()),
    ];
    let mut jobs = Vec::with_capacity(levels.len() * seeds);
    for (level_idx, (label, activity)) in levels.iter().enumerate() {
        for seed in 0..seeds {
            jobs.push((level_idx, *label, *activity, seed as u64));
        }
    }
    let decider = Decider::Score(measure);
    let runs = par_map(jobs, |(level_idx, label, activity, seed)| {
        let mut uavs = file.uavs.clone();
        for uav in &mut uavs {
            uav.activity = activity;
        }
        let mut env = Env::new(file.scenario.clone(), uavs, store)?;
        env.reset_with_seed(episode_seed(
            base_seed.wrapping_add(level_idx as u64 * LEVEL_SALT),
            seed as usize,
        ));
        let mut policy_rng = ChaCha8Rng::seed_from_u64(seed ^ LOCAL_POLICY_SALT);
        let mut traces = Vec::new();
        let mut alive_slots = vec![0usize; env.device_count()];
        let record = |traces: &mut Vec<BatteryTraceRow>, env: &Env| {
            for (idx, device) in env.state().devices.iter().enumerate() {
                traces.push(BatteryTraceRow {
                    activity: label.to_string(),
                    seed,
                    slot: env.state().slot_index,
                    device: env.uavs()[idx].id.clone(),
                    battery_j: device.battery_j,
                });
            }
        };
        if with_traces {
            record(&mut traces, &env);
        }
        loop {
            let alive: Vec<bool> = env
                .state()
                .devices
                .iter()
                .map(|d| d.battery_j > 0.0)
                .collect();
            let actions = decider.decide(&env, store, &mut policy_rng)?;
            let outcome = env.step(&actions, &measure)?;
            for (idx, was_alive) in alive.iter().enumerate() {
                if *was_alive {
                    alive_slots[idx] += 1;
                }
            }
            if with_traces {
                record(&mut traces, &env);
            }
            if outcome.done {
                break;
            }
        }
        let depletion = alive_slots
            .iter()
            .enumerate()
            .map(|(idx, &slots)| DepletionRow {
                activity: label.to_string(),
                seed,
                device: env.uavs()[idx].id.clone(),
                battery_life_slots: slots,
            })
            .collect::<Vec<_>>();
        Ok::<_, HarnessError>((level_idx, traces, depletion))
    });

    let mut traces = Vec::new();
    let mut depletion = Vec::new();
    let mut life_sum = vec![0usize; levels.len()];
    let mut life_count = vec![0usize; levels.len()];
    for run in runs {
        let (level_idx, mut run_traces, run_depletion) = run?;
        traces.append(&mut run_traces);
        for row in &run_depletion {
            life_sum[level_idx] += row.battery_life_slots;
            life_count[level_idx] += 1;
        }
        depletion.extend(run_depletion);
    }
    let mean_life = levels
        .iter()
        .enumerate()
        .map(|(idx, (label, _))| {
            (
                label.to_string(),
                life_sum[idx] as f64 / life_count[idx] as f64,
            )
        })
        .collect();
    Ok(BatteryStudy {
        traces,
        depletion,
        mean_life,
    })
}

/// Upload time of the final-cut payload on `channel` — the transmission part
/// of a purely local execution's latency.
pub fn final_cut_upload_ms(
    store: &ProfileStore,
    family: &str,
    version_index: usize,
    channel: ChannelState,
) -> Result<f64, HarnessError> {
    let family = store.family(family)?;
    let version = family
        .versions
        .get(version_index)
        .ok_or_else(|| HarnessError::Invalid(format!("no version {version_index}")))?;
    let last = version
        .cut_points
        .last()
        .expect("validated versions have cut points");
    Ok(transmission_time_ms(last.output_bytes, channel))
}

pub const REPORT_HEADER: [&str; 11] = [
    "strategy",
    "episodes",
    "slots",
    "tasks",
    "mean_weighted_reward",
    "mean_accuracy",
    "mean_latency_ms",
    "mean_energy_j",
    "mean_battery_life_slots",
    "latency_improvement_vs_local",
    "energy_improvement_vs_local",
];

pub const TRAINING_LOG_HEADER: [&str; 7] = [
    "episode",
    "steps",
    "total_reward",
    "mean_reward",
    "actor_loss",
    "critic_loss",
    "entropy",
];

pub const SWEEP_HEADER: [&str; 9] = [
    "axis",
    "weight",
    "family",
    "bandwidth_bps",
    "version",
    "cut_layer",
    "latency_ms",
    "energy_j",
    "weighted_score",
];

pub const RANKING_HEADER: [&str; 9] = [
    "family",
    "version",
    "cut_layer",
    "latency_ms",
    "energy_j",
    "acc_score",
    "lat_score",
    "energy_score",
    "weighted_score",
];

pub const BATTERY_TRACE_HEADER: [&str; 5] = ["activity", "seed", "slot", "device", "battery_j"];

pub const DEPLETION_HEADER: [&str; 4] = ["activity", "seed", "device", "battery_life_slots"];

fn write_csv_rows<T: Serialize>(
    path: &Path,
    header: &[&str],
    rows: &[T],
) -> Result<(), HarnessError> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    writer.write_record(header)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

fn read_csv_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

pub fn write_report_csv(path: &Path, rows: &[ExperimentReport]) -> Result<(), HarnessError> {
    write_csv_rows(path, &REPORT_HEADER, rows)
}

pub fn read_report_csv(path: &Path) -> Result<Vec<ExperimentReport>, HarnessError> {
    read_csv_rows(path)
}

pub fn write_training_log_csv(path: &Path, rows: &[EpisodeRecord]) -> Result<(), HarnessError> {
    write_csv_rows(path, &TRAINING_LOG_HEADER, rows)
}

pub fn read_training_log_csv(path: &Path) -> Result<Vec<EpisodeRecord>, HarnessError> {
    read_csv_rows(path)
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), HarnessError> {
    write_csv_rows(path, &SWEEP_HEADER, rows)
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>, HarnessError> {
    read_csv_rows(path)
}

pub fn write_rankings_csv(path: &Path, rows: &[RankingRow]) -> Result<(), HarnessError> {
    write_csv_rows(path, &RANKING_HEADER, rows)
}

pub fn read_rankings_csv(path: &Path) -> Result<Vec<RankingRow>, HarnessError> {
    read_csv_rows(path)
}

pub fn write_battery_trace_csv(path: &Path, rows: &[BatteryTraceRow]) -> Result<(), HarnessError> {
    write_csv_rows(path, &BATTERY_TRACE_HEADER, rows)
}

pub fn read_battery_trace_csv(path: &Path) -> Result<Vec<BatteryTraceRow>, HarnessError> {
    read_csv_rows(path)
}

pub fn write_depletion_csv(path: &Path, rows: &[DepletionRow]) -> Result<(), HarnessError> {
    write_csv_rows(path, &DEPLETION_HEADER, rows)
}

pub fn read_depletion_csv(path: &Path) -> Result<Vec<DepletionRow>, HarnessError> {
    read_csv_rows(path)
}
