//! Core library for `cutpoint`: a desk-scale simulator and trainer for
//! partitioned neural-network inference on battery-powered UAV edge devices.
//!
//! The crate is organised as a stack of small modules:
//!
//! - [`profiles`] — measured model catalogue: families, versions, cut points.
//! - [`cost`] — latency/energy cost model for one task under a channel and
//!   server state.
//! - [`reward`] — accuracy/latency/energy scoring and weighted fleet reward.
//! - [`oracle`] — exhaustive search over execution profiles: best profile,
//!   full rankings, and weight sweeps.
//! - [`sim`] — slot-based fleet environment with battery dynamics, stochastic
//!   channels/tasks and a shared server queue.
//! - [`neural`] — minimal dense neural-network layer stack with Adam.
//! - [`agent`] — advantage actor-critic agent over the fleet environment.
//! - [`harness`] — experiment runners: strategy evaluation, training runs,
//!   sensitivity sweeps and battery studies.
//! - [`par`] — data-parallel map used by the heavier runners, with a
//!   sequential fallback when the `parallel` feature is disabled.

pub mod agent;
pub mod cost;
pub mod harness;
pub mod neural;
pub mod oracle;
pub mod par;
pub mod profiles;
pub mod reward;
pub mod sim;

pub use agent::{
    compute_advantages, compute_returns, episode_seed, A2cTrainer, ActionSelection, ActorNetwork,
    AgentCheckpoint, AgentError, CriticNetwork, EpisodeRecord, LossReport, TrainerConfig,
    Transition,
};
pub use cost::{
    computation_energy_j, evaluate_profile, transmission_energy_j, transmission_time_ms,
    ChannelState, CostBreakdown, ServerState,
};
pub use harness::{
    default_weight_grid, format_bandwidth, moving_average, ranking_rows, run_battery_study,
    run_experiment, run_sensitivity, run_training, BatteryStudy, BatteryTraceRow, DepletionRow,
    EvalOptions, ExperimentReport, HarnessError, RankingRow, StrategyKind, StrategySpec, SweepRow,
    TrainingOutcome,
};
pub use neural::{
    categorical_head, entropy, log_softmax, optimizer_step, sample_categorical, ForwardCache,
    Layer, Mlp, MlpCheckpoint, MlpGrads, NeuralError, OptimizerState,
};
pub use oracle::{
    best_profile, rank_all, weight_sweep, ExecutionProfile, OracleError, RankedProfile, SweepAxis,
};
pub use par::{par_map, seq_map};
pub use profiles::{
    get_cut, load_profiles, CutPointProfile, ModelFamily, ProfileError, ProfileStore,
    VersionProfile,
};
pub use reward::{
    accuracy_score, energy_score, fleet_reward, latency_score, score_breakdown, RewardConfig,
    RewardError, ScoreTriple,
};
pub use sim::{
    kinetic_energy_j, ActivityProfile, DeviceState, DeviceStepRecord, Env, EnvState, ExecutedTask,
    KineticPowerModel, ScenarioConfig, ScenarioFile, SimError, StepOutcome, UavSpec,
};
