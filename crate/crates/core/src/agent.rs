//! Advantage actor-critic controller for the fleet environment: an actor
//! with a shared trunk and per-device categorical head pairs (version, cut),
//! a state-value critic, discounted-return computation, and synchronized
//! per-episode updates over a transition buffer.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neural::{
    categorical_head, entropy, log_softmax, optimizer_step, sample_categorical, ForwardCache,
    Mlp, MlpCheckpoint, MlpGrads, NeuralError, OptimizerState,
};
use crate::oracle::ExecutionProfile;
use crate::reward::RewardConfig;
use crate::sim::{Env, SimError};

const TRUNK_HIDDEN: [usize; 2] = [512, 256];
const SHARED_WIDTH: usize = 128;
const CRITIC_HIDDEN: [usize; 2] = [512, 256];

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid trainer config: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch between agent and environment: {0}")]
    ShapeMismatch(String),
    #[error("non-finite loss at episode {episode} ({what})")]
    NonFiniteLoss { episode: usize, what: &'static str },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Policy network: one trunk shared by the whole fleet, then per device a
/// shared 128-wide layer feeding two linear heads — version logits and cut
/// logits.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorNetwork {
    trunk: Mlp,
    shared: Vec<Mlp>,
    version_heads: Vec<Mlp>,
    cut_heads: Vec<Mlp>,
}

/// State-value network: scalar V(s).
#[derive(Debug, Clone, PartialEq)]
pub struct CriticNetwork {
    net: Mlp,
}

/// One environment step as recorded during a rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub actions: Vec<ExecutionProfile>,
    /// Per-device joint log-probability (version term plus cut term).
    pub log_probs: Vec<f64>,
    pub reward: f64,
    pub value_estimate: f64,
}

/// Sampled fleet action with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSelection {
    pub actions: Vec<ExecutionProfile>,
    /// Per-device joint log-probability of the sampled pair.
    pub log_probs: Vec<f64>,
    /// Total policy entropy (sum over devices of both heads).
    pub entropy: f64,
}

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub episodes: usize,
    pub discount: f64,
    pub learning_rate: f64,
    pub entropy_coef: f64,
    pub value_loss_coef: f64,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            episodes: 5000,
            discount: 0.99,
            learning_rate: 5e-5,
            entropy_coef: 0.01,
            value_loss_coef: 0.5,
            seed: 0,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if !(0.0..1.0).contains(&self.discount) {
            return Err(AgentError::InvalidConfig(format!(
                "discount must lie in [0,1), got {}",
                self.discount
            )));
        }
        if !(self.learning_rate > 0.0) {
            return Err(AgentError::InvalidConfig(
                "learning rate must be positive".into(),
            ));
        }
        if self.entropy_coef < 0.0 {
            return Err(AgentError::InvalidConfig(
                "entropy coefficient must be non-negative".into(),
            ));
        }
        if !(self.value_loss_coef > 0.0) {
            return Err(AgentError::InvalidConfig(
                "value loss coefficient must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Loss diagnostics from one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub actor_loss: f64,
    pub critic_loss: f64,
    /// Mean per-sample policy entropy over active (step, device) samples.
    pub entropy: f64,
    pub active_samples: usize,
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub steps: usize,
    pub total_reward: f64,
    pub mean_reward: f64,
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub entropy: f64,
}

/// Deterministic per-episode environment seed derived from a base seed.
pub fn episode_seed(base: u64, episode: usize) -> u64 {
    base ^ (episode as u64)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(0xD1B5_4A32_D192_ED03)
}

/// Discounted returns: R_t = r_t + discount * R_{t+1}, with R past the final
/// step equal to zero.
pub fn compute_returns(rewards: &[f64], discount: f64) -> Vec<f64> {
    assert!(!rewards.is_empty(), "rewards must be non-empty");
    assert!(
        (0.0..1.0).contains(&discount),
        "discount must lie in [0,1)"
    );
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (slot, &r) in out.iter_mut().zip(rewards).rev() {
        acc = r + discount * acc;
        *slot = acc;
    }
    out
}

/// Element-wise advantages: returns minus value estimates.
pub fn compute_advantages(returns: &[f64], value_estimates: &[f64]) -> Vec<f64> {
    assert_eq!(
        returns.len(),
        value_estimates.len(),
        "returns and value estimates must have equal length"
    );
    returns
        .iter()
        .zip(value_estimates)
        .map(|(r, v)| r - v)
        .collect()
}

/// Per-state actor evaluation: logits plus the caches needed for backward.
struct ActorEval {
    trunk: ForwardCache,
    shared: Vec<ForwardCache>,
    version: Vec<ForwardCache>,
    cut: Vec<ForwardCache>,
}

impl ActorEval {
    fn version_logits(&self, device: usize) -> &[f64] {
        self.version[device].output()
    }

    fn cut_logits(&self, device: usize) -> &[f64] {
        self.cut[device].output()
    }
}

impl ActorNetwork {
    /// Fan-in initialized network. Draw order is frozen: trunk, then every
    /// per-device shared layer, then all version heads, then all cut heads.
    pub fn new(
        state_len: usize,
        n_devices: usize,
        n_versions: usize,
        n_cuts: usize,
        rng: &mut impl Rng,
    ) -> Self {
        assert!(n_devices > 0 && n_versions > 0 && n_cuts > 0);
        let trunk_dims = [state_len, TRUNK_HIDDEN[0], TRUNK_HIDDEN[1]];
        let trunk = Mlp::new(&trunk_dims, true, rng);
        let shared: Vec<Mlp> = (0..n_devices)
            .map(|_| Mlp::new(&[TRUNK_HIDDEN[1], SHARED_WIDTH], true, rng))
            .collect();
        let version_heads = (0..n_devices)
            .map(|_| Mlp::new(&[SHARED_WIDTH, n_versions], false, rng))
            .collect();
        let cut_heads = (0..n_devices)
            .map(|_| Mlp::new(&[SHARED_WIDTH, n_cuts], false, rng))
            .collect();
        Self {
            trunk,
            shared,
            version_heads,
            cut_heads,
        }
    }

    /// All-zero parameters: every head is exactly uniform. Useful for tests.
    pub fn zeros(state_len: usize, n_devices: usize, n_versions: usize, n_cuts: usize) -> Self {
        assert!(n_devices > 0 && n_versions > 0 && n_cuts > 0);
        let trunk_dims = [state_len, TRUNK_HIDDEN[0], TRUNK_HIDDEN[1]];
        Self {
            trunk: Mlp::zeros(&trunk_dims, true),
            shared: (0..n_devices)
                .map(|_| Mlp::zeros(&[TRUNK_HIDDEN[1], SHARED_WIDTH], true))
                .collect(),
            version_heads: (0..n_devices)
                .map(|_| Mlp::zeros(&[SHARED_WIDTH, n_versions], false))
                .collect(),
            cut_heads: (0..n_devices)
                .map(|_| Mlp::zeros(&[SHARED_WIDTH, n_cuts], false))
                .collect(),
        }
    }

    fn from_parts(
        trunk: Mlp,
        shared: Vec<Mlp>,
        version_heads: Vec<Mlp>,
        cut_heads: Vec<Mlp>,
    ) -> Result<Self, AgentError> {
        let n = shared.len();
        if n == 0 || version_heads.len() != n || cut_heads.len() != n {
            return Err(AgentError::Checkpoint(
                "per-device network counts disagree".into(),
            ));
        }
        let trunk_out = trunk.output_len();
        for (net, name) in shared.iter().map(|s| (s, "shared")) {
            if net.input_len() != trunk_out {
                return Err(AgentError::Checkpoint(format!(
                    "{name} layer input {} does not match trunk output {trunk_out}",
                    net.input_len()
                )));
            }
        }
        for (head, shared_net) in version_heads.iter().chain(&cut_heads).zip(
            shared.iter().chain(&shared),
        ) {
            if head.input_len() != shared_net.output_len() {
                return Err(AgentError::Checkpoint(format!(
                    "head input {} does not match shared output {}",
                    head.input_len(),
                    shared_net.output_len()
                )));
            }
        }
        Ok(Self {
            trunk,
            shared,
            version_heads,
            cut_heads,
        })
    }

    pub fn state_len(&self) -> usize {
        self.trunk.input_len()
    }

    pub fn n_devices(&self) -> usize {
        self.shared.len()
    }

    pub fn n_versions(&self) -> usize {
        self.version_heads[0].output_len()
    }

    pub fn n_cuts(&self) -> usize {
        self.cut_heads[0].output_len()
    }

    fn eval(&self, state: &[f64]) -> ActorEval {
        let trunk = self.trunk.forward(state);
        let features = trunk.output().to_vec();
        let shared: Vec<ForwardCache> =
            self.shared.iter().map(|s| s.forward(&features)).collect();
        let version = self
            .version_heads
            .iter()
            .zip(&shared)
            .map(|(h, s)| h.forward(s.output()))
            .collect();
        let cut = self
            .cut_heads
            .iter()
            .zip(&shared)
            .map(|(h, s)| h.forward(s.output()))
            .collect();
        ActorEval {
            trunk,
            shared,
            version,
            cut,
        }
    }

    /// Per-device softmax probabilities (version head, cut head).
    pub fn head_probs(&self, state: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
        let eval = self.eval(state);
        (0..self.n_devices())
            .map(|d| {
                (
                    categorical_head(eval.version_logits(d)),
                    categorical_head(eval.cut_logits(d)),
                )
            })
            .collect()
    }

    /// Samples one (version, cut) pair per device. The joint log-probability
    /// of a device's pair is the sum of its two head log-probabilities;
    /// entropy is summed over all heads of all devices.
    pub fn select_action(&self, state: &[f64], rng: &mut impl Rng) -> ActionSelection {
        let eval = self.eval(state);
        let mut actions = Vec::with_capacity(self.n_devices());
        let mut log_probs = Vec::with_capacity(self.n_devices());
        let mut total_entropy = 0.0;
        for d in 0..self.n_devices() {
            let pv = categorical_head(eval.version_logits(d));
            let pc = categorical_head(eval.cut_logits(d));
            let lv = log_softmax(eval.version_logits(d));
            let lc = log_softmax(eval.cut_logits(d));
            let av = sample_categorical(&pv, rng);
            let ac = sample_categorical(&pc, rng);
            actions.push(ExecutionProfile {
                version_index: av,
                cut_index: ac,
            });
            log_probs.push(lv[av] + lc[ac]);
            total_entropy += entropy(&pv) + entropy(&pc);
        }
        ActionSelection {
            actions,
            log_probs,
            entropy: total_entropy,
        }
    }

    /// Deterministic argmax action per device (ties break toward the lower
    /// index).
    pub fn greedy(&self, state: &[f64]) -> Vec<ExecutionProfile> {
        let eval = self.eval(state);
        (0..self.n_devices())
            .map(|d| ExecutionProfile {
                version_index: argmax(eval.version_logits(d)),
                cut_index: argmax(eval.cut_logits(d)),
            })
            .collect()
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl CriticNetwork {
    pub fn new(state_len: usize, rng: &mut impl Rng) -> Self {
        let dims = [state_len, CRITIC_HIDDEN[0], CRITIC_HIDDEN[1], 1];
        Self {
            net: Mlp::new(&dims, false, rng),
        }
    }

    pub fn zeros(state_len: usize) -> Self {
        let dims = [state_len, CRITIC_HIDDEN[0], CRITIC_HIDDEN[1], 1];
        Self {
            net: Mlp::zeros(&dims, false),
        }
    }

    pub fn value(&self, state: &[f64]) -> f64 {
        self.net.output(state)[0]
    }
}

/// Bit-exact snapshot of a trained agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentCheckpoint {
    pub trunk: MlpCheckpoint,
    pub shared: Vec<MlpCheckpoint>,
    pub version_heads: Vec<MlpCheckpoint>,
    pub cut_heads: Vec<MlpCheckpoint>,
    pub critic: MlpCheckpoint,
}

impl AgentCheckpoint {
    pub fn capture(actor: &ActorNetwork, critic: &CriticNetwork) -> Self {
        Self {
            trunk: MlpCheckpoint::capture(&actor.trunk),
            shared: actor.shared.iter().map(MlpCheckpoint::capture).collect(),
            version_heads: actor
                .version_heads
                .iter()
                .map(MlpCheckpoint::capture)
                .collect(),
            cut_heads: actor.cut_heads.iter().map(MlpCheckpoint::capture).collect(),
            critic: MlpCheckpoint::capture(&critic.net),
        }
    }

    pub fn restore(&self) -> Result<(ActorNetwork, CriticNetwork), AgentError> {
        let trunk = self.trunk.restore()?;
        let shared = self
            .shared
            .iter()
            .map(MlpCheckpoint::restore)
            .collect::<Result<Vec<_>, _>>()?;
        let version_heads = self
            .version_heads
            .iter()
            .map(MlpCheckpoint::restore)
            .collect::<Result<Vec<_>, _>>()?;
        let cut_heads = self
            .cut_heads
            .iter()
            .map(MlpCheckpoint::restore)
            .collect::<Result<Vec<_>, _>>()?;
        let actor = ActorNetwork::from_parts(trunk, shared, version_heads, cut_heads)?;
        let critic = CriticNetwork {
            net: self.critic.restore()?,
        };
        Ok((actor, critic))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), AgentError> {
        let text = serde_json::to_string(self)
            .map_err(|e| AgentError::Checkpoint(format!("serialize: {e}")))?;
        std::fs::write(path.as_ref(), text).map_err(|e| {
            AgentError::Checkpoint(format!("write {}: {e}", path.as_ref().display()))
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AgentError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            AgentError::Checkpoint(format!("read {}: {e}", path.as_ref().display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| AgentError::Checkpoint(format!("parse checkpoint: {e}")))
    }
}

/// Adam state for each piece of the actor, plus the critic.
struct TrainerOpt {
    trunk: OptimizerState,
    shared: Vec<OptimizerState>,
    version_heads: Vec<OptimizerState>,
    cut_heads: Vec<OptimizerState>,
    critic: OptimizerState,
}

/// Synchronous advantage actor-critic trainer: rolls out whole episodes,
/// then performs one optimizer step per network on the episode batch.
pub struct A2cTrainer {
    pub actor: ActorNetwork,
    pub critic: CriticNetwork,
    cfg: TrainerConfig,
    opt: TrainerOpt,
    policy_rng: ChaCha8Rng,
    episodes_run: usize,
}

impl A2cTrainer {
    /// Fresh agent: network initialization and the action-sampling stream
    /// both derive deterministically from `cfg.seed`.
    pub fn new(
        state_len: usize,
        n_devices: usize,
        n_versions: usize,
        n_cuts: usize,
        cfg: TrainerConfig,
    ) -> Result<Self, AgentError> {
        cfg.validate()?;
        let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let actor = ActorNetwork::new(state_len, n_devices, n_versions, n_cuts, &mut init_rng);
        let critic = CriticNetwork::new(state_len, &mut init_rng);
        Ok(Self::assemble(actor, critic, cfg))
    }

    /// Builds a trainer dimensioned for a specific environment.
    pub fn for_env(env: &Env, cfg: TrainerConfig) -> Result<Self, AgentError> {
        Self::new(
            env.encoded_len(),
            env.device_count(),
            env.store().max_versions(),
            env.store().max_cuts(),
            cfg,
        )
    }

    /// Wraps existing networks (e.g. restored from a checkpoint) with fresh
    /// optimizer state.
    pub fn from_networks(
        actor: ActorNetwork,
        critic: CriticNetwork,
        cfg: TrainerConfig,
    ) -> Result<Self, AgentError> {
        cfg.validate()?;
        Ok(Self::assemble(actor, critic, cfg))
    }

    fn assemble(actor: ActorNetwork, critic: CriticNetwork, cfg: TrainerConfig) -> Self {
        let lr = cfg.learning_rate;
        let opt = TrainerOpt {
            trunk: OptimizerState::for_net(lr, &actor.trunk),
            shared: actor
                .shared
                .iter()
                .map(|n| OptimizerState::for_net(lr, n))
                .collect(),
            version_heads: actor
                .version_heads
                .iter()
                .map(|n| OptimizerState::for_net(lr, n))
                .collect(),
            cut_heads: actor
                .cut_heads
                .iter()
                .map(|n| OptimizerState::for_net(lr, n))
                .collect(),
            critic: OptimizerState::for_net(lr, &critic.net),
        };
        let policy_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5DEE_CE66_D5DE_ECE6);
        Self {
            actor,
            critic,
            cfg,
            opt,
            policy_rng,
            episodes_run: 0,
        }
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.cfg
    }

    /// Total episodes completed by this trainer across all training calls.
    pub fn episodes_run(&self) -> usize {
        self.episodes_run
    }

    /// Samples a fleet action from the current policy, advancing the
    /// trainer's own action stream.
    pub fn select_action(&mut self, state: &[f64]) -> ActionSelection {
        self.actor.select_action(state, &mut self.policy_rng)
    }

    /// Index of the task-active bit inside a device's feature block.
    fn active_flag(&self, state: &[f64], device: usize) -> bool {
        let block = (self.actor.state_len() - 1) / self.actor.n_devices();
        state[device * block + 1] > 0.5
    }

    /// One synchronized update over an episode's transitions. Policy-gradient
    /// terms average over active (step, device) samples — devices that held a
    /// task when the action was taken; the value loss averages over steps.
    /// Returns the loss report; the buffer is consumed.
    pub fn update(&mut self, buffer: Vec<Transition>) -> Result<LossReport, AgentError> {
        assert!(!buffer.is_empty(), "update requires a non-empty buffer");
        let n_dev = self.actor.n_devices();
        let rewards: Vec<f64> = buffer.iter().map(|t| t.reward).collect();
        let values: Vec<f64> = buffer.iter().map(|t| t.value_estimate).collect();
        let returns = compute_returns(&rewards, self.cfg.discount);
        let advantages = compute_advantages(&returns, &values);

        let active: Vec<Vec<bool>> = buffer
            .iter()
            .map(|t| (0..n_dev).map(|d| self.active_flag(&t.state, d)).collect())
            .collect();
        let n_active: usize = active.iter().flatten().filter(|&&a| a).count();

        let mut trunk_g = MlpGrads::zeros(&self.actor.trunk);
        let mut shared_g: Vec<MlpGrads> =
            self.actor.shared.iter().map(MlpGrads::zeros).collect();
        let mut vhead_g: Vec<MlpGrads> =
            self.actor.version_heads.iter().map(MlpGrads::zeros).collect();
        let mut chead_g: Vec<MlpGrads> =
            self.actor.cut_heads.iter().map(MlpGrads::zeros).collect();
        let mut critic_g = MlpGrads::zeros(&self.critic.net);

        let t_count = buffer.len() as f64;
        let ent_coef = self.cfg.entropy_coef;
        let vl_coef = self.cfg.value_loss_coef;
        let mut actor_loss = 0.0;
        let mut critic_loss = 0.0;
        let mut entropy_sum = 0.0;

        for (t, tr) in buffer.iter().enumerate() {
            // Critic pass on every step.
            let critic_cache = self.critic.net.forward(&tr.state);
            let v = critic_cache.output()[0];
            let err = v - returns[t];
            critic_loss += err * err / t_count;
            let (cg, _) = self
                .critic
                .net
                .backward(&critic_cache, &[vl_coef * 2.0 * err / t_count]);
            critic_g.accumulate(&cg);

            if n_active == 0 {
                continue;
            }
            let scale = 1.0 / n_active as f64;
            let eval = self.actor.eval(&tr.state);
            let mut dtrunk_out = vec![0.0; self.actor.trunk.output_len()];
            let mut any_active = false;
            for d in 0..n_dev {
                if !active[t][d] {
                    continue;
                }
                any_active = true;
                let adv = advantages[t];
                let (head_specs, caches) = (
                    [
                        (eval.version_logits(d), tr.actions[d].version_index),
                        (eval.cut_logits(d), tr.actions[d].cut_index),
                    ],
                    [&eval.version[d], &eval.cut[d]],
                );
                let mut dshared_out = vec![0.0; SHARED_WIDTH];
                for (h, ((logits, chosen), cache)) in
                    head_specs.iter().zip(caches).enumerate()
                {
                    let lp = log_softmax(logits);
                    let p: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
                    let h_ent: f64 = p.iter().zip(&lp).map(|(pi, li)| -pi * li).sum();
                    actor_loss += scale * (-lp[*chosen] * adv - ent_coef * h_ent);
                    entropy_sum += h_ent;
                    let dlogits: Vec<f64> = p
                        .iter()
                        .zip(&lp)
                        .enumerate()
                        .map(|(k, (&pk, &lk))| {
                            let indicator = if k == *chosen { 1.0 } else { 0.0 };
                            scale * (adv * (pk - indicator) + ent_coef * pk * (lk + h_ent))
                        })
                        .collect();
                    let nets = if h == 0 {
                        (&self.actor.version_heads[d], &mut vhead_g[d])
                    } else {
                        (&self.actor.cut_heads[d], &mut chead_g[d])
                    };
                    let (hg, dx) = nets.0.backward(cache, &dlogits);
                    nets.1.accumulate(&hg);
                    for (a, b) in dshared_out.iter_mut().zip(&dx) {
                        *a += b;
                    }
                }
                let (sg, dx) = self.actor.shared[d].backward(&eval.shared[d], &dshared_out);
                shared_g[d].accumulate(&sg);
                for (a, b) in dtrunk_out.iter_mut().zip(&dx) {
                    *a += b;
                }
            }
            if any_active {
                let (tg, _) = self.actor.trunk.backward(&eval.trunk, &dtrunk_out);
                trunk_g.accumulate(&tg);
            }
        }

        optimizer_step(&mut self.critic.net, &critic_g, &mut self.opt.critic)?;
        optimizer_step(&mut self.actor.trunk, &trunk_g, &mut self.opt.trunk)?;
        for d in 0..n_dev {
            optimizer_step(&mut self.actor.shared[d], &shared_g[d], &mut self.opt.shared[d])?;
            optimizer_step(
                &mut self.actor.version_heads[d],
                &vhead_g[d],
                &mut self.opt.version_heads[d],
            )?;
            optimizer_step(
                &mut self.actor.cut_heads[d],
                &chead_g[d],
                &mut self.opt.cut_heads[d],
            )?;
        }

        Ok(LossReport {
            actor_loss,
            critic_loss,
            entropy: if n_active == 0 {
                0.0
            } else {
                entropy_sum / n_active as f64
            },
            active_samples: n_active,
        })
    }

    fn check_env(&self, env: &Env) -> Result<(), AgentError> {
        if env.encoded_len() != self.actor.state_len() {
            return Err(AgentError::ShapeMismatch(format!(
                "environment encodes {} features, actor expects {}",
                env.encoded_len(),
                self.actor.state_len()
            )));
        }
        if env.device_count() != self.actor.n_devices() {
            return Err(AgentError::ShapeMismatch(format!(
                "environment has {} devices, actor has {}",
                env.device_count(),
                self.actor.n_devices()
            )));
        }
        Ok(())
    }

    /// Runs `cfg.episodes` full episodes: reset, roll out until every battery
    /// is drained, then one synchronized update on the episode buffer. Every
    /// transition is consumed exactly once (the buffer is moved into
    /// [`A2cTrainer::update`], never reused across episodes).
    pub fn train(
        &mut self,
        env: &mut Env,
        reward_cfg: &RewardConfig,
    ) -> Result<Vec<EpisodeRecord>, AgentError> {
        self.train_for(env, reward_cfg, self.cfg.episodes)
    }

    /// Runs `episodes` additional episodes, continuing the global episode
    /// counter. Splitting a run into consecutive `train_for` calls replays the
    /// exact seed and sampling sequence of a single uninterrupted call, so
    /// callers can checkpoint between chunks without perturbing training.
    pub fn train_for(
        &mut self,
        env: &mut Env,
        reward_cfg: &RewardConfig,
        episodes: usize,
    ) -> Result<Vec<EpisodeRecord>, AgentError> {
        self.check_env(env)?;
        let mut log = Vec::with_capacity(episodes);
        for _ in 0..episodes {
            let episode = self.episodes_run;
            env.reset_with_seed(episode_seed(self.cfg.seed, episode));
            let mut buffer = Vec::new();
            loop {
                let state = env.encode_state();
                let selection = self.select_action(&state);
                let value = self.critic.value(&state);
                let outcome = env.step(&selection.actions, reward_cfg)?;
                buffer.push(Transition {
                    state,
                    actions: selection.actions,
                    log_probs: selection.log_probs,
                    reward: outcome.reward,
                    value_estimate: value,
                });
                if outcome.done {
                    break;
                }
            }
            let steps = buffer.len();
            let total_reward: f64 = buffer.iter().map(|t| t.reward).sum();
            let report = self.update(buffer)?;
            if !report.actor_loss.is_finite() {
                return Err(AgentError::NonFiniteLoss {
                    episode,
                    what: "actor",
                });
            }
            if !report.critic_loss.is_finite() {
                return Err(AgentError::NonFiniteLoss {
                    episode,
                    what: "critic",
                });
            }
            log.push(EpisodeRecord {
                episode,
                steps,
                total_reward,
                mean_reward: total_reward / steps as f64,
                actor_loss: report.actor_loss,
                critic_loss: report.critic_loss,
                entropy: report.entropy,
            });
            self.episodes_run += 1;
        }
        Ok(log)
    }

    pub fn checkpoint(&self) -> AgentCheckpoint {
        AgentCheckpoint::capture(&self.actor, &self.critic)
    }
}
