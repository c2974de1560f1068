//! Normalized per-task scores and the weighted fleet reward.
//!
//! Accuracy maps through a sigmoid so the catalog's top-1 range spreads over
//! (0,1); latency and energy are scored relative to running the chosen
//! version fully on-device, so positive means the split beat local-only and
//! negative means it lost. The fleet reward is the weighted score averaged
//! over devices that actually ran a task this slot.

use crate::cost::CostBreakdown;
use crate::profiles::VersionProfile;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Objective weights and the accuracy sigmoid's steepness/midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub w_accuracy: f64,
    pub w_latency: f64,
    pub w_energy: f64,
    pub sigmoid_p: f64,
    pub sigmoid_q: f64,
}

/// Default sigmoid steepness: spreads the bundled top-1 range over (0,1).
pub const DEFAULT_SIGMOID_P: f64 = 30.0;
/// Default sigmoid midpoint, centered inside the bundled top-1 range.
pub const DEFAULT_SIGMOID_Q: f64 = 0.72;

/// Weight-sum tolerance for [`RewardConfig::validate`].
const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("reward weights must be non-negative, got ({0}, {1}, {2})")]
    NegativeWeight(f64, f64, f64),
    #[error("reward weights must sum to 1 within {tol}, got {sum}")]
    WeightSum { sum: f64, tol: f64 },
    #[error("sigmoid_p must be positive, got {0}")]
    SigmoidP(f64),
    #[error("sigmoid_q must lie in (0,1), got {0}")]
    SigmoidQ(f64),
}

impl RewardConfig {
    /// Builds a config with the given weights and default sigmoid shape.
    pub fn with_weights(w_accuracy: f64, w_latency: f64, w_energy: f64) -> Self {
        Self {
            w_accuracy,
            w_latency,
            w_energy,
            sigmoid_p: DEFAULT_SIGMOID_P,
            sigmoid_q: DEFAULT_SIGMOID_Q,
        }
    }

    /// Accuracy-only preset.
    pub fn accuracy_only() -> Self {
        Self::with_weights(1.0, 0.0, 0.0)
    }

    /// Latency-only preset.
    pub fn latency_only() -> Self {
        Self::with_weights(0.0, 1.0, 0.0)
    }

    /// Energy-only preset.
    pub fn energy_only() -> Self {
        Self::with_weights(0.0, 0.0, 1.0)
    }

    /// Equal-weights multi-objective preset.
    pub fn multi_objective() -> Self {
        Self::with_weights(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    }

    /// Checks weight and sigmoid invariants.
    pub fn validate(&self) -> Result<(), RewardError> {
        if self.w_accuracy < 0.0 || self.w_latency < 0.0 || self.w_energy < 0.0 {
            return Err(RewardError::NegativeWeight(
                self.w_accuracy,
                self.w_latency,
                self.w_energy,
            ));
        }
        let sum = self.w_accuracy + self.w_latency + self.w_energy;
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(RewardError::WeightSum {
                sum,
                tol: WEIGHT_SUM_TOL,
            });
        }
        if !(self.sigmoid_p > 0.0) {
            return Err(RewardError::SigmoidP(self.sigmoid_p));
        }
        if !(self.sigmoid_q > 0.0 && self.sigmoid_q < 1.0) {
            return Err(RewardError::SigmoidQ(self.sigmoid_q));
        }
        Ok(())
    }

    /// Weighted combination of one device's three scores.
    pub fn weighted(&self, s: &ScoreTriple) -> f64 {
        self.w_accuracy * s.accuracy_score
            + self.w_latency * s.latency_score
            + self.w_energy * s.energy_score
    }
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self::multi_objective()
    }
}

/// One device's normalized scores for a slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub accuracy_score: f64,
    pub latency_score: f64,
    pub energy_score: f64,
}

/// Sigmoid-normalized accuracy score, strictly inside (0,1).
pub fn accuracy_score(top1_accuracy: f64, cfg: &RewardConfig) -> f64 {
    1.0 / (1.0 + (-cfg.sigmoid_p * (top1_accuracy - cfg.sigmoid_q)).exp())
}

/// Latency score: 1 minus the ratio of achieved latency to running the
/// chosen version fully on-device. Negative when the split was slower.
pub fn latency_score(total_latency_ms: f64, full_local_latency_ms: f64) -> f64 {
    assert!(
        full_local_latency_ms > 0.0,
        "full-local latency must be positive"
    );
    1.0 - total_latency_ms / full_local_latency_ms
}

/// Energy score: 1 minus the ratio of spent energy to full on-device energy.
pub fn energy_score(total_energy_j: f64, full_local_energy_j: f64) -> f64 {
    assert!(
        full_local_energy_j > 0.0,
        "full-local energy must be positive"
    );
    1.0 - total_energy_j / full_local_energy_j
}

/// Scores one executed profile against its version's full-local baselines.
pub fn score_breakdown(
    version: &VersionProfile,
    breakdown: &CostBreakdown,
    cfg: &RewardConfig,
) -> ScoreTriple {
    ScoreTriple {
        accuracy_score: accuracy_score(version.top1_accuracy, cfg),
        latency_score: latency_score(breakdown.total_latency_ms, version.full_local_latency_ms),
        energy_score: energy_score(breakdown.total_energy_j, version.full_local_energy_j),
    }
}

/// Weighted reward averaged over the devices that ran a task this slot.
/// An empty slice (no active tasks) yields 0.
pub fn fleet_reward(per_device_scores: &[ScoreTriple], cfg: &RewardConfig) -> f64 {
    if per_device_scores.is_empty() {
        return 0.0;
    }
    let sum: f64 = per_device_scores.iter().map(|s| cfg.weighted(s)).sum();
    sum / per_device_scores.len() as f64
}
