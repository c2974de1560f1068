//! Exhaustive brute-force planner over execution profiles.
//!
//! For one family under fixed channel/server conditions, enumerate every
//! (version, cut point) pair, score each with the reward module, and return
//! the optimum (or the full ranking). Also provides the one-axis weight
//! sweep used for sensitivity studies. Everything is deterministic: ties
//! break toward the lower version index, then the lower cut layer.

use crate::cost::{evaluate_profile, ChannelState, CostBreakdown, ServerState};
use crate::profiles::{ProfileError, ProfileStore};
use crate::reward::{score_breakdown, RewardConfig, ScoreTriple};
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

/// The decision unit: which version of the family to run, split at which
/// candidate cut (both as indices into the profile catalog).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExecutionProfile {
    pub version_index: usize,
    pub cut_index: usize,
}

/// One scored enumeration entry.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedProfile {
    pub profile: ExecutionProfile,
    pub version_name: String,
    pub cut_layer: u32,
    pub score: f64,
    pub breakdown: CostBreakdown,
    pub scores: ScoreTriple,
}

/// Swept objective axis for [`weight_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Accuracy,
    Latency,
    Energy,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Result<Self, OracleError> {
        match s.to_ascii_lowercase().as_str() {
            "accuracy" => Ok(Self::Accuracy),
            "latency" => Ok(Self::Latency),
            "energy" => Ok(Self::Energy),
            other => Err(OracleError::BadAxis(other.to_string())),
        }
    }

    /// Weights with this axis at `v` and the remaining mass split evenly
    /// between the other two axes (the equal-weights base).
    pub fn weights_at(self, v: f64) -> RewardConfig {
        let rest = (1.0 - v) / 2.0;
        match self {
            Self::Accuracy => RewardConfig::with_weights(v, rest, rest),
            Self::Latency => RewardConfig::with_weights(rest, v, rest),
            Self::Energy => RewardConfig::with_weights(rest, rest, v),
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("version filter selects no versions of family {0:?}")]
    EmptyFilter(String),
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("sweep grid value {0} outside [0,1]")]
    GridRange(f64),
    #[error("unknown sweep axis {0:?} (expected accuracy|latency|energy)")]
    BadAxis(String),
    #[error("csv write failed: {0}")]
    Csv(#[from] csv::Error),
}

/// Enumerates and scores every (version, cut) pair of `family`, restricted
/// to `version_filter` when given. Entries come back in enumeration order
/// (version index ascending, cut index ascending).
fn enumerate(
    store: &ProfileStore,
    family: &str,
    channel: ChannelState,
    server: ServerState,
    cfg: &RewardConfig,
    version_filter: Option<&[usize]>,
) -> Result<Vec<RankedProfile>, OracleError> {
    let fam = store.family(family)?;
    let mut out = Vec::new();
    for (vi, ver) in fam.versions.iter().enumerate() {
        if let Some(filter) = version_filter {
            if !filter.contains(&vi) {
                continue;
            }
        }
        for (ci, cut) in ver.cut_points.iter().enumerate() {
            let breakdown = evaluate_profile(cut, channel, server);
            let scores = score_breakdown(ver, &breakdown, cfg);
            out.push(RankedProfile {
                profile: ExecutionProfile {
                    version_index: vi,
                    cut_index: ci,
                },
                version_name: ver.name.clone(),
                cut_layer: cut.layer_id,
                score: cfg.weighted(&scores),
                breakdown,
                scores,
            });
        }
    }
    if out.is_empty() {
        return Err(OracleError::EmptyFilter(family.to_string()));
    }
    Ok(out)
}

/// Returns the reward-maximizing execution profile for `family` under the
/// given conditions. Ties break toward the lower version index, then the
/// lower cut layer (enumeration order keeps the first of any equal-score
/// group, which is exactly that preference).
pub fn best_profile(
    store: &ProfileStore,
    family: &str,
    channel: ChannelState,
    server: ServerState,
    cfg: &RewardConfig,
    version_filter: Option<&[usize]>,
) -> Result<RankedProfile, OracleError> {
    let entries = enumerate(store, family, channel, server, cfg, version_filter)?;
    let mut best = None::<RankedProfile>;
    for entry in entries {
        match &best {
            Some(b) if entry.score <= b.score => {}
            _ => best = Some(entry),
        }
    }
    Ok(best.expect("enumeration is non-empty"))
}

/// Complete scored enumeration of `family`, sorted by descending score
/// (stable, so equal scores keep version-then-cut order).
pub fn rank_all(
    store: &ProfileStore,
    family: &str,
    channel: ChannelState,
    server: ServerState,
    cfg: &RewardConfig,
) -> Result<Vec<RankedProfile>, OracleError> {
    let mut entries = enumerate(store, family, channel, server, cfg, None)?;
    entries.sort_by(|a, b| b.score.partial_cmp(&a.score).expect("finite scores"));
    Ok(entries)
}

/// One-axis weight sensitivity sweep: for each grid value `v`, set the swept
/// axis's weight to `v`, split the remaining mass evenly between the other
/// two, and record the best profile.
pub fn weight_sweep(
    store: &ProfileStore,
    family: &str,
    channel: ChannelState,
    server: ServerState,
    axis: SweepAxis,
    grid: &[f64],
    version_filter: Option<&[usize]>,
) -> Result<Vec<(f64, RankedProfile)>, OracleError> {
    if grid.is_empty() {
        return Err(OracleError::EmptyGrid);
    }
    let mut out = Vec::with_capacity(grid.len());
    for &v in grid {
        if !(0.0..=1.0).contains(&v) {
            return Err(OracleError::GridRange(v));
        }
        let cfg = axis.weights_at(v);
        out.push((
            v,
            best_profile(store, family, channel, server, &cfg, version_filter)?,
        ));
    }
    Ok(out)
}

/// Writes ranked entries as CSV: one row per profile with the fixed header
/// `family,version,cut_layer,latency_ms,energy_j,acc_score,lat_score,energy_score,weighted_score`.
pub fn write_ranked_csv(
    writer: impl Write,
    family: &str,
    entries: &[RankedProfile],
) -> Result<(), OracleError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "family",
        "version",
        "cut_layer",
        "latency_ms",
        "energy_j",
        "acc_score",
        "lat_score",
        "energy_score",
        "weighted_score",
    ])?;
    for e in entries {
        w.write_record([
            family.to_string(),
            e.version_name.clone(),
            e.cut_layer.to_string(),
            format!("{:.6}", e.breakdown.total_latency_ms),
            format!("{:.6}", e.breakdown.total_energy_j),
            format!("{:.9}", e.scores.accuracy_score),
            format!("{:.9}", e.scores.latency_score),
            format!("{:.9}", e.scores.energy_score),
            format!("{:.9}", e.score),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
