//! Energy and end-to-end latency models for a partitioned inference task.
//!
//! A task executes the model head locally (cumulative latency/energy read
//! from the profile), ships the intermediate output over the device's current
//! channel, then waits out the server queue plus tail computation. All
//! functions are pure; units are milliseconds, joules, bytes, and bits/s.

use crate::profiles::CutPointProfile;
use serde::{Deserialize, Serialize};

/// Uplink conditions for one device at one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub bandwidth_bps: f64,
    pub tx_power_w: f64,
}

impl ChannelState {
    pub fn new(bandwidth_bps: f64, tx_power_w: f64) -> Self {
        assert!(bandwidth_bps > 0.0, "bandwidth must be positive");
        assert!(tx_power_w >= 0.0, "tx power must be non-negative");
        Self {
            bandwidth_bps,
            tx_power_w,
        }
    }
}

/// Server-side congestion seen by a task at dispatch time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerState {
    pub queue_time_ms: f64,
}

impl ServerState {
    pub fn new(queue_time_ms: f64) -> Self {
        assert!(queue_time_ms >= 0.0, "queue time must be non-negative");
        Self { queue_time_ms }
    }
}

/// Itemized cost of one executed profile. Totals are exact sums of the parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub local_latency_ms: f64,
    pub trans_latency_ms: f64,
    pub remote_latency_ms: f64,
    pub total_latency_ms: f64,
    pub comp_energy_j: f64,
    pub trans_energy_j: f64,
    pub total_energy_j: f64,
}

/// Time to upload `output_bytes` over the channel, in milliseconds.
pub fn transmission_time_ms(output_bytes: u64, channel: ChannelState) -> f64 {
    8.0 * output_bytes as f64 / channel.bandwidth_bps * 1000.0
}

/// Radio energy to upload `output_bytes`: energy-per-bit (tx power over
/// bandwidth) times payload bits — equivalently tx power times upload time.
pub fn transmission_energy_j(output_bytes: u64, channel: ChannelState) -> f64 {
    channel.tx_power_w / channel.bandwidth_bps * 8.0 * output_bytes as f64
}

/// Compute energy of running the head locally for `local_latency_ms` at a
/// constant board power draw.
pub fn computation_energy_j(power_w: f64, local_latency_ms: f64) -> f64 {
    power_w * local_latency_ms / 1000.0
}

/// Full cost of executing `cut` under the given channel and server state.
///
/// Local figures come straight from the profile (measured, cumulative);
/// remote latency is queue wait plus tail computation.
pub fn evaluate_profile(
    cut: &CutPointProfile,
    channel: ChannelState,
    server: ServerState,
) -> CostBreakdown {
    let local_latency_ms = cut.local_latency_ms;
    let trans_latency_ms = transmission_time_ms(cut.output_bytes, channel);
    let remote_latency_ms = server.queue_time_ms + cut.server_latency_ms;
    let comp_energy_j = cut.local_energy_j;
    let trans_energy_j = transmission_energy_j(cut.output_bytes, channel);
    CostBreakdown {
        local_latency_ms,
        trans_latency_ms,
        remote_latency_ms,
        total_latency_ms: local_latency_ms + trans_latency_ms + remote_latency_ms,
        comp_energy_j,
        trans_energy_j,
        total_energy_j: comp_energy_j + trans_energy_j,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{get_cut, ProfileStore};
    use approx::assert_relative_eq;

    const LTE: ChannelState = ChannelState {
        bandwidth_bps: 8_000_000.0,
        tx_power_w: 0.5,
    };
    const WIFI: ChannelState = ChannelState {
        bandwidth_bps: 20_000_000.0,
        tx_power_w: 0.5,
    };

    #[test]
    fn transmission_time_matches_measured_uplink_rows() {
        assert_relative_eq!(transmission_time_ms(3_062_700, LTE), 3062.7);
        assert_relative_eq!(transmission_time_ms(1_000_000, WIFI), 400.0);
        assert_eq!(transmission_time_ms(0, LTE), 0.0);
    }

    #[test]
    fn transmission_energy_is_power_times_upload_time() {
        assert_relative_eq!(transmission_energy_j(3_062_700, LTE), 1.53135);
        assert_relative_eq!(transmission_energy_j(3_062_700, WIFI), 0.61254);
        assert_eq!(transmission_energy_j(0, WIFI), 0.0);
        // Identity: E = P * t, with t converted to seconds.
        let t_s = transmission_time_ms(765_800, LTE) / 1000.0;
        assert_relative_eq!(transmission_energy_j(765_800, LTE), 0.5 * t_s);
    }

    #[test]
    fn computation_energy_is_power_times_seconds() {
        assert_relative_eq!(computation_energy_j(5.0, 2000.0), 10.0);
        assert_eq!(computation_energy_j(0.0, 12345.0), 0.0);
        // Back-solved board power from a measured (energy, latency) pair.
        assert_relative_eq!(
            computation_energy_j(6.056, 130.45),
            0.790005,
            max_relative = 1e-6
        );
    }

    #[test]
    fn evaluate_profile_reproduces_measured_totals() {
        let store = ProfileStore::bundled();
        let vgg11_cut3 = get_cut(store, "VGG", 0, 0).unwrap();
        let b = evaluate_profile(vgg11_cut3, LTE, ServerState::new(0.0));
        assert_relative_eq!(b.total_latency_ms, 3247.757, max_relative = 5e-3);
        assert_relative_eq!(b.total_energy_j, 2.32135, max_relative = 1e-9);

        let vgg19_cut10 = get_cut(store, "VGG", 1, 1).unwrap();
        let b = evaluate_profile(vgg19_cut10, WIFI, ServerState::new(0.0));
        assert_relative_eq!(b.total_latency_ms, 1267.43, max_relative = 1e-9);
    }

    #[test]
    fn totals_are_exact_component_sums() {
        let store = ProfileStore::bundled();
        for fam in store.families() {
            for ver in &fam.versions {
                for cut in &ver.cut_points {
                    for ch in [LTE, WIFI] {
                        let b = evaluate_profile(cut, ch, ServerState::new(17.5));
                        assert_eq!(
                            b.total_latency_ms,
                            b.local_latency_ms + b.trans_latency_ms + b.remote_latency_ms
                        );
                        assert_eq!(b.total_energy_j, b.comp_energy_j + b.trans_energy_j);
                    }
                }
            }
        }
    }

    #[test]
    fn queue_time_adds_linearly_to_total_latency() {
        let store = ProfileStore::bundled();
        let cut = get_cut(store, "DenseNet", 1, 0).unwrap();
        let base = evaluate_profile(cut, WIFI, ServerState::new(0.0));
        let queued = evaluate_profile(cut, WIFI, ServerState::new(500.0));
        assert_relative_eq!(queued.total_latency_ms - base.total_latency_ms, 500.0);
        assert_eq!(queued.total_energy_j, base.total_energy_j);
    }

    #[test]
    fn more_bandwidth_strictly_reduces_latency_when_payload_nonzero() {
        let store = ProfileStore::bundled();
        let cut = get_cut(store, "ResNet", 1, 0).unwrap();
        let mut prev = f64::INFINITY;
        for bw in [4e6, 8e6, 16e6, 32e6, 64e6] {
            let b = evaluate_profile(cut, ChannelState::new(bw, 0.5), ServerState::new(0.0));
            assert!(b.total_latency_ms < prev);
            prev = b.total_latency_ms;
        }
    }
}
