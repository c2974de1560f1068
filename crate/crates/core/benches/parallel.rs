//! Compares the data-parallel map (`par_map`, backed by rayon when the
//! default `parallel` feature is on) against the always-sequential baseline
//! (`seq_map`) on the two batch shapes the library actually runs: planner
//! grids and evaluation episode batches.
//!
//! The spread only appears with multiple cores; on a single-core host the
//! two backends should tie, which is itself worth verifying (no regression
//! from the parallel dispatch overhead).

use criterion::{criterion_group, criterion_main, Criterion};
use cutpoint_core::{
    best_profile, par_map, seq_map, ChannelState, Env, ExecutionProfile, ProfileStore,
    RewardConfig, ScenarioFile, ServerState,
};

const SCENARIO: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../configs/default_scenario.json"
);

fn planner_score(job: (f64, &str)) -> f64 {
    let (bandwidth_bps, family) = job;
    best_profile(
        ProfileStore::bundled(),
        family,
        ChannelState {
            bandwidth_bps,
            tx_power_w: 0.5,
        },
        ServerState { queue_time_ms: 0.0 },
        &RewardConfig::default(),
        None,
    )
    .unwrap()
    .score
}

fn bench_planner_grid(c: &mut Criterion) {
    let jobs: Vec<(f64, &str)> = (0..100)
        .flat_map(|i| {
            let bandwidth_bps = 1.0e6 * (1.0 + 29.0 * i as f64 / 99.0);
            ["VGG", "ResNet", "DenseNet"]
                .into_iter()
                .map(move |family| (bandwidth_bps, family))
        })
        .collect();
    let mut group = c.benchmark_group("planner_grid_300");
    group.bench_function("par_map", |b| {
        b.iter(|| par_map(jobs.clone(), planner_score))
    });
    group.bench_function("seq_map", |b| {
        b.iter(|| seq_map(jobs.clone(), planner_score))
    });
    group.finish();
}

fn bench_episode_batch(c: &mut Criterion) {
    let store = ProfileStore::bundled();
    let mut file = ScenarioFile::load(SCENARIO).unwrap();
    // Shrink batteries so one episode is a handful of slots, keeping each
    // benchmark iteration short.
    for uav in &mut file.uavs {
        uav.battery_capacity_j = 30_000.0;
    }
    let measure = file.reward_config();
    let scenario = file.scenario.clone();
    let uavs = file.uavs.clone();

    let rollout = move |seed: u64| -> f64 {
        let mut env = Env::new(scenario.clone(), uavs.clone(), store).unwrap();
        env.reset_with_seed(seed);
        let mut total = 0.0;
        loop {
            let actions: Vec<ExecutionProfile> = env
                .state()
                .devices
                .iter()
                .map(|device| {
                    if device.task_active {
                        best_profile(
                            store,
                            &device.family,
                            device.channel,
                            ServerState {
                                queue_time_ms: env.state().server_queue_ms,
                            },
                            &measure,
                            None,
                        )
                        .unwrap()
                        .profile
                    } else {
                        ExecutionProfile {
                            version_index: 0,
                            cut_index: 0,
                        }
                    }
                })
                .collect();
            let outcome = env.step(&actions, &measure).unwrap();
            total += outcome.reward;
            if outcome.done {
                break;
            }
        }
        total
    };

    let seeds: Vec<u64> = (0..8).collect();
    let mut group = c.benchmark_group("episode_batch_8");
    group.bench_function("par_map", |b| b.iter(|| par_map(seeds.clone(), &rollout)));
    group.bench_function("seq_map", |b| b.iter(|| seq_map(seeds.clone(), &rollout)));
    group.finish();
}

criterion_group!(benches, bench_planner_grid, bench_episode_batch);
criterion_main!(benches);
