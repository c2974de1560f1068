//! Command-line front end for the cutpoint simulator, planner, and trainer.

use std::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cutpoint_core::harness::{
    write_battery_trace_csv, write_depletion_csv, write_rankings_csv, write_report_csv,
    write_sweep_csv,
};
use cutpoint_core::{
    default_weight_grid, format_bandwidth, load_profiles, ranking_rows, run_battery_study,
    run_experiment, run_sensitivity, run_training, EvalOptions, ExperimentReport, ProfileStore,
    ScenarioFile, ServerState, StrategyKind, StrategySpec, SweepAxis, SweepRow, TrainerConfig,
};

#[derive(Parser)]
#[command(
    name = "cutpoint",
    version,
    about = "Partitioned-inference planning, simulation, and training for UAV edge fleets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a profile catalog, report its contents, and surface warnings.
    ValidateProfiles(ValidateArgs),
    /// Rank every profile per family on each scenario channel.
    Oracle(OracleArgs),
    /// Sweep objective weights per family, channel, and axis.
    Sweep(SweepArgs),
    /// Train a policy on a scenario and save its checkpoint and log.
    Train(TrainArgs),
    /// Evaluate a selection strategy on a scenario.
    Eval(EvalArgs),
    /// Compare battery life across activity levels.
    Battery(BatteryArgs),
}

#[derive(Args)]
struct CatalogArgs {
    /// Profile catalog JSON; the bundled catalog when omitted.
    #[arg(long, value_name = "FILE")]
    profiles: Option<PathBuf>,
}

impl CatalogArgs {
    fn store(&self) -> Result<&'static ProfileStore, Box<dyn Error>> {
        Ok(match &self.profiles {
            None => ProfileStore::bundled(),
            // One catalog per invocation; leaking gives it the same
            // lifetime as the bundled one.
            Some(path) => Box::leak(Box::new(load_profiles(path)?)),
        })
    }
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    catalog: CatalogArgs,
}

#[derive(Args)]
struct OracleArgs {
    /// Scenario JSON supplying channels and objective weights.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    #[command(flatten)]
    catalog: CatalogArgs,
    /// Directory for one ranking CSV per channel; print-only when omitted.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario JSON supplying families, channels, and sigmoid parameters.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    #[command(flatten)]
    catalog: CatalogArgs,
    /// Directory for sweep.csv; print-only when omitted.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Weight grid points, e.g. 0,0.25,0.5,0.75,1.
    #[arg(long, value_delimiter = ',', value_name = "W,...")]
    grid: Option<Vec<f64>>,
}

#[derive(Args)]
struct TrainArgs {
    /// Scenario JSON to train on.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    #[command(flatten)]
    catalog: CatalogArgs,
    /// Directory for checkpoint.json and training_log.csv.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long, default_value_t = TrainerConfig::default().episodes)]
    episodes: usize,
    #[arg(long, default_value_t = TrainerConfig::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = TrainerConfig::default().discount)]
    discount: f64,
    #[arg(long, default_value_t = TrainerConfig::default().learning_rate)]
    learning_rate: f64,
    /// Print the moving-average reward after every episode.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Scenario JSON to evaluate on.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    #[command(flatten)]
    catalog: CatalogArgs,
    /// One of AO, LO, EO, MO, LOCAL_ONLY, ORACLE, TRAINED.
    #[arg(long)]
    strategy: String,
    /// Policy checkpoint; required for the TRAINED strategy.
    #[arg(long, value_name = "FILE")]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = EvalOptions::default().episodes)]
    episodes: usize,
    #[arg(long, default_value_t = EvalOptions::default().seed)]
    seed: u64,
    /// Write the report as a one-row CSV.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BatteryArgs {
    /// Scenario JSON whose fleet is swept across activity levels.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    #[command(flatten)]
    catalog: CatalogArgs,
    /// Runs (seeds) per activity level.
    #[arg(long, default_value_t = 50)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    base_seed: u64,
    /// Directory for depletion.csv (and battery_trace.csv with --traces).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Record per-slot battery traces (large output).
    #[arg(long)]
    traces: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = err.source();
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<(), Box<dyn Error>> {
    match command {
        Command::ValidateProfiles(args) => validate_profiles(args),
        Command::Oracle(args) => oracle(args),
        Command::Sweep(args) => sweep(args),
        Command::Train(args) => train(args),
        Command::Eval(args) => eval(args),
        Command::Battery(args) => battery(args),
    }
}

fn validate_profiles(args: ValidateArgs) -> Result<(), Box<dyn Error>> {
    let store = args.catalog.store()?;
    let versions: usize = store.families().iter().map(|f| f.versions.len()).sum();
    let cuts: usize = store
        .families()
        .iter()
        .flat_map(|f| &f.versions)
        .map(|v| v.cut_points.len())
        .sum();
    println!(
        "catalog OK: {} families, {versions} versions, {cuts} cut points",
        store.families().len()
    );
    for family in store.families() {
        for version in &family.versions {
            println!(
                "  {}/{}: top-1 accuracy {:.4}, {} cut points, full-local {:.2} ms / {:.2} J",
                family.name,
                version.name,
                version.top1_accuracy,
                version.cut_points.len(),
                version.full_local_latency_ms,
                version.full_local_energy_j
            );
        }
    }
    for warning in store.warnings() {
        eprintln!("warning: {warning}");
    }
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<(), Box<dyn Error>> {
    let store = args.catalog.store()?;
    let file = ScenarioFile::load(&args.config)?;
    let weights = file.reward_config();
    let server = ServerState { queue_time_ms: 0.0 };
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
    }
    for &channel in &file.scenario.channel_set {
        let rows = ranking_rows(store, channel, server, &weights)?;
        println!("channel {} (idle server):", format_bandwidth(channel.bandwidth_bps));
        for family in store.families() {
            let best = rows
                .iter()
                .find(|r| r.family == family.name)
                .expect("ranking covers every family");
            println!(
                "  {:<9} -> {} cut {:>3}: {:>8.2} ms, {:>6.3} J, score {:.4}",
                best.family,
                best.version,
                best.cut_layer,
                best.latency_ms,
                best.energy_j,
                best.weighted_score
            );
        }
        if let Some(dir) = &args.out {
            let path = dir.join(format!(
                "ranking_{}.csv",
                format_bandwidth(channel.bandwidth_bps)
            ));
            write_rankings_csv(&path, &rows)?;
            println!("  wrote {} rows to {}", rows.len(), path.display());
        }
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), Box<dyn Error>> {
    let store = args.catalog.store()?;
    let file = ScenarioFile::load(&args.config)?;
    let grid = args.grid.unwrap_or_else(default_weight_grid);
    let server = ServerState { queue_time_ms: 0.0 };
    let axes = [SweepAxis::Accuracy, SweepAxis::Latency, SweepAxis::Energy];
    let mut rows: Vec<SweepRow> = Vec::new();
    for family in &file.scenario.family_set {
        for &channel in &file.scenario.channel_set {
            rows.extend(run_sensitivity(
                store, family, channel, server, &axes, &grid, None,
            )?);
        }
    }
    for row in &rows {
        println!(
            "{:<9} {:<8} weight {:.2} @{:>7}: {} cut {:>3} ({:>8.2} ms, {:>6.3} J)",
            row.family,
            row.axis,
            row.weight,
            format_bandwidth(row.bandwidth_bps),
            row.version,
            row.cut_layer,
            row.latency_ms,
            row.energy_j
        );
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("sweep.csv");
        write_sweep_csv(&path, &rows)?;
        println!("wrote {} rows to {}", rows.len(), path.display());
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<(), Box<dyn Error>> {
    let store = args.catalog.store()?;
    let file = ScenarioFile::load(&args.config)?;
    let cfg = TrainerConfig {
        episodes: args.episodes,
        seed: args.seed,
        discount: args.discount,
        learning_rate: args.learning_rate,
        ..TrainerConfig::default()
    };
    let outcome = run_training(&file, store, cfg, &args.out, args.verbose)?;
    println!(
        "trained {} episodes: final moving-average reward {:.4}",
        outcome.log.len(),
        outcome.final_moving_average
    );
    println!("checkpoint: {}", outcome.checkpoint_path.display());
    println!("log:        {}", outcome.log_path.display());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<(), Box<dyn Error>> {
    let store = args.catalog.store()?;
    let file = ScenarioFile::load(&args.config)?;
    let mut spec = StrategySpec::parse(&args.strategy)?;
    if spec.kind == StrategyKind::Trained {
        spec.checkpoint = Some(
            args.checkpoint
                .ok_or("the TRAINED strategy needs --checkpoint")?,
        );
    } else if args.checkpoint.is_some() {
        return Err(format!("--checkpoint is only valid with TRAINED, not {}", spec.kind).into());
    }
    let report = run_experiment(
        &file,
        store,
        &spec,
        EvalOptions {
            episodes: args.episodes,
            seed: args.seed,
        },
    )?;
    print_report(&report);
    if let Some(path) = &args.out {
        write_report_csv(path, std::slice::from_ref(&report))?;
        println!("wrote report to {}", path.display());
    }
    Ok(())
}

fn print_report(report: &ExperimentReport) {
    println!("strategy                 {}", report.strategy);
    println!("episodes                 {}", report.episodes);
    println!("slots simulated          {}", report.slots);
    println!("tasks executed           {}", report.tasks);
    println!("mean weighted reward     {:.4}", report.mean_weighted_reward);
    println!("mean accuracy            {:.4}", report.mean_accuracy);
    println!("mean latency             {:.2} ms", report.mean_latency_ms);
    println!("mean energy              {:.4} J", report.mean_energy_j);
    println!(
        "mean battery life        {:.1} slots",
        report.mean_battery_life_slots
    );
    println!(
        "latency vs local-only    {:+.1}%",
        -100.0 * report.latency_improvement_vs_local
    );
    println!(
        "energy vs local-only     {:+.1}%",
        -100.0 * report.energy_improvement_vs_local
    );
}

fn battery(args: BatteryArgs) -> Result<(), Box<dyn Error>> {
    let store = args.catalog.store()?;
    let file = ScenarioFile::load(&args.config)?;
    let study = run_battery_study(&file, store, args.seeds, args.base_seed, args.traces)?;
    for (level, mean_life) in &study.mean_life {
        println!("{level:<9} mean battery life {mean_life:.1} slots");
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        let depletion = dir.join("depletion.csv");
        write_depletion_csv(&depletion, &study.depletion)?;
        println!(
            "wrote {} depletion rows to {}",
            study.depletion.len(),
            depletion.display()
        );
        if args.traces {
            let trace = dir.join("battery_trace.csv");
            write_battery_trace_csv(&trace, &study.traces)?;
            println!(
                "wrote {} trace rows to {}",
                study.traces.len(),
                trace.display()
            );
        }
    }
    Ok(())
}
