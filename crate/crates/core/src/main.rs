use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fairbo_core::config::{parse_experiment_config, parse_world_config};
use fairbo_core::error::Result;
use fairbo_core::experiment::{diagnose, run_experiment, GridScanRow, WorldSource};
use fairbo_core::pipeline::ServingWeights;
use fairbo_core::report::{build_report, read_trials_csv, write_fronts_csv, write_summary_json, write_trials_csv};
use fairbo_core::score_table::{export_score_table, export_sidecar_config};
use fairbo_core::svg::pareto_scatter_svg;
use fairbo_core::world::World;

#[derive(Parser)]
#[command(
    name = "fairbo",
    about = "Simulates retrieve/score/serve recommender pipelines, measures group-level utility disparities, and searches serving weights with fairness-aware Bayesian optimization"
)]
struct Cli {
    /// Overrides the master seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for trial execution; results do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic world and export its score table plus sidecar config.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the strategy-comparison protocol and emit trials.csv, summary.json,
    /// fronts.csv, and pareto.svg.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit the exact gap decomposition, bounds, retrieval quality, and the
    /// per-group utility grid for one set of serving weights.
    Diagnose {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated serving weights, one per label.
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild summary.json, fronts.csv, and pareto.svg from a trials.csv log.
    Report {
        /// Directory containing trials.csv.
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global()
    {
        eprintln!("error: failed to configure thread pool: {e}");
        return ExitCode::FAILURE;
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { config, out } => generate(&config, &out, cli.seed),
        Command::Run { config, out } => run(&config, &out, cli.seed),
        Command::Diagnose { config, alpha, out } => diagnose_cmd(&config, &alpha, &out, cli.seed),
        Command::Report { log, out } => report_cmd(&log, &out),
    }
}

fn generate(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut config = parse_world_config(&fs::read_to_string(config_path)?)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let world = World::generate(&config)?;
    fs::create_dir_all(out)?;
    export_score_table(&world, &out.join("scores.csv"))?;
    export_sidecar_config(&world, &out.join("world.config"))?;
    println!(
        "generated world: {} contexts x {} items x {} labels -> {}",
        world.n_contexts(),
        world.n_items(),
        world.n_labels(),
        out.display()
    );
    Ok(())
}

fn run(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut config = parse_experiment_config(&fs::read_to_string(config_path)?)?;
    if let Some(seed) = seed {
        config.master_seed = seed;
        if let WorldSource::Generate(w) = &mut config.world {
            w.seed = fairbo_core::seeding::derive_seed(seed, &[1]);
        }
    }
    let log = run_experiment(&config)?;
    let report = build_report(&log)?;
    fs::create_dir_all(out)?;
    write_trials_csv(&log, &out.join("trials.csv"))?;
    write_summary_json(&report.summary, &out.join("summary.json"))?;
    write_fronts_csv(&report, &out.join("fronts.csv"))?;
    fs::write(out.join("pareto.svg"), pareto_scatter_svg(&report))?;
    for s in &report.summary.strategies {
        println!(
            "{}: best der {:.4} +- {:.4}, best utility {:.4} +- {:.4}, {} global front points",
            s.strategy, s.best_der_mean, s.best_der_std, s.best_utility_mean, s.best_utility_std,
            s.global_front_points
        );
    }
    for c in &report.summary.comparisons {
        println!(
            "fair_ehvi vs {}: best-der p = {:.5} (greater), best-utility p = {:.5} (greater)",
            c.baseline, c.best_der.p_greater, c.best_utility.p_greater
        );
    }
    Ok(())
}

fn diagnose_cmd(config_path: &Path, alpha: &str, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut config = parse_experiment_config(&fs::read_to_string(config_path)?)?;
    if let Some(seed) = seed {
        if let WorldSource::Generate(w) = &mut config.world {
            w.seed = seed;
        }
    }
    let world = config.build_world()?;
    let weights = ServingWeights::new(
        alpha
            .split(',')
            .map(|v| {
                v.trim().parse().map_err(|_| {
                    fairbo_core::error::Error::argument(format!("bad alpha entry `{v}`"))
                })
            })
            .collect::<Result<Vec<f64>>>()?,
    )?;
    let (diagnostics, grid) = diagnose(&world, &config.policy, &weights)?;
    fs::create_dir_all(out)?;
    let json = serde_json::to_string_pretty(&diagnostics)
        .map_err(|e| fairbo_core::error::Error::Numerical(e.to_string()))?;
    fs::write(out.join("diagnostics.json"), json + "\n")?;
    fs::write(out.join("utility_grid.csv"), grid_csv(&world.n_labels(), &grid))?;
    println!(
        "total gap {:.6} = {:.6} + {:.6} + {:.6}; preference-term bound {:.6}",
        diagnostics.total_gap,
        diagnostics.term_x_shift_1,
        diagnostics.term_preference,
        diagnostics.term_x_shift_2,
        diagnostics.theorem1_bound
    );
    Ok(())
}

fn grid_csv(n_labels: &usize, grid: &[GridScanRow]) -> String {
    let mut out = String::from("group");
    for k in 0..*n_labels {
        out.push_str(&format!(",alpha_{k}"));
    }
    out.push_str(",utility\n");
    for row in grid {
        out.push_str(&row.group.to_string());
        for a in &row.alpha {
            out.push_str(&format!(",{a}"));
        }
        out.push_str(&format!(",{}\n", row.utility));
    }
    out
}

fn report_cmd(log_dir: &Path, out: &Path) -> Result<()> {
    let log = read_trials_csv(&log_dir.join("trials.csv"))?;
    let report = build_report(&log)?;
    fs::create_dir_all(out)?;
    write_summary_json(&report.summary, &out.join("summary.json"))?;
    write_fronts_csv(&report, &out.join("fronts.csv"))?;
    fs::write(out.join("pareto.svg"), pareto_scatter_svg(&report))?;
    println!(
        "reported {} strategies over {} trials",
        report.summary.strategies.len(),
        report.summary.n_trials
    );
    Ok(())
}
