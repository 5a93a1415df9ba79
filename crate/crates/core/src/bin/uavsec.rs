use clap::{Parser, ValueEnum};
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;
use uavsec::harness::{self, Regime, ScenarioSpec, Scheme};
use uavsec::{Config, Error};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scenario {
    /// One (scheme, regime, seed) cell.
    Single,
    /// Every scheme over `seeds` seeds, then a steady-state evaluation.
    Schemes,
    /// Ideal PPO against DT-RPPO, leader-only, interactions to convergence.
    Convergence,
    /// Alternating leader and follower training with the equilibrium check.
    Stackelberg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Study {
    Dt,
}

/// Secure multi-UAV data collection: simulator, digital twin and training runs.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[arg(long, value_enum, default_value = "single")]
    scenario: Scenario,
    #[arg(long, default_value = "mode_switching")]
    scheme: Scheme,
    #[arg(long, default_value = "dt_rppo")]
    regime: Regime,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Real episodes per run (overrides the config).
    #[arg(long)]
    episodes: Option<usize>,
    /// Number of seeds for multi-seed scenarios (overrides the config).
    #[arg(long)]
    seeds: Option<usize>,
    /// Run a study instead of a scenario.
    #[arg(long, value_enum)]
    study: Option<Study>,
    /// Sample counts for the twin study.
    #[arg(long, value_delimiter = ',', default_value = "0,50,100,200,500,1000,2000,4000")]
    samples: Vec<usize>,
    #[arg(long)]
    trace_trajectories: bool,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn create(cli: &Cli, name: &str) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(cli.out.join(name))?))
}

fn run(cli: &Cli) -> Result<(), Error> {
    let mut config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(e) = cli.episodes {
        config.run.episodes = e;
    }
    if let Some(s) = cli.seeds {
        config.run.seeds = s;
    }
    config.validate()?;
    if cli.print_config {
        print!("{}", config.to_flat_string());
        return Ok(());
    }
    std::fs::create_dir_all(&cli.out)?;
    let seeds: Vec<u64> = (0..config.run.seeds as u64).map(|i| cli.seed + i).collect();

    if let Some(Study::Dt) = cli.study {
        let rows = harness::run_dt_study(&config, &cli.samples, cli.seed)?;
        harness::write_dt_study(create(cli, "dt_study.csv")?, &rows)?;
        harness::write_summary(&cli.out.join("summary.json"), &rows)?;
        for r in &rows {
            let f = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.3}"));
            println!(
                "|M|={:<6} gpr={:>8} robust={:>8} dnn={:>8} gpr_s={:>8} dnn_s={:>8}",
                r.samples,
                f(r.gpr_plain_error),
                f(r.gpr_robust_error),
                f(r.dnn_error),
                f(r.gpr_fit_s),
                f(r.dnn_fit_s)
            );
        }
        return Ok(());
    }

    match cli.scenario {
        Scenario::Single => {
            let mut spec = ScenarioSpec::new(cli.scheme, cli.regime, cli.seed, config.run.episodes);
            spec.trace_trajectories = cli.trace_trajectories;
            let out = harness::run_dt_rppo(&spec, &config)?;
            harness::write_metrics(create(cli, "metrics.csv")?, &out.rows)?;
            harness::write_timing(create(cli, "timing.csv")?, &out.timing)?;
            if cli.trace_trajectories {
                harness::write_trajectories(create(cli, "trajectories.csv")?, &out.trajectories)?;
            }
            let eval = harness::evaluate_policies(&config, cli.seed, cli.scheme, &out.leader, &out.follower, 10)?;
            harness::write_summary(&cli.out.join("summary.json"), &eval)?;
            println!(
                "{} {} seed {}: secure {:.1} bs {:.1} eave {:.1} bits/slot after {} real slots",
                cli.scheme,
                cli.regime,
                cli.seed,
                eval.secure,
                eval.bs_throughput,
                eval.eave,
                out.rows.last().map_or(0, |r| r.interactions)
            );
        }
        Scenario::Schemes => {
            let out = harness::run_scheme_comparison(&config, &seeds, cli.regime, 10)?;
            harness::write_metrics(create(cli, "metrics.csv")?, &out.rows)?;
            harness::write_timing(create(cli, "timing.csv")?, &out.timing)?;
            harness::write_summary(&cli.out.join("summary.json"), &out.summary)?;
            for s in &out.summary {
                println!(
                    "{:<15} secure {:>10.1} ± {:<8.1} bs {:>10.1} ± {:<8.1} eave {:>10.1} ± {:.1}",
                    s.scheme.to_string(),
                    s.secure_mean,
                    s.secure_std,
                    s.bs_throughput_mean,
                    s.bs_throughput_std,
                    s.eave_mean,
                    s.eave_std
                );
            }
        }
        Scenario::Convergence => {
            let mut rows = Vec::new();
            let mut timing = Vec::new();
            let mut report = Vec::new();
            for regime in [Regime::IdealPpo, Regime::DtRppo] {
                for &seed in &seeds {
                    let mut spec = ScenarioSpec::new(cli.scheme, regime, seed, config.run.episodes);
                    spec.train_follower = false;
                    let out = harness::run_dt_rppo(&spec, &config)?;
                    let n = harness::interactions_to_fraction(&out.rows, 0.95, 10);
                    println!("{regime} seed {seed}: 95% after {n:?} real slots");
                    report.push((regime, seed, n));
                    rows.extend(out.rows);
                    timing.extend(out.timing);
                }
            }
            harness::write_metrics(create(cli, "metrics.csv")?, &rows)?;
            harness::write_timing(create(cli, "timing.csv")?, &timing)?;
            harness::write_summary(&cli.out.join("summary.json"), &report)?;
        }
        Scenario::Stackelberg => {
            let mut reports = Vec::new();
            for &seed in &seeds {
                let r = harness::run_stackelberg(&config, seed, cli.scheme)?;
                println!(
                    "seed {seed}: rounds {} equilibrium {} leader non-increasing in follower phases {}",
                    r.result.rounds, r.result.equilibrium, r.leader_non_increasing
                );
                let mut w = create(cli, &format!("stackelberg_seed{seed}.csv"))?;
                r.result.write_csv(&mut w)?;
                reports.push(r);
            }
            harness::write_summary(&cli.out.join("summary.json"), &reports)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
