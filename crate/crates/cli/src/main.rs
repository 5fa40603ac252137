use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plateflow::coupling::Stepper;
use plateflow::io::{load_config, ExperimentConfig, IoError, IoResult, Scenario};
use plateflow::scenario::{compare_snapshots, exit_code, initial_state, run_scenario, ScenarioReport};

#[derive(Parser)]
#[command(name = "plateflow", version, about = "Compressible fluid over a (visco)elastic plate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write outputs here instead of the configured directory.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Override the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scenario.
    Run { config: PathBuf },
    /// Validate a configuration and its initial data without running.
    Check { config: PathBuf },
    /// Run the regularity scan on the configured problem.
    Scan { config: PathBuf },
    /// Print the relative entropy of snapshot A with respect to snapshot B.
    Compare { a: PathBuf, b: PathBuf },
}

fn load(cli: &Cli, path: &Path) -> IoResult<ExperimentConfig> {
    let mut cfg = load_config(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.output_dir {
        cfg.output.directory = dir.clone();
    }
    Ok(cfg)
}

fn execute(cli: &Cli, cfg: &ExperimentConfig) -> IoResult<ScenarioReport> {
    if cli.verbose {
        eprintln!("running {} into {}", cfg.scenario.as_str(), cfg.output.directory.display());
    }
    let started = std::time::Instant::now();
    let report = run_scenario(cfg, &cfg.output.directory)?;
    for (k, v) in &report.summary {
        println!("{k} = {v:.6e}");
    }
    if cli.verbose {
        for f in &report.files {
            eprintln!("wrote {}", f.display());
        }
        eprintln!("finished in {:.2?}", started.elapsed());
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: IoResult<ScenarioReport> = match &cli.command {
        Command::Run { config } => load(&cli, config).and_then(|cfg| execute(&cli, &cfg)),
        Command::Scan { config } => load(&cli, config).and_then(|mut cfg| {
            cfg.scenario = Scenario::RegularityScan;
            execute(&cli, &cfg)
        }),
        Command::Check { config } => load(&cli, config).and_then(|cfg| {
            initial_state(&cfg)?;
            if cfg.scenario != Scenario::InvariantSuite {
                // the solver rejects grids it cannot run on when it is built
                let g = cfg.grid.build()?;
                let model = cfg.model.build(&g)?;
                Stepper::new(&g, cfg.scheme, cfg.params, &model, None)?;
            }
            if cli.verbose {
                print!("{}", cfg.resolved_toml());
            }
            println!("ok: {} on {}x{}", cfg.scenario.as_str(), cfg.grid.nx, cfg.grid.nz);
            Ok(ScenarioReport::default())
        }),
        Command::Compare { a, b } => compare_snapshots(a, b).map(|e| {
            println!("fluid_kinetic_gap = {:.16e}", e.fluid_kinetic_gap);
            println!("pressure_gap = {:.16e}", e.pressure_gap);
            println!("plate_velocity_gap = {:.16e}", e.plate_velocity_gap);
            println!("bending_gap = {:.16e}", e.bending_gap);
            println!("thermal_gap = {:.16e}", e.thermal_gap);
            println!("quasilinear_gap = {:.16e}", e.quasilinear_gap);
            println!("total = {:.16e}", e.total);
            ScenarioReport::default()
        }),
    };
    if let Err(e) = &result {
        eprintln!("error: {e}");
        if let IoError::Parse { .. } = e {
            eprintln!("hint: see docs/config.md for the configuration schema");
        }
    }
    ExitCode::from(exit_code(&result) as u8)
}
