use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mhd_core::app::{scenario_invariants3d, scenario_rayleigh_taylor, SimConfig, Simulation};
use mhd_core::verify::lemma_suite;
use mhd_core::Error;

#[derive(Parser)]
#[command(name = "mhd", version, about = "Structure-preserving compressible MHD solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a TOML file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run one of the built-in scenarios.
    Scenario {
        #[command(subcommand)]
        which: Scenario,
    },
    /// Check the discrete identities of the scheme on small meshes.
    Check {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum Scenario {
    /// Smooth ideal flow in the cube [-1, 1]^3.
    Invariants3d {
        #[arg(long, default_value_t = 1)]
        factor: usize,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Magnetic Rayleigh-Taylor instability.
    Rt {
        #[arg(long)]
        b0: f64,
        #[arg(long, default_value_t = 1)]
        factor: usize,
        #[command(flatten)]
        opts: RunOpts,
    },
}

#[derive(Args)]
struct RunOpts {
    /// Output directory for diagnostics.csv and snapshots.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Time between VTK snapshots (0 disables them).
    #[arg(long)]
    snapshot_interval: Option<f64>,
    #[arg(long)]
    no_upwinding: bool,
    /// Check the energy identity after every step.
    #[arg(long)]
    debug_checks: bool,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

impl RunOpts {
    fn apply(&self, cfg: &mut SimConfig) {
        if let Some(out) = &self.out {
            cfg.output.dir = Some(out.clone());
        }
        if let Some(dt) = self.dt {
            cfg.time.dt = dt;
        }
        if let Some(t) = self.t_end {
            cfg.time.t_end = t;
        }
        if let Some(s) = self.snapshot_interval {
            cfg.output.snapshot_interval = s;
        }
        if self.no_upwinding {
            cfg.physics.upwinding = false;
        }
        if self.debug_checks {
            cfg.output.debug_checks = true;
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        e if e.is_solver_failure() => 3,
        _ => 1,
    }
}

fn simulate(mut cfg: SimConfig, opts: &RunOpts) -> Result<(), Error> {
    opts.apply(&mut cfg);
    cfg.validate()?;
    if opts.print_config {
        print!("{}", cfg.to_toml()?);
        return Ok(());
    }
    let mut sim = Simulation::new(cfg)?;
    let result = sim.run_to_end();
    let first = sim.records()[0];
    let last = *sim.records().last().unwrap();
    println!(
        "t = {:.6}  steps = {}  |dmass| = {:.3e}  |denergy| = {:.3e}  max div B = {:.3e}",
        last.t,
        sim.records().len() - 1,
        (last.mass - first.mass).abs(),
        (last.energy - first.energy).abs(),
        sim.records().iter().map(|r| r.div_b_l2).fold(0.0, f64::max)
    );
    result
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, opts } => SimConfig::load(&config).and_then(|cfg| simulate(cfg, &opts)),
        Command::Scenario { which } => match which {
            Scenario::Invariants3d { factor, opts } => scenario_invariants3d(factor).and_then(|c| simulate(c, &opts)),
            Scenario::Rt { b0, factor, opts } => scenario_rayleigh_taylor(b0, factor).and_then(|c| simulate(c, &opts)),
        },
        Command::Check { trials, seed } => match lemma_suite(trials, seed) {
            Ok(results) => {
                for r in &results {
                    println!("{r}");
                }
                if results.iter().all(|r| r.passed()) {
                    Ok(())
                } else {
                    return ExitCode::from(1);
                }
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
