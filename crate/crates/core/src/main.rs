use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fluxmech::commands::{cmd_compare, cmd_effective, cmd_run, cmd_sweep, cmd_validate, SweepAxis};
use fluxmech::config::ScenarioConfig;
use fluxmech::Error;

const EXIT_VALIDATION: u8 = 1;
const EXIT_DIVERGED: u8 = 2;
const EXIT_INVARIANTS: u8 = 3;

#[derive(Parser)]
#[command(
    name = "fluxmech",
    version,
    about = "Flux-qubit-mediated electromechanics simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// JSON scenario config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset (paper-fig2, aluminium-low-freq).
    #[arg(long)]
    preset: Option<String>,
    /// Override a config field, e.g. `--set params.Omega=32` (repeatable).
    #[arg(long = "set", value_name = "FIELD=VALUE")]
    overrides: Vec<String>,
    /// Output file.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ScenarioArgs {
    fn load(&self) -> fluxmech::Result<ScenarioConfig> {
        match (&self.config, &self.preset) {
            (Some(_), Some(_)) => Err(Error::Config(
                "give either --config or --preset (a config file may name its own preset)".into(),
            )),
            (Some(path), None) => ScenarioConfig::load(path, &self.overrides),
            (None, Some(name)) => ScenarioConfig::from_preset(name, &self.overrides),
            (None, None) => ScenarioConfig::from_preset("paper-fig2", &self.overrides),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Effective coupling, Stark shifts, adiabaticity and strong-coupling margins.
    Effective(ScenarioArgs),
    /// Integrate the master equation and write the trajectory CSV.
    Run(ScenarioArgs),
    /// Compare the full model with the effective two-mode model.
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Also run the effective model with Stark shifts.
        #[arg(long)]
        include_stark: bool,
    },
    /// Sweep one or two parameters over a grid.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Axis `name=v1,v2,...` or `name=start:stop:count` (give once or twice).
        #[arg(long = "param", required = true, value_name = "NAME=GRID")]
        params: Vec<String>,
        /// Also run the full master equation at each point (peak_nb column).
        #[arg(long)]
        full: bool,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Run the built-in invariant suite.
    Validate {
        /// Replace the step size of every integration check.
        #[arg(long)]
        dt: Option<f64>,
    },
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::IntegrationDiverged { .. } => ExitCode::from(EXIT_DIVERGED),
        _ => ExitCode::from(EXIT_VALIDATION),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Effective(args) => {
            match args.load().and_then(|mut cfg| {
                if let Some(out) = &args.out {
                    cfg.outputs.report = Some(out.clone());
                }
                cmd_effective(&cfg)
            }) {
                Ok(report) => {
                    println!("{report}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Run(args) => match args.load().and_then(|cfg| cmd_run(&cfg, args.out.as_deref())) {
            Ok(outcome) => {
                if outcome.diverged.is_none() && args.out.is_none() {
                    print!("{}", outcome.csv);
                }
                println!("# {}", outcome.summary_line());
                if outcome.diverged.is_some() {
                    ExitCode::from(EXIT_DIVERGED)
                } else {
                    ExitCode::SUCCESS
                }
            }
            Err(e) => fail(&e),
        },
        Command::Compare {
            scenario,
            include_stark,
        } => {
            match scenario
                .load()
                .and_then(|cfg| cmd_compare(&cfg, include_stark, scenario.out.as_deref()))
            {
                Ok(outcome) => {
                    if scenario.out.is_none() {
                        print!("{}", outcome.csv);
                    }
                    println!("# {}", outcome.summary().replace('\n', "\n# "));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Sweep {
            scenario,
            params,
            full,
            workers,
        } => {
            let result = scenario.load().and_then(|cfg| {
                let axes = params
                    .iter()
                    .map(|s| SweepAxis::parse(s))
                    .collect::<Result<Vec<_>, _>>()?;
                cmd_sweep(&cfg, &axes, full, workers, scenario.out.as_deref())
            });
            match result {
                Ok(outcome) => {
                    if scenario.out.is_none() {
                        print!("{}", outcome.csv);
                    }
                    let failed = outcome.rows.iter().filter(|r| r.error.is_some()).count();
                    eprintln!("{} grid points, {failed} with errors", outcome.rows.len());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Validate { dt } => {
            let report = cmd_validate(dt);
            print!("{report}");
            if report.all_passed() {
                println!("all invariants passed");
                ExitCode::SUCCESS
            } else {
                println!("failed: {}", report.failures().join(", "));
                ExitCode::from(EXIT_INVARIANTS)
            }
        }
    }
}
