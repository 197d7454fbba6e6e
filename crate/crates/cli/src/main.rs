use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use wzrd_cli::commands::{cmd_bounds, cmd_fig4, cmd_sim, cmd_wz};
use wzrd_cli::spec::default_sim_section;
use wzrd_cli::{load_spec, CliError, ProblemSpec};

#[derive(Parser)]
#[command(name = "wzrd", version, about = "Universal Wyner-Ziv rate-distortion bounds and coding simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximum- and average-class bounds over the distortion grid (CSV).
    Bounds(Common),
    /// Wyner-Ziv rate, two-decoder bound and robust rate for the binary example (CSV).
    Fig4(Common),
    /// Coding simulation against the adversary list (JSON).
    Sim(Common),
    /// Wyner-Ziv rate of every named channel over the distortion grid (CSV).
    Wz(Common),
}

#[derive(Args)]
#[command(group(ArgGroup::new("input").required(true).args(["spec", "binary_example"])))]
struct Common {
    /// Problem file (TOML).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Uniform binary source with Hamming distortions at side-distortion budget E.
    #[arg(long, value_name = "E")]
    binary_example: Option<f64>,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the solver and simulation seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the solver tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
}

impl Common {
    fn effective_spec(&self) -> Result<ProblemSpec, CliError> {
        let mut spec = match (&self.spec, self.binary_example) {
            (Some(path), _) => load_spec(path)?,
            (None, Some(e)) => ProblemSpec::binary(e),
            (None, None) => return Err(CliError::Usage("give --spec or --binary-example".into())),
        };
        if let Some(t) = self.tolerance {
            spec.solver.tolerance = t;
        }
        if let Some(s) = self.seed {
            spec.solver.rng_seed = s;
            if let Some(sim) = spec.sim.as_mut() {
                sim.seed = s;
            }
        }
        Ok(spec)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Bounds(c) => cmd_bounds(&c.effective_spec()?.resolve()?, &c.out),
        Command::Wz(c) => cmd_wz(&c.effective_spec()?.resolve()?, &c.out),
        Command::Fig4(c) => {
            let spec = c.effective_spec()?;
            let r = spec.resolve()?;
            let e = r
                .binary_example
                .ok_or_else(|| CliError::Usage("fig4 needs --binary-example or binary_example in the file".into()))?;
            cmd_fig4(e, &r.levels, &r.settings, &c.out)
        }
        Command::Sim(c) => {
            let mut spec = c.effective_spec()?;
            // Write the binary defaults out so the echoed file is complete.
            if spec.sim.is_none() && spec.binary_example.is_some() {
                let mut sim = default_sim_section();
                if let Some(s) = c.seed {
                    sim.seed = s;
                }
                spec.sim = Some(sim);
            }
            let r = spec.resolve()?;
            cmd_sim(&spec, &r, &c.out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
