use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use symtorus::commands;
use symtorus::config::RunConfig;
use symtorus::verify::{self, Suite};
use symtorus::CliError;

#[derive(Parser)]
#[command(name = "symtorus", version, about = "Rearrangements, constrained Cahn-Hilliard minimization and droplet geometry on the periodic torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Steiner-symmetrize a field along one axis or iteratively over all axes.
    Symmetrize {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Axis to symmetrize; all axes, last first, when omitted.
        #[arg(long)]
        axis: Option<usize>,
        /// Also report the Cahn-Hilliard energy at this phi.
        #[arg(long)]
        phi: Option<f64>,
    },
    /// Two-point rearrangement about eta = eta_index*h/2.
    Polarize {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        axis: usize,
        #[arg(long, allow_hyphen_values = true)]
        eta_index: i64,
        #[arg(long)]
        phi: Option<f64>,
    },
    /// Minimize the energy, audit the symmetry of the result and report its geometry.
    Minimize(MinimizeArgs),
    /// Build a counterexample field and check its claims.
    Gallery {
        /// two_bumps, layer_cake, triangle or all.
        name: String,
        #[arg(short, long, default_value = "gallery")]
        output: PathBuf,
    },
    /// Run seeded property suites.
    Verify {
        /// rearrange, energy, polarization, geometry or all.
        #[arg(default_value = "all")]
        suite: String,
        /// Directory for counterexample fields.
        #[arg(long)]
        dump: Option<PathBuf>,
        /// Swap max and min inside the rearrangement (checks that the suite notices).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Superlevel-set geometry, contours, distribution and bump tables of a 2-D field.
    Geometry {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-0.5,0,0.5")]
        levels: Vec<f64>,
    },
}

#[derive(Args)]
struct MinimizeArgs {
    /// TOML file with any of the keys below; flags take precedence.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long = "L")]
    big_l: Option<f64>,
    #[arg(long)]
    ell: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    omega_fraction: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol_g: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    perturbation: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    checkpoint_every: Option<usize>,
    #[arg(long)]
    potential: Option<String>,
    #[arg(long)]
    cutoff: Option<String>,
}

impl MinimizeArgs {
    fn flags(&self) -> RunConfig {
        RunConfig {
            dim: self.dim,
            phi: self.phi,
            xi: self.xi,
            big_l: self.big_l,
            ell: self.ell,
            omega: self.omega,
            omega_fraction: self.omega_fraction,
            n: self.n,
            seed: self.seed,
            tol_g: self.tol_g,
            max_iter: self.max_iter,
            perturbation: self.perturbation,
            output: self.output.clone(),
            checkpoint_every: self.checkpoint_every,
            potential: self.potential.clone(),
            cutoff: self.cutoff.clone(),
        }
    }
}

fn run(cli: Cli) -> Result<Value, CliError> {
    match cli.command {
        Command::Symmetrize { input, output, axis, phi } => commands::cmd_symmetrize(&input, &output, axis, phi),
        Command::Polarize { input, output, axis, eta_index, phi } => commands::cmd_polarize(&input, &output, axis, eta_index, phi),
        Command::Minimize(args) => {
            let file = match &args.config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            let cfg = file.overridden_by(&args.flags()).resolve()?;
            commands::cmd_minimize(&cfg)
        }
        Command::Gallery { name, output } => commands::cmd_gallery(&name, &output),
        Command::Verify { suite, dump, inject_fault } => {
            let suite: Suite = suite.parse()?;
            if inject_fault {
                commands::cmd_verify(suite, dump.as_deref(), &verify::faulty_polarize)
            } else {
                commands::cmd_verify(suite, dump.as_deref(), &symtorus_core::rearrange::polarize)
            }
        }
        Command::Geometry { input, output, levels } => commands::cmd_geometry(&input, &output, &levels),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summaries serialize"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("symtorus: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
