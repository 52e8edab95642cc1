use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fg_lab::commands::{self, Outcome};
use fg_lab::{LabError, RunConfig};

#[derive(Parser)]
#[command(name = "fg", version, about = "Degenerate diffusion with gradient source: simulations and checks")]
struct Cli {
    /// Worker threads for parallel loops (default: all cores).
    #[arg(long, global = true, env = "FG_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured initial data and write the trajectory.
    Simulate(Common),
    /// Compute the self-similar profiles and cross-validate them.
    Profile(Common),
    /// Certify, calibrate and stress the barrier catalog.
    VerifyBarriers(Common),
    /// Repeat the configured run over the `ns` grids and tabulate orders.
    ConvergenceStudy(Common),
    /// Scan initial amplitudes for gradient blowup.
    BlowupScan(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config file; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set p=4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

type Handler = fn(&RunConfig, &Path) -> Result<Outcome, LabError>;

fn run(command: &Command) -> Result<Outcome, LabError> {
    let (c, f): (&Common, Handler) = match command {
        Command::Simulate(c) => (c, commands::simulate),
        Command::Profile(c) => (c, commands::profile),
        Command::VerifyBarriers(c) => (c, commands::verify_barriers),
        Command::ConvergenceStudy(c) => (c, commands::convergence_study),
        Command::BlowupScan(c) => (c, commands::blowup_scan),
    };
    let cfg = RunConfig::load(c.config.as_deref(), &c.set)?;
    f(&cfg, &c.out)
}

fn out_dir(command: &Command) -> &Path {
    match command {
        Command::Simulate(c)
        | Command::Profile(c)
        | Command::VerifyBarriers(c)
        | Command::ConvergenceStudy(c)
        | Command::BlowupScan(c) => &c.out,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli.command).and_then(Outcome::into_result) {
        Ok(files) => {
            for f in files {
                println!("{}", out_dir(&cli.command).join(&f.name).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let report = serde_json::to_string(&e.report()).expect("report serializes");
            eprintln!("{report}");
            let dir = out_dir(&cli.command);
            if std::fs::create_dir_all(dir).is_ok() {
                let _ = std::fs::write(dir.join("error.json"), format!("{report}\n"));
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
