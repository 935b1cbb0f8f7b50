use clap::{Args, Parser, Subcommand};
use nlslab_cli::commands::{self, CliResult, Session, ShootArgs};
use nlslab_cli::config::ExperimentConfig;
use nlslab_cli::plot::PlotSpec;
use std::path::PathBuf;
use std::process::ExitCode;

/// Numerical experiments on K-bubble blow-up for the 2D cubic NLS.
#[derive(Debug, Parser)]
#[command(name = "nlslab", version)]
struct Cli {
    /// Flat `section.key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory receiving every artifact.
    #[arg(long, global = true, default_value = "nlslab-out")]
    out_dir: PathBuf,
    /// Progress messages on stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    /// Extra `section.key=value` overrides applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ground state, correction profile and scalar constants.
    Groundstate,
    /// Overlap quadrature against the asymptotic interaction law.
    Interactions,
    /// Ansatz field, its error field and heatmap tables.
    Ansatz,
    /// Reduced modulation dynamics.
    #[command(name = "reduced-ode", subcommand)]
    ReducedOde(ReducedOdeCommand),
    /// Split-step evolution with conservation monitors.
    Pde,
    /// Backward run from the final data with decomposition at every cadence point.
    Track,
    /// SVG line plot of CSV columns.
    Plot(PlotArgs),
    /// Acceptance battery with a JSON verdict.
    Acceptance(AcceptanceArgs),
}

#[derive(Debug, Subcommand)]
enum ReducedOdeCommand {
    /// Topological shooting for the surviving final data.
    Shoot {
        #[arg(long)]
        s_in: Option<f64>,
        #[arg(long)]
        s0: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        /// Trajectory CSV file name inside the output directory.
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    x: String,
    /// One or more comma-separated columns.
    #[arg(long, value_delimiter = ',', required = true)]
    y: Vec<String>,
    #[arg(long)]
    log_x: bool,
    #[arg(long)]
    log_y: bool,
    #[arg(long, default_value = "")]
    title: String,
    /// SVG file name inside the output directory.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Args)]
struct AcceptanceArgs {
    #[arg(long, default_value = "primary", value_parser = ["primary"])]
    suite: String,
    /// Restrict to these criteria, e.g. `1,2,3`.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<u8>>,
}

fn run(cli: Cli) -> CliResult<()> {
    let threads = nlslab_core::pde::init_thread_pool()?;
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply_overrides(&cli.overrides)?;
    let session = Session::new(cfg, cli.out_dir, cli.verbose)?;
    if session.verbose {
        eprintln!("nlslab: {threads} threads, config {}", session.provenance().config_hash);
    }
    match cli.command {
        Command::Groundstate => commands::groundstate(&session),
        Command::Interactions => commands::interactions(&session),
        Command::Ansatz => commands::ansatz(&session),
        Command::ReducedOde(ReducedOdeCommand::Shoot { s_in, s0, tol, out }) => {
            commands::shoot(&session, &ShootArgs { s_in, s0, tol, out })
        }
        Command::Pde => commands::pde(&session),
        Command::Track => commands::track(&session),
        Command::Plot(a) => {
            let spec = PlotSpec { x: a.x, y: a.y, log_x: a.log_x, log_y: a.log_y, title: a.title };
            commands::plot_command(&session, &a.csv, &spec, a.out.as_deref())
        }
        Command::Acceptance(a) => commands::acceptance_command(&session, a.only.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
