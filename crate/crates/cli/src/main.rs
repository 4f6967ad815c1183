//! Single-binary front end: simulate ground-truth systems, run the
//! discovery pipelines on CSV data, and emit model reports plus a
//! manifest per run so every artifact is reproducible.

mod manifest;
mod run;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit codes: 0 success, 1 general failure, 2 parse/config error,
/// 3 solver non-convergence, 4 recovered model failed the sparsity gate.
pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_NO_CONVERGENCE: u8 = 3;
pub const EXIT_NOT_SPARSE: u8 = 4;

#[derive(Parser)]
#[command(name = "sparsedyn", version, about = "Sparse recovery of dynamics and networks from time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every discovery subcommand. Values given on the
/// command line override the config file.
#[derive(Args, Debug, Clone)]
pub struct CommonOpts {
    /// JSON config; flags override its fields
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// lasso | omp | stls
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Polynomial order of the candidate library
    #[arg(long)]
    pub order: Option<u32>,
    /// Highest power of t in time-varying libraries
    #[arg(long)]
    pub time_order: Option<u32>,
    /// Output directory (created if missing)
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate ground-truth data from a JSON system spec
    Simulate {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Recover a sparse ODE right-hand side from a time-series CSV
    DiscoverOde {
        /// CSV with header t,x1..xm
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Recover a sparse map from an iterated time-series CSV
    DiscoverMap {
        #[arg(long)]
        input: PathBuf,
        /// Use sin/cos harmonics up to this order instead of monomials
        #[arg(long)]
        fourier: Option<u32>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Recover drifting coefficients over a time-augmented library
    DiscoverTv {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Reconstruct oscillator-network topology from node trajectories
    DiscoverNetwork {
        #[arg(long)]
        input: PathBuf,
        /// Number of nodes (channels must equal nodes * node-dim)
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 3)]
        node_dim: usize,
        /// Absolute edge threshold; default is 25% of the largest
        /// symmetrized pair weight
        #[arg(long)]
        edge_threshold: Option<f64>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Reconstruct a social network from game rounds and payoffs
    DiscoverGame {
        /// CSV with header round,agent,strategy,payoff
        #[arg(long)]
        input: PathBuf,
        /// pdg | sg
        #[arg(long, default_value = "pdg")]
        game: String,
        /// Temptation (pdg) or cost-to-benefit ratio (sg)
        #[arg(long, default_value_t = 1.2)]
        payoff: f64,
        #[arg(long, default_value_t = 0.1)]
        kappa: f64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Identify a 1-D PDE from a space-time field CSV via weak forms
    DiscoverPde {
        #[arg(long)]
        input: PathBuf,
        /// Treat the spatial domain as periodic
        #[arg(long, default_value_t = true)]
        periodic: bool,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Sweep one recovered coefficient and bracket the crisis value
    ScanBifurcation {
        /// Model report JSON produced by a discover command
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        row: usize,
        /// Term index; alternatively select by --term-label
        #[arg(long)]
        term: Option<usize>,
        #[arg(long)]
        term_label: Option<String>,
        /// Inclusive sweep range lo:hi:count
        #[arg(long)]
        grid: String,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Pretty-print a model report JSON as readable equations
    Report {
        #[arg(long)]
        model: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate { common } => run::simulate(&common),
        Command::DiscoverOde { input, common } => run::discover_ode(&input, &common),
        Command::DiscoverMap {
            input,
            fourier,
            common,
        } => run::discover_map(&input, fourier, &common),
        Command::DiscoverTv { input, common } => run::discover_tv(&input, &common),
        Command::DiscoverNetwork {
            input,
            nodes,
            node_dim,
            edge_threshold,
            common,
        } => run::discover_network(&input, nodes, node_dim, edge_threshold, &common),
        Command::DiscoverGame {
            input,
            game,
            payoff,
            kappa,
            common,
        } => run::discover_game(&input, &game, payoff, kappa, &common),
        Command::DiscoverPde {
            input,
            periodic,
            common,
        } => run::discover_pde(&input, periodic, &common),
        Command::ScanBifurcation {
            model,
            row,
            term,
            term_label,
            grid,
            common,
        } => run::scan_bifurcation(&model, row, term, term_label.as_deref(), &grid, &common),
        Command::Report { model } => run::report(&model),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(run::exit_code_for(&e))
        }
    }
}
