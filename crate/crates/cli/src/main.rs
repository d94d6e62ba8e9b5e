mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Format;

#[derive(Parser)]
#[command(
    name = "qrg",
    version,
    about = "Spectral triples from quantum Riemannian geometry"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every axiom of a preset or inline bundle and classify it.
    Verify(Common),
    /// Eigenvalues of iD on the truncated spinor space.
    Spectrum(Common),
    /// Multistart search over a solver layout.
    Solve(SolveArgs),
    /// List presets and solver layouts with their parameters.
    PresetsList(ListArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Preset name (for `solve`, a layout name).
    #[arg(long)]
    pub preset: Option<String>,
    /// Parameter override `key=value`; value is real, `[re,im]` or `a+bi`.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// Torus truncation window `|m|, |n| <= N`.
    #[arg(long)]
    pub truncation: Option<i32>,
    /// Tolerance under which checks are judged.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ListArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Verify(c) => commands::verify(&c),
        Command::Spectrum(c) => commands::spectrum(&c),
        Command::Solve(s) => commands::solve(&s),
        Command::PresetsList(l) => commands::presets_list(&l),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
