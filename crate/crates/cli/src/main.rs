use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod config;
mod manifest;
mod stages;

use config::{Overrides, RunConfig};
use stages::StageSet;

#[derive(Parser)]
#[command(
    name = "singint",
    version,
    about = "Newton polyhedra of polynomials and the singular integral kernels they control"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute the Newton polyhedron, distance, central face and exponents
    Analyze(StageArgs),
    /// Screen the compact faces for high-order zeros
    Hypotheses(StageArgs),
    /// Build the dyadic kernel and verify cancellation and pairing
    VerifyKernel(StageArgs),
    /// Run the quantitative estimate checks
    VerifyEstimates(StageArgs),
    /// Run every stage and write a checksummed manifest
    Run(StageArgs),
}

#[derive(Args)]
struct StageArgs {
    /// JSON config file; explicit flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

fn build_config(args: &StageArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&args.overrides);
    Ok(cfg)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    let (args, set) = match &cli.cmd {
        Cmd::Analyze(a) => (a, StageSet::Analyze),
        Cmd::Hypotheses(a) => (a, StageSet::Hypotheses),
        Cmd::VerifyKernel(a) => (a, StageSet::Kernel),
        Cmd::VerifyEstimates(a) => (a, StageSet::Estimates),
        Cmd::Run(a) => (a, StageSet::Run),
    };
    let code = build_config(args)
        .and_then(|cfg| stages::execute(&cfg, set))
        .unwrap_or_else(|err| {
            eprintln!("error: {err:#}");
            1
        });
    std::process::exit(code);
}
