//! `faqkit`: one command per pipeline stage, handing off through files.
//!
//! Failures print a single JSON line `{"error": {"kind", "message"}}` on
//! stderr and exit with status 1; usage errors exit with status 2.

mod annotation;
mod args;
mod config;
mod error;
mod experiments;
mod measures;
mod output;
mod pipeline;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::{CliError, Result};
use crate::output::Ctx;

fn run(cli: Cli) -> Result<()> {
    if cli.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let ctx = Ctx {
        command: cli.command.name(),
        seed: cli.seed,
        jobs: cli.jobs,
        timestamp: !cli.no_timestamp,
    };
    match cli.command {
        Command::Ingest(a) => pipeline::ingest(&ctx, a),
        Command::Mask(a) => pipeline::mask(&ctx, a),
        Command::Index(a) => pipeline::index(&ctx, a),
        Command::Retrieve(a) => pipeline::retrieve(&ctx, a),
        Command::Serve(a) => annotation::serve(&ctx, a),
        Command::CreateBatch(a) => annotation::create_batch(&ctx, a),
        Command::Judge(a) => annotation::judge(&ctx, a),
        Command::ExportLabels(a) => annotation::export_labels(&ctx, a),
        Command::Agreement(a) => annotation::agreement(&ctx, a),
        Command::Progress(a) => annotation::progress(&ctx, a),
        Command::TrainRanker(a) => pipeline::train_ranker(&ctx, a),
        Command::Rerank(a) => pipeline::rerank(&ctx, a),
        Command::BuildDataset(a) => pipeline::build_dataset(&ctx, a),
        Command::Stats(a) => measures::stats(&ctx, a),
        Command::Readability(a) => measures::readability(&ctx, a),
        Command::Rouge(a) => measures::rouge(&ctx, a),
        Command::PrepGen(a) => experiments::prep_gen(&ctx, a),
        Command::Split(a) => experiments::split(&ctx, a),
        Command::Eval(a) => experiments::eval(&ctx, a),
        Command::Transfer(a) => experiments::transfer(&ctx, a),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_line());
    ExitCode::from(if matches!(e, CliError::Usage(_)) { 2 } else { 1 })
}

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => return fail(&e),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
