//! `pinlab` — reproducible experiments on the disordered pinning polymer.
//!
//! Every subcommand resolves its configuration from defaults, an optional
//! flat key=value config file, and CLI flag overrides (in that order),
//! embeds the resolved configuration in the report header, and writes CSV
//! and JSON reports (plus optional SVG plots) under the output directory.
//! Exit codes: 0 success, 2 validation failure, 3 budget exhaustion.

mod commands;
mod config;
mod svg;

use clap::Parser;

fn main() {
    let cli = commands::Cli::parse();
    match commands::run(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}
