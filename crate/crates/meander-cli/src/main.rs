// Copyright 2026 The meander authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Batch entry point: configuration parsing, subcommand dispatch,
//! deterministic seeding, CSV and report emission.

mod commands;
mod config;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "meander", about = "Boundary-driven particle systems: solve, simulate, verify")]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long, global = true)]
    config: Option<String>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = all cores). Results are identical for any value.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<String>,

    /// Dotted-path config overrides, e.g. --set domain.scale=24.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel-series and finite-difference density fields to CSV.
    Solve,
    /// Poisson boundary injection plus particle evolution to empirical counts.
    Simulate,
    /// Run a verification battery: h1|h2|h3|duality|le|theorem1|billiard-invariants.
    Verify { target: String },
    /// Estimate the billiard diffusion matrix with standard errors.
    EstimateSigma,
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match run(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(msg) => {
            eprintln!("error: {msg}");
            2
        }
    });
}

fn run(cli: Cli) -> Result<bool, String> {
    let path = cli
        .config
        .ok_or_else(|| "missing --config PATH".to_string())?;
    let text = std::fs::read_to_string(&path).map_err(|e| format!("read {path}: {e}"))?;
    let overrides: Vec<(String, String)> = cli
        .set
        .iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| format!("bad --set {kv}; expected key=value"))
        })
        .collect::<Result<_, String>>()?;
    let (config, hash) = config::RunConfig::load(&text, &overrides, cli.seed)?;
    let workers = if cli.workers > 0 {
        cli.workers
    } else {
        config.run.workers
    };
    if workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| format!("thread pool: {e}"))?;
    }
    let ctx = commands::Ctx::new(config, hash, cli.out)?;
    match cli.command {
        Command::Solve => commands::solve(&ctx),
        Command::Simulate => commands::simulate(&ctx),
        Command::Verify { target } => commands::verify_cmd(&ctx, &target),
        Command::EstimateSigma => commands::estimate_sigma(&ctx),
    }
}
