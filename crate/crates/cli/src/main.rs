use std::process::ExitCode;

use clap::Parser;
use gsqg_cli::args::{Cli, Command, RunArgs};
use gsqg_cli::config::Kind;
use gsqg_cli::run_experiment;
use gsqg_cli::snapshot::read_snapshot;
use gsqg_core::littlewood_paley::{lp_norm, sobolev_norm};
use serde_json::json;

fn run(args: &RunArgs, kind: Kind) -> u8 {
    let config = match args.resolve(kind) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    match run_experiment(&config) {
        Ok(outcome) => {
            let m = &outcome.manifest;
            if let Some(reason) = &m.failure {
                eprintln!("error: {reason}");
            }
            for (name, ok) in &m.flags {
                println!("{name}: {}", if *ok { "pass" } else { "FAIL" });
            }
            println!("status: {} ({})", m.status, outcome.output_dir.display());
            outcome.exit_code() as u8
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn inspect(path: &std::path::Path, s: f64) -> u8 {
    let (header, field) = match read_snapshot(path) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let norms = (|| -> gsqg_core::Result<_> {
        Ok((lp_norm(&field, 2.0)?, lp_norm(&field, f64::INFINITY)?, sobolev_norm(&field, s)?))
    })();
    match norms {
        Ok((l2, linf, hs)) => {
            let out = json!({
                "version": header.version,
                "n": header.n,
                "alpha": header.alpha,
                "time": header.time,
                "l2": l2,
                "linf": linf,
                "s": s,
                "hs": hs,
            });
            println!("{}", serde_json::to_string_pretty(&out).expect("plain json"));
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Simulate(a) => run(a, Kind::Simulate),
        Command::Picard(a) => run(a, Kind::Picard),
        Command::Inequality(a) => run(a, Kind::Inequality),
        Command::Besov(a) => run(a, Kind::Besov),
        Command::Inspect { snapshot, s } => inspect(snapshot, *s),
    };
    ExitCode::from(code)
}
