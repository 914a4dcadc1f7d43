//! Command-line surface. Flags override the matching keys of the TOML file.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};

use crate::config::{parse_table, CheckKind, ConfigError, ExperimentConfig, Kind};

#[derive(Debug, Parser)]
#[command(name = "gsqg", version, about = "Generalized SQG solver and inequality checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Direct pseudo-spectral integration.
    Simulate(RunArgs),
    /// Picard iteration of the linearized transport map.
    Picard(RunArgs),
    /// Randomized functional-inequality checks.
    Inequality(RunArgs),
    /// Littlewood-Paley block decomposition of the initial datum.
    Besov(RunArgs),
    /// Print the header and norms of a snapshot file.
    Inspect {
        snapshot: PathBuf,
        /// Sobolev index for the reported H^s norm.
        #[arg(long, default_value_t = 2.5)]
        s: f64,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML experiment file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// `perp` or `grad`.
    #[arg(long)]
    pub law: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<f64>,
    /// Positive number or `auto`.
    #[arg(long, allow_hyphen_values = true)]
    pub horizon: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub dt: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub cfl: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub output_nodes: Option<usize>,
    /// `sinx1`, `sinx1_sinx2`, `random(seed, gamma, kmax)` or `snapshot(path)`.
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub check: Option<CheckKind>,
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<f64>,
    /// Comma-separated block indices.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub j: Option<Vec<i32>>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Ensemble size.
    #[arg(long)]
    pub count: Option<usize>,
}

fn set(table: &mut Table, key: &str, value: Option<Value>) {
    if let Some(v) = value {
        table.insert(key.to_string(), v);
    }
}

impl RunArgs {
    /// Loads the config file, applies flag overrides and validates.
    pub fn resolve(&self, kind: Kind) -> Result<ExperimentConfig, ConfigError> {
        let mut table = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    ConfigError::Syntax(format!("cannot read {}: {e}", path.display()))
                })?;
                toml::from_str::<Table>(&text).map_err(|e| ConfigError::Syntax(e.to_string()))?
            }
            None => Table::new(),
        };
        let kind_name = match kind {
            Kind::Simulate => "simulate",
            Kind::Picard => "picard",
            Kind::Inequality => "inequality",
            Kind::Besov => "besov",
        };
        table.insert("kind".into(), Value::String(kind_name.into()));
        let int = |v: Option<usize>| v.map(|x| Value::Integer(x as i64));
        let float = |v: Option<f64>| v.map(Value::Float);
        set(&mut table, "n", int(self.n));
        set(&mut table, "alpha", float(self.alpha));
        set(&mut table, "law", self.law.clone().map(Value::String));
        set(&mut table, "s", float(self.s));
        set(
            &mut table,
            "horizon",
            self.horizon.as_ref().map(|h| match h.parse::<f64>() {
                Ok(x) => Value::Float(x),
                Err(_) => Value::String(h.clone()),
            }),
        );
        set(&mut table, "dt", float(self.dt));
        set(&mut table, "cfl", float(self.cfl));
        set(&mut table, "tol", float(self.tol));
        set(&mut table, "max_iter", int(self.max_iter));
        set(&mut table, "output_nodes", int(self.output_nodes));
        set(&mut table, "initial", self.initial.clone().map(Value::String));
        set(&mut table, "seed", self.seed.map(|x| Value::Integer(x as i64)));
        set(
            &mut table,
            "output_dir",
            self.output_dir.as_ref().map(|p| Value::String(p.display().to_string())),
        );
        set(
            &mut table,
            "check",
            self.check.map(|c| Value::String(format!("{c:?}").to_lowercase())),
        );
        set(&mut table, "p", float(self.p));
        set(&mut table, "q", float(self.q));
        set(
            &mut table,
            "j",
            self.j.as_ref().map(|j| Value::Array(j.iter().map(|&x| Value::Integer(x.into())).collect())),
        );
        set(&mut table, "delta", float(self.delta));
        if let Some(count) = self.count {
            let entry = table
                .entry("ensemble")
                .or_insert_with(|| Value::Table(Table::new()));
            match entry {
                Value::Table(t) => {
                    t.insert("count".into(), Value::Integer(count as i64));
                }
                _ => return Err(ConfigError::Syntax("`ensemble` must be a table".into())),
            }
        }
        parse_table(table)
    }
}
