//! Experiment configuration: TOML documents with command-line overrides.
//!
//! Every parameter constraint is checked here, so a config that parses is
//! runnable as far as its hypotheses go.

use std::path::PathBuf;

use clap::ValueEnum;
use gsqg_core::inequality::EnsembleSpec;
use gsqg_core::littlewood_paley::build_partition;
use gsqg_core::spectral::{AlphaParam, GridSpec, VelocityLaw};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::presets::InitialData;

pub const OUTPUT_DIR_ENV: &str = "GSQG_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "gsqg-output";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Simulate,
    Picard,
    Inequality,
    Besov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Hls,
    Cz,
    Bernstein,
    Embedding,
    Gradvel,
    L2,
    Gronwall,
}

impl CheckKind {
    fn needs_initial(self) -> bool {
        matches!(self, Self::L2 | Self::Gronwall)
    }

    fn needs_alpha(self) -> bool {
        matches!(self, Self::Hls | Self::Gradvel | Self::L2 | Self::Gronwall)
    }

    /// Checks whose `s` is the regularity index of the existence theory.
    fn uses_theorem_s(self) -> bool {
        matches!(self, Self::Gradvel | Self::L2 | Self::Gronwall)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Horizon {
    Fixed(f64),
    #[serde(serialize_with = "auto_string")]
    Auto,
}

fn auto_string<S: serde::Serializer>(s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str("auto")
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawHorizon {
    Number(f64),
    Word(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnsemble {
    count: Option<usize>,
    seed: Option<u64>,
    gamma: Option<f64>,
    k_min: Option<f64>,
    k_max: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: Kind,
    n: Option<usize>,
    alpha: Option<f64>,
    law: Option<VelocityLaw>,
    s: Option<f64>,
    horizon: Option<RawHorizon>,
    dt: Option<f64>,
    cfl: Option<f64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    output_nodes: Option<usize>,
    initial: Option<String>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    check: Option<CheckKind>,
    p: Option<f64>,
    q: Option<f64>,
    j: Option<Vec<i32>>,
    delta: Option<f64>,
    ensemble: Option<RawEnsemble>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleConfig {
    pub count: usize,
    pub seed: u64,
    pub gamma: f64,
    pub k_min: f64,
    pub k_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub n: usize,
    pub alpha: AlphaParam,
    pub law: VelocityLaw,
    pub s: f64,
    pub horizon: Horizon,
    /// Requested step; `None` derives it from `cfl` and the initial velocity.
    pub dt: Option<f64>,
    pub cfl: f64,
    /// Picard tolerance; `None` means `1e-10 * M`.
    pub tol: Option<f64>,
    pub max_iter: usize,
    pub output_nodes: usize,
    pub initial: Option<InitialData>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub check: Option<CheckKind>,
    pub p: f64,
    pub q: f64,
    pub j: Vec<i32>,
    pub delta: f64,
    pub ensemble: EnsembleConfig,
}

impl ExperimentConfig {
    pub fn grid(&self) -> GridSpec {
        GridSpec::new(self.n).expect("validated at parse time")
    }

    pub fn ensemble_spec(&self) -> EnsembleSpec {
        let e = self.ensemble;
        EnsembleSpec::new(self.grid(), e.count, e.seed, e.gamma, e.k_min, e.k_max)
            .expect("validated at parse time")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("invalid config field `{field}`: {message}")]
    Field { field: &'static str, message: String },
}

fn field(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field, message: message.into() }
}

fn missing(name: &'static str, kind: Kind) -> ConfigError {
    field(name, format!("missing (required for {} runs)", format!("{kind:?}").to_lowercase()))
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    parse_table(table)
}

pub fn parse_table(table: toml::Table) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    validate(raw)
}

fn validate(raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let kind = raw.kind;
    let check = raw.check;
    if kind == Kind::Inequality && check.is_none() {
        return Err(field("check", "missing (required for inequality runs)"));
    }
    if kind != Kind::Inequality && check.is_some() {
        return Err(field("check", "only meaningful for inequality runs"));
    }

    let n = raw.n.unwrap_or(128);
    let grid = GridSpec::new(n).map_err(|e| field("n", e.to_string()))?;

    let theorem_run = matches!(kind, Kind::Simulate | Kind::Picard);
    let alpha_needed = theorem_run || check.is_some_and(CheckKind::needs_alpha);
    let alpha = match raw.alpha {
        Some(a) => AlphaParam::new(a).map_err(|e| field("alpha", e.to_string()))?,
        None if alpha_needed => return Err(missing("alpha", kind)),
        None => AlphaParam::sqg(),
    };
    if check == Some(CheckKind::Hls) && alpha.is_sqg() {
        return Err(field("alpha", "the hls check needs alpha < 1/2"));
    }

    let s = match raw.s {
        Some(s) if s.is_finite() => s,
        Some(s) => return Err(field("s", format!("must be finite, got {s}"))),
        None if theorem_run || kind == Kind::Besov => return Err(missing("s", kind)),
        None => 2.5,
    };
    let hypothesis = theorem_run || check.is_some_and(CheckKind::uses_theorem_s);
    if hypothesis && s <= 1.0 + 2.0 * alpha.value() {
        return Err(field(
            "s",
            format!("s = {s} violates s > 1 + 2 alpha = {}", 1.0 + 2.0 * alpha.value()),
        ));
    }

    let horizon = match raw.horizon {
        None => Horizon::Auto,
        Some(RawHorizon::Word(w)) if w.eq_ignore_ascii_case("auto") => Horizon::Auto,
        Some(RawHorizon::Word(w)) => return Err(field("horizon", format!("expected a number or \"auto\", got {w:?}"))),
        Some(RawHorizon::Number(t)) if t > 0.0 && t.is_finite() => Horizon::Fixed(t),
        Some(RawHorizon::Number(t)) => return Err(field("horizon", format!("must be positive, got {t}"))),
    };
    if let Some(dt) = raw.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(field("dt", format!("must be positive, got {dt}")));
        }
    }
    let cfl = raw.cfl.unwrap_or(0.25);
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(field("cfl", format!("must lie in (0, 1], got {cfl}")));
    }
    if let Some(tol) = raw.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(field("tol", format!("must be positive, got {tol}")));
        }
    }
    let max_iter = raw.max_iter.unwrap_or(50);
    if max_iter == 0 {
        return Err(field("max_iter", "must be at least 1"));
    }
    let output_nodes = raw.output_nodes.unwrap_or(32);
    if output_nodes == 0 {
        return Err(field("output_nodes", "must be at least 1"));
    }

    let initial_needed = theorem_run || kind == Kind::Besov || check.is_some_and(CheckKind::needs_initial);
    let initial = match raw.initial {
        Some(text) => {
            let data: InitialData = text.parse().map_err(|e: String| field("initial", e))?;
            if !matches!(data, InitialData::Snapshot(_)) {
                data.field(grid).map_err(|e| field("initial", e))?;
            }
            Some(data)
        }
        None if initial_needed => return Err(missing("initial", kind)),
        None => None,
    };

    let p = raw.p.unwrap_or(2.0);
    let q = raw.q.unwrap_or(2.0);
    if !(p >= 1.0) {
        return Err(field("p", format!("must be >= 1, got {p}")));
    }
    if check == Some(CheckKind::Cz) && !(p > 1.0 && p.is_finite()) {
        return Err(field("p", format!("the Riesz bound needs 1 < p < infinity, got {p}")));
    }
    if !(q >= 1.0) {
        return Err(field("q", format!("must be >= 1, got {q}")));
    }
    let j_max = build_partition(grid).j_max();
    let j = raw.j.unwrap_or_else(|| (2..=5).filter(|&b| b <= j_max).collect());
    if j.is_empty() || j.iter().any(|&b| b < 0 || b > j_max) {
        return Err(field("j", format!("blocks must be a non-empty list within [0, {j_max}], got {j:?}")));
    }
    let delta = raw.delta.unwrap_or(1e-3);
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(field("delta", format!("must be finite and >= 0, got {delta}")));
    }

    let seed = raw.seed.unwrap_or(0);
    let re = raw.ensemble.unwrap_or_default();
    let ensemble = EnsembleConfig {
        count: re.count.unwrap_or(200),
        seed: re.seed.unwrap_or(seed),
        gamma: re.gamma.unwrap_or(2.5),
        k_min: re.k_min.unwrap_or(1.0),
        k_max: re.k_max.unwrap_or(n as f64 / 3.0),
    };
    EnsembleSpec::new(grid, ensemble.count, ensemble.seed, ensemble.gamma, ensemble.k_min, ensemble.k_max)
        .map_err(|e| field("ensemble", e.to_string()))?;

    let output_dir = raw.output_dir.unwrap_or_else(|| {
        std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    });

    Ok(ExperimentConfig {
        kind,
        n,
        alpha,
        law: raw.law.unwrap_or(VelocityLaw::Perp),
        s,
        horizon,
        dt: raw.dt,
        cfl,
        tol: raw.tol,
        max_iter,
        output_nodes,
        initial,
        seed,
        output_dir,
        check,
        p,
        q,
        j,
        delta,
        ensemble,
    })
}
