//! Experiment orchestration and artifact layout.
//!
//! A run directory holds `manifest.json` and, depending on the kind,
//! `diagnostics.csv`, `iterations.csv`, `ratios.csv`, `summary.csv`,
//! `distances.csv`, `blocks.csv` and `snapshots/theta_NNNN.bin`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use gsqg_core::inequality::{
    check_bernstein, check_cz, check_embedding, check_gradvel_bound, check_hls,
    check_l2_conservation, check_uniqueness_gronwall, sobolev_chain, CheckReport, PRNG_NAME,
};
use gsqg_core::littlewood_paley::{
    besov_norm, block_lp_norms, build_partition, lp_norm, sobolev_norm, BesovParams,
};
use gsqg_core::picard::{contraction_factor, BallSpec, PicardSolver};
use gsqg_core::spectral::{compute_velocity, RealField};
use gsqg_core::transport::{stable_dt, Trajectory};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{CheckKind, ExperimentConfig, Horizon, Kind};
use crate::diagnostics::{emit_diagnostics, Cell, DiagnosticsError, Table};
use crate::snapshot::{write_snapshot, SnapshotError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot create output directory {path}: {source}")]
    OutputDir { path: String, source: std::io::Error },
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("cannot write manifest: {0}")]
    Manifest(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub versions: BTreeMap<String, String>,
    pub seed: u64,
    pub prng: String,
    /// `"pass"`, `"fail"` or `"error"`.
    pub status: String,
    pub failure: Option<String>,
    pub flags: BTreeMap<String, bool>,
    pub results: BTreeMap<String, Value>,
    pub files: Vec<String>,
}

impl Manifest {
    fn new(config: &ExperimentConfig) -> Self {
        let versions = [
            ("gsqg-core".to_string(), gsqg_core::VERSION.to_string()),
            ("gsqg-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ]
        .into();
        Self {
            config: config.clone(),
            versions,
            seed: config.seed,
            prng: PRNG_NAME.to_string(),
            status: String::new(),
            failure: None,
            flags: BTreeMap::new(),
            results: BTreeMap::new(),
            files: Vec::new(),
        }
    }

    pub fn pass(&self) -> bool {
        self.status == "pass"
    }

    fn result(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(key.to_string(), json!(value));
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub output_dir: PathBuf,
}

impl RunOutcome {
    /// 0 when every flag passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.manifest.pass() {
            0
        } else {
            1
        }
    }
}

/// Failure inside a run: numerical errors are recorded in the manifest,
/// output errors abort.
enum Failure {
    Numerical(String),
    Output(RunError),
}

impl From<gsqg_core::Error> for Failure {
    fn from(e: gsqg_core::Error) -> Self {
        Self::Numerical(e.to_string())
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        Self::Output(e)
    }
}

impl From<DiagnosticsError> for Failure {
    fn from(e: DiagnosticsError) -> Self {
        Self::Output(e.into())
    }
}

impl From<SnapshotError> for Failure {
    fn from(e: SnapshotError) -> Self {
        Self::Output(e.into())
    }
}

struct Run<'a> {
    config: &'a ExperimentConfig,
    dir: &'a Path,
    manifest: Manifest,
}

impl Run<'_> {
    fn csv(&mut self, name: &str, table: &Table) -> Result<(), Failure> {
        emit_diagnostics(table, self.dir.join(name))?;
        self.manifest.files.push(name.to_string());
        Ok(())
    }

    fn flag(&mut self, name: &str, value: bool) {
        self.manifest.flags.insert(name.to_string(), value);
    }

    fn initial(&self) -> Result<RealField, Failure> {
        let data = self.config.initial.as_ref().expect("validated at parse time");
        data.field(self.config.grid()).map_err(Failure::Numerical)
    }

    fn solver(&self) -> PicardSolver {
        PicardSolver {
            cfl: self.config.cfl,
            output_nodes: self.config.output_nodes,
            ..PicardSolver::default()
        }
    }

    fn dt(&self, theta0: &RealField) -> Result<f64, Failure> {
        match self.config.dt {
            Some(dt) => Ok(dt),
            None => {
                let u = compute_velocity(theta0, self.config.alpha, self.config.law)?;
                Ok(stable_dt(&u, theta0.grid(), self.config.cfl))
            }
        }
    }

    fn ball(&self, theta0: &RealField, dt: f64) -> Result<BallSpec, Failure> {
        let c = self.config;
        Ok(match c.horizon {
            Horizon::Auto => self.solver().select_horizon(theta0, c.alpha, c.law, c.s, dt)?,
            Horizon::Fixed(t) => BallSpec::around(theta0, c.s, t, c.alpha)?,
        })
    }

    fn trajectory_outputs(&mut self, traj: &Trajectory) -> Result<(), Failure> {
        let c = self.config;
        let nodes = traj.node_indices(c.output_nodes)?;
        let mut table = Table::new(&["time", "l2", "linf", "hs"]);
        let snaps = self.dir.join("snapshots");
        fs::create_dir_all(&snaps).map_err(|source| RunError::OutputDir {
            path: snaps.display().to_string(),
            source,
        })?;
        for (i, &k) in nodes.iter().enumerate() {
            let f = &traj.fields()[k];
            let t = traj.time(k);
            table.push(vec![
                t.into(),
                lp_norm(f, 2.0)?.into(),
                lp_norm(f, f64::INFINITY)?.into(),
                sobolev_norm(f, c.s)?.into(),
            ]);
            let name = format!("snapshots/theta_{i:04}.bin");
            write_snapshot(f, c.alpha, t, self.dir.join(&name))?;
            self.manifest.files.push(name);
        }
        self.csv("diagnostics.csv", &table)?;
        let drift = check_l2_conservation(traj, c.law)?;
        self.manifest.result("l2_drift", drift.sup_ratio);
        if drift.bound.is_some() {
            self.flag("l2_conservation", drift.pass);
        }
        Ok(())
    }

    fn simulate(&mut self) -> Result<(), Failure> {
        let c = self.config;
        let theta0 = self.initial()?;
        let dt = self.dt(&theta0)?;
        let horizon = match c.horizon {
            Horizon::Fixed(t) => t,
            Horizon::Auto => self.ball(&theta0, dt)?.horizon,
        };
        let traj = self.solver().direct_solve(&theta0, c.alpha, c.law, horizon, dt)?;
        self.manifest.result("horizon", horizon);
        self.manifest.result("dt_requested", dt);
        self.manifest.result("dt_used", traj.dt());
        self.manifest.result("steps", traj.steps());
        self.trajectory_outputs(&traj)
    }

    fn picard(&mut self) -> Result<(), Failure> {
        let c = self.config;
        let theta0 = self.initial()?;
        let dt = self.dt(&theta0)?;
        let ball = self.ball(&theta0, dt)?;
        let tol = c.tol.unwrap_or_else(|| ball.default_tolerance());
        let solver = self.solver();
        self.manifest.result("horizon", ball.horizon);
        self.manifest.result("radius", ball.radius);
        self.manifest.result("tol", tol);
        self.manifest.result("dt_requested", dt);
        let (traj, report) = solver.iterate(&theta0, c.alpha, c.law, &ball, tol, c.max_iter, dt)?;

        let mut table = Table::new(&["iterate", "d_k", "kappa_k"]);
        for (k, d) in report.iterate_distances.iter().enumerate() {
            let kappa = report.kappa_estimates.get(k).copied().flatten();
            table.push(vec![k.into(), (*d).into(), kappa.into()]);
        }
        self.csv("iterations.csv", &table)?;

        let direct = solver.direct_solve(&theta0, c.alpha, c.law, ball.horizon, dt)?;
        let gap = direct.sup_l2_distance(&traj, c.output_nodes)?;
        self.manifest.result("iterations", report.iterations);
        self.manifest.result("kappa", contraction_factor(&report));
        self.manifest.result("iterate_distances", &report.iterate_distances);
        self.manifest.result("iterate_sup_norms", &report.iterate_sup_norms);
        self.manifest.result("direct_gap", gap);
        self.manifest.result("dt_used", traj.dt());
        self.flag("converged", report.converged);
        self.flag("ball_preserved", report.iterate_sup_norms.iter().all(|&m| m <= ball.radius));
        self.flag("direct_agreement", gap <= 10.0 * tol);
        self.trajectory_outputs(&traj)
    }

    fn reports(&mut self, reports: &[CheckReport]) -> Result<(), Failure> {
        let mut ratios = Table::new(&["report", "sample", "ratio"]);
        let mut summary = Table::new(&["report", "sup", "inf", "bound", "pass"]);
        let mut names = Vec::new();
        for (i, r) in reports.iter().enumerate() {
            let name = if reports.len() > 1 { format!("{}_{i}", r.name) } else { r.name.clone() };
            for (k, v) in r.ratios.iter().enumerate() {
                ratios.push(vec![Cell::Text(name.clone()), k.into(), (*v).into()]);
            }
            summary.push(vec![
                Cell::Text(name.clone()),
                r.sup_ratio.into(),
                r.inf_ratio.into(),
                r.bound.into(),
                Cell::Text(r.pass.to_string()),
            ]);
            self.flag(&name, r.pass);
            names.push(name);
        }
        self.csv("ratios.csv", &ratios)?;
        self.csv("summary.csv", &summary)?;
        let detail: BTreeMap<String, &CheckReport> = names.into_iter().zip(reports).collect();
        self.manifest.result("reports", detail);
        Ok(())
    }

    fn inequality(&mut self) -> Result<(), Failure> {
        let c = self.config;
        let check = c.check.expect("validated at parse time");
        let e = c.ensemble_spec();
        match check {
            CheckKind::Hls => self.reports(&[check_hls(&e, c.alpha)?]),
            CheckKind::Cz => self.reports(&[check_cz(&e, c.p)?]),
            CheckKind::Gradvel => self.reports(&[check_gradvel_bound(&e, c.alpha, c.s)?]),
            CheckKind::Embedding => self.reports(&check_embedding(&e, &sobolev_chain(c.s)?)?),
            CheckKind::Bernstein => {
                let b = check_bernstein(&e, &c.j, &[(c.p, f64::INFINITY)])?;
                self.manifest.result("per_block", &b.per_block);
                self.manifest.result("skipped", &b.skipped);
                self.reports(&[b.ring, b.ball])
            }
            CheckKind::L2 => {
                let theta0 = self.initial()?;
                let dt = self.dt(&theta0)?;
                let ball = self.ball(&theta0, dt)?;
                let traj = self.solver().direct_solve(&theta0, c.alpha, c.law, ball.horizon, dt)?;
                self.manifest.result("horizon", ball.horizon);
                self.reports(&[check_l2_conservation(&traj, c.law)?])
            }
            CheckKind::Gronwall => {
                let theta0 = self.initial()?;
                let dt = self.dt(&theta0)?;
                let ball = self.ball(&theta0, dt)?;
                let delta = RealField::from_fn(c.grid(), |_, y| c.delta * y.sin())?;
                let r = check_uniqueness_gronwall(&self.solver(), &theta0, &delta, c.alpha, c.law, &ball, dt)?;
                let mut table = Table::new(&["time", "distance", "accumulated_norm"]);
                for ((t, d), i) in r.times.iter().zip(&r.distances).zip(&r.integrals) {
                    table.push(vec![(*t).into(), (*d).into(), (*i).into()]);
                }
                self.csv("distances.csv", &table)?;
                self.manifest.result("rate", r.rate);
                self.manifest.result("horizon", ball.horizon);
                self.reports(&[r.check])
            }
        }
    }

    fn besov(&mut self) -> Result<(), Failure> {
        let c = self.config;
        let f = self.initial()?;
        let params = BesovParams::new(c.s, c.p, c.q)?;
        let partition = build_partition(c.grid());
        let norms = block_lp_norms(&f, c.p, &partition)?;
        let mut table = Table::new(&["j", "block_lp_norm", "weighted"]);
        for (j, v) in partition.indices().zip(&norms) {
            table.push(vec![j.into(), (*v).into(), (2f64.powf(j as f64 * c.s) * v).into()]);
        }
        self.csv("blocks.csv", &table)?;
        let besov = besov_norm(&f, params, &partition)?;
        let sobolev = sobolev_norm(&f, c.s)?;
        self.manifest.result("besov_norm", besov);
        self.manifest.result("sobolev_norm", sobolev);
        self.manifest.result("params", params);
        self.flag("finite", besov.is_finite() && sobolev.is_finite());
        Ok(())
    }
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<(), RunError> {
    let text = serde_json::to_string_pretty(manifest).map_err(|e| RunError::Manifest(e.to_string()))?;
    fs::write(dir.join("manifest.json"), text + "\n").map_err(|e| RunError::Manifest(e.to_string()))
}

/// Runs one experiment into `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let dir = config.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|source| RunError::OutputDir {
        path: dir.display().to_string(),
        source,
    })?;
    let mut run = Run { config, dir: &dir, manifest: Manifest::new(config) };
    let result = match config.kind {
        Kind::Simulate => run.simulate(),
        Kind::Picard => run.picard(),
        Kind::Inequality => run.inequality(),
        Kind::Besov => run.besov(),
    };
    let mut manifest = run.manifest;
    match result {
        Ok(()) => {
            let all = !manifest.flags.is_empty() && manifest.flags.values().all(|&b| b);
            manifest.status = if all { "pass" } else { "fail" }.to_string();
        }
        Err(Failure::Numerical(reason)) => {
            manifest.status = "error".to_string();
            manifest.failure = Some(reason);
        }
        Err(Failure::Output(e)) => return Err(e),
    }
    manifest.files.push("manifest.json".to_string());
    write_manifest(&dir, &manifest)?;
    Ok(RunOutcome { manifest, output_dir: dir })
}
