//! Contraction-mapping construction of local solutions.
//!
//! Given a trajectory `theta` in the ball `B_T = {sup_t ||theta(t)||_{H^s} <= M}`,
//! the map `T(theta)` solves the *linear* transport problem
//! `w_t + u(theta) . grad w = 0`, `w(0) = theta0`, where the velocity is frozen
//! from `theta`. Iterating `theta^(k+1) = T(theta^(k))` from the constant
//! trajectory `theta^(0) = theta0` converges, for small enough `T`, to the
//! solution of the nonlinear equation. Distances are measured in the discrete
//! `C([0,T]; L^2)` norm over a fixed set of output nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::littlewood_paley::sobolev_norm;
use crate::spectral::{compute_velocity, AlphaParam, RealField, VelocityLaw};
use crate::transport::{
    FrozenVelocity, ForcingTerm, Interpolation, Trajectory, TransportSolver,
};

/// Distances at or below this value do not define a contraction ratio.
pub const DISTANCE_FLOOR: f64 = 1e-14;

/// Default convergence tolerance relative to the ball radius.
pub const RELATIVE_TOLERANCE: f64 = 1e-10;

pub const DEFAULT_MAX_ITER: usize = 50;

/// `B_T`: trajectories on `[0, horizon]` with `sup_t ||theta(t)||_{H^s} <= radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub radius: f64,
    pub s: f64,
    pub horizon: f64,
}

impl BallSpec {
    pub fn new(radius: f64, s: f64, horizon: f64, alpha: AlphaParam) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("ball radius must be positive, got {radius}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        check_regularity(s, alpha)?;
        Ok(Self { radius, s, horizon })
    }

    /// Ball of radius `2 ||theta0||_{H^s}`.
    pub fn around(theta0: &RealField, s: f64, horizon: f64, alpha: AlphaParam) -> Result<Self> {
        Self::new(2.0 * sobolev_norm(theta0, s)?, s, horizon, alpha)
    }

    pub fn default_tolerance(&self) -> f64 {
        RELATIVE_TOLERANCE * self.radius
    }

    pub fn with_horizon(self, horizon: f64) -> Self {
        Self { horizon, ..self }
    }
}

pub fn check_regularity(s: f64, alpha: AlphaParam) -> Result<()> {
    if s > 1.0 + 2.0 * alpha.value() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "regularity s = {s} must exceed 1 + 2 alpha = {}",
            1.0 + 2.0 * alpha.value()
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub inside: bool,
    /// `radius - sup_t ||theta(t)||_{H^s}`.
    pub margin: f64,
    pub sup_norm: f64,
}

pub fn ball_membership(traj: &Trajectory, ball: &BallSpec) -> Result<Membership> {
    let sup_norm = sup_sobolev(traj, ball.s)?;
    Ok(Membership {
        inside: sup_norm <= ball.radius,
        margin: ball.radius - sup_norm,
        sup_norm,
    })
}

fn sup_sobolev(traj: &Trajectory, s: f64) -> Result<f64> {
    traj.fields()
        .iter()
        .try_fold(0.0f64, |acc, f| Ok(acc.max(sobolev_norm(f, s)?)))
}

/// Outcome of a Picard run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    /// `d_k = sup_t ||theta^(k+1)(t) - theta^(k)(t)||_{L^2}`.
    pub iterate_distances: Vec<f64>,
    /// `d_{k+1} / d_k` where `d_k > DISTANCE_FLOOR`.
    pub kappa_estimates: Vec<Option<f64>>,
    /// `sup_t ||theta^(k+1)(t)||_{H^s}` for every computed iterate.
    pub iterate_sup_norms: Vec<f64>,
    pub horizon: f64,
    pub radius: f64,
    pub tol: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn kappa_estimates(distances: &[f64]) -> Vec<Option<f64>> {
    distances
        .windows(2)
        .map(|w| (w[0] > DISTANCE_FLOOR).then(|| w[1] / w[0]))
        .collect()
}

/// Geometric mean of the usable ratios `d_{k+1} / d_k`.
pub fn contraction_factor_of(distances: &[f64]) -> Option<f64> {
    let ratios: Vec<f64> = kappa_estimates(distances).into_iter().flatten().collect();
    if ratios.is_empty() {
        return None;
    }
    if ratios.contains(&0.0) {
        return Some(0.0);
    }
    let mean_log = ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64;
    Some(mean_log.exp())
}

pub fn contraction_factor(report: &ContractionReport) -> Option<f64> {
    contraction_factor_of(&report.iterate_distances)
}

/// Numerical parameters shared by every solve of the fixed-point engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardSolver {
    pub cfl: f64,
    pub max_halvings: u32,
    /// Number of output intervals at which distances are measured.
    pub output_nodes: usize,
    pub interpolation: Interpolation,
    pub max_horizon_halvings: u32,
    pub probe_iterates: usize,
}

impl Default for PicardSolver {
    fn default() -> Self {
        Self {
            cfl: 0.25,
            max_halvings: 6,
            output_nodes: 32,
            interpolation: Interpolation::Cubic,
            max_horizon_halvings: 12,
            probe_iterates: 3,
        }
    }
}

impl PicardSolver {
    pub fn transport(&self) -> TransportSolver {
        TransportSolver {
            cfl: self.cfl,
            max_halvings: self.max_halvings,
            step_multiple: self.output_nodes,
        }
    }

    /// `T(theta)`: transport `theta0` by the velocity frozen from `theta_traj`.
    pub fn apply_map(
        &self,
        theta_traj: &Trajectory,
        theta0: &RealField,
        alpha: AlphaParam,
        law: VelocityLaw,
        dt: f64,
    ) -> Result<Trajectory> {
        let start = theta_traj.initial().sub(theta0)?.max_abs();
        if start > 1e-12 * theta0.max_abs().max(f64::MIN_POSITIVE) {
            return Err(Error::TrajectoryMismatch(format!(
                "trajectory does not start at theta0 (max deviation {start:e})"
            )));
        }
        let provider = FrozenVelocity::new(theta_traj, alpha, law, self.interpolation)?;
        self.transport()
            .solve(theta0, &provider, &ForcingTerm::Zero, theta_traj.horizon(), dt)
    }

    /// The constant-in-time initial iterate on the step grid used for `dt`.
    pub fn initial_iterate(&self, theta0: &RealField, horizon: f64, dt: f64) -> Result<Trajectory> {
        Trajectory::constant(theta0, horizon, self.transport().step_count(horizon, dt))
    }

    /// Iterates `T` from the constant trajectory until `d_k <= tol`.
    #[allow(clippy::too_many_arguments)]
    pub fn iterate(
        &self,
        theta0: &RealField,
        alpha: AlphaParam,
        law: VelocityLaw,
        ball: &BallSpec,
        tol: f64,
        max_iter: usize,
        dt: f64,
    ) -> Result<(Trajectory, ContractionReport)> {
        check_regularity(ball.s, alpha)?;
        let mut current = self.initial_iterate(theta0, ball.horizon, dt)?;
        let mut distances = Vec::new();
        let mut sup_norms = Vec::new();
        let mut converged = false;
        for _ in 0..max_iter.max(1) {
            let next = self.apply_map(&current, theta0, alpha, law, dt)?;
            let d = next.sup_l2_distance(&current, self.output_nodes)?;
            distances.push(d);
            sup_norms.push(sup_sobolev(&next, ball.s)?);
            current = next;
            if d <= tol {
                converged = true;
                break;
            }
        }
        let report = ContractionReport {
            kappa_estimates: kappa_estimates(&distances),
            iterations: distances.len(),
            iterate_distances: distances,
            iterate_sup_norms: sup_norms,
            horizon: ball.horizon,
            radius: ball.radius,
            tol,
            converged,
        };
        if !converged {
            let kappa = contraction_factor(&report).unwrap_or(f64::INFINITY);
            if kappa >= 1.0 {
                return Err(Error::HorizonTooLarge {
                    kappa,
                    iterations: report.iterations,
                });
            }
        }
        Ok((current, report))
    }

    /// Contraction factor and ball membership of a short probe run at `horizon`.
    pub fn probe(
        &self,
        theta0: &RealField,
        alpha: AlphaParam,
        law: VelocityLaw,
        ball: &BallSpec,
        dt: f64,
    ) -> Result<(f64, bool)> {
        let mut current = self.initial_iterate(theta0, ball.horizon, dt)?;
        let mut distances = Vec::new();
        let mut inside = true;
        for _ in 0..self.probe_iterates {
            let next = self.apply_map(&current, theta0, alpha, law, dt)?;
            distances.push(next.sup_l2_distance(&current, self.output_nodes)?);
            inside &= ball_membership(&next, ball)?.inside;
            current = next;
        }
        let kappa = if distances.first().is_none_or(|&d| d <= DISTANCE_FLOOR) {
            0.0
        } else {
            contraction_factor_of(&distances).unwrap_or(0.0)
        };
        Ok((kappa, inside))
    }

    /// Halves `T` from `1 / M` until a probe shows `kappa <= 1/2` inside the ball.
    pub fn select_horizon(
        &self,
        theta0: &RealField,
        alpha: AlphaParam,
        law: VelocityLaw,
        s: f64,
        dt: f64,
    ) -> Result<BallSpec> {
        check_regularity(s, alpha)?;
        let norm = sobolev_norm(theta0, s)?;
        if norm == 0.0 {
            return Err(Error::InvalidParameter(
                "horizon search needs a nonzero initial datum".into(),
            ));
        }
        let radius = 2.0 * norm;
        let mut ball = BallSpec::new(radius, s, 1.0 / radius, alpha)?;
        let mut reason = String::new();
        for halving in 0..=self.max_horizon_halvings {
            if halving > 0 {
                ball = ball.with_horizon(ball.horizon * 0.5);
            }
            match self.probe(theta0, alpha, law, &ball, dt) {
                Ok((kappa, inside)) if kappa <= 0.5 && inside => return Ok(ball),
                Ok((kappa, inside)) => {
                    reason = format!("T = {}: kappa = {kappa}, inside ball = {inside}", ball.horizon)
                }
                Err(e @ Error::Unstable { .. }) => reason = format!("T = {}: {e}", ball.horizon),
                Err(e) => return Err(e),
            }
        }
        Err(Error::HorizonSearchFailed {
            halvings: self.max_horizon_halvings,
            reason,
        })
    }

    /// Direct RK4 integration of the nonlinear equation, velocity recomputed
    /// from the current stage state.
    pub fn direct_solve(
        &self,
        theta0: &RealField,
        alpha: AlphaParam,
        law: VelocityLaw,
        horizon: f64,
        dt: f64,
    ) -> Result<Trajectory> {
        self.transport()
            .solve_with(theta0, &ForcingTerm::Zero, horizon, dt, |state, _| {
                compute_velocity(state, alpha, law)
            })
    }
}

/// [`PicardSolver::apply_map`] with default numerical parameters.
pub fn apply_t(
    theta_traj: &Trajectory,
    theta0: &RealField,
    alpha: AlphaParam,
    law: VelocityLaw,
    dt: f64,
) -> Result<Trajectory> {
    PicardSolver::default().apply_map(theta_traj, theta0, alpha, law, dt)
}

/// [`PicardSolver::iterate`] with default numerical parameters.
#[allow(clippy::too_many_arguments)]
pub fn picard_iterate(
    theta0: &RealField,
    alpha: AlphaParam,
    law: VelocityLaw,
    ball: &BallSpec,
    tol: f64,
    max_iter: usize,
    dt: f64,
) -> Result<(Trajectory, ContractionReport)> {
    PicardSolver::default().iterate(theta0, alpha, law, ball, tol, max_iter, dt)
}

/// [`PicardSolver::select_horizon`] with default numerical parameters.
pub fn select_horizon(
    theta0: &RealField,
    alpha: AlphaParam,
    law: VelocityLaw,
    s: f64,
    dt: f64,
) -> Result<BallSpec> {
    PicardSolver::default().select_horizon(theta0, alpha, law, s, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;

    fn report_with(distances: &[f64]) -> ContractionReport {
        ContractionReport {
            iterate_distances: distances.to_vec(),
            kappa_estimates: kappa_estimates(distances),
            iterate_sup_norms: vec![],
            horizon: 1.0,
            radius: 1.0,
            tol: 0.0,
            converged: false,
            iterations: distances.len(),
        }
    }

    #[test]
    fn contraction_factor_examples() {
        assert!((contraction_factor(&report_with(&[1.0, 0.5, 0.25])).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(contraction_factor(&report_with(&[1e-15, 1e-16, 0.0])), None);
        assert_eq!(contraction_factor(&report_with(&[1.0])), None);
        assert_eq!(contraction_factor(&report_with(&[1.0, 0.0])), Some(0.0));
        let r = report_with(&[1.0, 0.1, 1e-15, 1e-16]);
        assert_eq!(r.kappa_estimates[2], None);
        assert!((contraction_factor(&r).unwrap() - (0.1f64 * 1e-14).sqrt()).abs() < 1e-20);
    }

    #[test]
    fn ball_spec_validation() {
        let a = AlphaParam::new(0.25).unwrap();
        assert!(BallSpec::new(1.0, 1.5, 1.0, a).is_err());
        assert!(BallSpec::new(1.0, 1.51, 1.0, a).is_ok());
        assert!(BallSpec::new(0.0, 2.0, 1.0, a).is_err());
        assert!(BallSpec::new(1.0, 2.0, 0.0, a).is_err());
    }

    #[test]
    fn membership_examples() {
        let g = GridSpec::new(16).unwrap();
        let theta0 = RealField::from_fn(g, |x, y| x.sin() * y.sin() + 0.2 * (2.0 * x).cos()).unwrap();
        let s = 2.5;
        let n0 = sobolev_norm(&theta0, s).unwrap();
        let ball = BallSpec::around(&theta0, s, 1.0, AlphaParam::sqg()).unwrap();
        let constant = Trajectory::constant(&theta0, 1.0, 4).unwrap();
        let m = ball_membership(&constant, &ball).unwrap();
        assert!(m.inside);
        assert!((m.margin - n0).abs() < 1e-12 * n0);
        let zero = Trajectory::constant(&RealField::zeros(g), 1.0, 4).unwrap();
        let m = ball_membership(&zero, &ball).unwrap();
        assert!(m.inside && m.margin == ball.radius);
        let tripled = Trajectory::constant(&theta0.scaled(3.0), 1.0, 4).unwrap();
        assert!(!ball_membership(&tripled, &ball).unwrap().inside);
    }

    #[test]
    fn zero_datum_is_a_fixed_point() {
        let g = GridSpec::new(16).unwrap();
        let zero = RealField::zeros(g);
        let ball = BallSpec::new(1.0, 2.5, 0.5, AlphaParam::sqg()).unwrap();
        let (traj, report) = picard_iterate(&zero, AlphaParam::sqg(), VelocityLaw::Perp, &ball, 1e-10, 10, 0.05).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 1);
        assert_eq!(report.iterate_distances[0], 0.0);
        assert!(traj.fields().iter().all(|f| f.max_abs() == 0.0));
        assert!(select_horizon(&zero, AlphaParam::sqg(), VelocityLaw::Perp, 2.5, 0.05).is_err());
    }

    #[test]
    fn apply_map_checks_initial_datum() {
        let g = GridSpec::new(16).unwrap();
        let a = RealField::from_fn(g, |x, _| x.sin()).unwrap();
        let b = RealField::from_fn(g, |_, y| y.sin()).unwrap();
        let traj = Trajectory::constant(&a, 0.5, 32).unwrap();
        assert!(apply_t(&traj, &b, AlphaParam::sqg(), VelocityLaw::Perp, 0.05).is_err());
        let out = apply_t(&traj, &a, AlphaParam::sqg(), VelocityLaw::Perp, 0.05).unwrap();
        assert_eq!(out.initial(), &a);
    }
}
