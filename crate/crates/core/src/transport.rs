//! Linear transport `d_t w + u . grad w = g` with a prescribed velocity,
//! discretized by classical RK4 in time and pseudo-spectrally in space.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::littlewood_paley::{besov_norm, sobolev_norm, BesovParams, DyadicPartition};
use crate::spectral::{
    apply_multiplier, compute_velocity, dealias, forward_transform, inverse_transform,
    velocity_from_spectral, AlphaParam, GridSpec, RealField, SpectralField, VectorField,
    VelocityLaw, MEAN_TOLERANCE,
};

/// Guard against division by a vanishing velocity in [`stable_dt`].
pub const VELOCITY_FLOOR: f64 = 1e-12;

/// Fields at uniformly spaced times `0, dt, ..., K dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: GridSpec,
    dt: f64,
    fields: Vec<RealField>,
}

impl Trajectory {
    pub fn new(dt: f64, fields: Vec<RealField>) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::TrajectoryMismatch("trajectory needs at least one field".into()))?;
        let grid = *first.grid();
        for f in &fields {
            grid.ensure_same(f.grid())?;
        }
        if fields.len() > 1 && !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        Ok(Self { grid, dt, fields })
    }

    /// `field` held fixed on `[0, horizon]` with `steps` intervals.
    pub fn constant(field: &RealField, horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(horizon > 0.0) {
            return Self::new(0.0, vec![field.clone()]);
        }
        Self::new(horizon / steps as f64, vec![field.clone(); steps + 1])
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of intervals.
    pub fn steps(&self) -> usize {
        self.fields.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps() as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.dt * k as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.fields.len()).map(|k| self.time(k)).collect()
    }

    pub fn fields(&self) -> &[RealField] {
        &self.fields
    }

    pub fn initial(&self) -> &RealField {
        &self.fields[0]
    }

    pub fn last(&self) -> &RealField {
        self.fields.last().expect("trajectory is never empty")
    }

    /// Indices of `nodes + 1` equally spaced samples including both ends.
    pub fn node_indices(&self, nodes: usize) -> Result<Vec<usize>> {
        let steps = self.steps();
        if steps == 0 {
            return Ok(vec![0]);
        }
        if nodes == 0 || !steps.is_multiple_of(nodes) {
            return Err(Error::TrajectoryMismatch(format!(
                "{steps} steps cannot be sampled at {nodes} output nodes"
            )));
        }
        let stride = steps / nodes;
        Ok((0..=nodes).map(|k| k * stride).collect())
    }

    /// The trajectory restricted to `nodes + 1` equally spaced samples.
    pub fn subsample(&self, nodes: usize) -> Result<Self> {
        let idx = self.node_indices(nodes)?;
        let stride = if idx.len() > 1 { idx[1] } else { 1 };
        Self::new(
            self.dt * stride as f64,
            idx.into_iter().map(|k| self.fields[k].clone()).collect(),
        )
    }

    /// `max_k ||self(t_k) - other(t_k)||_{L^2}` over the shared output nodes.
    pub fn sup_l2_distance(&self, other: &Trajectory, nodes: usize) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        let (ht, ho) = (self.horizon(), other.horizon());
        if (ht - ho).abs() > 1e-12 * ht.max(ho).max(1.0) {
            return Err(Error::TrajectoryMismatch(format!("horizons differ: {ht} vs {ho}")));
        }
        let a = self.node_indices(nodes)?;
        let b = other.node_indices(nodes)?;
        let mut worst: f64 = 0.0;
        for (&i, &j) in a.iter().zip(&b) {
            let d = self.fields[i].sub(&other.fields[j])?;
            worst = worst.max(l2(&d));
        }
        Ok(worst)
    }

    /// Weights and node indices reconstructing the field at time `t`.
    fn stencil(&self, t: f64, interpolation: Interpolation) -> Vec<(usize, f64)> {
        let steps = self.steps();
        if steps == 0 {
            return vec![(0, 1.0)];
        }
        let x = (t / self.dt).clamp(0.0, steps as f64);
        let nearest = x.round();
        if (x - nearest).abs() <= 1e-9 {
            return vec![(nearest as usize, 1.0)];
        }
        let i = (x.floor() as usize).min(steps - 1);
        match interpolation {
            Interpolation::Cubic if steps >= 3 => {
                let start = i.saturating_sub(1).min(steps - 3);
                let nodes: Vec<f64> = (start..start + 4).map(|k| k as f64).collect();
                (0..4)
                    .map(|m| {
                        let w = (0..4)
                            .filter(|&l| l != m)
                            .map(|l| (x - nodes[l]) / (nodes[m] - nodes[l]))
                            .product::<f64>();
                        (start + m, w)
                    })
                    .collect()
            }
            _ => {
                let w = x - i as f64;
                vec![(i, 1.0 - w), (i + 1, w)]
            }
        }
    }

    /// Field at time `t` by the given interpolation rule between nodes.
    pub fn interpolate(&self, t: f64, interpolation: Interpolation) -> Result<RealField> {
        let st = self.stencil(t, interpolation);
        let w: Vec<f64> = st.iter().map(|s| s.1).collect();
        let f: Vec<&RealField> = st.iter().map(|s| &self.fields[s.0]).collect();
        RealField::linear_combination(&w, &f)
    }
}

fn l2(f: &RealField) -> f64 {
    (f.values().iter().map(|v| v * v).sum::<f64>() / f.values().len() as f64).sqrt()
}

/// Rule for evaluating a stored trajectory between its nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Linear,
    /// Four-point Lagrange interpolation (one-sided at the ends).
    #[default]
    Cubic,
}

/// Source of the transporting velocity at a given time.
pub trait VelocityProvider: Send + Sync {
    fn grid(&self) -> &GridSpec;
    fn velocity(&self, t: f64) -> Result<VectorField>;
}

/// Velocity derived from a stored scalar trajectory through a velocity law.
pub struct FrozenVelocity<'a> {
    trajectory: &'a Trajectory,
    spectra: Vec<SpectralField>,
    alpha: AlphaParam,
    law: VelocityLaw,
    interpolation: Interpolation,
}

impl<'a> FrozenVelocity<'a> {
    pub fn new(
        trajectory: &'a Trajectory,
        alpha: AlphaParam,
        law: VelocityLaw,
        interpolation: Interpolation,
    ) -> Result<Self> {
        let spectra = trajectory
            .fields()
            .iter()
            .map(forward_transform)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            trajectory,
            spectra,
            alpha,
            law,
            interpolation,
        })
    }
}

impl VelocityProvider for FrozenVelocity<'_> {
    fn grid(&self) -> &GridSpec {
        self.trajectory.grid()
    }

    fn velocity(&self, t: f64) -> Result<VectorField> {
        let st = self.trajectory.stencil(t, self.interpolation);
        let grid = *self.grid();
        let mut hat = SpectralField::zeros(grid);
        for (k, w) in st {
            hat = hat.add(&self.spectra[k].scaled(w))?;
        }
        velocity_from_spectral(&hat, self.alpha, self.law)
    }
}

type VelocityFn = dyn Fn(f64, f64, f64) -> (f64, f64) + Send + Sync;
type ScalarFn = dyn Fn(f64, f64, f64) -> f64 + Send + Sync;

/// Closed-form velocity `u(x1, x2, t)` sampled on the grid.
#[derive(Clone)]
pub struct AnalyticVelocity {
    grid: GridSpec,
    field: Arc<VelocityFn>,
}

impl AnalyticVelocity {
    pub fn new(
        grid: GridSpec,
        field: impl Fn(f64, f64, f64) -> (f64, f64) + Send + Sync + 'static,
    ) -> Self {
        Self {
            grid,
            field: Arc::new(field),
        }
    }

    pub fn zero(grid: GridSpec) -> Self {
        Self::new(grid, |_, _, _| (0.0, 0.0))
    }
}

impl VelocityProvider for AnalyticVelocity {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn velocity(&self, t: f64) -> Result<VectorField> {
        let f = &self.field;
        let u1 = RealField::from_fn(self.grid, |x, y| f(x, y, t).0)?;
        let u2 = RealField::from_fn(self.grid, |x, y| f(x, y, t).1)?;
        VectorField::new(u1, u2)
    }
}

/// Right-hand side `g` of the transport equation.
#[derive(Clone, Default)]
pub enum ForcingTerm {
    #[default]
    Zero,
    Prescribed(Arc<ScalarFn>),
}

impl ForcingTerm {
    pub fn prescribed(g: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Prescribed(Arc::new(g))
    }

    pub fn sample(&self, grid: GridSpec, t: f64) -> Result<Option<RealField>> {
        match self {
            Self::Zero => Ok(None),
            Self::Prescribed(g) => RealField::from_fn(grid, |x, y| g(x, y, t)).map(Some),
        }
    }
}

fn rhs(w: &RealField, u: &VectorField, g: Option<&RealField>) -> Result<RealField> {
    w.grid().ensure_same(u.grid())?;
    let hat = forward_transform(w)?;
    let d1 = inverse_transform(&apply_multiplier(&hat, |k1, _| Complex64::new(0.0, k1))?)?;
    let d2 = inverse_transform(&apply_multiplier(&hat, |_, k2| Complex64::new(0.0, k2))?)?;
    let adv = u.u1.mul(&d1)?.axpy(1.0, &u.u2.mul(&d2)?)?;
    let adv = dealias(&forward_transform(&adv)?);
    let mut out = inverse_transform(&adv)?.scaled(-1.0);
    if let Some(g) = g {
        out = out.add(g)?;
    }
    Ok(out)
}

/// `-dealias(u . grad w) + g`, with the gradient taken spectrally and the
/// product formed pointwise.
pub fn advection_rhs(w: &RealField, u: &VectorField, g: &RealField) -> Result<RealField> {
    rhs(w, u, Some(g))
}

/// `cfl * h / max(|u1|_inf, |u2|_inf, VELOCITY_FLOOR)`.
pub fn stable_dt(u: &VectorField, grid: &GridSpec, cfl: f64) -> f64 {
    cfl * grid.spacing() / u.max_abs().max(VELOCITY_FLOOR)
}

/// One RK4 step. `velocity(state, t)` supplies the transporting velocity at
/// each stage; `u_start` is its value at the start of the step. Stage
/// derivatives are projected to mean zero.
fn rk4_core<V>(
    w: &RealField,
    t: f64,
    dt: f64,
    forcing: &ForcingTerm,
    u_start: &VectorField,
    velocity: &mut V,
) -> Result<RealField>
where
    V: FnMut(&RealField, f64) -> Result<VectorField>,
{
    let grid = *w.grid();
    let stage = |state: &RealField, u: &VectorField, ts: f64| -> Result<RealField> {
        let g = forcing.sample(grid, ts)?;
        Ok(rhs(state, u, g.as_ref())?.without_mean())
    };
    let nan_guard = |f: RealField| -> Result<RealField> {
        if f.is_finite() {
            Ok(f)
        } else {
            Err(Error::StepFailure { t })
        }
    };
    let half = 0.5 * dt;
    let k1 = nan_guard(stage(w, u_start, t)?)?;
    let w2 = w.axpy(half, &k1)?;
    let k2 = nan_guard(stage(&w2, &velocity(&w2, t + half)?, t + half)?)?;
    let w3 = w.axpy(half, &k2)?;
    let k3 = nan_guard(stage(&w3, &velocity(&w3, t + half)?, t + half)?)?;
    let w4 = w.axpy(dt, &k3)?;
    let k4 = nan_guard(stage(&w4, &velocity(&w4, t + dt)?, t + dt)?)?;
    let incr = RealField::linear_combination(&[1.0, 2.0, 2.0, 1.0], &[&k1, &k2, &k3, &k4])?;
    let out = w.axpy(dt / 6.0, &incr)?.without_mean();
    nan_guard(out)
}

fn non_finite_velocity(u: &VectorField) -> bool {
    !(u.u1.is_finite() && u.u2.is_finite())
}

/// Classical four-stage step from `t` to `t + dt`; output re-projected to mean zero.
pub fn rk4_step(
    w: &RealField,
    provider: &dyn VelocityProvider,
    forcing: &ForcingTerm,
    t: f64,
    dt: f64,
) -> Result<RealField> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    w.grid().ensure_same(provider.grid())?;
    let u0 = provider.velocity(t)?;
    let mut vel = |_: &RealField, ts: f64| provider.velocity(ts);
    rk4_core(w, t, dt, forcing, &u0, &mut vel)
}

/// Fixed-step RK4 driver with restart-on-instability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportSolver {
    pub cfl: f64,
    pub max_halvings: u32,
    /// The step count is rounded up to a multiple of this.
    pub step_multiple: usize,
}

impl Default for TransportSolver {
    fn default() -> Self {
        Self {
            cfl: 0.25,
            max_halvings: 6,
            step_multiple: 1,
        }
    }
}

impl TransportSolver {
    pub fn new(cfl: f64) -> Result<Self> {
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::InvalidParameter(format!("cfl must lie in (0, 1], got {cfl}")));
        }
        Ok(Self {
            cfl,
            ..Self::default()
        })
    }

    pub fn with_step_multiple(mut self, m: usize) -> Self {
        self.step_multiple = m.max(1);
        self
    }

    /// Step count used for a requested `dt` over `horizon`.
    pub fn step_count(&self, horizon: f64, dt: f64) -> usize {
        let m = self.step_multiple.max(1);
        let raw = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
        raw.div_ceil(m) * m
    }

    /// Solves from `w0` on `[0, horizon]` with the given provider.
    pub fn solve(
        &self,
        w0: &RealField,
        provider: &dyn VelocityProvider,
        forcing: &ForcingTerm,
        horizon: f64,
        dt: f64,
    ) -> Result<Trajectory> {
        w0.grid().ensure_same(provider.grid())?;
        self.solve_with(w0, forcing, horizon, dt, |_, t| provider.velocity(t))
    }

    /// Same driver with a state-dependent velocity `velocity(state, t)`.
    pub fn solve_with<V>(
        &self,
        w0: &RealField,
        forcing: &ForcingTerm,
        horizon: f64,
        dt: f64,
        mut velocity: V,
    ) -> Result<Trajectory>
    where
        V: FnMut(&RealField, f64) -> Result<VectorField>,
    {
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be >= 0, got {horizon}")));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        check_mean_zero(w0)?;
        if horizon == 0.0 {
            return Trajectory::new(0.0, vec![w0.clone()]);
        }
        let mut last = (dt, 0.0);
        for attempt in 0..=self.max_halvings {
            let steps = self.step_count(horizon, dt / 2f64.powi(attempt as i32));
            let h = horizon / steps as f64;
            match self.attempt(w0, forcing, h, steps, &mut velocity) {
                Ok(fields) => return Trajectory::new(h, fields),
                Err(Failure::Unstable { t }) => last = (h, t),
                Err(Failure::Fatal(e)) => return Err(e),
            }
        }
        Err(Error::Unstable {
            halvings: self.max_halvings,
            dt: last.0,
            t: last.1,
        })
    }

    fn attempt<V>(
        &self,
        w0: &RealField,
        forcing: &ForcingTerm,
        h: f64,
        steps: usize,
        velocity: &mut V,
    ) -> std::result::Result<Vec<RealField>, Failure>
    where
        V: FnMut(&RealField, f64) -> Result<VectorField>,
    {
        let grid = *w0.grid();
        let mut fields = Vec::with_capacity(steps + 1);
        fields.push(w0.clone());
        for k in 0..steps {
            let t = h * k as f64;
            let w = &fields[k];
            let u = velocity(w, t).map_err(Failure::from_error)?;
            if non_finite_velocity(&u) || h > stable_dt(&u, &grid, self.cfl) * (1.0 + 1e-9) {
                return Err(Failure::Unstable { t });
            }
            let next = rk4_core(w, t, h, forcing, &u, velocity).map_err(Failure::from_error)?;
            fields.push(next);
        }
        Ok(fields)
    }
}

enum Failure {
    Unstable { t: f64 },
    Fatal(Error),
}

impl Failure {
    fn from_error(e: Error) -> Self {
        match e {
            Error::StepFailure { t } => Failure::Unstable { t },
            Error::NonFinite { .. } => Failure::Unstable { t: f64::NAN },
            other => Failure::Fatal(other),
        }
    }
}

fn check_mean_zero(f: &RealField) -> Result<()> {
    let mean = f.mean();
    if mean.abs() > MEAN_TOLERANCE * l2(f) {
        Err(Error::NonzeroMean { mean })
    } else {
        Ok(())
    }
}

/// Logarithmic H^s growth of a transported field against the H^s size of
/// the scalar that generated its velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub alpha: f64,
    pub s: f64,
    /// `log(||w(t)||_{H^s} / ||w(0)||_{H^s})` at every node.
    pub log_growth: Vec<f64>,
    /// `sup_t ||theta(t)||_{H^s}` of the velocity source.
    pub theta_sup: f64,
    /// `G(T) / (T sup_t ||theta||_{H^s})`.
    pub rate: f64,
}

pub fn growth_bound_check(
    traj: &Trajectory,
    theta_source: &Trajectory,
    s: f64,
    alpha: AlphaParam,
) -> Result<GrowthReport> {
    traj.grid().ensure_same(theta_source.grid())?;
    let (t, ts) = (traj.horizon(), theta_source.horizon());
    if (t - ts).abs() > 1e-12 * t.max(ts).max(1.0) {
        return Err(Error::TrajectoryMismatch(format!("horizons differ: {t} vs {ts}")));
    }
    let n0 = sobolev_norm(traj.initial(), s)?;
    if n0 == 0.0 {
        return Err(Error::InvalidParameter("initial H^s norm is zero".into()));
    }
    let log_growth = traj
        .fields()
        .iter()
        .map(|f| Ok((sobolev_norm(f, s)? / n0).ln()))
        .collect::<Result<Vec<f64>>>()?;
    let theta_sup = theta_source
        .fields()
        .iter()
        .map(|f| sobolev_norm(f, s))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let g_t = *log_growth.last().expect("non-empty");
    let rate = if t > 0.0 && theta_sup > 0.0 {
        g_t / (t * theta_sup)
    } else {
        0.0
    };
    Ok(GrowthReport {
        alpha: alpha.value(),
        s,
        log_growth,
        theta_sup,
        rate,
    })
}

/// Largest rate over an ensemble and whether it stays below `bound`.
pub fn ensemble_growth_bound(reports: &[GrowthReport], bound: f64) -> (f64, bool) {
    let sup = reports.iter().map(|r| r.rate).fold(f64::NEG_INFINITY, f64::max);
    let ok = reports.iter().all(|r| r.rate.is_finite()) && sup <= bound;
    (sup, ok)
}

/// `max_i ||u_i||_{B^s_{1/alpha, 2}}` for the Perp velocity of `theta`.
pub fn besov_velocity_norm(
    theta: &RealField,
    alpha: AlphaParam,
    s: f64,
    partition: &DyadicPartition,
) -> Result<f64> {
    if alpha.is_sqg() {
        return Err(Error::InvalidParameter(
            "alpha = 1/2 uses the H^s Riesz-transform bound instead".into(),
        ));
    }
    let u = compute_velocity(theta, alpha, VelocityLaw::Perp)?;
    let params = BesovParams::new(s, 1.0 / alpha.value(), 2.0)?;
    Ok(besov_norm(&u.u1, params, partition)?.max(besov_norm(&u.u2, params, partition)?))
}
