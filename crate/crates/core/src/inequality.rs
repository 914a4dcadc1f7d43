//! Empirical checks of the functional inequalities used by the existence and
//! uniqueness arguments.
//!
//! Every check evaluates a homogeneous ratio `lhs(f) / rhs(f)` over a
//! deterministic ensemble of random band-limited fields. The torus constants
//! differ from the whole-plane ones, so a report asserts only finiteness
//! (and, where a bound is configured, `sup_ratio <= bound`).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::littlewood_paley::{
    besov_norm, build_partition, dyadic_block, lp_norm, sobolev_norm, BesovParams,
    DyadicPartition,
};
use crate::picard::{BallSpec, PicardSolver, DEFAULT_MAX_ITER};
use crate::spectral::{
    compute_velocity, forward_transform, fractional_laplacian, gradient,
    inverse_transform, riesz_transform, AlphaParam, GridSpec, RealField, SpectralField,
    VelocityLaw,
};
use crate::transport::Trajectory;

pub const PRNG_NAME: &str = "splitmix64-counter";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform in `[0, 1)`, a pure function of its counters.
fn counter_uniform(seed: u64, sample: u64, k1: i64, k2: i64) -> f64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ sample);
    h = splitmix64(h ^ k1 as u64);
    h = splitmix64(h ^ k2 as u64);
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Deterministic ensemble of random mean-zero fields with `|c(k)| = |k|^{-gamma}`
/// on the band `k_min <= |k| <= k_max`.
///
/// Phases depend only on `(seed, sample, k)`, so two grids that resolve the
/// same band produce the same continuous fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub count: usize,
    pub seed: u64,
    pub gamma: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub grid: GridSpec,
    pub amplitude: f64,
}

impl EnsembleSpec {
    pub fn new(grid: GridSpec, count: usize, seed: u64, gamma: f64, k_min: f64, k_max: f64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("ensemble needs at least one sample".into()));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("decay exponent must be finite, got {gamma}")));
        }
        let nyquist = (grid.n() / 2) as f64;
        if !(k_min >= 1.0 && k_min <= k_max && k_max <= nyquist) {
            return Err(Error::InvalidParameter(format!(
                "band [{k_min}, {k_max}] must satisfy 1 <= k_min <= k_max <= {nyquist}"
            )));
        }
        Ok(Self { count, seed, gamma, k_min, k_max, grid, amplitude: 1.0 })
    }

    /// Default spectrum: `gamma = 2.5` on `1 <= |k| <= n/3`.
    pub fn standard(grid: GridSpec, count: usize, seed: u64) -> Result<Self> {
        Self::new(grid, count, seed, 2.5, 1.0, grid.n() as f64 / 3.0)
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        Self { amplitude, ..self }
    }

    pub fn with_grid(self, grid: GridSpec) -> Result<Self> {
        let mut out = Self::new(grid, self.count, self.seed, self.gamma, self.k_min, self.k_max)?;
        out.amplitude = self.amplitude;
        Ok(out)
    }

    pub fn sample_spectrum(&self, index: usize) -> SpectralField {
        let g = self.grid;
        let half = (g.n() / 2) as i64;
        let kmax = self.k_max.floor() as i64;
        let mut spec = SpectralField::zeros(g);
        for k1 in 0..=kmax.min(half - 1) {
            for k2 in -kmax.min(half - 1)..=kmax.min(half - 1) {
                if k1 == 0 && k2 <= 0 {
                    continue;
                }
                let r = ((k1 * k1 + k2 * k2) as f64).sqrt();
                if r < self.k_min || r > self.k_max {
                    continue;
                }
                let phase = 2.0 * PI * counter_uniform(self.seed, index as u64, k1, k2);
                let c = Complex64::from_polar(self.amplitude * r.powf(-self.gamma), phase);
                spec.set_coeff(k1, k2, c);
                spec.set_coeff(-k1, -k2, c.conj());
            }
        }
        spec
    }

    pub fn sample(&self, index: usize) -> Result<RealField> {
        inverse_transform(&self.sample_spectrum(index))
    }

    fn map_samples<T: Send>(&self, f: impl Fn(&RealField) -> Result<T> + Sync) -> Result<Vec<T>> {
        (0..self.count)
            .into_par_iter()
            .map(|i| f(&self.sample(i)?))
            .collect()
    }

    fn tag(&self, report: &mut CheckReport) {
        report.seed = Some(self.seed);
        report.prng = Some(PRNG_NAME.to_string());
        report.metadata.insert("n".into(), self.grid.n() as f64);
        report.metadata.insert("count".into(), self.count as f64);
        report.metadata.insert("gamma".into(), self.gamma);
        report.metadata.insert("k_min".into(), self.k_min);
        report.metadata.insert("k_max".into(), self.k_max);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub ratios: Vec<f64>,
    pub sup_ratio: f64,
    pub inf_ratio: f64,
    pub bound: Option<f64>,
    /// `sup_ratio <= bound`, or finiteness when no bound is configured.
    pub pass: bool,
    pub metadata: BTreeMap<String, f64>,
    pub seed: Option<u64>,
    pub prng: Option<String>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(name: &str, ratios: Vec<f64>, bound: Option<f64>) -> Self {
        let sup_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let inf_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let mut out = Self {
            name: name.to_string(),
            ratios,
            sup_ratio,
            inf_ratio,
            bound,
            pass: false,
            metadata: BTreeMap::new(),
            seed: None,
            prng: None,
            notes: Vec::new(),
        };
        out.evaluate();
        out
    }

    fn evaluate(&mut self) {
        let finite = !self.ratios.is_empty() && self.ratios.iter().all(|r| r.is_finite());
        self.pass = finite && self.bound.is_none_or(|b| self.sup_ratio <= b);
    }

    pub fn with_bound(mut self, bound: Option<f64>) -> Self {
        self.bound = bound;
        self.evaluate();
        self
    }

    fn meta(mut self, key: &str, value: f64) -> Self {
        self.metadata.insert(key.to_string(), value);
        self
    }

    pub fn all_finite(&self) -> bool {
        self.ratios.iter().all(|r| r.is_finite())
    }
}

/// `sup_ratio(fine) / sup_ratio(coarse)`.
pub fn refinement_ratio(coarse: &CheckReport, fine: &CheckReport) -> f64 {
    fine.sup_ratio / coarse.sup_ratio
}

/// Largest relative per-sample difference between two reports.
pub fn max_relative_difference(a: &CheckReport, b: &CheckReport) -> f64 {
    if a.ratios.len() != b.ratios.len() {
        return f64::INFINITY;
    }
    a.ratios
        .iter()
        .zip(&b.ratios)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn require_mean_zero(f: &RealField) -> Result<()> {
    let rms = lp_norm(f, 2.0)?;
    let mean = f.mean();
    if mean.abs() > crate::spectral::MEAN_TOLERANCE * rms.max(1.0) {
        return Err(Error::NonzeroMean { mean });
    }
    Ok(())
}

fn hls_alpha(alpha: AlphaParam) -> Result<f64> {
    if alpha.is_sqg() {
        return Err(Error::InvalidParameter(
            "the fractional integration inequality needs alpha < 1/2".into(),
        ));
    }
    Ok(alpha.value())
}

/// `||Lambda^{-(1-2 alpha)} f||_{L^{1/alpha}} / ||f||_{L^2}`.
pub fn hls_ratio(f: &RealField, alpha: AlphaParam) -> Result<f64> {
    let a = hls_alpha(alpha)?;
    require_mean_zero(f)?;
    let g = inverse_transform(&fractional_laplacian(&forward_transform(f)?, -(1.0 - 2.0 * a))?)?;
    Ok(lp_norm(&g, 1.0 / a)? / lp_norm(f, 2.0)?)
}

pub fn check_hls(ensemble: &EnsembleSpec, alpha: AlphaParam) -> Result<CheckReport> {
    hls_alpha(alpha)?;
    let ratios = ensemble.map_samples(|f| hls_ratio(f, alpha))?;
    let mut r = CheckReport::new("hls", ratios, None).meta("alpha", alpha.value());
    ensemble.tag(&mut r);
    Ok(r)
}

fn cz_exponent(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "Riesz bound needs 1 < p < infinity, got {p}"
        )))
    }
}

/// `(||R_1 f||_p / ||f||_p, ||R_2 f||_p / ||f||_p)`.
pub fn cz_ratios(f: &RealField, p: f64) -> Result<[f64; 2]> {
    cz_exponent(p)?;
    require_mean_zero(f)?;
    let spec = forward_transform(f)?;
    let base = lp_norm(f, p)?;
    let r1 = inverse_transform(&riesz_transform(&spec, 1)?)?;
    let r2 = inverse_transform(&riesz_transform(&spec, 2)?)?;
    Ok([lp_norm(&r1, p)? / base, lp_norm(&r2, p)? / base])
}

/// Both Riesz components per sample; at `p = 2` the bound `1 + 1e-12` is applied.
pub fn check_cz(ensemble: &EnsembleSpec, p: f64) -> Result<CheckReport> {
    cz_exponent(p)?;
    let pairs = ensemble.map_samples(|f| cz_ratios(f, p))?;
    let ratios = pairs.into_iter().flatten().collect();
    let bound = (p == 2.0).then_some(1.0 + 1e-12);
    let mut r = CheckReport::new("cz", ratios, bound).meta("p", p);
    ensemble.tag(&mut r);
    Ok(r)
}

/// `2^{-j} max_i ||d_i f||_{L^a} / ||f||_{L^a}` for a field supported in block `j`.
pub fn bernstein_ring_ratio(f: &RealField, j: i32, a: f64) -> Result<f64> {
    let (d1, d2) = gradient(&forward_transform(f)?)?;
    let g1 = lp_norm(&inverse_transform(&d1)?, a)?;
    let g2 = lp_norm(&inverse_transform(&d2)?, a)?;
    Ok(2f64.powi(-j) * g1.max(g2) / lp_norm(f, a)?)
}

/// `||f||_{L^b} / (2^{2j(1/a - 1/b)} ||f||_{L^a})`.
pub fn bernstein_ball_ratio(f: &RealField, j: i32, a: f64, b: f64) -> Result<f64> {
    let gain = 2f64.powf(2.0 * j as f64 * (1.0 / a - 1.0 / b));
    Ok(lp_norm(f, b)? / (gain * lp_norm(f, a)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinReport {
    /// Two-sided derivative comparison on rings.
    pub ring: CheckReport,
    /// `L^a -> L^b` gain.
    pub ball: CheckReport,
    /// `(j, sup ring ratio, inf ring ratio, sup ball ratio)` for each non-empty block.
    pub per_block: Vec<(i32, f64, f64, f64)>,
    pub skipped: Vec<String>,
}

/// Samples of `ensemble` filtered by each block `j` in `j_list`.
pub fn check_bernstein(
    ensemble: &EnsembleSpec,
    j_list: &[i32],
    p_pairs: &[(f64, f64)],
) -> Result<BernsteinReport> {
    let partition = build_partition(ensemble.grid);
    for &j in j_list {
        if j < 0 || j > partition.j_max() {
            return Err(Error::BlockOutOfRange { j, j_max: partition.j_max() });
        }
    }
    for &(a, b) in p_pairs {
        if !(a >= 1.0 && a <= b) {
            return Err(Error::InvalidParameter(format!(
                "Bernstein exponents need 1 <= a <= b, got ({a}, {b})"
            )));
        }
    }
    let mut ring = Vec::new();
    let mut ball = Vec::new();
    let mut per_block = Vec::new();
    let mut skipped = Vec::new();
    for &j in j_list {
        let rows = ensemble.map_samples(|f| {
            let fj = dyadic_block(f, j, &partition)?;
            if lp_norm(&fj, 2.0)? <= 1e-12 * lp_norm(f, 2.0)? {
                return Ok(None);
            }
            let mut out = Vec::with_capacity(p_pairs.len());
            for &(a, b) in p_pairs {
                out.push((bernstein_ring_ratio(&fj, j, a)?, bernstein_ball_ratio(&fj, j, a, b)?));
            }
            Ok(Some(out))
        })?;
        let empty = rows.iter().filter(|r| r.is_none()).count();
        if empty == rows.len() {
            skipped.push(format!("block {j}: empty for every sample"));
            continue;
        }
        if empty > 0 {
            skipped.push(format!("block {j}: {empty} empty samples skipped"));
        }
        let (ring_j, ball_j): (Vec<f64>, Vec<f64>) = rows.into_iter().flatten().flatten().unzip();
        per_block.push((
            j,
            ring_j.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ring_j.iter().copied().fold(f64::INFINITY, f64::min),
            ball_j.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ));
        ring.extend(ring_j);
        ball.extend(ball_j);
    }
    let mut ring = CheckReport::new("bernstein_ring", ring, None);
    let mut ball = CheckReport::new("bernstein_ball", ball, None);
    for r in [&mut ring, &mut ball] {
        ensemble.tag(r);
        r.notes = skipped.clone();
        // An all-empty sweep has nothing to certify.
        if r.ratios.is_empty() {
            r.pass = false;
        }
    }
    ring.pass &= ring.inf_ratio > 0.0;
    Ok(BernsteinReport { ring, ball, per_block, skipped })
}

/// Whether `B^{from} -> B^{to}` follows from the standard embeddings in two dimensions.
pub fn embedding_is_valid(from: BesovParams, to: BesovParams) -> bool {
    if to.p < from.p {
        return false;
    }
    let limit = from.s - 2.0 * (1.0 / from.p - 1.0 / to.p);
    let tol = 1e-12 * limit.abs().max(1.0);
    to.s < limit - tol || ((to.s - limit).abs() <= tol && to.q >= from.q)
}

pub fn embedding_ratio(
    f: &RealField,
    from: BesovParams,
    to: BesovParams,
    partition: &DyadicPartition,
) -> Result<f64> {
    Ok(besov_norm(f, to, partition)? / besov_norm(f, from, partition)?)
}

/// One report per link of each chain.
pub fn check_embedding(
    ensemble: &EnsembleSpec,
    chains: &[(BesovParams, BesovParams)],
) -> Result<Vec<CheckReport>> {
    for &(from, to) in chains {
        if !embedding_is_valid(from, to) {
            return Err(Error::InvalidParameter(format!(
                "no embedding B^{}_{{{},{}}} -> B^{}_{{{},{}}}",
                from.s, from.p, from.q, to.s, to.p, to.q
            )));
        }
    }
    let partition = build_partition(ensemble.grid);
    chains
        .iter()
        .map(|&(from, to)| {
            let ratios = ensemble.map_samples(|f| embedding_ratio(f, from, to, &partition))?;
            let mut r = CheckReport::new("embedding", ratios, None)
                .meta("s_from", from.s)
                .meta("p_from", from.p)
                .meta("q_from", from.q)
                .meta("s_to", to.s)
                .meta("p_to", to.p)
                .meta("q_to", to.q);
            ensemble.tag(&mut r);
            Ok(r)
        })
        .collect()
}

/// `H^s = B^s_{2,2} -> B^{s-1}_{inf,2} -> B^{s-1}_{inf,inf}`.
pub fn sobolev_chain(s: f64) -> Result<Vec<(BesovParams, BesovParams)>> {
    let a = BesovParams::new(s, 2.0, 2.0)?;
    let b = BesovParams::new(s - 1.0, f64::INFINITY, 2.0)?;
    let c = BesovParams::new(s - 1.0, f64::INFINITY, f64::INFINITY)?;
    Ok(vec![(a, b), (b, c)])
}

pub const L2_DRIFT_BOUND: f64 = 1e-8;

/// Relative drift of `||theta(t)||_{L^2}` at every stored time.
pub fn check_l2_conservation(traj: &Trajectory, law: VelocityLaw) -> Result<CheckReport> {
    let base = lp_norm(traj.initial(), 2.0)?;
    if base == 0.0 {
        return Err(Error::InvalidParameter("L2 drift needs a nonzero initial norm".into()));
    }
    let drifts = traj
        .fields()
        .iter()
        .map(|f| Ok((lp_norm(f, 2.0)? - base).abs() / base))
        .collect::<Result<Vec<_>>>()?;
    let bound = (law == VelocityLaw::Perp).then_some(L2_DRIFT_BOUND);
    let mut r = CheckReport::new("l2_conservation", drifts, bound);
    if law == VelocityLaw::Grad {
        r.notes.push("no conservation law for the gradient velocity; drift recorded only".into());
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallReport {
    /// Fitted rates `log(D(t)/D(0)) / I(t)` at the output nodes with `t > 0`.
    pub check: CheckReport,
    /// `D(t) = ||theta1(t) - theta2(t)||_{L^2}` at the output nodes.
    pub distances: Vec<f64>,
    /// Accumulated Sobolev norm `I(t)` at the output nodes.
    pub integrals: Vec<f64>,
    pub times: Vec<f64>,
    /// `max_t log(D(t)/D(0)) / I(t)`; `None` when `D(0) = 0`.
    pub rate: Option<f64>,
    pub tol: f64,
}

/// Trapezoidal running integral of the sampled values.
fn running_integral(values: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Two fixed-point solves from `theta0` and `theta0 + delta` on the same ball.
///
/// The accumulated norm is `int ||theta1||_{H^s}` for the divergence-free law
/// and `int (||theta1||_{H^s} + ||theta2||_{H^s})` for the gradient law.
#[allow(clippy::too_many_arguments)]
pub fn check_uniqueness_gronwall(
    solver: &PicardSolver,
    theta0: &RealField,
    delta: &RealField,
    alpha: AlphaParam,
    law: VelocityLaw,
    ball: &BallSpec,
    dt: f64,
) -> Result<GronwallReport> {
    let d0 = lp_norm(delta, 2.0)?;
    if d0 > 0.01 * lp_norm(theta0, 2.0)? {
        return Err(Error::InvalidParameter(format!(
            "perturbation L2 norm {d0:e} exceeds 1% of the datum"
        )));
    }
    let tol = ball.default_tolerance();
    let (t1, _) = solver.iterate(theta0, alpha, law, ball, tol, DEFAULT_MAX_ITER, dt)?;
    let (t2, _) = solver.iterate(&theta0.add(delta)?, alpha, law, ball, tol, DEFAULT_MAX_ITER, dt)?;

    let norms1 = t1.fields().iter().map(|f| sobolev_norm(f, ball.s)).collect::<Result<Vec<_>>>()?;
    let mut weights = norms1;
    if law == VelocityLaw::Grad {
        for (w, f) in weights.iter_mut().zip(t2.fields()) {
            *w += sobolev_norm(f, ball.s)?;
        }
    }
    let integral = running_integral(&weights, t1.dt());

    let nodes = t1.node_indices(solver.output_nodes)?;
    let mut distances = Vec::with_capacity(nodes.len());
    let mut integrals = Vec::with_capacity(nodes.len());
    let mut times = Vec::with_capacity(nodes.len());
    for &k in &nodes {
        distances.push(lp_norm(&t1.fields()[k].sub(&t2.fields()[k])?, 2.0)?);
        integrals.push(integral[k]);
        times.push(t1.time(k));
    }

    let d_start = distances[0];
    let (check, rate) = if d_start == 0.0 {
        let sup = distances.iter().copied().fold(0.0, f64::max);
        let mut c = CheckReport::new("uniqueness_gronwall", vec![sup], Some(2.0 * tol));
        c.notes.push("zero perturbation: ratio is sup_t D(t)".into());
        (c, None)
    } else {
        let rates: Vec<f64> = distances
            .iter()
            .zip(&integrals)
            .skip(1)
            .map(|(d, i)| (d / d_start).ln() / i)
            .collect();
        let c = CheckReport::new("uniqueness_gronwall", rates, None);
        let rate = c.sup_ratio;
        (c, Some(rate))
    };
    let check = check
        .meta("alpha", alpha.value())
        .meta("s", ball.s)
        .meta("horizon", ball.horizon)
        .meta("dt", dt);
    Ok(GronwallReport { check, distances, integrals, times, rate, tol })
}

/// `max_{i,j} ||d_i u_j||_{L^inf} / ||theta||_{H^s}` for the gradient velocity.
pub fn gradvel_ratio(theta: &RealField, alpha: AlphaParam, s: f64) -> Result<f64> {
    crate::picard::check_regularity(s, alpha)?;
    let u = compute_velocity(theta, alpha, VelocityLaw::Grad)?;
    let mut sup = 0.0f64;
    for comp in [&u.u1, &u.u2] {
        let (d1, d2) = gradient(&forward_transform(comp)?)?;
        for d in [d1, d2] {
            sup = sup.max(inverse_transform(&d)?.max_abs());
        }
    }
    Ok(sup / sobolev_norm(theta, s)?)
}

pub fn check_gradvel_bound(ensemble: &EnsembleSpec, alpha: AlphaParam, s: f64) -> Result<CheckReport> {
    crate::picard::check_regularity(s, alpha)?;
    let ratios = ensemble.map_samples(|f| gradvel_ratio(f, alpha, s))?;
    let mut r = CheckReport::new("gradvel", ratios, None)
        .meta("alpha", alpha.value())
        .meta("s", s);
    ensemble.tag(&mut r);
    Ok(r)
}

/// Single-mode field `exp(i k.x) + c.c.` scaled to unit amplitude.
pub fn cosine_mode(grid: GridSpec, k1: i64, k2: i64) -> Result<RealField> {
    let mut spec = SpectralField::zeros(grid);
    spec.set_coeff(k1, k2, Complex64::new(0.5, 0.0));
    spec.set_coeff(-k1, -k2, Complex64::new(0.5, 0.0));
    inverse_transform(&spec)
}
