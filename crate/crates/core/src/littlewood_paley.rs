//! Littlewood-Paley decomposition on the torus and the norms built from it.
//!
//! The low-frequency profile `chi` is a C-infinity step equal to 1 on
//! `[0, 3/4]` and 0 on `[4/3, inf)`, made from `exp(-1/t)`. The annular profile
//! is `phi(r) = chi(r/2) - chi(r)`, so `chi(r) + sum_{j>=0} phi(2^-j r)`
//! telescopes to `chi(2^{-J-1} r)`, which is exactly 1 on every resolved
//! wavenumber once `J >= j_max`.
//!
//! All L^p norms use the normalized measure (grid average), so `||1||_p = 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    apply_multiplier, forward_transform, inverse_transform, GridSpec, RealField, SpectralField,
};

const CHI_INNER: f64 = 0.75;
const CHI_OUTER: f64 = 4.0 / 3.0;

fn exp_recip(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Low-frequency profile, supported in `r <= 4/3`.
pub fn chi(r: f64) -> f64 {
    if r <= CHI_INNER {
        1.0
    } else if r >= CHI_OUTER {
        0.0
    } else {
        let t = (r - CHI_INNER) / (CHI_OUTER - CHI_INNER);
        let a = exp_recip(1.0 - t);
        a / (a + exp_recip(t))
    }
}

/// Annular profile, supported in `3/4 <= r <= 8/3`.
pub fn phi(r: f64) -> f64 {
    (chi(0.5 * r) - chi(r)).max(0.0)
}

/// Dyadic partition of unity adapted to one grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicPartition {
    grid: GridSpec,
    j_max: i32,
}

pub fn build_partition(grid: GridSpec) -> DyadicPartition {
    let half = grid.n() as f64 / 2.0;
    let j_max = half.log2().ceil() as i32 + 1;
    DyadicPartition { grid, j_max }
}

impl DyadicPartition {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Largest block index that can be nonzero on the grid.
    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    /// Block indices `-1..=j_max`.
    pub fn indices(&self) -> impl Iterator<Item = i32> {
        -1..=self.j_max
    }

    /// Multiplier of block `j` at radial wavenumber `r`.
    pub fn block_symbol(&self, j: i32, r: f64) -> f64 {
        if j < 0 {
            chi(r)
        } else {
            phi(r * 0.5f64.powi(j))
        }
    }

    /// `chi(r) + sum_j phi(2^-j r)` over the blocks of this partition.
    pub fn partition_sum(&self, r: f64) -> f64 {
        self.indices().map(|j| self.block_symbol(j, r)).sum()
    }

    fn check_index(&self, j: i32) -> Result<()> {
        if (-1..=self.j_max).contains(&j) {
            Ok(())
        } else {
            Err(Error::BlockOutOfRange {
                j,
                j_max: self.j_max,
            })
        }
    }
}

fn block_spectral(spec: &SpectralField, j: i32, partition: &DyadicPartition) -> Result<SpectralField> {
    apply_multiplier(spec, |k1, k2| {
        Complex64::new(partition.block_symbol(j, (k1 * k1 + k2 * k2).sqrt()), 0.0)
    })
}

/// `Delta_j f`: `chi(|D|) f` for `j = -1`, `phi(2^-j |D|) f` for `j >= 0`.
pub fn dyadic_block(f: &RealField, j: i32, partition: &DyadicPartition) -> Result<RealField> {
    partition.check_index(j)?;
    f.grid().ensure_same(partition.grid())?;
    inverse_transform(&block_spectral(&forward_transform(f)?, j, partition)?)
}

/// All blocks `Delta_{-1} f, ..., Delta_{j_max} f`, sharing one forward transform.
pub fn dyadic_blocks(f: &RealField, partition: &DyadicPartition) -> Result<Vec<RealField>> {
    f.grid().ensure_same(partition.grid())?;
    let spec = forward_transform(f)?;
    partition
        .indices()
        .map(|j| inverse_transform(&block_spectral(&spec, j, partition)?))
        .collect()
}

/// Normalized-measure L^p norm; `p = f64::INFINITY` gives the sup norm.
pub fn lp_norm(f: &RealField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("L^p exponent must be >= 1, got {p}")));
    }
    let peak = f.max_abs();
    if p.is_infinite() || peak == 0.0 {
        return Ok(peak);
    }
    let n = f.values().len() as f64;
    let sum: f64 = if p == 2.0 {
        f.values().iter().map(|v| (v / peak) * (v / peak)).sum()
    } else {
        f.values().iter().map(|v| (v.abs() / peak).powf(p)).sum()
    };
    Ok(peak * (sum / n).powf(1.0 / p))
}

/// Besov exponents `(s, p, q)` with `p, q` in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::InvalidParameter(format!("Besov regularity must be finite, got {s}")));
        }
        if !(p >= 1.0) || !(q >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Besov exponents need p, q >= 1, got p = {p}, q = {q}"
            )));
        }
        Ok(Self { s, p, q })
    }

    /// `H^s = B^s_{2,2}`.
    pub fn sobolev(s: f64) -> Self {
        Self { s, p: 2.0, q: 2.0 }
    }
}

/// `||Delta_j f||_{L^p}` for `j = -1..=j_max`.
pub fn block_lp_norms(f: &RealField, p: f64, partition: &DyadicPartition) -> Result<Vec<f64>> {
    dyadic_blocks(f, partition)?
        .iter()
        .map(|b| lp_norm(b, p))
        .collect()
}

/// Combines block norms with weights `2^{js}` into the `l^q` Besov sum.
pub(crate) fn besov_from_blocks(block_norms: &[f64], s: f64, q: f64) -> f64 {
    let weighted = block_norms
        .iter()
        .enumerate()
        .map(|(i, b)| 2f64.powf((i as f64 - 1.0) * s) * b);
    if q.is_infinite() {
        weighted.fold(0.0, f64::max)
    } else {
        let terms: Vec<f64> = weighted.collect();
        let peak = terms.iter().cloned().fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        peak * terms.iter().map(|t| (t / peak).powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// `(sum_{j >= -1} 2^{jsq} ||Delta_j f||_p^q)^{1/q}`, or the sup for `q = inf`.
pub fn besov_norm(f: &RealField, params: BesovParams, partition: &DyadicPartition) -> Result<f64> {
    let blocks = block_lp_norms(f, params.p, partition)?;
    Ok(besov_from_blocks(&blocks, params.s, params.q))
}

/// `(sum_k (1 + |k|^2)^s |f^(k)|^2)^{1/2}`.
pub fn sobolev_norm(f: &RealField, s: f64) -> Result<f64> {
    Ok(sobolev_norm_spectral(&forward_transform(f)?, s))
}

pub fn sobolev_norm_spectral(spec: &SpectralField, s: f64) -> f64 {
    let g = spec.grid();
    let n = g.n();
    let mut sum = 0.0;
    for a in 0..n {
        let k1 = g.wavenumber(a);
        for b in 0..n {
            let k2 = g.wavenumber(b);
            sum += (1.0 + k1 * k1 + k2 * k2).powf(s) * spec.coeffs()[a * n + b].norm_sqr();
        }
    }
    sum.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sin1(n: usize) -> RealField {
        RealField::from_fn(GridSpec::new(n).unwrap(), |x, _| x.sin()).unwrap()
    }

    #[test]
    fn profile_supports_and_range() {
        for i in 0..=4000 {
            let r = i as f64 * 0.001;
            let (c, p) = (chi(r), phi(r));
            assert!((0.0..=1.0).contains(&c) && (0.0..=1.0).contains(&p));
            if r > 4.0 / 3.0 {
                assert_eq!(c, 0.0);
            }
            if !(0.75..=8.0 / 3.0).contains(&r) {
                assert_eq!(p, 0.0, "phi({r}) = {p}");
            }
        }
        assert_eq!(chi(0.0), 1.0);
    }

    #[test]
    fn j_max_formula() {
        assert_eq!(build_partition(GridSpec::new(4).unwrap()).j_max(), 2);
        assert_eq!(build_partition(GridSpec::new(128).unwrap()).j_max(), 7);
        assert_eq!(build_partition(GridSpec::new(96).unwrap()).j_max(), 7);
    }

    #[test]
    fn partition_of_unity_on_resolved_magnitudes() {
        for n in [4, 8, 64, 128] {
            let part = build_partition(GridSpec::new(n).unwrap());
            let g = part.grid();
            for a in 0..n {
                for b in 0..n {
                    let r = (g.wavenumber(a).powi(2) + g.wavenumber(b).powi(2)).sqrt();
                    assert!((part.partition_sum(r) - 1.0).abs() < 1e-10, "n={n} r={r}");
                }
            }
        }
    }

    #[test]
    fn partition_point_values() {
        let part = build_partition(GridSpec::new(64).unwrap());
        // r = 0: only chi
        assert_eq!(part.block_symbol(-1, 0.0), 1.0);
        assert!((0..=part.j_max()).all(|j| part.block_symbol(j, 0.0) == 0.0));
        // r = 1: chi and the j = 0 block
        assert!((chi(1.0) + phi(1.0) - 1.0).abs() < 1e-15);
        assert!((1..=part.j_max()).all(|j| part.block_symbol(j, 1.0) == 0.0));
        // r = 3: chi vanishes and only j in {1, 2} can contribute
        assert_eq!(chi(3.0), 0.0);
        for j in 0..=part.j_max() {
            if !(j == 1 || j == 2) {
                assert_eq!(part.block_symbol(j, 3.0), 0.0, "j = {j}");
            }
        }
        assert!((part.block_symbol(1, 3.0) + part.block_symbol(2, 3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn blocks_of_sine() {
        let f = sin1(32);
        let part = build_partition(*f.grid());
        let blocks = dyadic_blocks(&f, &part).unwrap();
        assert!((blocks[0].sub(&f.scaled(chi(1.0))).unwrap()).max_abs() < 1e-15);
        assert!((blocks[1].sub(&f.scaled(phi(1.0))).unwrap()).max_abs() < 1e-15);
        assert!(blocks[2..].iter().all(|b| b.max_abs() < 1e-15));

        let f4 = RealField::from_fn(*f.grid(), |x, _| (4.0 * x).sin()).unwrap();
        assert!(dyadic_block(&f4, -1, &part).unwrap().max_abs() < 1e-15);
        assert!(dyadic_block(&f, -2, &part).is_err());
        assert!(dyadic_block(&f, part.j_max() + 1, &part).is_err());
    }

    #[test]
    fn lp_norms_of_sine() {
        let f = sin1(64);
        assert!((lp_norm(&f, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((lp_norm(&f, 4.0).unwrap() - 0.375f64.powf(0.25)).abs() < 1e-14);
        let fine = sin1(1024);
        let sup = lp_norm(&fine, f64::INFINITY).unwrap();
        assert!((1.0 - 1e-6..=1.0).contains(&sup));
        assert!(lp_norm(&f, 0.5).is_err());
        assert!(lp_norm(&f, f64::NAN).is_err());
        assert!((lp_norm(&RealField::from_fn(*f.grid(), |_, _| 1.0).unwrap(), 3.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn l4_norm_against_quadrature() {
        // composite midpoint rule on a much finer uniform mesh
        let m = 20000;
        let q: f64 = (0..m)
            .map(|i| {
                let x = (i as f64 + 0.5) * std::f64::consts::TAU / m as f64;
                x.sin().powi(4)
            })
            .sum::<f64>()
            / m as f64;
        assert!((q.powf(0.25) - 0.375f64.powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn besov_of_sine_closed_form() {
        let f = sin1(32);
        let part = build_partition(*f.grid());
        for s in [0.0, 1.0, 2.5, -1.0] {
            let b = besov_norm(&f, BesovParams::new(s, 2.0, 2.0).unwrap(), &part).unwrap();
            let want = (2f64.powf(-2.0 * s) * chi(1.0).powi(2) + phi(1.0).powi(2)).sqrt() * 0.5f64.sqrt();
            assert!((b - want).abs() < 1e-14, "s={s}: {b} vs {want}");
        }
        let zero = RealField::zeros(*f.grid());
        for q in [1.0, 2.0, f64::INFINITY] {
            assert_eq!(besov_norm(&zero, BesovParams::new(1.0, 3.0, q).unwrap(), &part).unwrap(), 0.0);
        }
        assert!(BesovParams::new(1.0, 0.5, 2.0).is_err());
    }

    #[test]
    fn sobolev_examples() {
        let f = sin1(32);
        for s in [0.0, 1.0, 2.0, 2.5, -0.5] {
            let want = 2f64.powf((s - 1.0) / 2.0);
            assert!((sobolev_norm(&f, s).unwrap() - want).abs() < 1e-12 * want);
        }
        assert!((sobolev_norm(&f, 0.0).unwrap() - lp_norm(&f, 2.0).unwrap()).abs() < 1e-12);
        let f2 = RealField::from_fn(*f.grid(), |x, _| (2.0 * x).sin()).unwrap();
        assert!((sobolev_norm(&f2, 1.0).unwrap() - 2.5f64.sqrt()).abs() < 1e-12);
    }
}
