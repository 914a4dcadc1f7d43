use num_complex::Complex64;

use super::grid::GridSpec;
use crate::error::{Error, Result};

/// Real samples on the grid, row-major with the second coordinate fastest:
/// `values[i * n + j]` is the value at `(i h, j h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    /// Construction without the finiteness scan; transforms re-check.
    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::from_raw(grid, vec![0.0; grid.len()])
    }

    /// Samples `f(x1, x2)` at the grid nodes.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            let x1 = grid.coordinate(i);
            for j in 0..n {
                values.push(f(x1, grid.coordinate(j)));
            }
        }
        Self::new(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n() + j]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Grid average, i.e. the integral against the normalized measure.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn without_mean(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &RealField) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + a * y)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &RealField) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn add(&self, other: &RealField) -> Result<Self> {
        self.axpy(1.0, other)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &RealField) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x * y)
                .collect(),
        ))
    }

    /// `sum_i weights[i] * fields[i]`; all fields must share a grid.
    pub fn linear_combination(weights: &[f64], fields: &[&RealField]) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty linear combination".into()))?;
        let mut out = vec![0.0; first.values.len()];
        for (w, f) in weights.iter().zip(fields) {
            first.grid.ensure_same(&f.grid)?;
            if *w == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(&f.values) {
                *o += w * v;
            }
        }
        Ok(Self::from_raw(first.grid, out))
    }
}

/// Normalized Fourier coefficients `c(k) = n^-2 sum_x f(x) e^{-i k.x}`, stored in
/// FFT order (`coeffs[a * n + b]` holds wavenumber index `(a, b)`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub(crate) fn from_raw(grid: GridSpec, coeffs: Vec<Complex64>) -> Self {
        Self { grid, coeffs }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::from_raw(grid, vec![Complex64::new(0.0, 0.0); grid.len()])
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of integer wavenumber `(k1, k2)`.
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        let g = &self.grid;
        self.coeffs[g.index_of(k1) * g.n() + g.index_of(k2)]
    }

    pub fn set_coeff(&mut self, k1: i64, k2: i64, value: Complex64) {
        let (a, b) = (self.grid.index_of(k1), self.grid.index_of(k2));
        let n = self.grid.n();
        self.coeffs[a * n + b] = value;
    }

    /// `sum_k |c(k)|^2`, equal to the squared normalized L2 norm.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc.max(c.norm()))
    }

    /// Largest `|c(-k) - conj(c(k))|` together with the wavenumber where it occurs.
    pub fn hermitian_defect(&self) -> (f64, i64, i64) {
        let g = &self.grid;
        let n = g.n();
        let mut worst = (0.0, 0, 0);
        for a in 0..n {
            let ma = g.mirror(a);
            for b in 0..n {
                let mb = g.mirror(b);
                let d = (self.coeffs[ma * n + mb] - self.coeffs[a * n + b].conj()).norm();
                if d > worst.0 {
                    worst = (d, g.integer_wavenumber(a), g.integer_wavenumber(b));
                }
            }
        }
        worst
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::from_raw(self.grid, self.coeffs.iter().map(|c| c * a).collect())
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self::from_raw(
            self.grid,
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }
}

/// Velocity `u = (u1, u2)` on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub u1: RealField,
    pub u2: RealField,
}

impl VectorField {
    pub fn new(u1: RealField, u2: RealField) -> Result<Self> {
        u1.grid().ensure_same(u2.grid())?;
        Ok(Self { u1, u2 })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            u1: RealField::zeros(grid),
            u2: RealField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.u1.grid()
    }

    /// Largest component-wise sup norm.
    pub fn max_abs(&self) -> f64 {
        self.u1.max_abs().max(self.u2.max_abs())
    }

    /// Normalized L2 norm of the vector field.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self
            .u1
            .values()
            .iter()
            .zip(self.u2.values())
            .map(|(a, b)| a * a + b * b)
            .sum();
        (s / self.u1.values().len() as f64).sqrt()
    }
}
