use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square periodic grid with `n` modes per dimension on `[0, length)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    length: f64,
}

impl GridSpec {
    /// Grid on the standard torus `[0, 2pi)^2`.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_length(n, 2.0 * PI)
    }

    pub fn with_length(n: usize, length: f64) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n must be an even integer >= 4, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "length must be positive and finite, got {length}"
            )));
        }
        Ok(Self { n, length })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of samples, `n^2`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `length / n`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Conversion factor from integer wavenumbers to physical ones.
    #[inline]
    pub fn wavenumber_scale(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Physical coordinate of sample index `i` along either axis.
    #[inline]
    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Signed integer wavenumber for FFT index `idx`, in `[-n/2, n/2)`.
    #[inline]
    pub fn integer_wavenumber(&self, idx: usize) -> i64 {
        let n = self.n as i64;
        let k = idx as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// FFT index holding integer wavenumber `k` (taken modulo n).
    #[inline]
    pub fn index_of(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Physical wavenumber for FFT index `idx`.
    #[inline]
    pub fn wavenumber(&self, idx: usize) -> f64 {
        self.integer_wavenumber(idx) as f64 * self.wavenumber_scale()
    }

    /// Index of the mode `-k` along one axis.
    #[inline]
    pub fn mirror(&self, idx: usize) -> usize {
        (self.n - idx) % self.n
    }

    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        idx == self.n / 2
    }

    /// Largest wavenumber magnitude (physical units) representable on the grid.
    pub fn max_magnitude(&self) -> f64 {
        (self.n as f64 / 2.0) * std::f64::consts::SQRT_2 * self.wavenumber_scale()
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: format!("n={} L={}", self.n, self.length),
                right: format!("n={} L={}", other.n, other.length),
            })
        }
    }
}
