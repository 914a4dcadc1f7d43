//! Fourier representation of periodic fields and the nonlocal operators built
//! on it: fractional Laplacian, Riesz transforms and the two velocity laws.
//!
//! Coefficients use the normalized convention `c(k) = n^-2 sum_x f(x) e^{-ik.x}`,
//! so `sum_k |c(k)|^2` is the squared L2 norm against the normalized measure
//! `(2pi)^-2 dx` and the constant field `1` has `c(0) = 1`.
//!
//! Symbols that are singular at `k = 0` (negative powers of `Lambda`, Riesz
//! transforms) are defined as zero there; applying one to a field with a
//! nonzero mean is an error.

mod fft;
mod field;
mod grid;
mod params;

pub use field::{RealField, SpectralField, VectorField};
pub use grid::GridSpec;
pub use params::{AlphaParam, VelocityLaw};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative size of the mean mode below which a field counts as mean-zero.
pub const MEAN_TOLERANCE: f64 = 1e-10;

const HERMITIAN_TOLERANCE: f64 = 1e-9;

pub fn forward_transform(f: &RealField) -> Result<SpectralField> {
    if let Some(index) = f.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let grid = *f.grid();
    let plan = fft::plan(grid.n());
    let mut data: Vec<Complex64> = f
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    plan.forward(&mut data);
    let norm = 1.0 / grid.len() as f64;
    for c in &mut data {
        *c *= norm;
    }
    let mut spec = SpectralField::from_raw(grid, data);
    symmetrize(&mut spec);
    Ok(spec)
}

/// Replaces `c(k)` by `(c(k) + conj(c(-k))) / 2`, making real-data spectra
/// exactly Hermitian instead of Hermitian up to round-off.
fn symmetrize(spec: &mut SpectralField) {
    let grid = *spec.grid();
    let n = grid.n();
    let coeffs = spec.coeffs_mut();
    for a in 0..n {
        let ma = grid.mirror(a);
        for b in 0..n {
            let mb = grid.mirror(b);
            let (i, m) = (a * n + b, ma * n + mb);
            if m < i {
                continue;
            }
            let sym = 0.5 * (coeffs[i] + coeffs[m].conj());
            coeffs[i] = sym;
            coeffs[m] = sym.conj();
        }
    }
}

pub fn inverse_transform(spec: &SpectralField) -> Result<RealField> {
    let (defect, k1, k2) = spec.hermitian_defect();
    let scale = spec.max_abs().max(f64::MIN_POSITIVE);
    if !(defect <= HERMITIAN_TOLERANCE * scale) {
        return Err(Error::NotHermitian { k1, k2, defect });
    }
    let grid = *spec.grid();
    let plan = fft::plan(grid.n());
    let mut data = spec.coeffs().to_vec();
    plan.inverse(&mut data);
    Ok(RealField::from_raw(
        grid,
        data.into_iter().map(|c| c.re).collect(),
    ))
}

/// Multiplies every coefficient by `symbol(k1, k2)` (physical wavenumbers).
///
/// A symbol that is not finite at the origin is treated as singular there: the
/// output mean is set to zero, and the input must already be mean-zero.
/// On the Nyquist lines (`k_i = -n/2`, which is its own mirror) the result is
/// projected onto its Hermitian part, which zeroes odd symbols there.
pub fn apply_multiplier(
    spec: &SpectralField,
    symbol: impl Fn(f64, f64) -> Complex64,
) -> Result<SpectralField> {
    let grid = *spec.grid();
    let n = grid.n();
    let mut out = spec.clone();
    {
        let coeffs = out.coeffs_mut();
        for a in 0..n {
            let k1 = grid.wavenumber(a);
            for b in 0..n {
                let k2 = grid.wavenumber(b);
                let m = symbol(k1, k2);
                let idx = a * n + b;
                if a == 0 && b == 0 {
                    if m.re.is_finite() && m.im.is_finite() {
                        coeffs[idx] *= m;
                    } else {
                        check_mean_zero(spec)?;
                        coeffs[idx] = Complex64::new(0.0, 0.0);
                    }
                    continue;
                }
                if !(m.re.is_finite() && m.im.is_finite()) {
                    return Err(Error::InvalidSymbol { k1, k2 });
                }
                coeffs[idx] *= m;
            }
        }
    }
    hermitian_project_nyquist(&mut out);
    Ok(out)
}

fn check_mean_zero(spec: &SpectralField) -> Result<()> {
    let mean = spec.coeffs()[0].norm();
    let rms = spec.energy().sqrt();
    if mean > MEAN_TOLERANCE * rms {
        Err(Error::NonzeroMean { mean })
    } else {
        Ok(())
    }
}

fn hermitian_project_nyquist(spec: &mut SpectralField) {
    let grid = *spec.grid();
    let n = grid.n();
    let h = n / 2;
    let coeffs = spec.coeffs_mut();
    let mut fix = |a: usize, b: usize| {
        let (ma, mb) = (grid.mirror(a), grid.mirror(b));
        let i = a * n + b;
        let m = ma * n + mb;
        let sym = 0.5 * (coeffs[i] + coeffs[m].conj());
        coeffs[i] = sym;
        coeffs[m] = sym.conj();
    };
    for b in 0..n {
        fix(h, b);
    }
    for a in 0..n {
        fix(a, h);
    }
}

#[inline]
fn magnitude(k1: f64, k2: f64) -> f64 {
    (k1 * k1 + k2 * k2).sqrt()
}

/// `Lambda^s = (-Delta)^{s/2}`, symbol `|k|^s`.
pub fn fractional_laplacian(spec: &SpectralField, s: f64) -> Result<SpectralField> {
    apply_multiplier(spec, |k1, k2| {
        Complex64::new(magnitude(k1, k2).powf(s), 0.0)
    })
}

/// Riesz transform `R_j = d_j / Lambda`, symbol `i k_j / |k|`; `component` is 1 or 2.
pub fn riesz_transform(spec: &SpectralField, component: usize) -> Result<SpectralField> {
    if component != 1 && component != 2 {
        return Err(Error::InvalidParameter(format!(
            "Riesz component must be 1 or 2, got {component}"
        )));
    }
    apply_multiplier(spec, |k1, k2| {
        let kj = if component == 1 { k1 } else { k2 };
        Complex64::new(0.0, kj / magnitude(k1, k2))
    })
}

/// Spectral gradient, symbols `(i k1, i k2)`.
pub fn gradient(spec: &SpectralField) -> Result<(SpectralField, SpectralField)> {
    let d1 = apply_multiplier(spec, |k1, _| Complex64::new(0.0, k1))?;
    let d2 = apply_multiplier(spec, |_, k2| Complex64::new(0.0, k2))?;
    Ok((d1, d2))
}

/// Velocity coefficients `(u1, u2)` for the given law.
pub fn velocity_spectral(
    theta: &SpectralField,
    alpha: AlphaParam,
    law: VelocityLaw,
) -> Result<(SpectralField, SpectralField)> {
    let e = alpha.velocity_exponent();
    let lam = move |k1: f64, k2: f64| magnitude(k1, k2).powf(e);
    let (s1, s2): (f64, f64) = match law {
        VelocityLaw::Perp => (1.0, -1.0),
        VelocityLaw::Grad => (1.0, 1.0),
    };
    let u1 = apply_multiplier(theta, |k1, k2| {
        let k = if law == VelocityLaw::Perp { k2 } else { k1 };
        Complex64::new(0.0, s1 * k * lam(k1, k2))
    })?;
    let u2 = apply_multiplier(theta, |k1, k2| {
        let k = if law == VelocityLaw::Perp { k1 } else { k2 };
        Complex64::new(0.0, s2 * k * lam(k1, k2))
    })?;
    Ok((u1, u2))
}

/// `u = grad_perp Lambda^{-2+2a} theta` (Perp) or `grad Lambda^{-2+2a} theta` (Grad).
pub fn compute_velocity(
    theta: &RealField,
    alpha: AlphaParam,
    law: VelocityLaw,
) -> Result<VectorField> {
    let hat = forward_transform(theta)?;
    velocity_from_spectral(&hat, alpha, law)
}

pub fn velocity_from_spectral(
    theta: &SpectralField,
    alpha: AlphaParam,
    law: VelocityLaw,
) -> Result<VectorField> {
    let (u1, u2) = velocity_spectral(theta, alpha, law)?;
    VectorField::new(inverse_transform(&u1)?, inverse_transform(&u2)?)
}

/// Spectral divergence `d1 u1 + d2 u2`.
pub fn divergence(u: &VectorField) -> Result<RealField> {
    u.u1.grid().ensure_same(u.u2.grid())?;
    let d1 = apply_multiplier(&forward_transform(&u.u1)?, |k1, _| Complex64::new(0.0, k1))?;
    let d2 = apply_multiplier(&forward_transform(&u.u2)?, |_, k2| Complex64::new(0.0, k2))?;
    inverse_transform(&d1.add(&d2)?)
}

/// Two-thirds rule: zero every coefficient with `max(|k1|, |k2|) > n/3`.
pub fn dealias(spec: &SpectralField) -> SpectralField {
    let grid = *spec.grid();
    let n = grid.n();
    let mut out = spec.clone();
    let keep = |idx: usize| 3 * grid.integer_wavenumber(idx).unsigned_abs() as usize <= n;
    let coeffs = out.coeffs_mut();
    for a in 0..n {
        let ka = keep(a);
        for b in 0..n {
            if !(ka && keep(b)) {
                coeffs[a * n + b] = Complex64::new(0.0, 0.0);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    fn assert_field_close(a: &RealField, b: &RealField, tol: f64) {
        let err = a.sub(b).unwrap().max_abs();
        assert!(err <= tol, "max error {err:e} > {tol:e}");
    }

    #[test]
    fn sine_has_two_modes() {
        let f = RealField::from_fn(grid(16), |x, _| x.sin()).unwrap();
        let hat = forward_transform(&f).unwrap();
        let expected = Complex64::new(0.0, -0.5); // 1 / (2i)
        assert!((hat.coeff(1, 0) - expected).norm() < 1e-15);
        assert!((hat.coeff(-1, 0) + expected).norm() < 1e-15);
        let rest: f64 = hat.energy() - hat.coeff(1, 0).norm_sqr() - hat.coeff(-1, 0).norm_sqr();
        assert!(rest.abs() < 1e-28);
    }

    #[test]
    fn constant_is_dc_mode() {
        let f = RealField::from_fn(grid(8), |_, _| 1.0).unwrap();
        let hat = forward_transform(&f).unwrap();
        assert!((hat.coeff(0, 0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((hat.energy() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_of_two_modes_is_sine() {
        let g = grid(16);
        let mut spec = SpectralField::zeros(g);
        spec.set_coeff(1, 0, Complex64::new(0.0, -0.5));
        spec.set_coeff(-1, 0, Complex64::new(0.0, 0.5));
        let f = inverse_transform(&spec).unwrap();
        let want = RealField::from_fn(g, |x, _| x.sin()).unwrap();
        assert_field_close(&f, &want, 1e-15);
        let zero = inverse_transform(&SpectralField::zeros(g)).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn rejects_non_hermitian_and_non_finite() {
        let g = grid(8);
        let mut spec = SpectralField::zeros(g);
        spec.set_coeff(1, 2, Complex64::new(1.0, 0.0));
        assert!(matches!(
            inverse_transform(&spec),
            Err(Error::NotHermitian { .. })
        ));
        let mut v = vec![0.0; 64];
        v[5] = f64::NAN;
        assert!(RealField::new(g, v.clone()).is_err());
        let raw = RealField::from_raw(g, v);
        assert_eq!(forward_transform(&raw), Err(Error::NonFinite { index: 5 }));
    }

    #[test]
    fn lambda_eigenvalues_on_single_modes() {
        let g = grid(32);
        for s in [-1.5, -1.0, 0.0, 0.5, 2.0] {
            let f = RealField::from_fn(g, |x, _| (2.0 * x).sin()).unwrap();
            let out = inverse_transform(&fractional_laplacian(&forward_transform(&f).unwrap(), s).unwrap()).unwrap();
            assert_field_close(&out, &f.scaled(2f64.powf(s)), 1e-13);
            let f1 = RealField::from_fn(g, |x, _| x.sin()).unwrap();
            let out1 = inverse_transform(&fractional_laplacian(&forward_transform(&f1).unwrap(), s).unwrap()).unwrap();
            assert_field_close(&out1, &f1, 1e-13);
        }
    }

    #[test]
    fn riesz_on_sine_is_cosine() {
        let g = grid(16);
        let f = RealField::from_fn(g, |x, _| x.sin()).unwrap();
        let r1 = inverse_transform(&riesz_transform(&forward_transform(&f).unwrap(), 1).unwrap()).unwrap();
        assert_field_close(&r1, &RealField::from_fn(g, |x, _| x.cos()).unwrap(), 1e-15);
        let r2 = inverse_transform(&riesz_transform(&forward_transform(&f).unwrap(), 2).unwrap()).unwrap();
        assert!(r2.max_abs() < 1e-15);
        assert!(riesz_transform(&forward_transform(&f).unwrap(), 3).is_err());
    }

    #[test]
    fn singular_symbol_requires_mean_zero() {
        let g = grid(8);
        let f = RealField::from_fn(g, |x, _| 1.0 + x.sin()).unwrap();
        let hat = forward_transform(&f).unwrap();
        assert!(matches!(
            fractional_laplacian(&hat, -1.0),
            Err(Error::NonzeroMean { .. })
        ));
        assert!(fractional_laplacian(&hat, 1.0).is_ok());
        assert!(matches!(
            compute_velocity(&f, AlphaParam::sqg(), VelocityLaw::Perp),
            Err(Error::NonzeroMean { .. })
        ));
    }

    #[test]
    fn velocity_examples() {
        let g = grid(16);
        let sin1 = RealField::from_fn(g, |x, _| x.sin()).unwrap();
        let cos1 = RealField::from_fn(g, |x, _| x.cos()).unwrap();
        for a in [0.1, 0.25, 0.5] {
            let u = compute_velocity(&sin1, AlphaParam::new(a).unwrap(), VelocityLaw::Perp).unwrap();
            assert!(u.u1.max_abs() < 1e-15);
            assert_field_close(&u.u2, &cos1.scaled(-1.0), 1e-15);
        }
        let sin2 = RealField::from_fn(g, |x, _| (2.0 * x).sin()).unwrap();
        let u = compute_velocity(&sin2, AlphaParam::sqg(), VelocityLaw::Perp).unwrap();
        assert!(u.u1.max_abs() < 1e-15);
        assert_field_close(&u.u2, &RealField::from_fn(g, |x, _| -(2.0 * x).cos()).unwrap(), 1e-14);

        let u = compute_velocity(&sin1, AlphaParam::sqg(), VelocityLaw::Grad).unwrap();
        assert_field_close(&u.u1, &cos1, 1e-15);
        assert!(u.u2.max_abs() < 1e-15);
        assert_field_close(&divergence(&u).unwrap(), &sin1.scaled(-1.0), 1e-14);
    }

    #[test]
    fn gradient_examples() {
        let g = grid(16);
        let f = RealField::from_fn(g, |x, y| (x + y).sin()).unwrap();
        let (d1, d2) = gradient(&forward_transform(&f).unwrap()).unwrap();
        let want = RealField::from_fn(g, |x, y| (x + y).cos()).unwrap();
        assert_field_close(&inverse_transform(&d1).unwrap(), &want, 1e-14);
        assert_field_close(&inverse_transform(&d2).unwrap(), &want, 1e-14);
        let c = RealField::from_fn(g, |_, _| 3.0).unwrap();
        let (c1, c2) = gradient(&forward_transform(&c).unwrap()).unwrap();
        assert_eq!(inverse_transform(&c1).unwrap().max_abs(), 0.0);
        assert_eq!(inverse_transform(&c2).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn divergence_examples() {
        let g = grid(16);
        let zero_u1 = RealField::zeros(g);
        let u = VectorField::new(zero_u1, RealField::from_fn(g, |x, _| -x.cos()).unwrap()).unwrap();
        assert!(divergence(&u).unwrap().max_abs() < 1e-15);
        let c = VectorField::new(
            RealField::from_fn(g, |_, _| 2.0).unwrap(),
            RealField::from_fn(g, |_, _| -1.0).unwrap(),
        )
        .unwrap();
        assert!(divergence(&c).unwrap().max_abs() < 1e-15);
        assert!(VectorField::new(RealField::zeros(g), RealField::zeros(grid(8))).is_err());
    }

    #[test]
    fn nyquist_derivative_keeps_hermitian() {
        let g = grid(8);
        // cos(4 x1) lives on the Nyquist line
        let f = RealField::from_fn(g, |x, _| (4.0 * x).cos() + (x + 2.0 * PI / 8.0).sin()).unwrap();
        let (d1, _) = gradient(&forward_transform(&f).unwrap()).unwrap();
        let out = inverse_transform(&d1).unwrap();
        let want = RealField::from_fn(g, |x, _| (x + 2.0 * PI / 8.0).cos()).unwrap();
        assert_field_close(&out, &want, 1e-14);
    }

    #[test]
    fn dealias_threshold() {
        let g = grid(8);
        let mut spec = SpectralField::zeros(g);
        spec.set_coeff(3, 0, Complex64::new(1.0, 0.0));
        spec.set_coeff(-3, 0, Complex64::new(1.0, 0.0));
        spec.set_coeff(1, 1, Complex64::new(0.5, 0.2));
        spec.set_coeff(-1, -1, Complex64::new(0.5, -0.2));
        let out = dealias(&spec);
        assert_eq!(out.coeff(3, 0), Complex64::new(0.0, 0.0));
        assert_eq!(out.coeff(-3, 0), Complex64::new(0.0, 0.0));
        assert_eq!(out.coeff(1, 1), Complex64::new(0.5, 0.2));
        let g32 = grid(32);
        let mut band = SpectralField::zeros(g32);
        for (k1, k2) in [(3, 5), (0, 10), (-10, 10), (7, -2)] {
            band.set_coeff(k1, k2, Complex64::new(0.3, k1 as f64));
            band.set_coeff(-k1, -k2, Complex64::new(0.3, -k1 as f64));
        }
        assert_eq!(dealias(&band), band);
    }
}
