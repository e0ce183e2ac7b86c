//! Closed-form coverage of the cellular uplink under thinned D2D interference.
//!
//! Interferers form a PPP of intensity `lambda * p(r_d)` over the whole plane
//! (no cell truncation), with Rayleigh fading and a common transmit power
//! `p_i`. The cellular user sits at distance `r_c` drawn with density
//! `2 r_c / R^2` on `[R0, R]`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Candidate D2D density, points per m^2.
    pub lambda: f64,
    /// Tuning factor of the retention probability.
    pub k: f64,
    /// Target pairing distance, meters.
    pub mu: f64,
    /// Cellular transmit power, watts.
    pub p_c: f64,
    /// D2D transmit power, watts.
    pub p_i: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Cell radius R, meters.
    pub cell_radius: f64,
    /// Protection radius R0, meters.
    pub protection_radius: f64,
    /// SIR threshold, linear.
    pub gamma: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            lambda: 5e-5,
            k: 0.8,
            mu: 50.0,
            p_c: 0.1,
            p_i: 2e-4,
            alpha: 4.0,
            cell_radius: 500.0,
            protection_radius: 1.0,
            gamma: 1.0,
        }
    }
}

fn check(ok: bool, name: &'static str, value: f64, rule: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{rule}, got {value}")))
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        check(self.lambda >= 0.0 && self.lambda.is_finite(), "lambda", self.lambda, "must be finite and >= 0")?;
        check(self.k > 0.0 && self.k.is_finite(), "k", self.k, "must be finite and > 0")?;
        check(self.mu >= 0.0, "mu", self.mu, "must be >= 0")?;
        check(self.p_c > 0.0 && self.p_c.is_finite(), "p_c", self.p_c, "must be finite and > 0")?;
        check(self.p_i >= 0.0 && self.p_i.is_finite(), "p_i", self.p_i, "must be finite and >= 0")?;
        check(self.gamma > 0.0, "gamma", self.gamma, "must be > 0")?;
        check(
            self.protection_radius >= 0.0 && self.protection_radius < self.cell_radius && self.cell_radius.is_finite(),
            "protection_radius",
            self.protection_radius,
            "need 0 <= R0 < R with R finite",
        )?;
        if !(self.alpha > 2.0) {
            return Err(Error::Divergent { alpha: self.alpha });
        }
        Ok(())
    }

    /// Retention probability at these parameters.
    pub fn retention(&self) -> f64 {
        retention_value(self.k, self.lambda, self.mu)
    }
}

fn retention_value(k: f64, lambda: f64, mu: f64) -> f64 {
    -(-k * PI * lambda * mu * mu).exp_m1()
}

/// `1 - exp(-k pi lambda mu^2)`: probability that a candidate node is kept
/// as an active D2D interferer.
pub fn retention_probability(k: f64, lambda: f64, mu: f64) -> Result<f64> {
    check(k > 0.0, "k", k, "must be > 0")?;
    check(lambda >= 0.0, "lambda", lambda, "must be >= 0")?;
    check(mu >= 0.0, "mu", mu, "must be >= 0")?;
    Ok(retention_value(k, lambda, mu))
}

/// `integral_0^inf u / (1 + u^alpha) du = pi / (alpha sin(2 pi / alpha))`.
pub fn sinc_constant(alpha: f64) -> Result<f64> {
    if !(alpha > 2.0) {
        return Err(Error::Divergent { alpha });
    }
    if alpha.is_infinite() {
        // the integrand tends to u on [0, 1) and 0 beyond
        return Ok(0.5);
    }
    Ok(PI / (alpha * (2.0 * PI / alpha).sin()))
}

/// The same constant by direct adaptive quadrature.
pub fn sinc_constant_quadrature(alpha: f64) -> Result<f64> {
    if !(alpha > 2.0) {
        return Err(Error::Divergent { alpha });
    }
    let f = |u: f64| u / (1.0 + u.powf(alpha));
    let tol = Tolerance::relative(1e-12);
    let head = quadrature::integrate(f, 0.0, 1.0, tol)?;
    let tail = quadrature::integrate_to_infinity(f, 1.0, tol)?;
    Ok(head.value + tail.value)
}

/// Laplace transform of the aggregate interference at `s_c`, with
/// interferers integrated over the whole plane (`R0 -> 0`).
pub fn interference_laplace(s_c: f64, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    check(s_c >= 0.0, "s_c", s_c, "must be >= 0")?;
    let exponent = 2.0
        * PI
        * params.lambda
        * params.retention()
        * (s_c * params.p_i).powf(2.0 / params.alpha)
        * sinc_constant(params.alpha)?;
    Ok((-exponent).exp())
}

/// Laplace transform by quadrature of `integral_{R0}^inf x / (1 + x^alpha / (s_c p_i)) dx`,
/// keeping the protection radius.
pub fn interference_laplace_quadrature(s_c: f64, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    check(s_c >= 0.0, "s_c", s_c, "must be >= 0")?;
    let sp = s_c * params.p_i;
    if sp == 0.0 || params.lambda == 0.0 {
        return Ok(1.0);
    }
    let alpha = params.alpha;
    // split at the interference radius so the knee is resolved
    let knee = sp.powf(1.0 / alpha).max(params.protection_radius);
    let f = |x: f64| x / (1.0 + x.powf(alpha) / sp);
    let tol = Tolerance::relative(1e-12);
    let head = quadrature::integrate(f, params.protection_radius, knee, tol)?;
    let tail = quadrature::integrate_to_infinity(f, knee, tol)?;
    let exponent = 2.0 * PI * params.lambda * params.retention() * (head.value + tail.value);
    Ok((-exponent).exp())
}

/// Coefficient `c` such that the conditional coverage is `exp(-c r_c^2)`.
fn coverage_exponent(params: &ModelParams, retention: f64) -> Result<f64> {
    let alpha = params.alpha;
    Ok(2.0 * PI * PI * params.lambda * retention / (alpha * (2.0 * PI / alpha).sin())
        * (params.gamma / params.p_c).powf(2.0 / alpha)
        * params.p_i.powf(2.0 / alpha))
}

/// `integral_{R0}^{R} exp(-c r^2) 2 r / R^2 dr` in closed form.
fn radial_average(c: f64, r0: f64, r: f64) -> f64 {
    let span = r * r - r0 * r0;
    if c == 0.0 {
        return span / (r * r);
    }
    // exp(-c R0^2) - exp(-c R^2) = -exp(-c R0^2) expm1(-c (R^2 - R0^2))
    -(-c * r0 * r0).exp() * (-c * span).exp_m1() / (c * r * r)
}

/// Average coverage for general `alpha`, retention at the configured `k`.
pub fn coverage_general(params: &ModelParams) -> Result<f64> {
    coverage_general_with_retention(params, params.retention())
}

/// Average coverage with the retention probability overridden. A retention
/// of 1 gives the unthinned lower bound for any `alpha`.
pub fn coverage_general_with_retention(params: &ModelParams, retention: f64) -> Result<f64> {
    params.validate()?;
    check((0.0..=1.0).contains(&retention), "retention", retention, "must lie in [0, 1]")?;
    let c = coverage_exponent(params, retention)?;
    Ok(radial_average(c, params.protection_radius, params.cell_radius))
}

/// The same average by adaptive quadrature over `r_c`.
pub fn coverage_general_quadrature(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    let c = coverage_exponent(params, params.retention())?;
    let r = params.cell_radius;
    let est = quadrature::integrate(
        |x| (-c * x * x).exp() * 2.0 * x / (r * r),
        params.protection_radius,
        r,
        Tolerance::relative(1e-13),
    )?;
    Ok(est.value)
}

fn require_alpha4(params: &ModelParams) -> Result<()> {
    if params.alpha != 4.0 {
        return Err(Error::WrongSpecialization { alpha: params.alpha });
    }
    Ok(())
}

/// `(1 - exp(-A)) / A`, equal to 1 at `A = 0`.
fn one_minus_exp_over(a: f64) -> f64 {
    if a == 0.0 {
        1.0
    } else {
        -(-a).exp_m1() / a
    }
}

fn alpha4_load(params: &ModelParams, retention: f64) -> f64 {
    let r = params.cell_radius;
    PI * PI * r * r * params.lambda / 2.0 * (params.gamma * params.p_i / params.p_c).sqrt() * retention
}

/// Closed-form average coverage for `alpha = 4` with `R0 ~ 0`.
pub fn coverage_alpha4(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    require_alpha4(params)?;
    Ok(one_minus_exp_over(alpha4_load(params, params.retention())))
}

/// The `alpha = 4` closed form with every candidate transmitting.
pub fn coverage_lower_bound(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    require_alpha4(params)?;
    Ok(one_minus_exp_over(alpha4_load(params, 1.0)))
}

/// Thinned and unthinned analytic coverage, using the `alpha = 4` closed forms
/// when they apply and the general integral otherwise.
pub fn coverage_pair(params: &ModelParams) -> Result<(f64, f64)> {
    if params.alpha == 4.0 {
        Ok((coverage_alpha4(params)?, coverage_lower_bound(params)?))
    } else {
        Ok((coverage_general(params)?, coverage_general_with_retention(params, 1.0)?))
    }
}
