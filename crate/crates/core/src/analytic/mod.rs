//! Special integrals behind the mean-rotation-time asymptotics, and the
//! asymptotic formulas themselves.
//!
//! For a planar Brownian motion started at `1 + 0i`, let `T_c` be the first
//! time its winding angle reaches `c` in absolute value. Then
//!
//! * `E[ln T_c] = 2 F(c) + ln 2 + c_E` with
//!   `F(c) = int_0^inf ln(sinh(c z)) / cosh(pi z / 2) dz`,
//! * `E[1 / T_c] = G(c) = int_0^inf y coth(pi y / 2) / cosh(c y) dy`.
//!
//! Every integral here can be evaluated by either [`Scheme`]; the two routes
//! share only the integrand definitions and the tail cutoff.

pub mod quadrature;

use std::f64::consts::{FRAC_PI_2, LN_2, PI, TAU};

use num_complex::Complex64;

pub use quadrature::{QuadratureSpec, Scheme};
use quadrature::{integrate_panels, tail_cutoff};

use crate::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {x} must be > 0")))
    }
}

/// `1 / cosh(x)` without overflow.
fn sech(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// `ln(sinh(x))` for `x > 0`.
fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - LN_2 + (-(-2.0 * x).exp()).ln_1p()
    } else {
        x.sinh().ln()
    }
}

/// `ln(sinh(x) / x)`, smooth through `x = 0`.
fn ln_sinhc(x: f64) -> f64 {
    if x < 1e-3 {
        let x2 = x * x;
        x2 / 6.0 - x2 * x2 / 180.0
    } else {
        ln_sinh(x) - x.ln()
    }
}

/// `y / tanh(a y)`, with limit `1/a` at 0.
fn y_coth(a: f64, y: f64) -> f64 {
    let ay = a * y;
    if ay.abs() < 1e-4 {
        (1.0 + ay * ay / 3.0) / a
    } else {
        y / ay.tanh()
    }
}

/// Antiderivative of `sech(pi z / 2)` vanishing at 0.
fn sech_primitive(z: f64) -> f64 {
    4.0 / PI * (PI * z / 4.0).tanh().atan()
}

/// Breakpoints `0, 1, 2, 4, ...` up to `end`.
fn panels(end: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    let mut x = 1.0;
    while x < end {
        breaks.push(x);
        x *= 2.0;
    }
    breaks.push(end.max(1.0));
    if breaks.len() >= 2 && breaks[breaks.len() - 2] == breaks[breaks.len() - 1] {
        breaks.pop();
    }
    breaks
}

/// `F(c) = int_0^inf ln(sinh(c z)) sech(pi z / 2) dz`.
pub fn f_integral(c: f64, spec: &QuadratureSpec) -> Result<f64> {
    f_integral_with(c, spec, Scheme::GaussKronrod)
}

/// [`f_integral`] by the chosen scheme.
///
/// The Gauss-Kronrod route removes the logarithmic singularity at 0: on
/// `[0, 1]` it writes `ln sinh(cz) = ln(cz) + ln(sinh(cz) / (cz))` and
/// integrates `sech(pi z / 2) ln z` by parts against the closed-form
/// primitive `S` of the sech factor, leaving smooth integrands. The
/// tanh-sinh route integrates the raw integrand.
pub fn f_integral_with(c: f64, spec: &QuadratureSpec, scheme: Scheme) -> Result<f64> {
    check_positive("c", c)?;
    spec.validate()?;
    let envelope = |z: f64| 2.0 * (-FRAC_PI_2 * z).exp() * (c * z + 1.0);
    let z_max = tail_cutoff(envelope, 1.0, spec.truncation_cutoff);
    let raw = |z: f64| sech(FRAC_PI_2 * z) * ln_sinh(c * z);
    let breaks = panels(z_max);
    match scheme {
        Scheme::GaussKronrod => {
            let head = |z: f64| {
                let s_over_z = if z < 1e-8 { 1.0 } else { sech_primitive(z) / z };
                sech(FRAC_PI_2 * z) * ln_sinhc(c * z) - s_over_z
            };
            let near = quadrature::gauss_kronrod(&head, 0.0, 1.0, spec)?.value + c.ln() * sech_primitive(1.0);
            let far = integrate_panels(raw, &breaks[1..], spec, scheme)?.value;
            Ok(near + far)
        }
        Scheme::TanhSinh => Ok(integrate_panels(raw, &breaks, spec, scheme)?.value),
    }
}

/// `F'(a) = int_0^inf z coth(a z) sech(pi z / 2) dz`, differentiated under
/// the integral sign.
pub fn f_derivative(a: f64, spec: &QuadratureSpec, scheme: Scheme) -> Result<f64> {
    check_positive("a", a)?;
    spec.validate()?;
    let envelope = |z: f64| 2.0 * (-FRAC_PI_2 * z).exp() * (z + 1.0 / a);
    let z_max = tail_cutoff(envelope, 1.0, spec.truncation_cutoff);
    let integrand = |z: f64| y_coth(a, z) * sech(FRAC_PI_2 * z);
    Ok(integrate_panels(integrand, &panels(z_max), spec, scheme)?.value)
}

/// `G(c) = int_0^inf y coth(pi y / 2) / cosh(c y) dy`; the integrand tends to
/// `2 / pi` at 0.
pub fn g_integral(c: f64, spec: &QuadratureSpec) -> Result<f64> {
    g_integral_with(c, spec, Scheme::GaussKronrod)
}

pub fn g_integral_with(c: f64, spec: &QuadratureSpec, scheme: Scheme) -> Result<f64> {
    check_positive("c", c)?;
    spec.validate()?;
    let envelope = |y: f64| 2.0 * (-c * y).exp() * (y + 1.0);
    let y_max = tail_cutoff(envelope, 1.0, spec.truncation_cutoff);
    Ok(integrate_panels(|y| g_integrand(c, y), &panels(y_max), spec, scheme)?.value)
}

/// Integrand of [`g_integral`].
pub fn g_integrand(c: f64, y: f64) -> f64 {
    y_coth(FRAC_PI_2, y) * sech(c * y)
}

/// Smallest `t` at which [`neg_moment_a`] is evaluated; `E[1/A_t] ~ 1/t`
/// below it.
pub const NEG_MOMENT_MIN_T: f64 = 1e-4;

/// `E[1/A_t] = int_0^inf y exp(-y^2 t / 2) coth(pi y / 2) dy` for
/// `A_t = int_0^t exp(2 beta_s) ds`.
pub fn neg_moment_a(t: f64, spec: &QuadratureSpec) -> Result<f64> {
    neg_moment_a_with(t, spec, Scheme::GaussKronrod)
}

pub fn neg_moment_a_with(t: f64, spec: &QuadratureSpec, scheme: Scheme) -> Result<f64> {
    check_positive("t", t)?;
    if t < NEG_MOMENT_MIN_T {
        return Err(Error::InvalidParameter(format!(
            "t = {t} below {NEG_MOMENT_MIN_T}: E[1/A_t] diverges like 1/t"
        )));
    }
    spec.validate()?;
    let envelope = |y: f64| (-0.5 * y * y * t).exp() * (y + 1.0);
    let y_max = tail_cutoff(envelope, 1.0, spec.truncation_cutoff);
    let integrand = |y: f64| y_coth(FRAC_PI_2, y) * (-0.5 * y * y * t).exp();
    Ok(integrate_panels(integrand, &panels(y_max), spec, scheme)?.value)
}

/// Constants of the mean-rotation-time asymptotics, all from quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrtConstants {
    pub f_2pi: f64,
    pub g_2pi: f64,
    /// `2 F(2 pi) + 2 ln 2 + c_E`.
    pub q: f64,
    /// `Q + G(2 pi) / 2`.
    pub q_tilde: f64,
    pub euler_gamma: f64,
}

pub fn constants(spec: &QuadratureSpec) -> Result<MrtConstants> {
    let f_2pi = f_integral(TAU, spec)?;
    let g_2pi = g_integral(TAU, spec)?;
    let q = 2.0 * f_2pi + 2.0 * LN_2 + EULER_GAMMA;
    Ok(MrtConstants {
        f_2pi,
        g_2pi,
        q,
        q_tilde: q + 0.5 * g_2pi,
        euler_gamma: EULER_GAMMA,
    })
}

fn check_formula_domain(n: usize, diffusion: f64) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("asymptotics need n >= 3, got {n}")));
    }
    check_positive("D", diffusion)
}

/// Asymptotic mean rotation time (physical units) for mean initial
/// configuration constant `c_n`:
/// `sqrt(n)/(8D) * [2 ln(|c_n|/sqrt(n)) + (G(2pi)/2) n/|c_n|^2 + Q]`.
pub fn mrt_general(n: usize, diffusion: f64, c_n: Complex64, k: &MrtConstants) -> Result<f64> {
    check_formula_domain(n, diffusion)?;
    let modulus = c_n.norm();
    if !(modulus > 0.0) {
        return Err(Error::InvalidParameter(
            "c_n = 0: use the uniform-start formula".into(),
        ));
    }
    let nf = n as f64;
    let bracket = 2.0 * (modulus / nf.sqrt()).ln() + 0.5 * k.g_2pi * nf / (modulus * modulus) + k.q;
    Ok(nf.sqrt() / (8.0 * diffusion) * bracket)
}

/// Stretched start, `c_n = n`.
pub fn mrt_stretched(n: usize, diffusion: f64, k: &MrtConstants) -> Result<f64> {
    mrt_general(n, diffusion, Complex64::new(n as f64, 0.0), k)
}

/// Uniformly distributed initial angles: `sqrt(n)/(8D) * Q_tilde`.
pub fn mrt_uniform(n: usize, diffusion: f64, k: &MrtConstants) -> Result<f64> {
    check_formula_domain(n, diffusion)?;
    Ok((n as f64).sqrt() / (8.0 * diffusion) * k.q_tilde)
}

/// Clock `(e^{2t} - 1) / 2` turning a Brownian motion into an
/// Ornstein-Uhlenbeck process.
pub fn ou_clock(t: f64) -> f64 {
    0.5 * (2.0 * t).exp_m1()
}

/// Inverse of [`ou_clock`]: `ln(1 + 2t) / 2`.
pub fn ou_clock_inverse(t: f64) -> f64 {
    0.5 * (2.0 * t).ln_1p()
}

/// Mean winding time of the Ornstein-Uhlenbeck process from samples of the
/// Brownian winding time: `ln 2 / 4 + mean(ln(T + 1/2)) / 4`.
pub fn ou_hitting_expectation(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no winding-time samples".into()));
    }
    if let Some(bad) = samples.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::InvalidParameter(format!("winding time {bad} is negative")));
    }
    let mean_log = samples.iter().map(|t| (t + 0.5).ln()).sum::<f64>() / samples.len() as f64;
    Ok(0.25 * LN_2 + 0.25 * mean_log)
}

/// Limit variances of the two Gaussian martingales
/// `int (sqrt(sinh s) - e^{s/2}/sqrt 2) d delta_s` and its `cosh` analogue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropositionVariances {
    pub v1: f64,
    pub v2: f64,
    /// `(pi - 3) / 2`.
    pub v1_closed: f64,
    /// `sqrt 2 - 1/2 - ln(1 + sqrt 2)`.
    pub v2_closed: f64,
}

/// `-1 + 2 sqrt 2 - 2 asinh(1)`, a closed form in circulation for `v2`; it is
/// exactly twice the true value.
pub fn v2_doubled_closed_form() -> f64 {
    -1.0 + 2.0 * std::f64::consts::SQRT_2 - 2.0 * 1f64.asinh()
}

pub fn proposition_variances(spec: &QuadratureSpec) -> Result<PropositionVariances> {
    proposition_variances_with(spec, Scheme::GaussKronrod)
}

pub fn proposition_variances_with(spec: &QuadratureSpec, scheme: Scheme) -> Result<PropositionVariances> {
    spec.validate()?;
    let s_max = tail_cutoff(|s: f64| 0.5 * (-3.0 * s).exp(), 1.0, spec.truncation_cutoff);
    let breaks = panels(s_max);
    let v1 = integrate_panels(variance_integrand_sinh, &breaks, spec, scheme)?.value;
    let v2 = integrate_panels(variance_integrand_cosh, &breaks, spec, scheme)?.value;
    Ok(PropositionVariances {
        v1,
        v2,
        v1_closed: 0.5 * (PI - 3.0),
        v2_closed: std::f64::consts::SQRT_2 - 0.5 - std::f64::consts::SQRT_2.ln_1p(),
    })
}

/// `(sqrt(sinh s) - e^{s/2}/sqrt 2)^2`, written without cancellation as
/// `e^{-3s} / (2 (1 + sqrt(1 - e^{-2s}))^2)`.
pub fn variance_integrand_sinh(s: f64) -> f64 {
    let root = (-(-2.0 * s).exp_m1()).max(0.0).sqrt();
    0.5 * (-3.0 * s).exp() / (1.0 + root).powi(2)
}

/// `(sqrt(cosh s) - e^{s/2}/sqrt 2)^2 = e^{-3s} / (2 (1 + sqrt(1 + e^{-2s}))^2)`.
pub fn variance_integrand_cosh(s: f64) -> f64 {
    let root = (1.0 + (-2.0 * s).exp()).sqrt();
    0.5 * (-3.0 * s).exp() / (1.0 + root).powi(2)
}

/// `|a F'(a) - c G(c)|` with `a = pi^2 / (4c)`.
pub fn fg_identity_residual(c: f64, spec: &QuadratureSpec) -> Result<f64> {
    fg_identity_residual_with(c, spec, Scheme::GaussKronrod)
}

pub fn fg_identity_residual_with(c: f64, spec: &QuadratureSpec, scheme: Scheme) -> Result<f64> {
    check_positive("c", c)?;
    let a = PI * PI / (4.0 * c);
    let lhs = a * f_derivative(a, spec, scheme)?;
    let rhs = c * g_integral_with(c, spec, scheme)?;
    Ok((lhs - rhs).abs())
}
