//! Empirical checks of the central limit behaviour of `n` independent angle
//! Brownian motions: bracket processes of
//! `S^(n) = n^{-1/2} int sum sin(B_k) dB_k` and its cosine analogue, and the
//! Gaussian limit of the centred free-end sum `Z^(n)`.
//!
//! Times are scaled: every `B_k` is a standard Brownian motion.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::montecarlo::run_replicates;
use crate::{Error, Result};

/// Default Euler step for the limit process.
pub const DEFAULT_CLT_DT: f64 = 1e-3;

/// Quadratic variations and covariation of `(S^(n), C^(n))` on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QvPath {
    pub times: Vec<f64>,
    pub qv_s: Vec<f64>,
    pub qv_c: Vec<f64>,
    pub qv_sc: Vec<f64>,
}

impl QvPath {
    /// Sup-norm distance of each bracket from [`theory_qv`] over the grid.
    pub fn sup_deviation(&self) -> (f64, f64, f64) {
        let mut out = (0.0f64, 0.0f64, 0.0f64);
        for (i, &t) in self.times.iter().enumerate() {
            let (s, c, sc) = theory_qv(t);
            out.0 = out.0.max((self.qv_s[i] - s).abs());
            out.1 = out.1.max((self.qv_c[i] - c).abs());
            out.2 = out.2.max((self.qv_sc[i] - sc).abs());
        }
        out
    }
}

fn check_grid(t_end: f64, dt: f64) -> Result<usize> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end = {t_end} must be >= 0")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt = {dt} must be > 0")));
    }
    Ok((t_end / dt).round() as usize)
}

/// Simulate `n` Brownian angles from 0 and accumulate left-point Riemann
/// sums of `(1/n) sum sin^2 B_k`, `(1/n) sum cos^2 B_k` and
/// `-(1/2n) sum sin 2B_k` on the grid `0, dt, ..., t_end`.
pub fn empirical_qv<R: Rng + ?Sized>(n: usize, t_end: f64, dt: f64, rng: &mut R) -> Result<QvPath> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let steps = check_grid(t_end, dt)?;
    let mut b = vec![0.0f64; n];
    let mut path = QvPath {
        times: Vec::with_capacity(steps + 1),
        qv_s: Vec::with_capacity(steps + 1),
        qv_c: Vec::with_capacity(steps + 1),
        qv_sc: Vec::with_capacity(steps + 1),
    };
    path.times.push(0.0);
    path.qv_s.push(0.0);
    path.qv_c.push(0.0);
    path.qv_sc.push(0.0);
    let (inv_n, sigma) = (1.0 / n as f64, dt.sqrt());
    for i in 1..=steps {
        let (mut ss, mut cc, mut sc) = (0.0, 0.0, 0.0);
        for x in b.iter_mut() {
            let (s, c) = x.sin_cos();
            ss += s * s;
            cc += c * c;
            sc += s * c;
            let z: f64 = rng.sample(StandardNormal);
            *x += sigma * z;
        }
        path.times.push(i as f64 * dt);
        path.qv_s.push(path.qv_s[i - 1] + dt * inv_n * ss);
        path.qv_c.push(path.qv_c[i - 1] + dt * inv_n * cc);
        path.qv_sc.push(path.qv_sc[i - 1] - dt * inv_n * sc);
    }
    Ok(path)
}

/// Limit brackets `(t/2 - (1 - e^{-2t})/4, t/2 + (1 - e^{-2t})/4, 0)`.
pub fn theory_qv(t: f64) -> (f64, f64, f64) {
    let half_decay = -0.25 * (-2.0 * t).exp_m1();
    (0.5 * t - half_decay, 0.5 * t + half_decay, 0.0)
}

/// Variances of the real and imaginary parts of the limit `Z_t`:
/// `e^{-t}(cosh t - 1)` and `e^{-t} sinh t`.
pub fn limit_variances(t: f64) -> (f64, f64) {
    let e = (-t).exp();
    let re = 0.5 * (1.0 + e * e) - e;
    let im = -0.5 * (-2.0 * t).exp_m1();
    (re, im)
}

/// One path of the limit `Z_t` on `0, dt, ..., t_end`, Euler with
/// volatilities at the left endpoint:
/// `Z_t = e^{-t/2} (int_0^t sqrt(sinh s) d delta_s + i int_0^t sqrt(cosh s) d delta'_s)`.
pub fn sample_limit_z<R: Rng + ?Sized>(t_end: f64, dt: f64, rng: &mut R) -> Result<Vec<Complex64>> {
    let steps = check_grid(t_end, dt)?;
    let mut path = Vec::with_capacity(steps + 1);
    path.push(Complex64::new(0.0, 0.0));
    let mut acc = Complex64::new(0.0, 0.0);
    let root_dt = dt.sqrt();
    for i in 0..steps {
        let s = i as f64 * dt;
        let (zr, zi): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        acc += Complex64::new(s.sinh().sqrt() * zr, s.cosh().sqrt() * zi) * root_dt;
        let t = (i + 1) as f64 * dt;
        path.push(acc * (-0.5 * t).exp());
    }
    Ok(path)
}

/// `replicates` independent draws of the limit at `t_end`, simulated as in
/// [`sample_limit_z`] with replicate `i` on stream `i` of `seed`.
pub fn sample_limit_terminal(
    t_end: f64,
    dt: f64,
    replicates: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<Complex64>> {
    let steps = check_grid(t_end, dt)?;
    let root_dt = dt.sqrt();
    let vol: Vec<(f64, f64)> = (0..steps)
        .map(|i| {
            let s = i as f64 * dt;
            (s.sinh().sqrt() * root_dt, s.cosh().sqrt() * root_dt)
        })
        .collect();
    let scale = (-0.5 * steps as f64 * dt).exp();
    Ok(run_replicates(seed, replicates, workers, |rng| {
        let (mut re, mut im) = (0.0, 0.0);
        for &(vr, vi) in &vol {
            let zr: f64 = rng.sample(StandardNormal);
            let zi: f64 = rng.sample(StandardNormal);
            re += vr * zr;
            im += vi * zi;
        }
        Complex64::new(re, im) * scale
    }))
}

/// Sample moments of complex draws, each with a standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMoments {
    pub count: usize,
    pub mean: Complex64,
    pub mean_stderr: (f64, f64),
    pub var_re: f64,
    pub var_re_stderr: f64,
    pub var_im: f64,
    pub var_im_stderr: f64,
    pub cov: f64,
    pub cov_stderr: f64,
}

/// Moments of `samples`. Variance standard errors use the fourth central
/// moment, `sqrt((m4 - s^4) / N)`.
pub fn complex_moments(samples: &[Complex64]) -> Result<ComplexMoments> {
    let count = samples.len();
    if count < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 samples, got {count}")));
    }
    let nf = count as f64;
    let mean = samples.iter().sum::<Complex64>() / nf;
    let (mut m2r, mut m2i, mut m4r, mut m4i, mut cov, mut cov2) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for z in samples {
        let d = z - mean;
        let (r2, i2, ri) = (d.re * d.re, d.im * d.im, d.re * d.im);
        m2r += r2;
        m2i += i2;
        m4r += r2 * r2;
        m4i += i2 * i2;
        cov += ri;
        cov2 += ri * ri;
    }
    let (var_re, var_im) = (m2r / (nf - 1.0), m2i / (nf - 1.0));
    let cov_mean = cov / nf;
    let moment_se = |m4: f64, m2: f64| ((m4 / nf - (m2 / nf).powi(2)).max(0.0) / nf).sqrt();
    Ok(ComplexMoments {
        count,
        mean,
        mean_stderr: ((var_re / nf).sqrt(), (var_im / nf).sqrt()),
        var_re,
        var_re_stderr: moment_se(m4r, m2r),
        var_im,
        var_im_stderr: moment_se(m4i, m2i),
        cov: cov / (nf - 1.0),
        cov_stderr: ((cov2 / nf - cov_mean * cov_mean).max(0.0) / nf).sqrt(),
    })
}

/// Moments of `Z^(n)_t` set against those of the limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZnReport {
    pub n: usize,
    pub t: f64,
    pub moments: ComplexMoments,
    pub limit_var_re: f64,
    pub limit_var_im: f64,
}

impl ZnReport {
    /// Differences (sample - limit) of mean, variances and covariance.
    pub fn mean_diff(&self) -> Complex64 {
        self.moments.mean
    }

    pub fn var_diff(&self) -> (f64, f64) {
        (self.moments.var_re - self.limit_var_re, self.moments.var_im - self.limit_var_im)
    }

    pub fn cov_diff(&self) -> f64 {
        self.moments.cov
    }

    /// Largest deviation in units of its standard error, over the two mean
    /// coordinates, the two variances and the covariance.
    pub fn max_z_score(&self) -> f64 {
        let m = &self.moments;
        let (dr, di) = self.var_diff();
        [
            m.mean.re / m.mean_stderr.0,
            m.mean.im / m.mean_stderr.1,
            dr / m.var_re_stderr,
            di / m.var_im_stderr,
            m.cov / m.cov_stderr,
        ]
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max)
    }
}

/// Build `Z^(n)_t = n^{-1/2} sum (e^{i B_k(t)} - e^{-t/2})` from `n` angles
/// started at 0, `replicates` times, and compare moments with the limit.
/// Only terminal angles matter, so each is drawn exactly from `N(0, t)`.
pub fn compare_zn_to_limit(n: usize, t: f64, replicates: usize, seed: u64, workers: usize) -> Result<ZnReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t = {t} must be > 0")));
    }
    let (sd, centre, norm) = (t.sqrt(), (-0.5 * t).exp(), (n as f64).sqrt().recip());
    let samples = run_replicates(seed, replicates, workers, |rng| {
        let mut z = Complex64::new(0.0, 0.0);
        for _ in 0..n {
            let b: f64 = rng.sample::<f64, _>(StandardNormal) * sd;
            let (s, c) = b.sin_cos();
            z += Complex64::new(c - centre, s);
        }
        z * norm
    });
    let (limit_var_re, limit_var_im) = limit_variances(t);
    Ok(ZnReport {
        n,
        t,
        moments: complex_moments(&samples)?,
        limit_var_re,
        limit_var_im,
    })
}
