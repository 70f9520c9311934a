//! Replicate harness, stopping-time estimators and Monte Carlo checks of the
//! hitting-time identities behind the asymptotic formulas.
//!
//! Replicate `i` of an estimate always draws from stream `i` of the master
//! seed (see [`crate::rng`]) and results are reduced in index order, so every
//! estimate is a pure function of its inputs and the seed, independent of the
//! number of worker threads.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::model::{InitialConfig, PolymerParams};
use crate::rng::{derive_seed, replicate_rng};
use crate::sde::{
    first_rotation_time, min_rotation_time, rotation_time_refinement, step_heuristic, StopKind, StopOutcome,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub replicates: usize,
    pub dt: f64,
    pub t_max: f64,
    pub seed: u64,
    /// Worker threads; 0 uses the global rayon pool.
    pub max_workers_hint: usize,
}

impl McConfig {
    pub fn new(replicates: usize, dt: f64, t_max: f64, seed: u64) -> Result<Self> {
        let mc = Self {
            replicates,
            dt,
            t_max,
            seed,
            max_workers_hint: 0,
        };
        mc.validate()?;
        Ok(mc)
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.max_workers_hint = workers;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_replicates(mut self, replicates: usize) -> Self {
        self.replicates = replicates;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be >= 1".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt = {} must be > 0", self.dt)));
        }
        if !(self.t_max > self.dt && self.t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_max = {} must exceed dt = {}",
                self.t_max, self.dt
            )));
        }
        Ok(())
    }
}

/// Sample mean of a stopping-time estimator with failure counters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n_used)`; absent for one sample.
    pub stderr: Option<f64>,
    pub n_used: usize,
    pub n_timeout: usize,
    pub n_origin_fail: usize,
}

impl McEstimate {
    pub fn replicates(&self) -> usize {
        self.n_used + self.n_timeout + self.n_origin_fail
    }

    /// Summarise `samples`; fails only when nothing was usable.
    pub fn from_samples(samples: &[f64], n_timeout: usize, n_origin_fail: usize) -> Result<Self> {
        let n = samples.len();
        if n == 0 {
            return Err(Error::AllReplicatesFailed(n_timeout + n_origin_fail));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = (n > 1).then(|| {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        });
        Ok(Self {
            mean,
            stderr,
            n_used: n,
            n_timeout,
            n_origin_fail,
        })
    }

    fn from_outcomes(outcomes: &[StopOutcome]) -> Result<Self> {
        let mut taus = Vec::with_capacity(outcomes.len());
        let (mut timeouts, mut origin) = (0, 0);
        for o in outcomes {
            match o.kind {
                StopKind::Hit { tau } => taus.push(tau),
                StopKind::Timeout => timeouts += 1,
                StopKind::OriginFailure => origin += 1,
            }
        }
        let est = Self::from_samples(&taus, timeouts, origin)?;
        if timeouts * 100 > outcomes.len() {
            log::warn!(
                "{timeouts} of {} replicates timed out; the mean is conditional on hitting",
                outcomes.len()
            );
        }
        Ok(est)
    }
}

/// Run `count` replicates of `f`, replicate `i` on stream `i` of `seed`.
/// Output is in replicate order.
pub fn run_replicates<T, F>(seed: u64, count: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    let job = || {
        (0..count as u64)
            .into_par_iter()
            .map(|i| f(&mut replicate_rng(seed, i)))
            .collect()
    };
    if workers == 0 {
        return job();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(job),
        Err(err) => {
            log::warn!("could not build a {workers}-thread pool ({err}); using the global pool");
            job()
        }
    }
}

fn collect_outcomes<F>(mc: &McConfig, seed: u64, f: F) -> Result<Vec<StopOutcome>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<StopOutcome> + Sync,
{
    run_replicates(seed, mc.replicates, mc.max_workers_hint, f)
        .into_iter()
        .collect()
}

fn warn_coarse_step(params: &PolymerParams, dt: f64) {
    let h = step_heuristic(params, dt);
    if h > 1.0 {
        log::warn!("sqrt(2 D dt) * n = {h:.3} is not small; winding increments are coarse");
    }
}

/// Mean first rotation time of the free end.
pub fn estimate_mrt(params: &PolymerParams, config: &InitialConfig, mc: &McConfig) -> Result<McEstimate> {
    mc.validate()?;
    config.check(params)?;
    warn_coarse_step(params, mc.dt);
    let outcomes = collect_outcomes(mc, mc.seed, |rng| {
        first_rotation_time(params, config, mc.dt, mc.t_max, rng)
    })?;
    McEstimate::from_outcomes(&outcomes)
}

/// Mean first time any eligible bead completes a rotation.
pub fn estimate_mmrt(params: &PolymerParams, config: &InitialConfig, mc: &McConfig) -> Result<McEstimate> {
    mc.validate()?;
    config.check(params)?;
    warn_coarse_step(params, mc.dt);
    let outcomes = collect_outcomes(mc, mc.seed, |rng| {
        min_rotation_time(params, config, mc.dt, mc.t_max, rng)
    })?;
    McEstimate::from_outcomes(&outcomes)
}

/// Rotation-time estimates at `dt` and `dt / 2` on shared Brownian paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementEstimate {
    pub coarse: McEstimate,
    pub fine: McEstimate,
    /// Pathwise `tau(dt) - tau(dt / 2)` over replicates where both hit.
    pub shift: McEstimate,
}

/// Estimate the effect of halving `mc.dt` on the chosen statistic.
pub fn estimate_refinement(
    params: &PolymerParams,
    config: &InitialConfig,
    statistic: Statistic,
    mc: &McConfig,
) -> Result<RefinementEstimate> {
    mc.validate()?;
    config.check(params)?;
    let track = statistic == Statistic::Mmrt;
    let pairs = run_replicates(mc.seed, mc.replicates, mc.max_workers_hint, |rng| {
        rotation_time_refinement(params, config, mc.dt, mc.t_max, track, rng)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (coarse, fine): (Vec<StopOutcome>, Vec<StopOutcome>) = pairs.iter().copied().unzip();
    let shifts: Vec<f64> = pairs
        .iter()
        .filter_map(|(a, b)| Some(a.tau()? - b.tau()?))
        .collect();
    Ok(RefinementEstimate {
        coarse: McEstimate::from_outcomes(&coarse)?,
        fine: McEstimate::from_outcomes(&fine)?,
        shift: McEstimate::from_samples(&shifts, mc.replicates - shifts.len(), 0)?,
    })
}

/// Raw parameters for sweeps; each point is validated separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamsTemplate {
    pub n: usize,
    pub diffusion: f64,
    pub offset: f64,
    pub rod_length: f64,
}

impl From<PolymerParams> for ParamsTemplate {
    fn from(p: PolymerParams) -> Self {
        Self {
            n: p.n(),
            diffusion: p.diffusion(),
            offset: p.offset(),
            rod_length: p.rod_length(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    N,
    Diffusion,
    Offset,
    Phi0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    /// First rotation of the free end.
    Mrt,
    /// First rotation of any eligible bead.
    Mmrt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub params: Option<PolymerParams>,
    pub result: Result<McEstimate>,
}

/// One estimate per value, in input order. Point `i` uses the master seed
/// `derive_seed(mc.seed, i)`. Infeasible points are returned as error rows.
pub fn sweep(
    template: &ParamsTemplate,
    axis: SweepAxis,
    values: &[f64],
    config: &InitialConfig,
    statistic: Statistic,
    mc: &McConfig,
) -> Vec<SweepRow> {
    values
        .iter()
        .enumerate()
        .map(|(i, &value)| {
            let point_mc = mc.with_seed(derive_seed(mc.seed, i as u64));
            let point = sweep_point(template, axis, value, config);
            let params = point.as_ref().ok().map(|(p, _)| *p);
            let result = point.and_then(|(p, cfg)| match statistic {
                Statistic::Mrt => estimate_mrt(&p, &cfg, &point_mc),
                Statistic::Mmrt => estimate_mmrt(&p, &cfg, &point_mc),
            });
            SweepRow { value, params, result }
        })
        .collect()
}

fn sweep_point(
    t: &ParamsTemplate,
    axis: SweepAxis,
    value: f64,
    config: &InitialConfig,
) -> Result<(PolymerParams, InitialConfig)> {
    let mut config = config.clone();
    let params = match axis {
        SweepAxis::N => {
            if !(value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                return Err(Error::InvalidParameter(format!("n = {value} is not a positive integer")));
            }
            PolymerParams::new(value as usize, t.diffusion, t.offset, t.rod_length)?
        }
        SweepAxis::Diffusion => PolymerParams::new(t.n, value, t.offset, t.rod_length)?,
        SweepAxis::Offset => PolymerParams::new(t.n, t.diffusion, value, t.rod_length)?,
        SweepAxis::Phi0 => {
            config = InitialConfig::BoundaryLayer { phi0: value };
            PolymerParams::new(t.n, t.diffusion, t.offset, t.rod_length)?
        }
    };
    config.check(&params)?;
    Ok((params, config))
}

/// Exit times of a standard 1-D Brownian motion from `(-c, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitTimes {
    pub times: Vec<f64>,
    pub n_timeout: usize,
}

/// Simulate exit times from `(-c, c)` started at 0 with step `mc.dt`.
///
/// Each step that stays inside is killed with the Brownian-bridge probability
/// of having touched either barrier in between, which removes the leading
/// discrete-monitoring bias.
pub fn exit_times(c: f64, mc: &McConfig) -> Result<ExitTimes> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("c = {c} must be > 0")));
    }
    mc.validate()?;
    let (dt, t_max) = (mc.dt, mc.t_max);
    let max_steps = (t_max / dt).ceil() as u64;
    let sd = dt.sqrt();
    let outcomes = run_replicates(mc.seed, mc.replicates, mc.max_workers_hint, |rng| {
        let mut x = 0.0f64;
        for step in 0..max_steps {
            let t = step as f64 * dt;
            let z: f64 = rng.sample(StandardNormal);
            let y = x + sd * z;
            if y.abs() >= c {
                let barrier = c.copysign(y);
                let frac = ((barrier - x) / (y - x)).clamp(0.0, 1.0);
                return Some(t + frac * dt);
            }
            let p_up = (-2.0 * (c - x) * (c - y) / dt).exp();
            let p_down = (-2.0 * (c + x) * (c + y) / dt).exp();
            let p = 1.0 - (1.0 - p_up) * (1.0 - p_down);
            let u: f64 = rng.random();
            if u < p {
                return Some(t + 0.5 * dt);
            }
            x = y;
        }
        None
    });
    let n_timeout = outcomes.iter().filter(|o| o.is_none()).count();
    Ok(ExitTimes {
        times: outcomes.into_iter().flatten().collect(),
        n_timeout,
    })
}

/// Sample mean of `exp(-y^2 T / 2)` over the given exit times.
pub fn laplace_transform_estimate(exits: &ExitTimes, y: f64) -> Result<McEstimate> {
    let values: Vec<f64> = exits.times.iter().map(|&t| (-0.5 * y * y * t).exp()).collect();
    McEstimate::from_samples(&values, exits.n_timeout, 0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceCheck {
    pub empirical: McEstimate,
    /// `1 / cosh(y c)`.
    pub analytic: f64,
}

/// Compare the simulated Laplace transform of the exit time from `(-c, c)`
/// against `1 / cosh(y c)`.
pub fn laplace_check(c: f64, y: f64, mc: &McConfig) -> Result<LaplaceCheck> {
    if !(y >= 0.0 && y.is_finite()) {
        return Err(Error::InvalidParameter(format!("y = {y} must be >= 0")));
    }
    let exits = exit_times(c, mc)?;
    Ok(LaplaceCheck {
        empirical: laplace_transform_estimate(&exits, y)?,
        analytic: (y * c).cosh().recip(),
    })
}

/// `E[1/A_t]` at two resolutions of the same Brownian paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFunctionalEstimate {
    /// Trapezoid rule at step `dt`.
    pub fine: McEstimate,
    /// Trapezoid rule at step `2 dt`, from every other node of the same path.
    pub coarse_mean: f64,
    /// Step actually used (`t` divided by an even step count).
    pub dt: f64,
}

impl ExpFunctionalEstimate {
    /// Change of the estimate under step doubling.
    pub fn refinement_shift(&self) -> f64 {
        (self.fine.mean - self.coarse_mean).abs()
    }
}

/// Monte Carlo `E[1/A_t]` with `A_t = int_0^t exp(2 beta_s) ds` for a
/// standard Brownian motion `beta` started at 0.
pub fn exp_functional_inverse_moment(t: f64, mc: &McConfig) -> Result<McEstimate> {
    exp_functional_refinement(t, mc).map(|e| e.fine)
}

/// As [`exp_functional_inverse_moment`], also reporting the coarse-grid value.
pub fn exp_functional_refinement(t: f64, mc: &McConfig) -> Result<ExpFunctionalEstimate> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t = {t} must be > 0")));
    }
    if mc.replicates == 0 || !(mc.dt > 0.0) {
        return Err(Error::InvalidParameter("replicates >= 1 and dt > 0 required".into()));
    }
    let mut steps = ((t / mc.dt).round() as usize).max(2);
    steps += steps % 2;
    let dt = t / steps as f64;
    let sd = dt.sqrt();
    let pairs = run_replicates(mc.seed, mc.replicates, mc.max_workers_hint, |rng| {
        let mut beta = 0.0f64;
        // Interior node sums, split by parity for the coarse grid.
        let (mut even, mut odd) = (0.0f64, 0.0f64);
        for i in 1..steps {
            let z: f64 = rng.sample(StandardNormal);
            beta += sd * z;
            let e = (2.0 * beta).exp();
            if i % 2 == 0 {
                even += e;
            } else {
                odd += e;
            }
        }
        let z: f64 = rng.sample(StandardNormal);
        beta += sd * z;
        let ends = 1.0 + (2.0 * beta).exp();
        let fine = dt * (0.5 * ends + even + odd);
        let coarse = 2.0 * dt * (0.5 * ends + even);
        (fine.recip(), coarse.recip())
    });
    let fine: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let coarse_mean = pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64;
    Ok(ExpFunctionalEstimate {
        fine: McEstimate::from_samples(&fine, 0, 0)?,
        coarse_mean,
        dt,
    })
}

/// Times for a planar Brownian motion started at `1 + 0i` to wind to angle
/// `c` in absolute value.
///
/// Simulated in log-polar coordinates: `log|B|` and the winding angle are
/// independent standard Brownian motions run on the clock `H`, and real time
/// is `int exp(2 log|B|) dH`, integrated by the trapezoid rule with clock step
/// `mc.dt`. Exits of the angle use the same bridge correction as
/// [`exit_times`]; `mc.t_max` caps the clock.
pub fn winding_time_samples(c: f64, mc: &McConfig) -> Result<ExitTimes> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("c = {c} must be > 0")));
    }
    mc.validate()?;
    let dh = mc.dt;
    let sd = dh.sqrt();
    let max_steps = (mc.t_max / dh).ceil() as u64;
    let outcomes = run_replicates(mc.seed, mc.replicates, mc.max_workers_hint, |rng| {
        let (mut radial, mut angle, mut elapsed) = (0.0f64, 0.0f64, 0.0f64);
        let mut speed = 1.0f64;
        for _ in 0..max_steps {
            let zr: f64 = rng.sample(StandardNormal);
            let za: f64 = rng.sample(StandardNormal);
            let next_radial = radial + sd * zr;
            let next_angle = angle + sd * za;
            let frac = if next_angle.abs() >= c {
                Some(((c.copysign(next_angle) - angle) / (next_angle - angle)).clamp(0.0, 1.0))
            } else {
                let p_up = (-2.0 * (c - angle) * (c - next_angle) / dh).exp();
                let p_down = (-2.0 * (c + angle) * (c + next_angle) / dh).exp();
                let p = 1.0 - (1.0 - p_up) * (1.0 - p_down);
                let u: f64 = rng.random();
                (u < p).then_some(0.5)
            };
            if let Some(f) = frac {
                let mid = (2.0 * (radial + f * (next_radial - radial))).exp();
                return Some(elapsed + 0.5 * f * dh * (speed + mid));
            }
            let next_speed = (2.0 * next_radial).exp();
            elapsed += 0.5 * dh * (speed + next_speed);
            radial = next_radial;
            angle = next_angle;
            speed = next_speed;
        }
        None
    });
    let n_timeout = outcomes.iter().filter(|o| o.is_none()).count();
    Ok(ExitTimes {
        times: outcomes.into_iter().flatten().collect(),
        n_timeout,
    })
}
