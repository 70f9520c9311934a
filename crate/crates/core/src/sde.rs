//! Brownian evolution of the rod angles and first-rotation stopping times.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::model::{chain_windings, fill_positions, free_end_winding, InitialConfig, PolymerParams};
use crate::{Error, Result};

/// Default physical time step.
pub const DEFAULT_DT: f64 = 0.01;

/// Angles, free-end position and accumulated winding of one polymer path.
#[derive(Debug, Clone)]
pub struct WindingState {
    pub t: f64,
    pub angles: Vec<f64>,
    pub free_end: Complex64,
    /// Continuous winding angle of the free end around the origin.
    pub phi: f64,
    /// Continuous winding angle of each eligible bead, in the order of
    /// [`WindingState::tracked_beads`]. `None` unless bead tracking is on.
    pub per_bead_phi: Option<Vec<f64>>,
    tracked: Vec<usize>,
    positions: Vec<Complex64>,
    prev_positions: Vec<Complex64>,
}

impl WindingState {
    /// Build the state at `t = 0`. With `track_beads`, every bead with
    /// `k * l0 > L` also carries its own winding angle.
    pub fn new(angles: Vec<f64>, params: &PolymerParams, track_beads: bool) -> Result<Self> {
        if angles.len() != params.n() {
            return Err(Error::LengthMismatch {
                expected: params.n(),
                got: angles.len(),
            });
        }
        let mut positions = Vec::with_capacity(angles.len());
        fill_positions(&angles, params, &mut positions);
        let windings = chain_windings(&positions, params)?;
        let phi = windings[params.n() - 1];
        let (tracked, per_bead_phi) = if track_beads {
            let tracked: Vec<usize> = params.eligible_beads().collect();
            let phis = tracked.iter().map(|&k| windings[k - 1]).collect();
            (tracked, Some(phis))
        } else {
            (Vec::new(), None)
        };
        Ok(Self {
            t: 0.0,
            free_end: positions[params.n() - 1],
            angles,
            phi,
            per_bead_phi,
            tracked,
            prev_positions: positions.clone(),
            positions,
        })
    }

    /// 1-based indices of the beads whose winding is tracked.
    pub fn tracked_beads(&self) -> &[usize] {
        &self.tracked
    }

    pub fn positions(&self) -> &[Complex64] {
        &self.positions
    }
}

/// Advance every angle by an independent `Normal(0, 2 D dt)` increment and
/// update the winding accumulators.
///
/// Positions are recomputed from the angles, never drifted. Returns
/// [`Error::OriginFailure`] if a tracked point comes within `1e-9 * l0` of
/// the origin; the state is then left at the new angles with stale windings.
pub fn evolve_step<R: Rng + ?Sized>(
    state: &mut WindingState,
    params: &PolymerParams,
    dt: f64,
    rng: &mut R,
) -> Result<()> {
    check_dt(dt)?;
    let sigma = (2.0 * params.diffusion() * dt).sqrt();
    for theta in state.angles.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *theta += sigma * z;
    }
    advance(state, params, dt)
}

/// As [`evolve_step`] with caller-supplied angle increments.
pub fn apply_increments(
    state: &mut WindingState,
    params: &PolymerParams,
    dt: f64,
    increments: &[f64],
) -> Result<()> {
    check_dt(dt)?;
    if increments.len() != state.angles.len() {
        return Err(Error::LengthMismatch {
            expected: state.angles.len(),
            got: increments.len(),
        });
    }
    state.angles.iter_mut().zip(increments).for_each(|(t, d)| *t += d);
    advance(state, params, dt)
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("dt = {dt} must be > 0")))
    }
}

fn advance(state: &mut WindingState, params: &PolymerParams, dt: f64) -> Result<()> {
    std::mem::swap(&mut state.positions, &mut state.prev_positions);
    fill_positions(&state.angles, params, &mut state.positions);

    let eps = params.origin_eps();
    let n = params.n();
    let next_end = state.positions[n - 1];
    state.phi += winding_increment(state.free_end, next_end, eps)?;
    state.free_end = next_end;
    if let Some(phis) = state.per_bead_phi.as_mut() {
        for (phi, &k) in phis.iter_mut().zip(&state.tracked) {
            *phi += winding_increment(state.prev_positions[k - 1], state.positions[k - 1], eps)?;
        }
    }
    state.t += dt;
    Ok(())
}

/// Principal argument of `next / prev`, in `(-pi, pi]`.
pub fn winding_increment(prev: Complex64, next: Complex64, eps: f64) -> Result<f64> {
    if prev.norm() <= eps || next.norm() <= eps {
        return Err(Error::OriginFailure(eps));
    }
    let ratio = next * prev.conj();
    let angle = ratio.im.atan2(ratio.re);
    // atan2(-0.0, x < 0) yields -pi; keep the half-open convention.
    Ok(if angle == -PI { PI } else { angle })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopKind {
    /// Rotation completed at physical time `tau`.
    Hit { tau: f64 },
    Timeout,
    OriginFailure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopOutcome {
    pub kind: StopKind,
    pub steps: u64,
}

impl StopOutcome {
    pub fn tau(&self) -> Option<f64> {
        match self.kind {
            StopKind::Hit { tau } => Some(tau),
            _ => None,
        }
    }
}

/// Size of one step of the free end measured in angle units,
/// `sqrt(2 D dt) * n`. Winding tracking is reliable when this is well below 1.
pub fn step_heuristic(params: &PolymerParams, dt: f64) -> f64 {
    (2.0 * params.diffusion() * dt).sqrt() * params.n() as f64
}

/// First time the free end's winding reaches `2 pi` in absolute value.
pub fn first_rotation_time<R: Rng + ?Sized>(
    params: &PolymerParams,
    config: &InitialConfig,
    dt: f64,
    t_max: f64,
    rng: &mut R,
) -> Result<StopOutcome> {
    check_times(dt, t_max)?;
    let angles = config.realize(params, rng)?;
    let state = WindingState::new(angles, params, false)?;
    run_until_rotation(state, params, dt, t_max, rng)
}

/// First time any eligible bead (`k * l0 > L`) completes a turn.
pub fn min_rotation_time<R: Rng + ?Sized>(
    params: &PolymerParams,
    config: &InitialConfig,
    dt: f64,
    t_max: f64,
    rng: &mut R,
) -> Result<StopOutcome> {
    check_times(dt, t_max)?;
    let angles = config.realize(params, rng)?;
    let state = WindingState::new(angles, params, true)?;
    run_until_rotation(state, params, dt, t_max, rng)
}

fn check_times(dt: f64, t_max: f64) -> Result<()> {
    check_dt(dt)?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_max = {t_max} must be > 0")));
    }
    Ok(())
}

/// Stepping loop that watches for the first rotation. With bead tracking
/// on, the watched set is the tracked beads; otherwise the free end alone.
struct RotationWatch {
    state: WindingState,
    prev: Vec<f64>,
    dt: f64,
    steps: u64,
    outcome: Option<StopOutcome>,
}

impl RotationWatch {
    fn new(state: WindingState, dt: f64) -> Result<Self> {
        let prev = watched(&state);
        if let Some(&phi) = prev.iter().find(|phi| phi.abs() >= TAU) {
            return Err(Error::WindingStart(phi.abs()));
        }
        Ok(Self {
            state,
            prev,
            dt,
            steps: 0,
            outcome: None,
        })
    }

    /// Record the result of one step; `stepped` is what the step returned.
    fn observe(&mut self, stepped: Result<()>) -> Result<()> {
        self.steps += 1;
        if let Err(err) = stepped {
            return match err {
                Error::OriginFailure(_) => {
                    self.outcome = Some(StopOutcome {
                        kind: StopKind::OriginFailure,
                        steps: self.steps,
                    });
                    Ok(())
                }
                other => Err(other),
            };
        }
        let next = watched(&self.state);
        let crossing = self
            .prev
            .iter()
            .zip(&next)
            .filter(|(_, b)| b.abs() >= TAU)
            .map(|(a, b)| ((TAU - a.abs()) / (b.abs() - a.abs())).clamp(0.0, 1.0))
            .fold(None, |acc: Option<f64>, f| Some(acc.map_or(f, |m| m.min(f))));
        if let Some(frac) = crossing {
            self.outcome = Some(StopOutcome {
                kind: StopKind::Hit {
                    tau: (self.steps - 1) as f64 * self.dt + frac * self.dt,
                },
                steps: self.steps,
            });
        }
        self.prev = next;
        Ok(())
    }

    fn timeout(&self) -> StopOutcome {
        StopOutcome {
            kind: StopKind::Timeout,
            steps: self.steps,
        }
    }
}

fn run_until_rotation<R: Rng + ?Sized>(
    state: WindingState,
    params: &PolymerParams,
    dt: f64,
    t_max: f64,
    rng: &mut R,
) -> Result<StopOutcome> {
    let mut watch = RotationWatch::new(state, dt)?;
    let max_steps = (t_max / dt).ceil() as u64;
    while watch.steps < max_steps {
        let stepped = evolve_step(&mut watch.state, params, dt, rng);
        watch.observe(stepped)?;
        if let Some(outcome) = watch.outcome {
            return Ok(outcome);
        }
    }
    Ok(watch.timeout())
}

fn watched(state: &WindingState) -> Vec<f64> {
    match &state.per_bead_phi {
        Some(phis) => phis.clone(),
        None => vec![state.phi],
    }
}

/// Stopping times at steps `dt` and `dt / 2` driven by the same Brownian
/// path: each coarse increment is the sum of two fine ones. Returns
/// `(coarse, fine)`; their difference isolates the discretization effect.
pub fn rotation_time_refinement<R: Rng + ?Sized>(
    params: &PolymerParams,
    config: &InitialConfig,
    dt: f64,
    t_max: f64,
    track_beads: bool,
    rng: &mut R,
) -> Result<(StopOutcome, StopOutcome)> {
    check_times(dt, t_max)?;
    let angles = config.realize(params, rng)?;
    let start = WindingState::new(angles, params, track_beads)?;
    let mut coarse = RotationWatch::new(start.clone(), dt)?;
    let mut fine = RotationWatch::new(start, 0.5 * dt)?;
    let n = params.n();
    let sigma = (params.diffusion() * dt).sqrt();
    let (mut first, mut second, mut sum) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let max_steps = (t_max / dt).ceil() as u64;
    for _ in 0..max_steps {
        if coarse.outcome.is_some() && fine.outcome.is_some() {
            break;
        }
        for k in 0..n {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            first[k] = sigma * z1;
            second[k] = sigma * z2;
            sum[k] = first[k] + second[k];
        }
        if coarse.outcome.is_none() {
            let stepped = apply_increments(&mut coarse.state, params, dt, &sum);
            coarse.observe(stepped)?;
        }
        for half in [&first, &second] {
            if fine.outcome.is_none() {
                let stepped = apply_increments(&mut fine.state, params, 0.5 * dt, half);
                fine.observe(stepped)?;
            }
        }
    }
    Ok((
        coarse.outcome.unwrap_or_else(|| coarse.timeout()),
        fine.outcome.unwrap_or_else(|| fine.timeout()),
    ))
}

/// Explicit layout whose free end has total winding `phi0` around the origin.
///
/// The first `m` rods share a bend angle `a` (with `m` the smallest count that
/// clears the origin by half a rod), the next `j` rods are chords of the
/// origin-centred circle through `X_m`, and the remaining rods point radially
/// outward. The winding is continuous and increasing in `a`, which is found by
/// bisection.
pub fn boundary_layer_config(phi0: f64, params: &PolymerParams) -> Result<InitialConfig> {
    if !phi0.is_finite() || phi0.abs() >= TAU {
        return Err(Error::InvalidParameter(format!(
            "boundary layer angle {phi0} must satisfy |phi0| < 2pi"
        )));
    }
    let n = params.n();
    if phi0 == 0.0 {
        return Ok(InitialConfig::Explicit(vec![0.0; n]));
    }
    let (offset, rod) = (params.offset(), params.rod_length());
    let m = ((offset + 0.5 * rod) / rod).floor() as usize + 1;
    if m > n {
        return Err(Error::InvalidParameter(format!(
            "n = {n} rods cannot clear the origin for a boundary layer start"
        )));
    }
    let target = phi0.abs();
    let a_max = PI - 1e-9;
    let total = |a: f64, j: usize| -> f64 {
        let end = Complex64::new(offset, 0.0) + Complex64::from_polar(m as f64 * rod, a);
        end.arg() + j as f64 * chord_angle(rod, end.norm())
    };
    let j = (0..=n - m).find(|&j| total(a_max, j) >= target).ok_or_else(|| {
        Error::InvalidParameter(format!("n = {n} rods cannot reach a total winding of {phi0}"))
    })?;

    let (mut lo, mut hi) = (0.0, a_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid, j) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let a = 0.5 * (lo + hi);

    let end = Complex64::new(offset, 0.0) + Complex64::from_polar(m as f64 * rod, a);
    let delta = chord_angle(rod, end.norm());
    let mut psi = end.arg();
    let mut angles = vec![a; m];
    for _ in 0..j {
        angles.push(psi + 0.5 * delta + FRAC_PI_2);
        psi += delta;
    }
    angles.resize(n, psi);
    if phi0 < 0.0 {
        angles.iter_mut().for_each(|t| *t = -*t);
    }

    let achieved = free_end_winding(&angles, params)?;
    if (achieved - phi0).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "boundary layer layout reached {achieved} instead of {phi0}"
        )));
    }
    Ok(InitialConfig::Explicit(angles))
}

/// Central angle of a chord of length `rod` on a circle of radius `radius`.
fn chord_angle(rod: f64, radius: f64) -> f64 {
    2.0 * (0.5 * rod / radius).min(1.0).asin()
}
