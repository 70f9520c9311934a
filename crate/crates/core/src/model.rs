//! Polymer geometry, rescaling and initial configurations.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::sde::{boundary_layer_config, winding_increment};
use crate::{Error, Result};

/// Default rejection margin for uniformly drawn starts, in radians.
pub const DEFAULT_UNIFORM_MARGIN: f64 = 0.1;

const MAX_REJECTIONS: usize = 100_000;

/// Physical parameters of the rod chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolymerParams {
    n: usize,
    diffusion: f64,
    offset: f64,
    rod_length: f64,
}

impl PolymerParams {
    /// `n` rods of length `rod_length`, fixed end at `(offset, 0)`, rotational
    /// diffusion constant `diffusion`.
    pub fn new(n: usize, diffusion: f64, offset: f64, rod_length: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if !(diffusion.is_finite() && diffusion >= 0.0) {
            return Err(Error::InvalidParameter(format!("D = {diffusion} must be >= 0")));
        }
        if !(offset.is_finite() && offset >= 0.0) {
            return Err(Error::InvalidParameter(format!("L = {offset} must be >= 0")));
        }
        if !(rod_length.is_finite() && rod_length > 0.0) {
            return Err(Error::InvalidParameter(format!("l0 = {rod_length} must be > 0")));
        }
        let reach = n as f64 * rod_length;
        if reach <= offset {
            return Err(Error::Infeasible { reach, offset });
        }
        Ok(Self {
            n,
            diffusion,
            offset,
            rod_length,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn rod_length(&self) -> f64 {
        self.rod_length
    }

    /// Distance below which a bead is considered to sit on the origin.
    pub fn origin_eps(&self) -> f64 {
        1e-9 * self.rod_length
    }

    /// 1-based bead indices that can geometrically reach around the origin.
    pub fn eligible_beads(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.n).filter(move |&k| k as f64 * self.rod_length > self.offset)
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(n, self.diffusion, self.offset, self.rod_length)
    }

    pub fn with_diffusion(&self, diffusion: f64) -> Result<Self> {
        Self::new(self.n, diffusion, self.offset, self.rod_length)
    }

    pub fn with_offset(&self, offset: f64) -> Result<Self> {
        Self::new(self.n, self.diffusion, offset, self.rod_length)
    }
}

/// Dimensionless offset and the physical-to-scaled time factor.
///
/// Scaled time is `2D * t`; in scaled time every rod angle is a standard
/// Brownian motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledParams {
    pub l_tilde: f64,
    pub time_scale: f64,
}

impl ScaledParams {
    pub fn to_scaled(&self, t: f64) -> f64 {
        self.time_scale * t
    }

    pub fn to_physical(&self, t_scaled: f64) -> f64 {
        t_scaled / self.time_scale
    }
}

pub fn rescale(params: &PolymerParams) -> ScaledParams {
    ScaledParams {
        l_tilde: params.offset / params.rod_length,
        time_scale: 2.0 * params.diffusion,
    }
}

/// How the initial rod angles are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialConfig {
    /// All angles zero: the chain lies on the positive real axis.
    Stretched,
    /// Fixed angles in physical radians, one per rod.
    Explicit(Vec<f64>),
    /// Independent uniform angles on `[0, 2pi)`, redrawn until the free end's
    /// winding satisfies `|phi(0)| < 2pi - margin`.
    UniformRandom { margin: f64 },
    /// A deterministic layout whose free end has total winding `phi0`.
    BoundaryLayer { phi0: f64 },
}

impl InitialConfig {
    /// Validate the configuration against `params` without drawing anything.
    pub fn check(&self, params: &PolymerParams) -> Result<()> {
        match self {
            InitialConfig::Stretched => Ok(()),
            InitialConfig::Explicit(angles) => {
                let phi = free_end_winding(angles, params)?;
                if phi.abs() >= TAU {
                    return Err(Error::WindingStart(phi.abs()));
                }
                Ok(())
            }
            InitialConfig::UniformRandom { margin } => {
                if !(margin.is_finite() && *margin >= 0.0 && *margin < TAU) {
                    return Err(Error::InvalidParameter(format!(
                        "uniform rejection margin {margin} outside [0, 2pi)"
                    )));
                }
                Ok(())
            }
            InitialConfig::BoundaryLayer { phi0 } => boundary_layer_config(*phi0, params).map(|_| ()),
        }
    }

    /// Produce one concrete angle vector.
    pub fn realize<R: Rng + ?Sized>(&self, params: &PolymerParams, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            InitialConfig::Stretched => Ok(vec![0.0; params.n]),
            InitialConfig::Explicit(angles) => {
                self.check(params)?;
                Ok(angles.clone())
            }
            InitialConfig::UniformRandom { margin } => {
                self.check(params)?;
                let limit = TAU - margin;
                for _ in 0..MAX_REJECTIONS {
                    let angles: Vec<f64> = (0..params.n).map(|_| rng.random::<f64>() * TAU).collect();
                    match free_end_winding(&angles, params) {
                        Ok(phi) if phi.abs() < limit => return Ok(angles),
                        _ => continue,
                    }
                }
                Err(Error::InvalidParameter(format!(
                    "no uniform configuration with |phi(0)| < {limit} after {MAX_REJECTIONS} draws"
                )))
            }
            InitialConfig::BoundaryLayer { phi0 } => match boundary_layer_config(*phi0, params)? {
                InitialConfig::Explicit(angles) => Ok(angles),
                _ => unreachable!("boundary layer layouts are explicit"),
            },
        }
    }
}

/// Mean initial configuration constant and its `sqrt(n)` normalisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialConstant {
    pub c_n: Complex64,
    pub c_tilde: Complex64,
}

/// Bead positions `X_1..X_n` for the given rod angles.
pub fn bead_positions(angles: &[f64], params: &PolymerParams) -> Result<Vec<Complex64>> {
    if angles.len() != params.n {
        return Err(Error::LengthMismatch {
            expected: params.n,
            got: angles.len(),
        });
    }
    let mut positions = Vec::with_capacity(angles.len());
    fill_positions(angles, params, &mut positions);
    Ok(positions)
}

pub(crate) fn fill_positions(angles: &[f64], params: &PolymerParams, out: &mut Vec<Complex64>) {
    out.clear();
    let mut acc = Complex64::new(params.offset, 0.0);
    for &theta in angles {
        let (s, c) = theta.sin_cos();
        acc += Complex64::new(params.rod_length * c, params.rod_length * s);
        out.push(acc);
    }
}

/// Continuous winding angle of every bead, accumulated along the chain from
/// the fixed end (which sits at argument 0 when `L > 0`).
pub fn chain_windings(positions: &[Complex64], params: &PolymerParams) -> Result<Vec<f64>> {
    let eps = params.origin_eps();
    let mut out = Vec::with_capacity(positions.len());
    let (mut prev, mut phi) = if params.offset > eps {
        (Complex64::new(params.offset, 0.0), 0.0)
    } else {
        let first = positions[0];
        if first.norm() <= eps {
            return Err(Error::OriginFailure(eps));
        }
        (first, first.arg())
    };
    for &x in positions {
        phi += winding_increment(prev, x, eps)?;
        out.push(phi);
        prev = x;
    }
    Ok(out)
}

/// Total winding `phi_n(0)` of the free end for a given angle vector.
pub fn free_end_winding(angles: &[f64], params: &PolymerParams) -> Result<f64> {
    let positions = bead_positions(angles, params)?;
    let windings = chain_windings(&positions, params)?;
    Ok(*windings.last().expect("n >= 1"))
}

/// `c_n = E sum_k exp(i theta_k(0) / sqrt(2D))`.
///
/// Stretched starts give `n`, uniform starts average to 0 and explicit angle
/// lists are deterministic, so the expectation is the sum itself.
pub fn initial_constant(config: &InitialConfig, params: &PolymerParams) -> Result<InitialConstant> {
    let n = params.n as f64;
    let c_n = match config {
        InitialConfig::Stretched => Complex64::new(n, 0.0),
        InitialConfig::UniformRandom { .. } => Complex64::new(0.0, 0.0),
        InitialConfig::Explicit(angles) => explicit_constant(angles, params)?,
        InitialConfig::BoundaryLayer { phi0 } => match boundary_layer_config(*phi0, params)? {
            InitialConfig::Explicit(angles) => explicit_constant(&angles, params)?,
            _ => unreachable!("boundary layer layouts are explicit"),
        },
    };
    Ok(InitialConstant {
        c_n,
        c_tilde: c_n / n.sqrt(),
    })
}

fn explicit_constant(angles: &[f64], params: &PolymerParams) -> Result<Complex64> {
    if angles.len() != params.n {
        return Err(Error::LengthMismatch {
            expected: params.n,
            got: angles.len(),
        });
    }
    if params.diffusion <= 0.0 {
        return Err(Error::InvalidParameter("c_n of an explicit start needs D > 0".into()));
    }
    let scale = (2.0 * params.diffusion).sqrt().recip();
    Ok(angles
        .iter()
        .map(|&theta| Complex64::from_polar(1.0, theta * scale))
        .sum())
}

/// `E X_n(t) = l_tilde + c_n exp(-t/2)` in scaled time.
pub fn mean_free_end(t: f64, c_n: Complex64, l_tilde: f64) -> Complex64 {
    l_tilde + c_n * (-0.5 * t).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use std::f64::consts::PI;
    use rand_chacha::ChaCha8Rng;

    fn paper_like(n: usize) -> PolymerParams {
        PolymerParams::new(n, 10.0, 0.3, 0.25).unwrap()
    }

    #[test]
    fn rescale_examples() {
        let s = rescale(&paper_like(100));
        assert!((s.l_tilde - 1.2).abs() < 1e-15);
        assert_eq!(s.time_scale, 20.0);

        let s = rescale(&PolymerParams::new(1, 0.5, 0.0, 1.0).unwrap());
        assert_eq!(s.l_tilde, 0.0);
        assert_eq!(s.time_scale, 1.0);
        assert!((s.to_physical(s.to_scaled(3.7)) - 3.7).abs() < 1e-15);
    }

    #[test]
    fn rejects_infeasible_and_invalid() {
        assert!(matches!(
            PolymerParams::new(1, 1.0, 0.3, 0.25),
            Err(Error::Infeasible { .. })
        ));
        assert!(matches!(
            PolymerParams::new(4, 1.0, 1.0, 0.25),
            Err(Error::Infeasible { .. })
        ));
        assert!(PolymerParams::new(0, 1.0, 0.0, 1.0).is_err());
        assert!(PolymerParams::new(3, -1.0, 0.0, 1.0).is_err());
        assert!(PolymerParams::new(3, 1.0, -0.1, 1.0).is_err());
        assert!(PolymerParams::new(3, 1.0, 0.0, 0.0).is_err());
        assert!(PolymerParams::new(3, f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn stretched_positions_on_axis() {
        let p = PolymerParams::new(4, 1.0, 0.3, 0.25).unwrap();
        let xs = bead_positions(&[0.0; 4], &p).unwrap();
        for (k, x) in xs.iter().enumerate() {
            assert!((x.re - (0.3 + (k + 1) as f64 * 0.25)).abs() < 1e-15);
            assert_eq!(x.im, 0.0);
        }
        assert_eq!(free_end_winding(&[0.0; 4], &p).unwrap(), 0.0);
    }

    #[test]
    fn small_chains() {
        let p = PolymerParams::new(1, 1.0, 0.3, 1.0).unwrap();
        let xs = bead_positions(&[PI], &p).unwrap();
        assert!((xs[0] - Complex64::new(0.3 - 1.0, 0.0)).norm() < 1e-15);

        let p = PolymerParams::new(2, 1.0, 0.3, 1.0).unwrap();
        let xs = bead_positions(&[PI / 2.0, 3.0 * PI / 2.0], &p).unwrap();
        assert!((xs[1] - Complex64::new(0.3, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn length_mismatch() {
        let p = paper_like(3);
        assert_eq!(
            bead_positions(&[0.0; 2], &p),
            Err(Error::LengthMismatch { expected: 3, got: 2 })
        );
    }

    #[test]
    fn initial_constants() {
        let p = paper_like(100);
        let c = initial_constant(&InitialConfig::Stretched, &p).unwrap();
        assert_eq!(c.c_n, Complex64::new(100.0, 0.0));
        assert_eq!(c.c_tilde, Complex64::new(10.0, 0.0));

        let c = initial_constant(&InitialConfig::UniformRandom { margin: 0.1 }, &p).unwrap();
        assert_eq!(c.c_n, Complex64::new(0.0, 0.0));

        let p = PolymerParams::new(2, 10.0, 0.3, 0.25).unwrap();
        let angles = vec![0.0, PI * (20.0f64).sqrt()];
        let c = initial_constant(&InitialConfig::Explicit(angles), &p).unwrap();
        assert!(c.c_n.norm() < 1e-12);
    }

    #[test]
    fn mean_free_end_examples() {
        let c = Complex64::new(4.0, 0.0);
        assert_eq!(mean_free_end(0.0, c, 1.2), Complex64::new(5.2, 0.0));
        assert!((mean_free_end(1e3, c, 1.2) - Complex64::new(1.2, 0.0)).norm() < 1e-15);
        assert!((mean_free_end(2.0 * 2f64.ln(), c, 1.2) - Complex64::new(3.2, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn explicit_winding_start_rejected() {
        // Arc of beads around the origin that already exceeds a full turn.
        let p = PolymerParams::new(40, 1.0, 0.5, 0.1).unwrap();
        let mut angles = vec![PI / 2.0];
        let r: f64 = 0.5f64.hypot(0.1);
        let mut psi = 0.1f64.atan2(0.5);
        let step = 2.0 * (0.05 / r).asin();
        for _ in 1..40 {
            angles.push(psi + step / 2.0 + PI / 2.0);
            psi += step;
        }
        let cfg = InitialConfig::Explicit(angles);
        assert!(matches!(cfg.check(&p), Err(Error::WindingStart(_))));
    }

    #[test]
    fn uniform_starts_are_non_winding_and_centred() {
        let n = 20;
        let p = PolymerParams::new(n, 1.0, 0.3, 0.25).unwrap();
        let cfg = InitialConfig::UniformRandom { margin: DEFAULT_UNIFORM_MARGIN };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 10_000;
        let mut sum = Complex64::new(0.0, 0.0);
        for _ in 0..draws {
            let angles = cfg.realize(&p, &mut rng).unwrap();
            let phi = free_end_winding(&angles, &p).unwrap();
            assert!(phi.abs() < TAU - DEFAULT_UNIFORM_MARGIN);
            sum += angles.iter().map(|&t| Complex64::from_polar(1.0, t)).sum::<Complex64>();
        }
        let mean = sum / draws as f64;
        let nf = n as f64;
        assert!(mean.norm() < 3.0 * (nf / draws as f64).sqrt() * nf.sqrt(), "{mean}");
    }
}
