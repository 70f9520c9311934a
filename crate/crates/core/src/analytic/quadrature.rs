//! Two independent quadrature schemes on finite intervals.
//!
//! [`gauss_kronrod`] bisects the subinterval with the largest error estimate of
//! a 7/15-point Gauss-Kronrod pair. [`tanh_sinh`] maps the interval through the
//! double-exponential substitution and halves the step until successive levels
//! agree; its nodes cluster at the endpoints, so integrable endpoint
//! singularities need no special treatment.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use crate::{Error, Result};

/// Tolerances and tail truncation for the semi-infinite integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Integrand envelope below which a semi-infinite tail is dropped.
    pub truncation_cutoff: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            truncation_cutoff: 1e-14,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        if ok(self.rel_tol) && ok(self.abs_tol) && ok(self.truncation_cutoff) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("quadrature tolerances must be positive: {self:?}")))
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Integration scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    GaussKronrod,
    TanhSinh,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Smallest `x >= start` past which `envelope` stays below `cutoff`, assuming
/// the envelope is eventually decreasing.
pub fn tail_cutoff<E: Fn(f64) -> f64>(envelope: E, start: f64, cutoff: f64) -> f64 {
    let mut lo = start.max(f64::MIN_POSITIVE);
    let mut hi = lo.max(1.0);
    while envelope(hi) >= cutoff {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return hi;
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if envelope(mid) >= cutoff {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Integrate over consecutive panels `[breaks[i], breaks[i+1]]`.
pub fn integrate_panels<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    spec: &QuadratureSpec,
    scheme: Scheme,
) -> Result<Integral> {
    let mut total = Integral {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    for w in breaks.windows(2) {
        let part = match scheme {
            Scheme::GaussKronrod => gauss_kronrod(&f, w[0], w[1], spec)?,
            Scheme::TanhSinh => tanh_sinh(&f, w[0], w[1], spec)?,
        };
        total.value += part.value;
        total.error += part.error;
        total.evaluations += part.evaluations;
    }
    Ok(total)
}

#[allow(clippy::excessive_precision)]
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes and the centre.
#[allow(clippy::excessive_precision)]
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * KRONROD_WEIGHTS[7];
    let mut gauss = fc * GAUSS_WEIGHTS[3];
    for i in 0..7 {
        let dx = half * GK_NODES[i];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += KRONROD_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

const GK_MAX_SEGMENTS: usize = 4000;

/// Globally adaptive Gauss-Kronrod 7/15 quadrature on `[a, b]`.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (value, error) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let (mut total, mut total_err) = (value, error);
    let mut evaluations = 15;
    while total_err > spec.target(total) {
        if !total.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
        }
        if heap.len() >= GK_MAX_SEGMENTS {
            return Err(Error::Quadrature(format!(
                "gauss-kronrod: {GK_MAX_SEGMENTS} segments on [{a}, {b}], error {total_err:e}"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval exhausted at machine precision; accept what we have.
            heap.push(worst);
            break;
        }
        let (lv, le) = gk15(f, worst.a, mid);
        let (rv, re) = gk15(f, mid, worst.b);
        evaluations += 30;
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Segment { a: mid, b: worst.b, value: rv, error: re });
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    if !value.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
    }
    Ok(Integral {
        value,
        error,
        evaluations,
    })
}

const TS_MAX_LEVEL: u32 = 12;
const TS_T_MAX: f64 = 6.5;

/// Tanh-sinh quadrature on `[a, b]`. Nodes are placed by their distance to
/// the nearer endpoint, so `f` is never evaluated at `a` or `b` themselves.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let half = 0.5 * (b - a);
    let mut evaluations = 0usize;
    // Contribution of the node pair at parameter t (or the centre at t = 0).
    let mut pair = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let weight = half * FRAC_PI_2 * t.cosh() / (cu * cu);
        if !(weight > 0.0) || !weight.is_finite() {
            return 0.0;
        }
        // Distance from the nearer endpoint: half * (1 - tanh|u|).
        let gap = 2.0 * half / (1.0 + (2.0 * u.abs()).exp());
        if t == 0.0 {
            evaluations += 1;
            return weight * f(a + half);
        }
        let mut s = 0.0;
        for x in [a + gap, b - gap] {
            if x > a && x < b {
                evaluations += 1;
                s += f(x);
            }
        }
        weight * s
    };

    let mut h = 1.0f64;
    let mut sum = pair(0.0);
    let mut k = 1;
    while k as f64 * h <= TS_T_MAX {
        sum += pair(k as f64 * h);
        k += 1;
    }
    let mut estimate = h * sum;
    for _ in 1..=TS_MAX_LEVEL {
        h *= 0.5;
        // Only odd multiples of the new step are new nodes.
        let mut k = 1;
        while k as f64 * h <= TS_T_MAX {
            sum += pair(k as f64 * h);
            k += 2;
        }
        let next = h * sum;
        if !next.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
        }
        let diff = (next - estimate).abs();
        estimate = next;
        if diff <= spec.target(estimate) {
            return Ok(Integral {
                value: estimate,
                error: diff,
                evaluations,
            });
        }
    }
    Err(Error::Quadrature(format!(
        "tanh-sinh: no convergence on [{a}, {b}] after {TS_MAX_LEVEL} levels"
    )))
}
