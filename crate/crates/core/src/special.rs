//! Gaussian tail function, its inverse, and the exponential bounds used to
//! pick a sampling regime.
//!
//! `Q(x)` is evaluated through `erfc`, which keeps full relative precision in
//! the upper tail down to the underflow threshold near `x = 37.5`. Beyond that
//! the tail is only available in log form through [`log_gaussian_q`].

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{domain, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(domain("Probability::new", format!("{value} is not in [0, 1]")))
        }
    }

    /// Clamps into `[0, 1]`; NaN maps to 0.5 (an uninformative decision).
    pub(crate) fn saturating(value: f64) -> Self {
        if value.is_nan() {
            Self(0.5)
        } else {
            Self(value.clamp(0.0, 1.0))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Upper tail of the standard normal distribution.
pub fn gaussian_q(x: f64) -> Result<Probability> {
    if !x.is_finite() {
        return Err(domain("gaussian_q", format!("non-finite input {x}")));
    }
    Ok(Probability(q(x)))
}

/// Unchecked `Q(x)`, the hot-path form used inside integrands and simulators.
#[inline]
pub(crate) fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn gaussian_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// `ln Q(x)`, finite for every finite `x`.
pub fn log_gaussian_q(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if x < 30.0 {
        return q(x).ln();
    }
    // Q(x) = phi(x) * R(x) with the Mills ratio R from its continued fraction.
    let mut t = x;
    for k in (1..=40).rev() {
        t = x + k as f64 / t;
    }
    -0.5 * x * x - LN_SQRT_2PI - t.ln()
}

/// Inverse of [`gaussian_q`].
///
/// Starts from Acklam's rational approximation and polishes with Newton steps
/// on `ln Q(x) - ln p`, falling back to bisection whenever a step leaves the
/// current bracket.
pub fn gaussian_q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("gaussian_q_inv", format!("{p} is not in (0, 1)")));
    }
    Ok(q_inv(p))
}

pub(crate) fn q_inv(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    if p > 0.5 {
        // 1 - p is exact on [0.5, 1].
        return -q_inv_upper(1.0 - p);
    }
    q_inv_upper(p)
}

/// Root of `Q(x) = p` for `0 < p <= 1/2`, hence `x >= 0`.
fn q_inv_upper(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let target = p.ln();
    // Q(x) <= exp(-x^2/2)/2 brackets the root from above.
    let mut lo = 0.0_f64;
    let mut hi = (-2.0 * (2.0 * p).ln()).sqrt();
    let mut x = (-acklam_lower(p)).clamp(lo, hi);

    for _ in 0..100 {
        let lq = log_gaussian_q(x);
        let g = lq - target;
        if g.abs() <= 4.0 * f64::EPSILON * target.abs() {
            break;
        }
        if g > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        // d/dx ln Q(x) = -phi(x)/Q(x)
        let slope = -(-0.5 * x * x - LN_SQRT_2PI - lq).exp();
        let mut next = x - g / slope;
        if !(next >= lo && next <= hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= 1e-14 * x.max(1.0) || hi - lo <= 1e-15 * x.max(1.0) {
            break;
        }
    }
    x
}

/// Acklam's approximation to the standard normal quantile (relative error
/// about 1e-9), used only as a starting point.
fn acklam_lower(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_690e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Chernoff bound `Q(sqrt(x)) <= exp(-x/2)/2`.
pub fn chernoff_bound(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain("chernoff_bound", format!("{x} is negative")));
    }
    Ok(0.5 * (-0.5 * x).exp())
}

/// Lower bound `Q(sqrt(x)) >= 3 exp(-3x)`, valid for `x > 1` only.
pub fn exp_lower_bound(x: f64) -> Result<f64> {
    if !(x > 1.0) {
        return Err(domain("exp_lower_bound", format!("{x} is not > 1")));
    }
    Ok(3.0 * (-3.0 * x).exp())
}

/// Density of an exponential random variable with the given mean.
#[inline]
pub fn exponential_pdf(x: f64, mean: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        (-x / mean).exp() / mean
    }
}
