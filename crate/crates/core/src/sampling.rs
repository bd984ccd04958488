//! Sampling-property machinery.
//!
//! An expectation `E[Q(sqrt(aX))]` is rewritten with the change of variables
//! `x = t^N`. For large `N` the transformed integrand collapses onto an impulse
//! near `t = 1`, and either the Q-factor `h(t^N) = Q(sqrt(a t^N)) N t^(N-1)` or
//! the pdf-factor `g(t^N) = f_X(t^N) N t^(N-1)` can play the role of that
//! impulse. This module evaluates the transformed integrand, locates the
//! impulse (the critical point), gives its mass and decides which factor to
//! sample for a given mean SNR.
//!
//! Critical points solve the stationarity condition of `ln h` written in the
//! original coordinate `x`:
//!
//! ```text
//! d/dx [ ln Q(sqrt(a x)) + k ln x ] = 0,   k = (N - 1) / N
//! ```
//!
//! With `u = sqrt(a x)` this is `u phi(u) = 2 k Q(u)`. In two dimensions with
//! `Q(sqrt(a1 x + a2 y))` both partial derivatives vanish when
//! `a1 x = a2 y = u^2 / 2` and `u phi(u) = 4 k Q(u)`.

use crate::error::{domain, Result};
use crate::roots::newton_bisect;
use crate::special::{gaussian_pdf, log_gaussian_q, q};

/// Order `N` of the change of variables `x = t^N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingOrder {
    Finite(u32),
    /// The `N -> infinity` limit, where `(N - 1)/N` is taken to 1.
    Asymptotic,
}

impl SamplingOrder {
    /// `N = 1000`, the order at which the published impulse locations were
    /// obtained.
    pub const REFERENCE: SamplingOrder = SamplingOrder::Finite(1000);

    pub fn stationarity_factor(self) -> f64 {
        match self {
            SamplingOrder::Finite(n) => (n as f64 - 1.0) / n as f64,
            SamplingOrder::Asymptotic => 1.0,
        }
    }

    fn validate(self) -> Result<Self> {
        match self {
            SamplingOrder::Finite(0) => Err(domain("SamplingOrder", "order must be >= 1")),
            other => Ok(other),
        }
    }
}

impl Default for SamplingOrder {
    fn default() -> Self {
        Self::REFERENCE
    }
}

/// Parameters of the 1D integrand `Q(sqrt(a x)) (1/s) exp(-x/s)` after the
/// substitution `x = t^N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrandFactors {
    scale_a: f64,
    mean_snr: f64,
    order_n: u32,
}

impl IntegrandFactors {
    pub fn new(scale_a: f64, mean_snr: f64, order_n: u32) -> Result<Self> {
        if !(scale_a > 0.0 && scale_a.is_finite()) {
            return Err(domain("IntegrandFactors", format!("scale_a = {scale_a}")));
        }
        if !(mean_snr > 0.0 && mean_snr.is_finite()) {
            return Err(domain("IntegrandFactors", format!("mean_snr = {mean_snr}")));
        }
        if order_n == 0 {
            return Err(domain("IntegrandFactors", "order_n must be >= 1"));
        }
        Ok(Self {
            scale_a,
            mean_snr,
            order_n,
        })
    }

    pub fn scale_a(&self) -> f64 {
        self.scale_a
    }

    pub fn mean_snr(&self) -> f64 {
        self.mean_snr
    }

    pub fn order_n(&self) -> u32 {
        self.order_n
    }
}

/// The two sampling candidates and the full transformed integrand at one `t`,
/// with their logarithms. Linear values underflow to 0 where the logs are
/// very negative or `-inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrandValues {
    pub h_value: f64,
    pub g_value: f64,
    pub full_value: f64,
    pub ln_h: f64,
    pub ln_g: f64,
    pub ln_full: f64,
}

/// Evaluates `h`, `g` and `q c f` at `t` in log space, so `t^N` may overflow
/// or underflow freely.
pub fn finite_n_integrand_1d(factors: &IntegrandFactors, t: f64) -> Result<IntegrandValues> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain("finite_n_integrand_1d", format!("t = {t}")));
    }
    let n = factors.order_n as f64;
    let ln_t = t.ln();
    let x = (n * ln_t).exp();
    let ln_c = n.ln() + (n - 1.0) * ln_t;
    let ln_q = log_gaussian_q((factors.scale_a * x).sqrt());
    let ln_f = -factors.mean_snr.ln() - x / factors.mean_snr;

    let ln_h = ln_q + ln_c;
    let ln_g = ln_f + ln_c;
    let ln_full = ln_q + ln_c + ln_f;
    Ok(IntegrandValues {
        h_value: ln_h.exp(),
        g_value: ln_g.exp(),
        full_value: ln_full.exp(),
        ln_h,
        ln_g,
        ln_full,
    })
}

/// `ln h(t^N, u^N) = ln [Q(sqrt(a1 t^N + a2 u^N)) N^2 t^(N-1) u^(N-1)]`.
pub fn finite_n_log_sampler_2d(a1: f64, a2: f64, order_n: u32, t: f64, u: f64) -> Result<f64> {
    check_scale("finite_n_log_sampler_2d", a1)?;
    check_scale("finite_n_log_sampler_2d", a2)?;
    if order_n == 0 || !(t > 0.0) || !(u > 0.0) {
        return Err(domain(
            "finite_n_log_sampler_2d",
            format!("order_n = {order_n}, t = {t}, u = {u}"),
        ));
    }
    let n = order_n as f64;
    let (ln_t, ln_u) = (t.ln(), u.ln());
    let arg = a1 * (n * ln_t).exp() + a2 * (n * ln_u).exp();
    Ok(log_gaussian_q(arg.sqrt()) + 2.0 * n.ln() + (n - 1.0) * (ln_t + ln_u))
}

/// One Dirac-impulse approximation: location(s) in the original `x`
/// coordinates and the impulse mass.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseApprox {
    pub locations: Vec<f64>,
    pub weight: f64,
}

impl ImpulseApprox {
    pub fn dimension(&self) -> usize {
        self.locations.len()
    }
}

fn check_scale(function: &'static str, a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(domain(function, format!("scale {a} must be positive and finite")))
    }
}

/// Root `u > 0` of `u phi(u) = 2 m k Q(u)`.
fn stationary_radius(multiplicity: f64, order: SamplingOrder) -> Result<f64> {
    let rhs = 2.0 * multiplicity * order.validate()?.stationarity_factor();
    newton_bisect(
        |u| {
            let phi = gaussian_pdf(u);
            // d/du [u phi - c Q] = phi - u^2 phi + c phi
            (u * phi - rhs * q(u), phi * (1.0 - u * u + rhs))
        },
        1e-9,
        12.0,
        1e-15,
        200,
    )
}

/// Location of the Q-impulse for `E[Q(sqrt(a X))]` at the reference order.
pub fn critical_point_1d(scale_a: f64) -> Result<f64> {
    critical_point_1d_with(scale_a, SamplingOrder::default())
}

pub fn critical_point_1d_with(scale_a: f64, order: SamplingOrder) -> Result<f64> {
    check_scale("critical_point_1d", scale_a)?;
    let u = stationary_radius(1.0, order)?;
    Ok(u * u / scale_a)
}

/// `sqrt(a x) phi(sqrt(a x)) - 2 k Q(sqrt(a x))`, zero at the critical point.
pub fn stationarity_residual_1d(scale_a: f64, x: f64, order: SamplingOrder) -> f64 {
    let u = (scale_a * x).sqrt();
    u * gaussian_pdf(u) - 2.0 * order.stationarity_factor() * q(u)
}

/// Location of the 2D Q-impulse for `E[Q(sqrt(a1 X + a2 Y))]`.
pub fn critical_point_2d(a1: f64, a2: f64) -> Result<(f64, f64)> {
    critical_point_2d_with(a1, a2, SamplingOrder::default())
}

pub fn critical_point_2d_with(a1: f64, a2: f64, order: SamplingOrder) -> Result<(f64, f64)> {
    check_scale("critical_point_2d", a1)?;
    check_scale("critical_point_2d", a2)?;
    let u = stationary_radius(2.0, order)?;
    let w = 0.5 * u * u;
    Ok((w / a1, w / a2))
}

/// Largest violation of the 2D stationarity conditions `a1 x = a2 y` and
/// `u phi(u) = 4 k Q(u)` with `u = sqrt(a1 x + a2 y)`.
pub fn stationarity_residual_2d(a1: f64, a2: f64, point: (f64, f64), order: SamplingOrder) -> f64 {
    let (x, y) = point;
    let u = (a1 * x + a2 * y).sqrt();
    let radial = u * gaussian_pdf(u) - 4.0 * order.stationarity_factor() * q(u);
    radial.abs().max((a1 * x - a2 * y).abs())
}

/// `int_0^inf Q(sqrt(a x)) dx = 1/(2a)`.
pub fn impulse_weight_1d(scale_a: f64) -> Result<f64> {
    check_scale("impulse_weight_1d", scale_a)?;
    Ok(0.5 / scale_a)
}

/// `int int Q(sqrt(a1 x + a2 y)) dx dy = 3/(4 a1 a2)`.
pub fn impulse_weight_2d(a1: f64, a2: f64) -> Result<f64> {
    check_scale("impulse_weight_2d", a1)?;
    check_scale("impulse_weight_2d", a2)?;
    Ok(0.75 / (a1 * a2))
}

pub fn q_impulse_1d(scale_a: f64) -> Result<ImpulseApprox> {
    Ok(ImpulseApprox {
        locations: vec![critical_point_1d(scale_a)?],
        weight: impulse_weight_1d(scale_a)?,
    })
}

pub fn q_impulse_2d(a1: f64, a2: f64) -> Result<ImpulseApprox> {
    let (x, y) = critical_point_2d(a1, a2)?;
    Ok(ImpulseApprox {
        locations: vec![x, y],
        weight: impulse_weight_2d(a1, a2)?,
    })
}

/// Critical point of the pdf-factor `g`: `((N-1)/N) s`, or `s` in the limit.
pub fn pdf_sampler_location(mean_snr: f64, order: SamplingOrder) -> Result<f64> {
    check_scale("pdf_sampler_location", mean_snr)?;
    Ok(order.validate()?.stationarity_factor() * mean_snr)
}

/// Finds the stationary point of `ln f(x, y) + k (ln x + ln y)` over
/// `x, y > 0`, i.e. the 2D impulse location for an arbitrary concentrating
/// factor `f` given through `ln f`.
///
/// Damped Newton in `(ln x, ln y)` with central-difference derivatives; steps
/// that do not increase the objective are halved, and a gradient step is used
/// when the Hessian is not negative definite.
pub fn maximize_log_sampler_2d<F>(log_f: F, order: SamplingOrder, start: (f64, f64)) -> Result<(f64, f64)>
where
    F: Fn(f64, f64) -> f64,
{
    let k = order.validate()?.stationarity_factor();
    if !(start.0 > 0.0 && start.1 > 0.0) {
        return Err(domain("maximize_log_sampler_2d", "start must be positive"));
    }
    let objective = |v: [f64; 2]| log_f(v[0].exp(), v[1].exp()) + k * (v[0] + v[1]);
    let h = 1e-4;

    let mut v = [start.0.ln(), start.1.ln()];
    let mut fv = objective(v);
    for _ in 0..200 {
        let f_pp = |di: f64, dj: f64| objective([v[0] + di, v[1] + dj]);
        let (fxp, fxm) = (f_pp(h, 0.0), f_pp(-h, 0.0));
        let (fyp, fym) = (f_pp(0.0, h), f_pp(0.0, -h));
        let gx = (fxp - fxm) / (2.0 * h);
        let gy = (fyp - fym) / (2.0 * h);
        let hxx = (fxp - 2.0 * fv + fxm) / (h * h);
        let hyy = (fyp - 2.0 * fv + fym) / (h * h);
        let hxy = (f_pp(h, h) - f_pp(h, -h) - f_pp(-h, h) + f_pp(-h, -h)) / (4.0 * h * h);

        let det = hxx * hyy - hxy * hxy;
        let mut step = if hxx < 0.0 && det > 0.0 {
            [-(hyy * gx - hxy * gy) / det, -(hxx * gy - hxy * gx) / det]
        } else {
            [0.5 * gx, 0.5 * gy]
        };

        let mut accepted = false;
        for _ in 0..60 {
            let trial = [v[0] + step[0], v[1] + step[1]];
            let ft = objective(trial);
            if ft.is_finite() && ft >= fv - 1e-14 * fv.abs() {
                v = trial;
                fv = ft;
                accepted = true;
                break;
            }
            step = [0.5 * step[0], 0.5 * step[1]];
        }
        let size = step[0].abs().max(step[1].abs());
        if !accepted || size < 1e-11 {
            if gx.abs().max(gy.abs()) < 1e-6 {
                return Ok((v[0].exp(), v[1].exp()));
            }
            if !accepted {
                break;
            }
        }
    }
    Err(domain("maximize_log_sampler_2d", "no stationary point found"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeKind {
    /// Sample the Q-factor `h`; weight from the Q mass, evaluate the pdf.
    QSampler,
    /// Sample the pdf-factor `g`; unit weight, evaluate Q at the mean SNR.
    PdfSampler,
}

/// SNR boundaries for choosing the sampling factor. Above `high` the Q-factor
/// provably concentrates faster, below `low` the pdf does. In between the
/// choice is heuristic and is made at `midband_split`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeThresholds {
    pub high: f64,
    pub low: f64,
    pub midband_split: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            high: 2.0,
            low: 1.0 / 3.0,
            midband_split: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub kind: RegimeKind,
    pub threshold_high: f64,
    pub threshold_low: f64,
}

impl Regime {
    pub fn is_proven(&self, mean_snr: f64) -> bool {
        mean_snr >= self.threshold_high || mean_snr <= self.threshold_low
    }
}

pub fn regime_select(mean_snr: f64) -> Result<Regime> {
    regime_select_with(mean_snr, &RegimeThresholds::default())
}

pub fn regime_select_with(mean_snr: f64, thresholds: &RegimeThresholds) -> Result<Regime> {
    check_scale("regime_select", mean_snr)?;
    let RegimeThresholds {
        high,
        low,
        midband_split,
    } = *thresholds;
    if !(low < high) || !(low..=high).contains(&midband_split) {
        return Err(domain(
            "regime_select",
            format!("thresholds low = {low}, split = {midband_split}, high = {high}"),
        ));
    }
    let kind = if mean_snr >= high {
        RegimeKind::QSampler
    } else if mean_snr <= low {
        RegimeKind::PdfSampler
    } else if mean_snr >= midband_split {
        RegimeKind::QSampler
    } else {
        RegimeKind::PdfSampler
    };
    Ok(Regime {
        kind,
        threshold_high: high,
        threshold_low: low,
    })
}
