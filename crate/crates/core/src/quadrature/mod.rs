//! Numerical-integration oracles for the expectation integrals.
//!
//! Every exponential axis with mean `s` is truncated to `[0, m s]`
//! (`m = truncation_multiplier`). The discarded tail has probability mass
//! `exp(-m)` and the integrands are bounded by 1, so that mass is added to the
//! reported error. Each axis starts from a geometric grid of breakpoints
//! (ratio 4) reaching down to `min(1, s)/16`, which resolves both the `O(1)`
//! scale where the Q-function varies and the `O(s)` scale of the pdf; the
//! adaptive integrator refines from there.
//!
//! Multi-dimensional integrals are nested 1D integrations; inner levels run at
//! a tenth of the outer tolerances.

mod adaptive;

use std::cell::Cell;
use std::f64::consts::SQRT_2;

pub use adaptive::{integrate, Estimate};

use crate::error::{domain, Error, Result};
use crate::scenario::{gamma_eq_unchecked, UpstreamErrorModel};
use crate::special::q;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Panel budget per one-dimensional integration.
    pub max_subdivisions: usize,
    pub truncation_multiplier: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 1000,
            truncation_multiplier: 40.0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerances must be positive (rel {}, abs {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidConfig("max_subdivisions must be >= 1".into()));
        }
        if !(self.truncation_multiplier >= 20.0 && self.truncation_multiplier.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "truncation_multiplier {} must be >= 20",
                self.truncation_multiplier
            )));
        }
        Ok(())
    }

    fn inner(&self) -> Self {
        Self {
            rel_tol: 0.1 * self.rel_tol,
            abs_tol: 0.1 * self.abs_tol,
            ..*self
        }
    }

    fn tail_mass(&self) -> f64 {
        (-self.truncation_multiplier).exp()
    }
}

fn check_positive(function: &'static str, name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(function, format!("{name} = {v} must be positive and finite")))
    }
}

/// Breakpoints `0, g, 4g, 16g, ..., upper` with `g = min(1, scale)/16`, plus
/// any `extra` points inside the range.
fn axis_points(scale: f64, upper: f64, extra: &[f64]) -> Vec<f64> {
    let mut pts = vec![0.0];
    let mut p = scale.min(1.0) / 16.0;
    while p < upper {
        pts.push(p);
        p *= 4.0;
    }
    pts.push(upper);
    pts.extend(extra.iter().copied().filter(|&x| x > 0.0 && x < upper));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Runs nested integrations, remembering whether any inner level failed.
struct Nest {
    failed: Cell<bool>,
    inner_error: Cell<f64>,
}

impl Nest {
    fn new() -> Self {
        Self {
            failed: Cell::new(false),
            inner_error: Cell::new(0.0),
        }
    }

    fn absorb(&self, r: Result<Estimate>) -> f64 {
        match r {
            Ok(e) => {
                self.inner_error.set(self.inner_error.get().max(e.abs_error));
                e.value
            }
            Err(Error::NotConverged { estimate, abs_error }) => {
                self.failed.set(true);
                self.inner_error.set(self.inner_error.get().max(abs_error));
                estimate
            }
            Err(_) => {
                self.failed.set(true);
                f64::NAN
            }
        }
    }

    fn finish(&self, outer: Result<Estimate>, extra_error: f64) -> Result<Estimate> {
        let (value, abs_error, ok) = match outer {
            Ok(e) => (e.value, e.abs_error, true),
            Err(Error::NotConverged { estimate, abs_error }) => (estimate, abs_error, false),
            Err(other) => return Err(other),
        };
        let abs_error = abs_error + self.inner_error.get() + extra_error;
        if ok && !self.failed.get() {
            Ok(Estimate { value, abs_error })
        } else {
            Err(Error::NotConverged {
                estimate: value,
                abs_error,
            })
        }
    }
}

fn exp_pdf(x: f64, mean: f64) -> f64 {
    (-x / mean).exp() / mean
}

fn exp_axis<F: FnMut(f64) -> f64>(mut g: F, mean: f64, extra: &[f64], spec: &QuadratureSpec) -> Result<Estimate> {
    let upper = spec.truncation_multiplier * mean;
    let pts = axis_points(mean, upper, extra);
    integrate(|x| g(x) * exp_pdf(x, mean), &pts, spec.abs_tol, spec.rel_tol, spec.max_subdivisions)
}

/// `E[Q(sqrt(a X))]` for `X ~ Exp(mean s)`.
pub fn expect_q_1d(mean_snr: f64, scale_a: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    check_positive("expect_q_1d", "mean_snr", mean_snr)?;
    check_positive("expect_q_1d", "scale_a", scale_a)?;
    spec.validate()?;
    let nest = Nest::new();
    let r = exp_axis(|x| q((scale_a * x).sqrt()), mean_snr, &[], spec);
    nest.finish(r, spec.tail_mass())
}

/// `E[Q(sqrt(a1 X + a2 Y))]` for i.i.d. `X, Y ~ Exp(mean s)`.
pub fn expect_q_2d(mean_snr: f64, a1: f64, a2: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    check_positive("expect_q_2d", "mean_snr", mean_snr)?;
    check_positive("expect_q_2d", "a1", a1)?;
    check_positive("expect_q_2d", "a2", a2)?;
    spec.validate()?;
    let inner = spec.inner();
    let nest = Nest::new();
    let r = exp_axis(
        |x| nest.absorb(exp_axis(|y| q((a1 * x + a2 * y).sqrt()), mean_snr, &[], &inner)),
        mean_snr,
        &[],
        spec,
    );
    nest.finish(r, 2.0 * spec.tail_mass())
}

/// `E[Q(sqrt(2 min(X, Y)))]` for i.i.d. `X, Y ~ Exp(mean s)`, integrated in
/// two dimensions with a breakpoint on the diagonal.
pub fn expect_min_2d(mean_snr: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    check_positive("expect_min_2d", "mean_snr", mean_snr)?;
    spec.validate()?;
    let inner = spec.inner();
    let nest = Nest::new();
    let r = exp_axis(
        |x| nest.absorb(exp_axis(|y| q((2.0 * x.min(y)).sqrt()), mean_snr, &[x], &inner)),
        mean_snr,
        &[],
        spec,
    );
    nest.finish(r, 2.0 * spec.tail_mass())
}

/// Triple integral of a C-MRC conditional BER over i.i.d. exponential SNRs.
/// `first_hop_error(gamma_first, gamma_eq)` gives the error probability of
/// the symbol forwarded over the relayed branch.
fn cmrc_expectation_3d<P>(mean_snr: f64, spec: &QuadratureSpec, first_hop_error: P) -> Result<Estimate>
where
    P: Fn(f64, f64) -> f64,
{
    let mid = spec.inner();
    let inner = mid.inner();
    let nest = Nest::new();
    let r = exp_axis(
        |g_first| {
            nest.absorb(exp_axis(
                |g_last| {
                    let g_eq = gamma_eq_unchecked(g_first, g_last);
                    let p_first = first_hop_error(g_first, g_eq);
                    let relay_noise = if g_eq == 0.0 { 0.0 } else { g_eq * g_eq / g_last };
                    nest.absorb(exp_axis(
                        |g_direct| {
                            let den = (g_direct + relay_noise).sqrt();
                            if den == 0.0 {
                                return 0.5;
                            }
                            let right = q(SQRT_2 * (g_direct + g_eq) / den);
                            let wrong = q(SQRT_2 * (g_direct - g_eq) / den);
                            (1.0 - p_first) * right + p_first * wrong
                        },
                        mean_snr,
                        &[g_eq],
                        &inner,
                    ))
                },
                mean_snr,
                &[],
                &mid,
            ))
        },
        mean_snr,
        &[],
        spec,
    );
    nest.finish(r, 3.0 * spec.tail_mass())
}

/// Average end-to-end BER of the relay link: the expectation of the
/// instantaneous C-MRC error probability over independent exponential
/// `gamma_sr`, `gamma_rd`, `gamma_sd`, each with mean `s`.
pub fn expect_relay_3d(mean_snr: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    check_positive("expect_relay_3d", "mean_snr", mean_snr)?;
    spec.validate()?;
    cmrc_expectation_3d(mean_snr, spec, |g_sr, _| q((2.0 * g_sr).sqrt()))
}

/// Average BER of node 1 in the network-coded system: the relayed part is a
/// C-MRC triple integral over `(gamma_up, gamma_4, gamma_1)` and the direct
/// part `E[Q(sqrt(2 gamma_1 + 2 gamma_2))]` a double integral.
pub fn expect_network_node1(mean_snr: f64, model: UpstreamErrorModel, spec: &QuadratureSpec) -> Result<Estimate> {
    check_positive("expect_network_node1", "mean_snr", mean_snr)?;
    spec.validate()?;
    let relayed = match model {
        UpstreamErrorModel::EquivalentChannel => {
            cmrc_expectation_3d(mean_snr, spec, |_, g_eq| q((2.0 * g_eq).sqrt()))
        }
        UpstreamErrorModel::FirstHop => cmrc_expectation_3d(mean_snr, spec, |g_up, _| q((2.0 * g_up).sqrt())),
    };
    let direct = expect_q_2d(mean_snr, 2.0, 2.0, spec);
    match (relayed, direct) {
        (Ok(a), Ok(b)) => Ok(Estimate {
            value: a.value + b.value,
            abs_error: a.abs_error + b.abs_error,
        }),
        (a, b) => {
            let part = |r: Result<Estimate>| match r {
                Ok(e) => Ok((e.value, e.abs_error)),
                Err(Error::NotConverged { estimate, abs_error }) => Ok((estimate, abs_error)),
                Err(other) => Err(other),
            };
            let (va, ea) = part(a)?;
            let (vb, eb) = part(b)?;
            Err(Error::NotConverged {
                estimate: va + vb,
                abs_error: ea + eb,
            })
        }
    }
}

/// `int_0^inf int_0^inf f(x, y) dx dy`, truncated to `[0, extent]^2`.
pub fn mass_2d<F: Fn(f64, f64) -> f64>(f: F, extent: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    check_positive("mass_2d", "extent", extent)?;
    spec.validate()?;
    let inner = spec.inner();
    let pts = axis_points(1.0, extent, &[]);
    let nest = Nest::new();
    let r = integrate(
        |x| {
            nest.absorb(integrate(
                |y| f(x, y),
                &pts,
                inner.abs_tol,
                inner.rel_tol,
                inner.max_subdivisions,
            ))
        },
        &pts,
        spec.abs_tol,
        spec.rel_tol,
        spec.max_subdivisions,
    );
    nest.finish(r, 0.0)
}

/// `int_0^inf Q(sqrt(a x)) dx`, the mass of the 1D Q-impulse.
pub fn q_mass_1d(scale_a: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    check_positive("q_mass_1d", "scale_a", scale_a)?;
    spec.validate()?;
    // Q(sqrt(a x)) <= exp(-a x / 2) / 2, so the tail beyond `extent` is
    // below exp(-m) / a.
    let extent = 2.0 * spec.truncation_multiplier / scale_a;
    let pts = axis_points(1.0, extent, &[]);
    let nest = Nest::new();
    let r = integrate(
        |x| q((scale_a * x).sqrt()),
        &pts,
        spec.abs_tol,
        spec.rel_tol,
        spec.max_subdivisions,
    );
    nest.finish(r, spec.tail_mass() / scale_a)
}

/// `int int Q(sqrt(a1 x + a2 y)) dx dy`, the mass of the 2D Q-impulse.
pub fn q_mass_2d(a1: f64, a2: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    check_positive("q_mass_2d", "a1", a1)?;
    check_positive("q_mass_2d", "a2", a2)?;
    let extent = 2.0 * spec.truncation_multiplier / a1.min(a2);
    let est = mass_2d(|x, y| q((a1 * x + a2 * y).sqrt()), extent, spec)?;
    Ok(Estimate {
        abs_error: est.abs_error + 4.0 * spec.tail_mass() / (a1 * a2),
        ..est
    })
}
