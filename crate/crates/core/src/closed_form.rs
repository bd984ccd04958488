//! Closed-form average-BER approximations.
//!
//! Every high-SNR expression is a short sum of terms
//! `amplitude / s^d * exp(-exponent_sum / s)`: the amplitude is the impulse
//! mass, `d` the diversity order and `exponent_sum` the sum of the impulse
//! coordinates. Amplitude and exponent together set the coding gain.

use crate::curve::BerCurve;
use crate::error::{domain, Error, Result};
use crate::quadrature::{mass_2d, QuadratureSpec};
use crate::sampling::{
    critical_point_1d, critical_point_2d, impulse_weight_1d, impulse_weight_2d, maximize_log_sampler_2d,
    pdf_sampler_location, regime_select_with, RegimeKind, RegimeThresholds, SamplingOrder,
};
use crate::special::{log_gaussian_q, q, Probability};

/// Published impulse location for `E[Q(sqrt(X))]`.
pub const I0_LOCATION: f64 = 1.4157;
/// Published per-coordinate impulse location for `E[Q(sqrt(2X + 2Y))]`.
pub const I1_LOCATION: f64 = 0.8197;
/// Published impulse location for `E[Q(sqrt(2X))]`.
pub const I2_LOCATION: f64 = 0.7079;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub amplitude: f64,
    pub exponent_sum: f64,
}

impl ExpTerm {
    pub fn eval(&self, mean_snr: f64, diversity_order: u32) -> f64 {
        self.amplitude / mean_snr.powi(diversity_order as i32) * (-self.exponent_sum / mean_snr).exp()
    }
}

/// A closed-form approximation evaluated at one mean SNR.
///
/// For the pdf-sampled branch of `I0` the value is `Q(sqrt(s))` and `terms`
/// is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormBer {
    pub mean_snr: f64,
    pub value: Probability,
    pub diversity_order: u32,
    pub terms: Vec<ExpTerm>,
    pub regime: RegimeKind,
}

impl ClosedFormBer {
    fn from_terms(mean_snr: f64, diversity_order: u32, terms: Vec<ExpTerm>) -> Self {
        let value = Self::sum(&terms, mean_snr, diversity_order);
        Self {
            mean_snr,
            value: Probability::saturating(value),
            diversity_order,
            terms,
            regime: RegimeKind::QSampler,
        }
    }

    fn sum(terms: &[ExpTerm], mean_snr: f64, diversity_order: u32) -> f64 {
        terms.iter().map(|t| t.eval(mean_snr, diversity_order)).sum()
    }

    /// Sum of the stored terms at the stored SNR.
    pub fn evaluate_terms(&self) -> f64 {
        Self::sum(&self.terms, self.mean_snr, self.diversity_order)
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.amplitude).collect()
    }

    pub fn exponent_sums(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.exponent_sum).collect()
    }
}

fn check_snr(function: &'static str, mean_snr: f64) -> Result<()> {
    if mean_snr > 0.0 && mean_snr.is_finite() {
        Ok(())
    } else {
        Err(domain(function, format!("mean_snr = {mean_snr}")))
    }
}

/// `E[Q(sqrt(X))]`, piecewise over the sampling regime.
pub fn approx_i0(mean_snr: f64) -> Result<ClosedFormBer> {
    approx_i0_with(mean_snr, &RegimeThresholds::default())
}

pub fn approx_i0_with(mean_snr: f64, thresholds: &RegimeThresholds) -> Result<ClosedFormBer> {
    check_snr("approx_i0", mean_snr)?;
    match regime_select_with(mean_snr, thresholds)?.kind {
        RegimeKind::QSampler => Ok(i0_q_sampler(mean_snr)?),
        RegimeKind::PdfSampler => i0_pdf_sampler(mean_snr),
    }
}

/// Q-sampled branch `(1/(2s)) exp(-x*/s)`, regardless of regime.
pub fn i0_q_sampler(mean_snr: f64) -> Result<ClosedFormBer> {
    check_snr("i0_q_sampler", mean_snr)?;
    let term = ExpTerm {
        amplitude: impulse_weight_1d(1.0)?,
        exponent_sum: critical_point_1d(1.0)?,
    };
    Ok(ClosedFormBer::from_terms(mean_snr, 1, vec![term]))
}

/// Pdf-sampled branch `Q(sqrt(s))`, regardless of regime.
pub fn i0_pdf_sampler(mean_snr: f64) -> Result<ClosedFormBer> {
    check_snr("i0_pdf_sampler", mean_snr)?;
    let location = pdf_sampler_location(mean_snr, SamplingOrder::Asymptotic)?;
    Ok(ClosedFormBer {
        mean_snr,
        value: Probability::saturating(q(location.sqrt())),
        diversity_order: 1,
        terms: Vec::new(),
        regime: RegimeKind::PdfSampler,
    })
}

/// `E[Q(sqrt(a1 X + a2 Y))] ~ 3/(4 a1 a2 s^2) exp(-(x* + y*)/s)`.
pub fn approx_i1(mean_snr: f64, a1: f64, a2: f64) -> Result<ClosedFormBer> {
    check_snr("approx_i1", mean_snr)?;
    let (x, y) = critical_point_2d(a1, a2)?;
    let term = ExpTerm {
        amplitude: impulse_weight_2d(a1, a2)?,
        exponent_sum: x + y,
    };
    Ok(ClosedFormBer::from_terms(mean_snr, 2, vec![term]))
}

/// `E[Q(sqrt(2 min(X, Y)))]` through the union bound
/// `Q(sqrt(2 min)) <= Q(sqrt(2X)) + Q(sqrt(2Y))`, each term 1D-sampled.
pub fn approx_i2(mean_snr: f64) -> Result<ClosedFormBer> {
    check_snr("approx_i2", mean_snr)?;
    // each union term is (1/(2a)) / s * exp(-x*/s) with a = 2
    let term = ExpTerm {
        amplitude: impulse_weight_1d(2.0)?,
        exponent_sum: critical_point_1d(2.0)?,
    };
    Ok(ClosedFormBer::from_terms(mean_snr, 1, vec![term, term]))
}

/// Impulse parameters of the relay and network-coded expressions. The
/// defaults are the published values; [`rederive_constants`] recomputes them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayConstants {
    /// Mass of `Q(sqrt(2) (x + y)/sqrt(x))` (reliable relay-destination hop).
    pub correct_relay_weight: f64,
    /// Impulse coordinate sum for that term.
    pub correct_relay_exponent: f64,
    /// Mass of `Q(sqrt(2 x + 2 y))` (reliable source-relay hop).
    pub mrc_weight: f64,
    /// Per-coordinate impulse location of `Q(sqrt(2 x + 2 y))`.
    pub mrc_location: f64,
    /// Mass of `Q(sqrt(2 y)) Q(sqrt(2) (x - y)/sqrt(x))` (relay error term).
    pub wrong_relay_weight: f64,
    /// Impulse coordinates of that term: `(gamma_sd, gamma_sr)`.
    pub wrong_relay_location: (f64, f64),
    /// Mass of the direct-slot term of the network-coded expression.
    pub network_direct_weight: f64,
    /// Impulse coordinate sum of the last network-coded term as published.
    pub network_wrong_relay_exponent: f64,
}

impl RelayConstants {
    pub const PUBLISHED: RelayConstants = RelayConstants {
        correct_relay_weight: 1.0 / 16.0,
        correct_relay_exponent: 1.3049,
        mrc_weight: 3.0 / 16.0,
        mrc_location: 0.8197,
        wrong_relay_weight: 1.0 / 4.0,
        wrong_relay_location: (1.3737, 1.7564),
        network_direct_weight: 3.0 / 16.0,
        network_wrong_relay_exponent: 3.1301,
    };
}

impl Default for RelayConstants {
    fn default() -> Self {
        Self::PUBLISHED
    }
}

/// Average end-to-end BER of the relay link with C-MRC.
pub fn approx_relay(mean_snr: f64) -> Result<ClosedFormBer> {
    approx_relay_with(mean_snr, &RelayConstants::PUBLISHED)
}

pub fn approx_relay_with(mean_snr: f64, c: &RelayConstants) -> Result<ClosedFormBer> {
    check_snr("approx_relay", mean_snr)?;
    let terms = vec![
        ExpTerm {
            amplitude: c.correct_relay_weight,
            exponent_sum: c.correct_relay_exponent,
        },
        ExpTerm {
            amplitude: c.mrc_weight,
            exponent_sum: 2.0 * c.mrc_location,
        },
        ExpTerm {
            amplitude: c.wrong_relay_weight,
            exponent_sum: c.wrong_relay_location.1 + c.wrong_relay_location.0,
        },
    ];
    Ok(ClosedFormBer::from_terms(mean_snr, 2, terms))
}

/// Average BER of node 1's data bit in the network-coded system.
pub fn approx_network_node1(mean_snr: f64) -> Result<ClosedFormBer> {
    approx_network_node1_with(mean_snr, &RelayConstants::PUBLISHED)
}

pub fn approx_network_node1_with(mean_snr: f64, c: &RelayConstants) -> Result<ClosedFormBer> {
    check_snr("approx_network_node1", mean_snr)?;
    let terms = vec![
        ExpTerm {
            amplitude: c.correct_relay_weight,
            exponent_sum: c.correct_relay_exponent,
        },
        ExpTerm {
            amplitude: c.mrc_weight + c.network_direct_weight,
            exponent_sum: 2.0 * c.mrc_location,
        },
        ExpTerm {
            amplitude: c.wrong_relay_weight,
            exponent_sum: c.network_wrong_relay_exponent,
        },
    ];
    Ok(ClosedFormBer::from_terms(mean_snr, 2, terms))
}

/// Diversity order and coding gain read off the high-SNR tail of a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticFit {
    pub diversity_order: f64,
    /// `None` when the fitted diversity order is zero.
    pub coding_gain_db: Option<f64>,
    pub points_used: usize,
}

/// Lower edge of the tail used by [`asymptotic_decomposition`].
pub const TAIL_START_DB: f64 = 20.0;

/// Least-squares line through `log10(BER)` against SNR in dB over the points
/// at or above 20 dB. With `log10 BER = alpha + beta * snr_db`, the diversity
/// order is `-10 beta` and the coding gain `-10 alpha / d` dB, so that
/// `BER ~ (G s)^-d`.
pub fn asymptotic_decomposition(curve: &BerCurve) -> Result<AsymptoticFit> {
    asymptotic_decomposition_from(curve, TAIL_START_DB)
}

pub fn asymptotic_decomposition_from(curve: &BerCurve, tail_start_db: f64) -> Result<AsymptoticFit> {
    let tail: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.snr_db >= tail_start_db && p.ber > 0.0)
        .map(|p| (p.snr_db, p.ber.log10()))
        .collect();
    if tail.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} usable points at or above {tail_start_db} dB, need 4",
            tail.len()
        )));
    }
    let n = tail.len() as f64;
    let mean_x = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all tail points share one SNR".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let diversity_order = -10.0 * slope;
    let coding_gain_db = (diversity_order.abs() > 1e-12).then(|| -10.0 * intercept / diversity_order);
    Ok(AsymptoticFit {
        diversity_order,
        coding_gain_db,
        points_used: tail.len(),
    })
}

/// One stored constant next to the value recomputed from its defining
/// sampling problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantDrift {
    pub name: &'static str,
    pub stored: f64,
    pub rederived: f64,
}

impl ConstantDrift {
    pub fn drift(&self) -> f64 {
        (self.stored - self.rederived).abs()
    }
}

/// Recomputes every impulse constant used by the closed forms: locations from
/// the 2D stationarity problem at `order`, masses by 2D quadrature. Stored
/// values are reported, never replaced.
pub fn rederive_constants(
    stored: &RelayConstants,
    order: SamplingOrder,
    spec: &QuadratureSpec,
) -> Result<Vec<ConstantDrift>> {
    use crate::sampling::{critical_point_1d_with, critical_point_2d_with};
    use std::f64::consts::SQRT_2;

    let ln_one_minus_q = |x: f64| (-q(x)).ln_1p();

    // x = gamma_sd, y = gamma_sr in both relay terms
    let correct = maximize_log_sampler_2d(
        |x, y| ln_one_minus_q((2.0 * y).sqrt()) + log_gaussian_q(SQRT_2 * (x + y) / x.sqrt()),
        order,
        (1.0, 1.0),
    )?;
    let wrong = maximize_log_sampler_2d(
        |x, y| log_gaussian_q((2.0 * y).sqrt()) + log_gaussian_q(SQRT_2 * (x - y) / x.sqrt()),
        order,
        (1.0, 1.0),
    )?;
    let (mrc_x, _) = critical_point_2d_with(2.0, 2.0, order)?;

    let extent = 60.0;
    let correct_mass = mass_2d(|x, y| q(SQRT_2 * (x + y) / x.sqrt()), extent, spec)?.value;
    let wrong_mass = mass_2d(
        |x, y| q((2.0 * y).sqrt()) * q(SQRT_2 * (x - y) / x.sqrt()),
        extent,
        spec,
    )?
    .value;
    let mrc_mass = mass_2d(|x, y| q((2.0 * x + 2.0 * y).sqrt()), extent, spec)?.value;

    Ok(vec![
        ConstantDrift {
            name: "i0_location",
            stored: I0_LOCATION,
            rederived: critical_point_1d_with(1.0, order)?,
        },
        ConstantDrift {
            name: "i1_location",
            stored: I1_LOCATION,
            rederived: mrc_x,
        },
        ConstantDrift {
            name: "i2_location",
            stored: I2_LOCATION,
            rederived: critical_point_1d_with(2.0, order)?,
        },
        ConstantDrift {
            name: "correct_relay_weight",
            stored: stored.correct_relay_weight,
            rederived: correct_mass,
        },
        ConstantDrift {
            name: "correct_relay_exponent",
            stored: stored.correct_relay_exponent,
            rederived: correct.0 + correct.1,
        },
        ConstantDrift {
            name: "mrc_weight",
            stored: stored.mrc_weight,
            rederived: mrc_mass,
        },
        ConstantDrift {
            name: "mrc_location",
            stored: stored.mrc_location,
            rederived: mrc_x,
        },
        ConstantDrift {
            name: "wrong_relay_weight",
            stored: stored.wrong_relay_weight,
            rederived: wrong_mass,
        },
        ConstantDrift {
            name: "wrong_relay_location_sd",
            stored: stored.wrong_relay_location.0,
            rederived: wrong.0,
        },
        ConstantDrift {
            name: "wrong_relay_location_sr",
            stored: stored.wrong_relay_location.1,
            rederived: wrong.1,
        },
        ConstantDrift {
            name: "network_direct_weight",
            stored: stored.network_direct_weight,
            rederived: mrc_mass,
        },
        ConstantDrift {
            name: "network_wrong_relay_exponent",
            stored: stored.network_wrong_relay_exponent,
            rederived: wrong.0 + wrong.1,
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{db_to_linear, Method, Scenario};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn i0_branches() {
        let hi = approx_i0(10.0).unwrap();
        assert!((hi.value.value() - 0.04340).abs() < 1e-4);
        assert_eq!(hi.diversity_order, 1);
        assert_eq!(hi.regime, RegimeKind::QSampler);
        let lo = approx_i0(0.2).unwrap();
        assert!((lo.value.value() - 0.3274).abs() < 1e-3);
        assert_eq!(lo.regime, RegimeKind::PdfSampler);
        assert!(lo.terms.is_empty());
    }

    #[test]
    fn i1_reference() {
        let v = approx_i1(100.0, 2.0, 2.0).unwrap();
        // 3/16 * 1e-4 * exp(-1.63951/100)
        assert!((v.value.value() - 1.8445e-5).abs() < 1e-8, "{}", v.value.value());
        assert_eq!(v.amplitudes(), vec![3.0 / 16.0]);
        assert!((v.exponent_sums()[0] - 1.6394).abs() < 2e-3);
        assert_eq!(v.diversity_order, 2);
    }

    #[test]
    fn i2_reference() {
        let v = approx_i2(100.0).unwrap();
        assert!((v.value.value() - 0.004965).abs() < 1e-5);
        let amp: f64 = v.amplitudes().iter().sum();
        assert_eq!(amp, 0.5);
        assert!((v.exponent_sums()[0] - 0.7079).abs() < 1e-3);
        assert_eq!(v.terms.len(), 2);
    }

    #[test]
    fn relay_reference() {
        let v = approx_relay(100.0).unwrap();
        assert_eq!(v.amplitudes(), vec![1.0 / 16.0, 3.0 / 16.0, 0.25]);
        let e = v.exponent_sums();
        assert_eq!(e[0], 1.3049);
        assert_eq!(e[1], 2.0 * 0.8197);
        assert!((e[2] - (1.7564 + 1.3737)).abs() < 1e-15);
        assert!((v.value.value() - 4.89e-5).abs() < 2e-7);
    }

    #[test]
    fn network_constants_locked() {
        let v = approx_network_node1(100.0).unwrap();
        assert_eq!(v.amplitudes(), vec![1.0 / 16.0, 3.0 / 8.0, 4.0 / 16.0]);
        assert_eq!(v.exponent_sums(), vec![1.3049, 1.6394, 3.1301]);
        assert!((v.value.value() - 6.73e-5).abs() < 2e-7);
        for s in [10.0, 100.0, 1e4] {
            let ratio = approx_network_node1(s).unwrap().value.value() / approx_relay(s).unwrap().value.value();
            assert!((1.0..=2.0).contains(&ratio));
        }
    }

    #[test]
    fn values_equal_term_sums_and_are_probabilities() {
        for db in [0.0, 3.0, 10.0, 25.0, 40.0] {
            let s = db_to_linear(db);
            for v in [
                approx_i0(s).unwrap(),
                approx_i1(s, 2.0, 2.0).unwrap(),
                approx_i1(s, 0.7, 3.1).unwrap(),
                approx_i2(s).unwrap(),
                approx_relay(s).unwrap(),
                approx_network_node1(s).unwrap(),
            ] {
                let x = v.value.value();
                assert!(x > 0.0 && x <= 0.5);
                if !v.terms.is_empty() {
                    assert!(rel(v.evaluate_terms(), x) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn monotone_decreasing_above_one() {
        type F = fn(f64) -> f64;
        let fns: [(&str, F, f64); 5] = [
            ("i0", |s| approx_i0(s).unwrap().value.value(), I0_LOCATION),
            ("i1", |s| approx_i1(s, 2.0, 2.0).unwrap().value.value(), 1.0),
            ("i2", |s| approx_i2(s).unwrap().value.value(), 1.0),
            ("relay", |s| approx_relay(s).unwrap().value.value(), 1.0),
            ("network", |s| approx_network_node1(s).unwrap().value.value(), 1.0),
        ];
        for (name, f, start) in fns {
            let mut last = f64::INFINITY;
            for i in 0..400 {
                let s = start * 1.02f64.powi(i);
                let v = f(s);
                assert!(v < last, "{name} at s = {s}");
                last = v;
            }
        }
        // (1/(2s)) exp(-c/s) rises until s = c
        assert!(approx_i0(1.2).unwrap().value.value() > approx_i0(1.0).unwrap().value.value());
    }

    #[test]
    fn published_locations_trace_to_solver() {
        assert!((critical_point_1d(1.0).unwrap() - I0_LOCATION).abs() < 2e-3);
        assert!((critical_point_2d(2.0, 2.0).unwrap().0 - I1_LOCATION).abs() < 2e-3);
        assert!((critical_point_1d(2.0).unwrap() - I2_LOCATION).abs() < 2e-3);
    }

    #[test]
    fn rederived_constants_match_published() {
        let spec = QuadratureSpec {
            rel_tol: 1e-7,
            abs_tol: 1e-10,
            ..Default::default()
        };
        let drifts = rederive_constants(&RelayConstants::PUBLISHED, SamplingOrder::REFERENCE, &spec).unwrap();
        for d in &drifts {
            assert!(d.drift() < 2e-3, "{} stored {} rederived {}", d.name, d.stored, d.rederived);
        }
        let perturbed = RelayConstants {
            correct_relay_exponent: 1.3049 * 1.1,
            ..RelayConstants::PUBLISHED
        };
        let drifts = rederive_constants(&perturbed, SamplingOrder::REFERENCE, &spec).unwrap();
        assert!(drifts.iter().any(|d| d.drift() > 2e-3));
    }

    fn curve_of(f: impl Fn(f64) -> f64, from: f64, to: f64) -> BerCurve {
        let grid: Vec<f64> = (0..=((to - from) as usize)).map(|i| from + i as f64).collect();
        BerCurve::tabulate(Scenario::Relay, Method::ClosedForm, &grid, |s| Ok(f(s))).unwrap()
    }

    #[test]
    fn decomposition() {
        let relay = curve_of(|s| approx_relay(s).unwrap().value.value(), 20.0, 40.0);
        let fit = asymptotic_decomposition(&relay).unwrap();
        assert!((fit.diversity_order - 2.0).abs() < 0.1, "{fit:?}");
        // 0.5/s^2 = (sqrt(2) s)^-2 gives about 1.5 dB
        assert!((fit.coding_gain_db.unwrap() - 1.5).abs() < 0.1, "{fit:?}");

        let i0 = curve_of(|s| approx_i0(s).unwrap().value.value(), 20.0, 40.0);
        assert!((asymptotic_decomposition(&i0).unwrap().diversity_order - 1.0).abs() < 0.05);

        let flat = curve_of(|_| 0.01, 20.0, 30.0);
        let fit = asymptotic_decomposition(&flat).unwrap();
        assert!(fit.diversity_order.abs() < 1e-12);
        assert_eq!(fit.coding_gain_db, None);

        let short = curve_of(|_| 0.01, 15.0, 22.0);
        assert!(matches!(asymptotic_decomposition(&short), Err(Error::InsufficientData(_))));
    }
}
