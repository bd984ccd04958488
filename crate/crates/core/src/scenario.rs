//! Conditional error probabilities for the demodulate-and-forward relay with
//! C-MRC at the destination, and for node 1 of the network-coded system.

use std::f64::consts::SQRT_2;

use crate::error::{domain, Result};
use crate::special::{q, q_inv, Probability};

/// Below this the two-hop error probability is treated as zero and the
/// equivalent SNR saturates at the weaker hop.
const EQ_PROBABILITY_FLOOR: f64 = 1e-300;

/// Instantaneous SNRs (linear) of the three links in one channel draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSnrs {
    pub gamma_sr: f64,
    pub gamma_rd: f64,
    pub gamma_sd: f64,
}

impl LinkSnrs {
    pub fn new(gamma_sr: f64, gamma_rd: f64, gamma_sd: f64) -> Result<Self> {
        for (name, v) in [("gamma_sr", gamma_sr), ("gamma_rd", gamma_rd), ("gamma_sd", gamma_sd)] {
            check_snr(name, v)?;
        }
        Ok(Self {
            gamma_sr,
            gamma_rd,
            gamma_sd,
        })
    }

    pub fn gamma_eq(&self) -> f64 {
        gamma_eq_unchecked(self.gamma_sr, self.gamma_rd)
    }
}

fn check_snr(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && !v.is_nan() {
        Ok(())
    } else {
        Err(domain("snr", format!("{name} = {v} must be >= 0")))
    }
}

/// Equivalent SNR of the two-hop relayed path: the single-hop SNR whose BPSK
/// error rate `Q(sqrt(2 gamma))` equals the end-to-end two-hop error rate.
pub fn gamma_eq(gamma_sr: f64, gamma_rd: f64) -> Result<f64> {
    check_snr("gamma_sr", gamma_sr)?;
    check_snr("gamma_rd", gamma_rd)?;
    Ok(gamma_eq_unchecked(gamma_sr, gamma_rd))
}

pub(crate) fn gamma_eq_unchecked(gamma_sr: f64, gamma_rd: f64) -> f64 {
    let p_sr = q((2.0 * gamma_sr).sqrt());
    let p_rd = q((2.0 * gamma_rd).sqrt());
    let p = (1.0 - p_sr) * p_rd + (1.0 - p_rd) * p_sr;
    if p < EQ_PROBABILITY_FLOOR {
        return gamma_sr.min(gamma_rd);
    }
    if p >= 0.5 {
        return 0.0;
    }
    let x = q_inv(p);
    0.5 * x * x
}

/// Error probability of the C-MRC decision given the first-hop error
/// probability, the direct-link SNR, the equivalent SNR of the relayed path and
/// the SNR of its last hop.
fn cmrc_conditional_ber(p_first: f64, gamma_direct: f64, gamma_eq: f64, gamma_last: f64) -> f64 {
    let relay_noise = if gamma_eq == 0.0 {
        0.0
    } else {
        gamma_eq * gamma_eq / gamma_last
    };
    let den = (gamma_direct + relay_noise).sqrt();
    if den == 0.0 {
        // no signal on either branch
        return 0.5;
    }
    let right = SQRT_2 * (gamma_direct + gamma_eq) / den;
    let wrong = SQRT_2 * (gamma_direct - gamma_eq) / den;
    (1.0 - p_first) * q(right) + p_first * q(wrong)
}

/// Instantaneous end-to-end BER of the relay link given one channel draw.
pub fn instantaneous_ber_relay(links: &LinkSnrs) -> Probability {
    let p_sr = q((2.0 * links.gamma_sr).sqrt());
    let value = cmrc_conditional_ber(p_sr, links.gamma_sd, links.gamma_eq(), links.gamma_rd);
    Probability::saturating(value)
}

/// Conditional-BER inputs for the data bit of node 1 in the network-coded
/// system: direct slots 1 and 2, the slot-4 link, the equivalent SNR of the
/// two-hop path ending in slot 4 and the error probability of the network
/// coded symbol sent in slot 4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkSnrs {
    pub gamma_1: f64,
    pub gamma_2: f64,
    pub gamma_4: f64,
    pub gamma_eq4: f64,
    pub p_e4: f64,
}

/// How the slot-4 relay error probability is formed from a channel draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpstreamErrorModel {
    /// `p_e4 = Q(sqrt(2 gamma_eq4))` with `gamma_eq4 = gamma_eq(gamma_up, gamma_4)`.
    #[default]
    EquivalentChannel,
    /// `p_e4 = Q(sqrt(2 gamma_up))`, the first-hop error exactly as in the
    /// single-relay expression.
    FirstHop,
}

impl NetworkSnrs {
    pub fn new(gamma_1: f64, gamma_2: f64, gamma_4: f64, gamma_eq4: f64, p_e4: f64) -> Result<Self> {
        for (name, v) in [
            ("gamma_1", gamma_1),
            ("gamma_2", gamma_2),
            ("gamma_4", gamma_4),
            ("gamma_eq4", gamma_eq4),
        ] {
            check_snr(name, v)?;
        }
        if !(0.0..=0.5).contains(&p_e4) {
            return Err(domain("NetworkSnrs::new", format!("p_e4 = {p_e4} not in [0, 1/2]")));
        }
        Ok(Self {
            gamma_1,
            gamma_2,
            gamma_4,
            gamma_eq4,
            p_e4,
        })
    }

    /// Builds the inputs from one draw of the link SNRs plus the upstream hop
    /// feeding the slot-4 relay.
    pub fn from_draw(
        gamma_1: f64,
        gamma_2: f64,
        gamma_4: f64,
        gamma_up: f64,
        model: UpstreamErrorModel,
    ) -> Result<Self> {
        check_snr("gamma_up", gamma_up)?;
        let gamma_eq4 = gamma_eq_unchecked(gamma_up, gamma_4);
        let p_e4 = match model {
            UpstreamErrorModel::EquivalentChannel => q((2.0 * gamma_eq4).sqrt()),
            UpstreamErrorModel::FirstHop => q((2.0 * gamma_up).sqrt()),
        };
        Self::new(gamma_1, gamma_2, gamma_4, gamma_eq4, p_e4)
    }
}

/// Instantaneous BER of node 1's data bit in the network-coded system.
pub fn instantaneous_ber_network(snrs: &NetworkSnrs) -> Probability {
    let relayed = cmrc_conditional_ber(snrs.p_e4, snrs.gamma_1, snrs.gamma_eq4, snrs.gamma_4);
    let direct = q((2.0 * (snrs.gamma_1 + snrs.gamma_2)).sqrt());
    Probability::saturating(relayed + direct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gamma_eq_reference() {
        // 40-digit evaluation of the defining expression
        let g = gamma_eq(1.0, 1.0).unwrap();
        assert!((g - 0.560_146_496_880_054_2).abs() < 1e-12, "{g}");
        assert!((g - 0.5595).abs() < 1e-3);
        let g = gamma_eq(3.0, 0.2).unwrap();
        assert!((g - 0.193_524_504_831_775_36).abs() < 1e-12, "{g}");
    }

    #[test]
    fn gamma_eq_limits_and_saturation() {
        // P_RD -> 0 leaves only the first hop
        let g = gamma_eq(2.0, 1e6).unwrap();
        assert!((g - 2.0).abs() < 1e-12);
        assert_eq!(gamma_eq(900.0, 1000.0).unwrap(), 900.0);
        assert_eq!(gamma_eq(0.0, 5.0).unwrap(), 0.0);
        assert!(gamma_eq(-1.0, 1.0).is_err());
    }

    #[test]
    fn relay_ber_reference() {
        let links = LinkSnrs::new(1.0, 1.0, 1.0).unwrap();
        let p = instantaneous_ber_relay(&links).value();
        assert!((p - 0.048_081_165_378_584_72).abs() < 1e-12, "{p}");
        let links = LinkSnrs::new(2.0, 5.0, 0.5).unwrap();
        let p = instantaneous_ber_relay(&links).value();
        assert!((p - 0.022_973_964_072_026_67).abs() < 1e-12, "{p}");
    }

    #[test]
    fn relay_ber_limits() {
        let zero = LinkSnrs::new(0.0, 0.0, 0.0).unwrap();
        assert_eq!(instantaneous_ber_relay(&zero).value(), 0.5);

        // reliable first hop: Q(sqrt(2 (gamma_sd + gamma_rd)))
        let links = LinkSnrs::new(1e6, 0.7, 1.2).unwrap();
        let want = q((2.0f64 * 1.9).sqrt());
        assert!((instantaneous_ber_relay(&links).value() - want).abs() < 1e-14);

        // gamma_sd = gamma_eq puts the second Q at 0
        let g = gamma_eq(0.8, 0.9).unwrap();
        let links = LinkSnrs::new(0.8, 0.9, g).unwrap();
        let p_sr = q((1.6f64).sqrt());
        let den = (g + g * g / 0.9).sqrt();
        let want = (1.0 - p_sr) * q(SQRT_2 * 2.0 * g / den) + p_sr * 0.5;
        assert!((instantaneous_ber_relay(&links).value() - want).abs() < 1e-15);
    }

    #[test]
    fn direct_link_monotonicity_counterexample() {
        let at = |sd| instantaneous_ber_relay(&LinkSnrs::new(3.0, 20.0, sd).unwrap()).value();
        assert!(at(0.2) > at(0.0));
        assert!((at(0.2) - at(0.0)) / at(0.0) < 1e-5);
        assert!(at(1.0) < at(0.0));
    }

    #[test]
    fn network_ber_reference_and_limits() {
        let p_e4 = q((2.0f64 * 0.5595).sqrt());
        let snrs = NetworkSnrs::new(1.0, 1.0, 1.0, 0.5595, p_e4).unwrap();
        let v = instantaneous_ber_network(&snrs).value();
        assert!((v - 0.088_501_766_527_681_6).abs() < 1e-12, "{v}");

        // error-free slot-4 relay with gamma_eq4 = gamma_4
        let snrs = NetworkSnrs::new(0.4, 0.9, 1.3, 1.3, 0.0).unwrap();
        let want = q((2.0f64 * 1.7).sqrt()) + q((2.0f64 * 1.3).sqrt());
        assert!((instantaneous_ber_network(&snrs).value() - want).abs() < 1e-15);

        let snrs = NetworkSnrs::new(1e4, 1e4, 1e4, 1e4, 0.0).unwrap();
        assert_eq!(instantaneous_ber_network(&snrs).value(), 0.0);
        assert!(NetworkSnrs::new(1.0, 1.0, 1.0, 1.0, 0.6).is_err());
    }

    #[test]
    fn network_from_draw_models() {
        let a = NetworkSnrs::from_draw(1.0, 1.0, 2.0, 0.5, UpstreamErrorModel::EquivalentChannel).unwrap();
        let b = NetworkSnrs::from_draw(1.0, 1.0, 2.0, 0.5, UpstreamErrorModel::FirstHop).unwrap();
        assert_eq!(a.gamma_eq4, b.gamma_eq4);
        assert!(a.p_e4 > b.p_e4);
        assert!((b.p_e4 - q(1.0)).abs() < 1e-16);
    }

    proptest! {
        #[test]
        fn gamma_eq_symmetric(a in 0.0f64..200.0, b in 0.0f64..200.0) {
            let (x, y) = (gamma_eq(a, b).unwrap(), gamma_eq(b, a).unwrap());
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0));
        }

        #[test]
        fn gamma_eq_defining_identity(a in 1e-3f64..40.0, b in 1e-3f64..40.0) {
            let g = gamma_eq(a, b).unwrap();
            let (pa, pb) = (q((2.0 * a).sqrt()), q((2.0 * b).sqrt()));
            let p = (1.0 - pa) * pb + (1.0 - pb) * pa;
            prop_assert!(((q((2.0 * g).sqrt()) - p) / p).abs() < 1e-9);
        }

        #[test]
        fn gamma_eq_no_better_than_weakest_hop(a in 0.0f64..1000.0, b in 0.0f64..1000.0) {
            prop_assert!(gamma_eq(a, b).unwrap() <= a.min(b) + 1e-9);
        }

        #[test]
        fn relay_ber_is_probability(sr in 0.0f64..1e4, rd in 0.0f64..1e4, sd in 0.0f64..1e4) {
            let p = instantaneous_ber_relay(&LinkSnrs::new(sr, rd, sd).unwrap()).value();
            prop_assert!((0.0..=1.0).contains(&p));
        }

        // Not strictly monotone: the correct-relay Q argument
        // (sd + eq)/sqrt(sd + eq^2/rd) dips for small sd when rd >> eq, so
        // only a tiny relative increase is allowed.
        #[test]
        fn relay_ber_nearly_monotone_in_direct_link(sr in 0.0f64..50.0, rd in 1e-3f64..50.0, sd in 0.0f64..50.0, d in 0.0f64..50.0) {
            let lo = instantaneous_ber_relay(&LinkSnrs::new(sr, rd, sd).unwrap()).value();
            let hi = instantaneous_ber_relay(&LinkSnrs::new(sr, rd, sd + d).unwrap()).value();
            prop_assert!(hi <= lo * (1.0 + 1e-5) + 1e-15);
        }
    }
}
