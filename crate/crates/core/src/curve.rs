//! BER-versus-SNR curves and the labels used to describe them.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// `E[Q(sqrt(X))]`
    I0,
    /// `E[Q(sqrt(a1 X + a2 Y))]`
    I1,
    /// `E[Q(sqrt(2 min(X, Y)))]`
    I2,
    /// End-to-end BER of the single relay with C-MRC.
    Relay,
    /// BER of node 1 in the network-coded system.
    Network,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::I0,
        Scenario::I1,
        Scenario::I2,
        Scenario::Relay,
        Scenario::Network,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Scenario::I0 => "i0",
            Scenario::I1 => "i1",
            Scenario::I2 => "i2",
            Scenario::Relay => "relay",
            Scenario::Network => "network",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::ClosedForm, Method::Quadrature, Method::MonteCarlo];

    pub fn label(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "montecarlo",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|v| v.label() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scenario '{s}'")))
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|v| v.label() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub ber: f64,
    /// Only Monte Carlo points carry a standard error.
    pub std_error: Option<f64>,
}

/// Results of one method for one scenario, sorted by SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub scenario: Scenario,
    pub method: Method,
    pub points: Vec<BerPoint>,
}

impl BerCurve {
    pub fn new(scenario: Scenario, method: Method, mut points: Vec<BerPoint>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !(0.0..=1.0).contains(&p.ber)) {
            return Err(Error::InvalidConfig(format!(
                "BER {} at {} dB is not a probability",
                p.ber, p.snr_db
            )));
        }
        points.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
        Ok(Self {
            scenario,
            method,
            points,
        })
    }

    /// Tabulates `ber(s_linear)` over the given SNRs in dB.
    pub fn tabulate<F>(scenario: Scenario, method: Method, snr_db: &[f64], mut ber: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let points = snr_db
            .iter()
            .map(|&db| {
                Ok(BerPoint {
                    snr_db: db,
                    ber: ber(db_to_linear(db))?,
                    std_error: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(scenario, method, points)
    }
}

/// `10^(dB/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.label().parse::<Scenario>().unwrap(), s);
        }
        for m in Method::ALL {
            assert_eq!(m.label().parse::<Method>().unwrap(), m);
        }
        assert!("i3".parse::<Scenario>().is_err());
    }

    #[test]
    fn curve_sorts_and_validates() {
        let pts = vec![
            BerPoint { snr_db: 10.0, ber: 0.1, std_error: None },
            BerPoint { snr_db: 0.0, ber: 0.2, std_error: None },
        ];
        let c = BerCurve::new(Scenario::I0, Method::ClosedForm, pts).unwrap();
        assert_eq!(c.points[0].snr_db, 0.0);
        let bad = vec![BerPoint { snr_db: 0.0, ber: 1.5, std_error: None }];
        assert!(BerCurve::new(Scenario::I0, Method::ClosedForm, bad).is_err());
    }

    #[test]
    fn db_conversion() {
        assert_eq!(db_to_linear(10.0), 10.0);
        assert!((db_to_linear(3.0) - 1.995_262_314_968_879_5).abs() < 1e-15);
        assert!((linear_to_db(100.0) - 20.0).abs() < 1e-14);
    }
}
