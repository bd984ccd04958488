//! SNR sweeps over any scenario and method, written as CSV.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use crate::closed_form::{approx_i0, approx_i1, approx_i2, approx_network_node1, approx_relay};
use crate::curve::{db_to_linear, BerCurve, BerPoint, Method, Scenario};
use crate::error::{Error, Result};
use crate::quadrature::{
    expect_min_2d, expect_network_node1, expect_q_1d, expect_q_2d, expect_relay_3d, Estimate, QuadratureSpec,
};
use crate::scenario::UpstreamErrorModel;
use crate::sim::{ChannelConfig, Runner, SimEstimate};

/// Fixed CSV header.
pub const CSV_HEADER: &str = "scenario,method,snr_db,ber,std_error";

/// Grid sizes beyond this are rejected as input mistakes.
const MAX_GRID_POINTS: usize = 100_000;

/// Inclusive `start:stop:step` grid in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrGrid {
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
}

impl SnrGrid {
    pub fn new(start_db: f64, stop_db: f64, step_db: f64) -> Result<Self> {
        let g = Self {
            start_db,
            stop_db,
            step_db,
        };
        if !(start_db.is_finite() && stop_db.is_finite() && step_db.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite grid {g}")));
        }
        if step_db <= 0.0 {
            return Err(Error::InvalidConfig(format!("grid step {step_db} must be positive")));
        }
        if start_db > stop_db {
            return Err(Error::InvalidConfig(format!("grid start {start_db} exceeds stop {stop_db}")));
        }
        if g.len() > MAX_GRID_POINTS {
            return Err(Error::InvalidConfig(format!("grid {g} has more than {MAX_GRID_POINTS} points")));
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        ((self.stop_db - self.start_db) / self.step_db + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.start_db + i as f64 * self.step_db).collect()
    }
}

impl fmt::Display for SnrGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start_db, self.stop_db, self.step_db)
    }
}

impl FromStr for SnrGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(Error::InvalidConfig(format!("grid '{s}' is not START:STOP:STEP")));
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("'{t}' in grid '{s}' is not a number")))
        };
        Self::new(num(a)?, num(b)?, num(c)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRequest {
    pub scenario: Scenario,
    pub methods: Vec<Method>,
    pub grid: SnrGrid,
    /// Monte Carlo trials per SNR point.
    pub trials: u64,
    pub seed: u64,
    /// Scales of the `i1` scenario.
    pub a1: f64,
    pub a2: f64,
    pub quadrature: QuadratureSpec,
    pub upstream: UpstreamErrorModel,
    /// Count symbol errors instead of averaging the instantaneous BER
    /// (relay scenario only).
    pub symbol_level: bool,
}

impl SweepRequest {
    pub fn new(scenario: Scenario, methods: Vec<Method>, grid: SnrGrid) -> Self {
        Self {
            scenario,
            methods,
            grid,
            trials: 1_000_000,
            seed: 1,
            a1: 2.0,
            a2: 2.0,
            quadrature: QuadratureSpec::default(),
            upstream: UpstreamErrorModel::default(),
            symbol_level: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no method selected".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        for (name, a) in [("a1", self.a1), ("a2", self.a2)] {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} = {a} must be positive")));
            }
        }
        if self.symbol_level && self.scenario != Scenario::Relay {
            return Err(Error::InvalidConfig("symbol-level simulation exists for the relay scenario only".into()));
        }
        self.quadrature.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub curves: Vec<BerCurve>,
    /// Non-converged quadrature and low-confidence Monte Carlo points.
    pub warnings: Vec<String>,
}

/// Evaluates every requested method over the grid. Monte Carlo point `i`
/// uses seed `request.seed + i`.
pub fn run_sweep(request: &SweepRequest, runner: &Runner) -> Result<SweepOutput> {
    request.validate()?;
    let grid = request.grid.points();
    let mut warnings = Vec::new();
    let mut curves = Vec::with_capacity(request.methods.len());
    for &method in &request.methods {
        let mut points = Vec::with_capacity(grid.len());
        for (i, &db) in grid.iter().enumerate() {
            let s = db_to_linear(db);
            let point = match method {
                Method::ClosedForm => BerPoint {
                    snr_db: db,
                    ber: closed_form(request, s)?,
                    std_error: None,
                },
                Method::Quadrature => {
                    let e = accept_unconverged(quadrature(request, s), || {
                        warnings.push(format!(
                            "{} quadrature at {db} dB did not reach tolerance",
                            request.scenario
                        ))
                    })?;
                    BerPoint {
                        snr_db: db,
                        ber: e.value.clamp(0.0, 1.0),
                        std_error: None,
                    }
                }
                Method::MonteCarlo => {
                    let e = monte_carlo(request, runner, s, request.seed.wrapping_add(i as u64))?;
                    if e.low_confidence() {
                        warnings.push(format!(
                            "{} montecarlo at {db} dB is low confidence ({})",
                            request.scenario,
                            match e.error_events {
                                Some(n) => format!("{n} error events"),
                                None => format!("relative std error {:.3}", e.std_error / e.mean),
                            }
                        ));
                    }
                    BerPoint {
                        snr_db: db,
                        ber: e.mean,
                        std_error: Some(e.std_error),
                    }
                }
            };
            points.push(point);
        }
        curves.push(BerCurve::new(request.scenario, method, points)?);
    }
    Ok(SweepOutput { curves, warnings })
}

fn accept_unconverged(r: Result<Estimate>, mut flag: impl FnMut()) -> Result<Estimate> {
    match r {
        Err(Error::NotConverged { estimate, abs_error }) => {
            flag();
            Ok(Estimate {
                value: estimate,
                abs_error,
            })
        }
        other => other,
    }
}

fn closed_form(r: &SweepRequest, s: f64) -> Result<f64> {
    let v = match r.scenario {
        Scenario::I0 => approx_i0(s)?,
        Scenario::I1 => approx_i1(s, r.a1, r.a2)?,
        Scenario::I2 => approx_i2(s)?,
        Scenario::Relay => approx_relay(s)?,
        Scenario::Network => approx_network_node1(s)?,
    };
    Ok(v.value.value())
}

fn quadrature(r: &SweepRequest, s: f64) -> Result<Estimate> {
    let spec = &r.quadrature;
    match r.scenario {
        Scenario::I0 => expect_q_1d(s, 1.0, spec),
        Scenario::I1 => expect_q_2d(s, r.a1, r.a2, spec),
        Scenario::I2 => expect_min_2d(s, spec),
        Scenario::Relay => expect_relay_3d(s, spec),
        Scenario::Network => expect_network_node1(s, r.upstream, spec),
    }
}

fn monte_carlo(r: &SweepRequest, runner: &Runner, s: f64, seed: u64) -> Result<SimEstimate> {
    match r.scenario {
        Scenario::I0 => runner.semi_analytic_i0(s, 1.0, r.trials, seed),
        Scenario::I1 => runner.semi_analytic_i1(s, r.a1, r.a2, r.trials, seed),
        Scenario::I2 => runner.semi_analytic_i2(s, r.trials, seed),
        Scenario::Relay if r.symbol_level => runner.simulate_relay_symbol(&ChannelConfig::new(s)?, r.trials, seed),
        Scenario::Relay => runner.semi_analytic_relay(&ChannelConfig::new(s)?, r.trials, seed),
        Scenario::Network => runner.simulate_network_node1(&ChannelConfig::new(s)?, r.upstream, r.trials, seed),
    }
}

/// Writes the header and one row per point, curves in order.
pub fn write_csv<W: Write>(curves: &[BerCurve], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for c in curves {
        for p in &c.points {
            let std_error = p.std_error.map(|e| format!("{e:.12e}")).unwrap_or_default();
            writeln!(
                out,
                "{},{},{:.12e},{:.12e},{}",
                c.scenario, c.method, p.snr_db, p.ber, std_error
            )?;
        }
    }
    out.flush()
}
