//! The acceptance suite: nine numbered checks, each with a runtime budget.

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::closed_form::{
    approx_i0, approx_i1, approx_i2, approx_network_node1_with, approx_relay_with, asymptotic_decomposition_from,
    i0_pdf_sampler, rederive_constants, ConstantDrift, RelayConstants,
};
use crate::curve::{db_to_linear, BerCurve, BerPoint, Method, Scenario};
use crate::error::Result;
use crate::quadrature::{
    expect_min_2d, expect_q_1d, expect_q_2d, expect_relay_3d, q_mass_1d, q_mass_2d, QuadratureSpec,
};
use crate::sampling::{critical_point_1d, critical_point_2d, SamplingOrder};
use crate::scenario::UpstreamErrorModel;
use crate::sim::{ChannelConfig, Runner, SimEstimate, BLOCK_TRIALS};
use crate::special::{chernoff_bound, exp_lower_bound, q};

/// Allowed distance between a stored constant and its recomputed value.
pub const CONSTANT_DRIFT_TOL: f64 = 2e-3;

#[derive(Debug, Clone)]
pub struct ValidationConfig {
    pub constants: RelayConstants,
    pub quadrature: QuadratureSpec,
    /// Monte Carlo trials per SNR point for the relay and network checks.
    pub mc_trials: u64,
    pub seed: u64,
    pub runner: Runner,
    /// Samples per inequality in the bound check.
    pub bound_samples: usize,
}

impl ValidationConfig {
    pub fn new(runner: Runner) -> Self {
        Self {
            constants: RelayConstants::PUBLISHED,
            quadrature: QuadratureSpec::default(),
            mc_trials: 10_000_000,
            seed: 2024,
            runner,
            bound_samples: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    /// One line per comparison group, measured against expected.
    pub details: Vec<String>,
    pub elapsed: Duration,
    pub budget: Option<Duration>,
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let budget = self
            .budget
            .map_or(String::new(), |b| format!(", budget {:.0} s", b.as_secs_f64()));
        write!(
            f,
            "[{}] {}. {} ({:.2} s{budget})",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed.as_secs_f64()
        )
    }
}

/// Collects pass/fail lines for one check.
#[derive(Default)]
struct Log {
    passed: bool,
    details: Vec<String>,
}

impl Log {
    fn new() -> Self {
        Self {
            passed: true,
            details: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.details.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn error(&mut self, what: &str, e: impl fmt::Display) {
        self.record(false, format!("{what}: {e}"));
    }

    /// Records the worst relative error of `(label, approx, reference)` rows.
    fn worst_relative(&mut self, what: &str, rows: &[(f64, f64, f64)], tol: f64) {
        let mut worst = (0.0f64, f64::NAN);
        for &(db, approx, reference) in rows {
            let r = ((approx - reference) / reference).abs();
            if !(r <= tol) {
                self.record(false, format!("{what} at {db} dB: {approx:.6e} vs {reference:.6e} ({:.2}%)", 100.0 * r));
            }
            if !(r <= worst.0) {
                worst = (r, db);
            }
        }
        self.record(
            worst.0 <= tol,
            format!(
                "{what}: worst relative error {:.2}% at {} dB (tolerance {:.0}%)",
                100.0 * worst.0,
                worst.1,
                100.0 * tol
            ),
        );
    }
}

pub const CHECK_IDS: [u8; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

/// Runs one numbered check.
pub fn run_check(id: u8, config: &ValidationConfig) -> CheckReport {
    let start = Instant::now();
    let (title, budget, log): (&'static str, Option<u64>, Log) = match id {
        1 => ("critical points", Some(1), check_critical_points(config)),
        2 => ("impulse weights", Some(10), check_weights(config)),
        3 => ("I0 accuracy", Some(5), check_i0(config)),
        4 => ("I1 and I2 accuracy", Some(30), check_i1_i2(config)),
        5 => ("relay end-to-end", Some(600), check_relay(config)),
        6 => ("network-coded node 1", Some(600), check_network(config)),
        7 => ("bound properties", Some(5), check_bounds(config)),
        8 => ("oracle self-consistency", None, check_oracles(config)),
        9 => ("Monte Carlo determinism", None, check_determinism(config)),
        _ => {
            let mut log = Log::new();
            log.record(false, format!("no check numbered {id}"));
            ("unknown", None, log)
        }
    };
    let elapsed = start.elapsed();
    let budget = budget.map(Duration::from_secs);
    let mut passed = log.passed;
    let mut details = log.details;
    if let Some(b) = budget {
        let ok = elapsed <= b;
        passed &= ok;
        details.push(format!(
            "{} runtime {:.2} s against budget {} s",
            if ok { "ok  " } else { "FAIL" },
            elapsed.as_secs_f64(),
            b.as_secs()
        ));
    }
    CheckReport {
        id,
        title,
        passed,
        details,
        elapsed,
        budget,
    }
}

/// Runs every check in order.
pub fn run_validate(config: &ValidationConfig) -> Vec<CheckReport> {
    CHECK_IDS.iter().map(|&id| run_check(id, config)).collect()
}

fn drift_lines(log: &mut Log, drifts: &[ConstantDrift], names: &[&str]) {
    for d in drifts.iter().filter(|d| names.contains(&d.name)) {
        log.record(
            d.drift() <= CONSTANT_DRIFT_TOL,
            format!(
                "stored {} = {} vs recomputed {:.6} (tolerance {CONSTANT_DRIFT_TOL})",
                d.name, d.stored, d.rederived
            ),
        );
    }
}

fn rederive(config: &ValidationConfig, log: &mut Log) -> Vec<ConstantDrift> {
    match rederive_constants(&config.constants, SamplingOrder::REFERENCE, &config.quadrature) {
        Ok(d) => d,
        Err(e) => {
            log.error("re-deriving constants", e);
            Vec::new()
        }
    }
}

fn check_critical_points(config: &ValidationConfig) -> Log {
    let mut log = Log::new();
    let tol = 5e-3;
    for (a, expect) in [(1.0, 1.4157), (2.0, 0.7079)] {
        match critical_point_1d(a) {
            Ok(x) => log.record(
                (x - expect).abs() <= tol,
                format!("critical_point_1d({a}) = {x:.6} vs {expect} +/- {tol}"),
            ),
            Err(e) => log.error("critical_point_1d", e),
        }
    }
    match critical_point_2d(2.0, 2.0) {
        Ok((x, y)) => log.record(
            (x - 0.8197).abs() <= tol && (y - 0.8197).abs() <= tol,
            format!("critical_point_2d(2, 2) = ({x:.6}, {y:.6}) vs (0.8197, 0.8197) +/- {tol}"),
        ),
        Err(e) => log.error("critical_point_2d", e),
    }
    let drifts = rederive(config, &mut log);
    drift_lines(
        &mut log,
        &drifts,
        &[
            "i0_location",
            "i1_location",
            "i2_location",
            "correct_relay_exponent",
            "mrc_location",
            "wrong_relay_location_sd",
            "wrong_relay_location_sr",
            "network_wrong_relay_exponent",
        ],
    );
    log
}

fn check_weights(config: &ValidationConfig) -> Log {
    let mut log = Log::new();
    match q_mass_1d(1.0, &config.quadrature) {
        Ok(e) => log.record(
            (e.value - 0.5).abs() <= 1e-6,
            format!("integral of Q(sqrt(x)) = {:.10} vs 0.5 +/- 1e-6", e.value),
        ),
        Err(e) => log.error("q_mass_1d", e),
    }
    match q_mass_2d(2.0, 2.0, &config.quadrature) {
        Ok(e) => log.record(
            (e.value - 0.1875).abs() <= 1e-5,
            format!("integral of Q(sqrt(2x + 2y)) = {:.10} vs 0.1875 +/- 1e-5", e.value),
        ),
        Err(e) => log.error("q_mass_2d", e),
    }
    let drifts = rederive(config, &mut log);
    drift_lines(
        &mut log,
        &drifts,
        &["correct_relay_weight", "mrc_weight", "wrong_relay_weight", "network_direct_weight"],
    );
    log
}

fn db_range(from: i32, to: i32) -> impl Iterator<Item = f64> {
    (from..=to).map(f64::from)
}

fn check_i0(config: &ValidationConfig) -> Log {
    let mut log = Log::new();
    let spec = &config.quadrature;
    let rows = |dbs: &mut dyn Iterator<Item = f64>, approx: &dyn Fn(f64) -> Result<f64>| -> Result<Vec<_>> {
        dbs.map(|db| {
            let s = db_to_linear(db);
            Ok((db, approx(s)?, expect_q_1d(s, 1.0, spec)?.value))
        })
        .collect()
    };
    let q_branch = |s: f64| Ok(approx_i0(s)?.value.value());
    let pdf_branch = |s: f64| Ok(i0_pdf_sampler(s)?.value.value());
    for (what, dbs, f, tol) in [
        ("approx_i0 at 3 dB", &mut db_range(3, 3) as &mut dyn Iterator<Item = f64>, &q_branch as &dyn Fn(f64) -> Result<f64>, 0.20),
        ("approx_i0 over 10-30 dB", &mut db_range(10, 30), &q_branch, 0.05),
        ("pdf-sampled branch over -20 to -5 dB", &mut db_range(-20, -5), &pdf_branch, 0.35),
    ] {
        match rows(dbs, f) {
            Ok(r) => log.worst_relative(what, &r, tol),
            Err(e) => log.error(what, e),
        }
    }
    log
}

fn check_i1_i2(config: &ValidationConfig) -> Log {
    let mut log = Log::new();
    let spec = &config.quadrature;
    let i1: Result<Vec<_>> = db_range(20, 40)
        .map(|db| {
            let s = db_to_linear(db);
            Ok((db, approx_i1(s, 2.0, 2.0)?.value.value(), expect_q_2d(s, 2.0, 2.0, spec)?.value))
        })
        .collect();
    match i1 {
        Ok(r) => log.worst_relative("approx_i1(s, 2, 2) over 20-40 dB", &r, 0.10),
        Err(e) => log.error("I1", e),
    }
    let i2: Result<Vec<_>> = db_range(15, 40)
        .map(|db| {
            let s = db_to_linear(db);
            Ok((db, approx_i2(s)?.value.value(), expect_min_2d(s, spec)?.value))
        })
        .collect();
    match i2 {
        Ok(r) => log.worst_relative("approx_i2 over 15-40 dB", &r, 0.15),
        Err(e) => log.error("I2", e),
    }
    log
}

fn closed_form_curve(scenario: Scenario, from: i32, to: i32, f: impl Fn(f64) -> Result<f64>) -> Result<BerCurve> {
    let grid: Vec<f64> = db_range(from, to).collect();
    BerCurve::tabulate(scenario, Method::ClosedForm, &grid, f)
}

fn simulate_grid(
    dbs: &[f64],
    seed: u64,
    sim: impl Fn(&ChannelConfig, u64) -> Result<SimEstimate>,
) -> Result<Vec<(f64, SimEstimate)>> {
    dbs.iter()
        .enumerate()
        .map(|(i, &db)| Ok((db, sim(&ChannelConfig::new(db_to_linear(db))?, seed.wrapping_add(i as u64))?)))
        .collect()
}

fn check_relay(config: &ValidationConfig) -> Log {
    let mut log = Log::new();
    let c = config.constants;
    let approx = |s: f64| Ok(approx_relay_with(s, &c)?.value.value());

    let quad: Result<Vec<_>> = db_range(15, 30)
        .map(|db| {
            let s = db_to_linear(db);
            Ok((db, approx(s)?, expect_relay_3d(s, &config.quadrature)?.value))
        })
        .collect();
    match quad {
        Ok(r) => log.worst_relative("approx_relay vs quadrature over 15-30 dB", &r, 0.25),
        Err(e) => log.error("relay quadrature", e),
    }

    let dbs: Vec<f64> = db_range(15, 30).collect();
    match simulate_grid(&dbs, config.seed, |ch, seed| {
        config.runner.semi_analytic_relay(ch, config.mc_trials, seed)
    }) {
        Ok(sims) => {
            let mut worst = 0.0f64;
            let mut all = true;
            for (db, e) in &sims {
                let a = match approx(db_to_linear(*db)) {
                    Ok(a) => a,
                    Err(err) => {
                        log.error("approx_relay", err);
                        continue;
                    }
                };
                let allowed = 3.0 * e.std_error + 0.25 * e.mean;
                let ok = (a - e.mean).abs() <= allowed;
                worst = worst.max((a - e.mean).abs() / allowed);
                if !ok {
                    all = false;
                    log.record(
                        false,
                        format!("at {db} dB: {a:.6e} vs simulated {:.6e} +/- {:.2e}", e.mean, e.std_error),
                    );
                }
            }
            log.record(
                all,
                format!(
                    "approx_relay vs semi-analytic ({} trials) over 15-30 dB: worst |diff| is {:.2} of 3 sigma + 25%",
                    config.mc_trials, worst
                ),
            );
        }
        Err(e) => log.error("semi-analytic relay", e),
    }

    match closed_form_curve(Scenario::Relay, 20, 40, approx).and_then(|cv| asymptotic_decomposition_from(&cv, 20.0)) {
        Ok(fit) => log.record(
            (fit.diversity_order - 2.0).abs() <= 0.1,
            format!("diversity of approx_relay over 20-40 dB = {:.4} vs 2 +/- 0.1", fit.diversity_order),
        ),
        Err(e) => log.error("relay diversity fit", e),
    }
    log
}

fn check_network(config: &ValidationConfig) -> Log {
    let mut log = Log::new();
    let c = config.constants;
    let p = RelayConstants::PUBLISHED;
    let locked = c.correct_relay_weight == p.correct_relay_weight
        && c.correct_relay_exponent == p.correct_relay_exponent
        && c.mrc_weight + c.network_direct_weight == 3.0 / 8.0
        && c.mrc_location == p.mrc_location
        && c.wrong_relay_weight == p.wrong_relay_weight
        && c.network_wrong_relay_exponent == p.network_wrong_relay_exponent;
    log.record(
        locked,
        "formula constants (1/16 @ 1.3049, 3/8 @ 2 x 0.8197, 4/16 @ 3.1301) locked".to_string(),
    );

    let dbs: Vec<f64> = db_range(15, 30).collect();
    let sims = match simulate_grid(&dbs, config.seed, |ch, seed| {
        config
            .runner
            .simulate_network_node1(ch, UpstreamErrorModel::EquivalentChannel, config.mc_trials, seed)
    }) {
        Ok(s) => s,
        Err(e) => {
            log.error("network simulation", e);
            return log;
        }
    };
    let rows: Result<Vec<_>> = sims
        .iter()
        .filter(|(db, _)| *db <= 25.0)
        .map(|(db, e)| Ok((*db, approx_network_node1_with(db_to_linear(*db), &c)?.value.value(), e.mean)))
        .collect();
    match rows {
        Ok(r) => log.worst_relative(
            &format!("approx_network_node1 vs simulation ({} trials) over 15-25 dB", config.mc_trials),
            &r,
            0.30,
        ),
        Err(e) => log.error("approx_network_node1", e),
    }
    let points = sims
        .iter()
        .map(|(db, e)| BerPoint {
            snr_db: *db,
            ber: e.mean,
            std_error: Some(e.std_error),
        })
        .collect();
    let fit = BerCurve::new(Scenario::Network, Method::MonteCarlo, points)
        .and_then(|cv| {
            let tail = BerCurve {
                points: cv.points.into_iter().filter(|p| p.snr_db <= 30.0).collect(),
                ..cv
            };
            asymptotic_decomposition_from(&tail, 20.0)
        });
    match fit {
        Ok(fit) => log.record(
            (fit.diversity_order - 2.0).abs() <= 0.2,
            format!("diversity of simulated curve over 20-30 dB = {:.4} vs 2 +/- 0.2", fit.diversity_order),
        ),
        Err(e) => log.error("network diversity fit", e),
    }
    log
}

/// Largest SNR at which `Q(sqrt(x)) <= exp(-x/s)/s` holds for every `x > 1`;
/// the constraint is tight as `x -> 1`.
pub const Q_SAMPLER_BOUND_SNR_LIMIT: f64 = 5.2;

fn check_bounds(config: &ValidationConfig) -> Log {
    let mut log = Log::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.bound_samples;
    let f = |x: f64, s: f64| (-x / s).exp() / s;

    let mut bad = 0usize;
    for _ in 0..n {
        let x = 40.0 * (1.0 - rng.random::<f64>());
        if !(q(x.sqrt()) <= chernoff_bound(x).unwrap_or(f64::NAN)) {
            bad += 1;
        }
    }
    log.record(bad == 0, format!("Q(sqrt(x)) <= exp(-x/2)/2 on {n} x in (0, 40]: {bad} violations"));

    // x > 1, s in [2, 1000] log-uniform
    let (mut premise, mut bad_premise, mut low, mut bad_low, mut bad_literal) = (0usize, 0usize, 0usize, 0usize, 0usize);
    for _ in 0..n {
        let x = 1.0 + 39.0 * (1.0 - rng.random::<f64>());
        let s = 2.0 * 500f64.powf(rng.random::<f64>());
        let holds = q(x.sqrt()) <= f(x, s);
        if !holds {
            bad_literal += 1;
        }
        if f(x, s) >= 0.5 * (-0.5 * x).exp() {
            premise += 1;
            bad_premise += usize::from(!holds);
        }
        if s <= Q_SAMPLER_BOUND_SNR_LIMIT {
            low += 1;
            bad_low += usize::from(!holds);
        }
    }
    log.record(
        bad_premise == 0,
        format!("Q(sqrt(x)) <= exp(-x/s)/s wherever exp(-x/s)/s >= exp(-x/2)/2 ({premise} samples): {bad_premise} violations"),
    );
    log.record(
        bad_low == 0,
        format!(
            "Q(sqrt(x)) <= exp(-x/s)/s for 2 <= s <= {Q_SAMPLER_BOUND_SNR_LIMIT} ({low} samples): {bad_low} violations"
        ),
    );
    log.details.push(format!(
        "note Q(sqrt(x)) <= exp(-x/s)/s fails on {bad_literal} of {n} samples with s in [2, 1000], all beyond s = {Q_SAMPLER_BOUND_SNR_LIMIT}"
    ));

    let mut bad = 0usize;
    for _ in 0..n {
        let x = 1.0 + 39.0 * (1.0 - rng.random::<f64>());
        let s = (1.0 / 3.0) * (1.0 - rng.random::<f64>());
        let lower = exp_lower_bound(x).unwrap_or(f64::NAN);
        if !(q(x.sqrt()) >= lower && lower >= f(x, s)) {
            bad += 1;
        }
    }
    log.record(
        bad == 0,
        format!("Q(sqrt(x)) >= 3 exp(-3x) >= exp(-x/s)/s on {n} samples x > 1, s < 1/3: {bad} violations"),
    );
    log
}

fn check_oracles(config: &ValidationConfig) -> Log {
    let mut log = Log::new();
    let spec = &config.quadrature;
    let identity = |s: f64, a: f64| 0.5 * (1.0 - (a * s / (a * s + 2.0)).sqrt());
    let mut worst = 0.0f64;
    let mut count = 0;
    for db in [-10.0, 0.0, 10.0, 20.0, 30.0] {
        for a in [0.5, 1.0, 2.0, 4.0] {
            let s = db_to_linear(db);
            match expect_q_1d(s, a, spec) {
                Ok(e) => worst = worst.max((e.value - identity(s, a)).abs()),
                Err(e) => log.error("expect_q_1d", e),
            }
            count += 1;
        }
    }
    log.record(
        worst <= 1e-8,
        format!("expect_q_1d vs 0.5 (1 - sqrt(as/(as + 2))) on {count} points: worst {worst:.2e} (tolerance 1e-8)"),
    );
    // min of two Exp(s) is Exp(s/2)
    let mut worst = 0.0f64;
    for db in [0.0, 10.0, 20.0, 30.0, 40.0] {
        let s = db_to_linear(db);
        match expect_min_2d(s, spec) {
            Ok(e) => worst = worst.max((e.value - identity(s / 2.0, 2.0)).abs()),
            Err(e) => log.error("expect_min_2d", e),
        }
    }
    log.record(
        worst <= 1e-8,
        format!("expect_min_2d vs order-statistics reduction at 5 SNRs: worst {worst:.2e} (tolerance 1e-8)"),
    );
    log
}

fn check_determinism(config: &ValidationConfig) -> Log {
    let mut log = Log::new();
    let trials = 3 * BLOCK_TRIALS + 123;
    let seed = config.seed;
    type Sim = Box<dyn Fn(&Runner) -> Result<SimEstimate>>;
    let ch = match ChannelConfig::new(db_to_linear(15.0)) {
        Ok(c) => c,
        Err(e) => {
            log.error("channel", e);
            return log;
        }
    };
    let sims: Vec<(&str, Sim)> = vec![
        ("semi_analytic_i0", Box::new(move |r| r.semi_analytic_i0(10.0, 1.0, trials, seed))),
        ("semi_analytic_i1", Box::new(move |r| r.semi_analytic_i1(100.0, 2.0, 2.0, trials, seed))),
        ("semi_analytic_i2", Box::new(move |r| r.semi_analytic_i2(100.0, trials, seed))),
        ("semi_analytic_relay", Box::new(move |r| r.semi_analytic_relay(&ch, trials, seed))),
        ("simulate_relay_symbol", Box::new(move |r| r.simulate_relay_symbol(&ch, trials, seed))),
        (
            "simulate_network_node1",
            Box::new(move |r| r.simulate_network_node1(&ch, UpstreamErrorModel::EquivalentChannel, trials, seed)),
        ),
    ];
    for (name, sim) in sims {
        let results: Result<Vec<SimEstimate>> = [1, 2, 4]
            .iter()
            .map(|&w| sim(&Runner::with_workers(w)?))
            .collect();
        match results {
            Ok(r) => {
                let same = r.iter().all(|e| e.mean.to_bits() == r[0].mean.to_bits() && e == &r[0]);
                log.record(same, format!("{name} bit-identical with 1, 2 and 4 workers"));
            }
            Err(e) => log.error(name, e),
        }
    }
    log
}
