//! Monte Carlo over Rayleigh channel draws.
//!
//! Trials are split into fixed blocks of [`BLOCK_TRIALS`]. Block `b` draws from
//! a ChaCha8 generator seeded with the user seed and switched to stream `b`,
//! so every block sees the same numbers whichever worker runs it. Block
//! accumulators are merged in block order, which makes every estimate a pure
//! function of `(config, trials, seed)`.

use std::env;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::scenario::{
    gamma_eq_unchecked, instantaneous_ber_network, instantaneous_ber_relay, LinkSnrs, NetworkSnrs,
    UpstreamErrorModel,
};
use crate::special::q;

/// Trials per independently seeded block.
pub const BLOCK_TRIALS: u64 = 1 << 16;

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "QSAMPLE_THREADS";

/// Error events below which a symbol-level estimate is flagged.
pub const MIN_ERROR_EVENTS: u64 = 100;

/// Average link SNR and per-link channel variances. Noise power is 1, so the
/// instantaneous SNR of link `ij` is `mean_snr * |h_ij|^2` with
/// `h_ij ~ CN(0, variance_ij)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub mean_snr: f64,
    pub variance_sr: f64,
    pub variance_rd: f64,
    pub variance_sd: f64,
}

impl ChannelConfig {
    /// Unit-variance links at the given linear mean SNR.
    pub fn new(mean_snr: f64) -> Result<Self> {
        Self::with_variances(mean_snr, 1.0, 1.0, 1.0)
    }

    pub fn with_variances(mean_snr: f64, variance_sr: f64, variance_rd: f64, variance_sd: f64) -> Result<Self> {
        let c = Self {
            mean_snr,
            variance_sr,
            variance_rd,
            variance_sd,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mean_snr", self.mean_snr),
            ("variance_sr", self.variance_sr),
            ("variance_rd", self.variance_rd),
            ("variance_sd", self.variance_sd),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain("ChannelConfig", format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
    /// Counted bit errors, for symbol-level estimates.
    pub error_events: Option<u64>,
}

impl SimEstimate {
    /// Symbol-level points need [`MIN_ERROR_EVENTS`] errors; semi-analytic
    /// points are flagged when the relative standard error exceeds 10%.
    pub fn low_confidence(&self) -> bool {
        match self.error_events {
            Some(n) => n < MIN_ERROR_EVENTS,
            None => !(self.std_error <= 0.1 * self.mean),
        }
    }
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        Moments {
            n,
            mean: self.mean + d * w,
            m2: self.m2 + other.m2 + d * d * self.n as f64 * w,
        }
    }
}

/// Wilson score half-width at one standard deviation.
fn wilson_std_error(errors: u64, trials: u64) -> f64 {
    let n = trials as f64;
    let p = errors as f64 / n;
    (p * (1.0 - p) / n + 0.25 / (n * n)).sqrt() / (1.0 + 1.0 / n)
}

/// Parallel block runner with a fixed worker count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Runner {
    workers: usize,
}

impl Runner {
    pub fn with_workers(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidConfig("worker count must be positive".into()));
        }
        Ok(Self { workers })
    }

    /// Worker count from `QSAMPLE_THREADS`, else all available cores.
    pub fn from_env() -> Result<Self> {
        match env::var(THREADS_ENV) {
            Ok(v) => {
                let n = v
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidConfig(format!("{THREADS_ENV} = {v:?}")))?;
                Self::with_workers(n)
            }
            Err(_) => Self::with_workers(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    fn blocks<T, F>(&self, trials: u64, seed: u64, block: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
    {
        if trials == 0 {
            return Err(domain("simulation", "trials = 0".to_string()));
        }
        let count = trials.div_ceil(BLOCK_TRIALS);
        let run = |b: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let len = BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS);
            block(&mut rng, len)
        };
        if self.workers == 1 {
            return Ok((0..count).map(run).collect());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        Ok(pool.install(|| (0..count).into_par_iter().map(run).collect()))
    }

    /// Sample mean of a per-trial statistic.
    fn average<F>(&self, trials: u64, seed: u64, draw: F) -> Result<SimEstimate>
    where
        F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
    {
        let parts = self.blocks(trials, seed, |rng, len| {
            let mut m = Moments::default();
            for _ in 0..len {
                m.push(draw(rng));
            }
            m
        })?;
        let m = parts.into_iter().fold(Moments::default(), Moments::merge);
        let variance = if m.n > 1 { m.m2 / (m.n - 1) as f64 } else { 0.0 };
        Ok(SimEstimate {
            mean: m.mean,
            std_error: (variance / m.n as f64).sqrt(),
            trials,
            seed,
            error_events: None,
        })
    }

    /// Error rate of a per-trial error indicator.
    fn count<F>(&self, trials: u64, seed: u64, trial: F) -> Result<SimEstimate>
    where
        F: Fn(&mut ChaCha8Rng) -> bool + Sync,
    {
        let parts = self.blocks(trials, seed, |rng, len| (0..len).filter(|_| trial(rng)).count() as u64)?;
        let errors: u64 = parts.into_iter().sum();
        Ok(SimEstimate {
            mean: errors as f64 / trials as f64,
            std_error: wilson_std_error(errors, trials),
            trials,
            seed,
            error_events: Some(errors),
        })
    }

    pub fn simulate_relay_symbol(&self, config: &ChannelConfig, trials: u64, seed: u64) -> Result<SimEstimate> {
        config.validate()?;
        let c = *config;
        self.count(trials, seed, move |rng| relay_symbol_error(&c, rng))
    }

    pub fn semi_analytic_relay(&self, config: &ChannelConfig, trials: u64, seed: u64) -> Result<SimEstimate> {
        config.validate()?;
        let c = *config;
        self.average(trials, seed, move |rng| {
            let links = LinkSnrs {
                gamma_sr: exp_draw(rng, c.mean_snr * c.variance_sr),
                gamma_rd: exp_draw(rng, c.mean_snr * c.variance_rd),
                gamma_sd: exp_draw(rng, c.mean_snr * c.variance_sd),
            };
            instantaneous_ber_relay(&links).value()
        })
    }

    /// Mean of `Q(sqrt(a X))`, `X ~ Exp(mean_snr)`.
    pub fn semi_analytic_i0(&self, mean_snr: f64, scale_a: f64, trials: u64, seed: u64) -> Result<SimEstimate> {
        check_positive("semi_analytic_i0", &[("mean_snr", mean_snr), ("scale_a", scale_a)])?;
        self.average(trials, seed, move |rng| q((scale_a * exp_draw(rng, mean_snr)).sqrt()))
    }

    /// Mean of `Q(sqrt(a1 X + a2 Y))`, `X, Y ~ Exp(mean_snr)` independent.
    pub fn semi_analytic_i1(&self, mean_snr: f64, a1: f64, a2: f64, trials: u64, seed: u64) -> Result<SimEstimate> {
        check_positive("semi_analytic_i1", &[("mean_snr", mean_snr), ("a1", a1), ("a2", a2)])?;
        self.average(trials, seed, move |rng| {
            let x = exp_draw(rng, mean_snr);
            let y = exp_draw(rng, mean_snr);
            q((a1 * x + a2 * y).sqrt())
        })
    }

    /// Mean of `Q(sqrt(2 min(X, Y)))`, `X, Y ~ Exp(mean_snr)` independent.
    pub fn semi_analytic_i2(&self, mean_snr: f64, trials: u64, seed: u64) -> Result<SimEstimate> {
        check_positive("semi_analytic_i2", &[("mean_snr", mean_snr)])?;
        self.average(trials, seed, move |rng| {
            let x = exp_draw(rng, mean_snr);
            let y = exp_draw(rng, mean_snr);
            q((2.0 * x.min(y)).sqrt())
        })
    }

    /// Node 1 of the network-coded system. The direct slots use
    /// `variance_sd`, the slot-4 link `variance_rd` and the hop into the
    /// slot-4 relay `variance_sr`.
    pub fn simulate_network_node1(
        &self,
        config: &ChannelConfig,
        model: UpstreamErrorModel,
        trials: u64,
        seed: u64,
    ) -> Result<SimEstimate> {
        config.validate()?;
        let c = *config;
        self.average(trials, seed, move |rng| {
            let g1 = exp_draw(rng, c.mean_snr * c.variance_sd);
            let g2 = exp_draw(rng, c.mean_snr * c.variance_sd);
            let g4 = exp_draw(rng, c.mean_snr * c.variance_rd);
            let up = exp_draw(rng, c.mean_snr * c.variance_sr);
            network_draw_ber(g1, g2, g4, up, model)
        })
    }
}

fn network_draw_ber(g1: f64, g2: f64, g4: f64, up: f64, model: UpstreamErrorModel) -> f64 {
    let gamma_eq4 = gamma_eq_unchecked(up, g4);
    let p_e4 = match model {
        UpstreamErrorModel::EquivalentChannel => q((2.0 * gamma_eq4).sqrt()),
        UpstreamErrorModel::FirstHop => q((2.0 * up).sqrt()),
    };
    let snrs = NetworkSnrs {
        gamma_1: g1,
        gamma_2: g2,
        gamma_4: g4,
        gamma_eq4,
        p_e4,
    };
    instantaneous_ber_network(&snrs).value()
}

fn check_positive(function: &'static str, args: &[(&str, f64)]) -> Result<()> {
    for &(name, v) in args {
        if !(v > 0.0 && v.is_finite()) {
            return Err(domain(function, format!("{name} = {v}")));
        }
    }
    Ok(())
}

fn exp_draw(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    let e: f64 = rng.sample(Exp1);
    mean * e
}

/// `sqrt(mean_snr) * h` with `h ~ CN(0, variance)`, as (re, im).
fn channel_draw(rng: &mut ChaCha8Rng, mean_snr: f64, variance: f64) -> (f64, f64) {
    let scale = (mean_snr * variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    (scale * re, scale * im)
}

/// Unit-variance complex noise.
fn noise_draw(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    (s * re, s * im)
}

/// `Re(conj(g) * (g x + n))`.
fn matched(g: (f64, f64), x: f64, n: (f64, f64)) -> f64 {
    let y = (g.0 * x + n.0, g.1 * x + n.1);
    g.0 * y.0 + g.1 * y.1
}

/// One BPSK symbol through source, relay and destination. The relay makes
/// an ML decision and forwards it; the destination combines both branches
/// with weights `conj(g_sd)` and `(gamma_eq/gamma_rd) conj(g_rd)`.
fn relay_symbol_error(c: &ChannelConfig, rng: &mut ChaCha8Rng) -> bool {
    let x = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let g_sr = channel_draw(rng, c.mean_snr, c.variance_sr);
    let g_rd = channel_draw(rng, c.mean_snr, c.variance_rd);
    let g_sd = channel_draw(rng, c.mean_snr, c.variance_sd);

    let relay_decision = if matched(g_sr, x, noise_draw(rng)) >= 0.0 { 1.0 } else { -1.0 };
    let direct = matched(g_sd, x, noise_draw(rng));
    let relayed = matched(g_rd, relay_decision, noise_draw(rng));

    let gamma_sr = g_sr.0 * g_sr.0 + g_sr.1 * g_sr.1;
    let gamma_rd = g_rd.0 * g_rd.0 + g_rd.1 * g_rd.1;
    let w = if gamma_rd > 0.0 {
        gamma_eq_unchecked(gamma_sr, gamma_rd) / gamma_rd
    } else {
        0.0
    };
    let decision = if direct + w * relayed >= 0.0 { 1.0 } else { -1.0 };
    decision != x
}

fn default_runner() -> Result<Runner> {
    Runner::from_env()
}

/// Symbol-level relay simulation on the default worker pool.
pub fn simulate_relay_symbol(config: &ChannelConfig, trials: u64, seed: u64) -> Result<SimEstimate> {
    default_runner()?.simulate_relay_symbol(config, trials, seed)
}

/// Mean instantaneous relay BER on the default worker pool.
pub fn semi_analytic_relay(config: &ChannelConfig, trials: u64, seed: u64) -> Result<SimEstimate> {
    default_runner()?.semi_analytic_relay(config, trials, seed)
}

pub fn semi_analytic_i0(mean_snr: f64, scale_a: f64, trials: u64, seed: u64) -> Result<SimEstimate> {
    default_runner()?.semi_analytic_i0(mean_snr, scale_a, trials, seed)
}

pub fn semi_analytic_i1(mean_snr: f64, a1: f64, a2: f64, trials: u64, seed: u64) -> Result<SimEstimate> {
    default_runner()?.semi_analytic_i1(mean_snr, a1, a2, trials, seed)
}

pub fn semi_analytic_i2(mean_snr: f64, trials: u64, seed: u64) -> Result<SimEstimate> {
    default_runner()?.semi_analytic_i2(mean_snr, trials, seed)
}

/// Network-coded node 1 with the default upstream error model.
pub fn simulate_network_node1(config: &ChannelConfig, trials: u64, seed: u64) -> Result<SimEstimate> {
    default_runner()?.simulate_network_node1(config, UpstreamErrorModel::default(), trials, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{expect_q_1d, expect_q_2d, expect_relay_3d, QuadratureSpec};

    fn one() -> Runner {
        Runner::with_workers(1).unwrap()
    }

    fn within(a: &SimEstimate, b: f64, sigmas: f64) -> bool {
        (a.mean - b).abs() <= sigmas * a.std_error
    }

    #[test]
    fn zero_trials_rejected() {
        let c = ChannelConfig::new(10.0).unwrap();
        assert!(one().semi_analytic_relay(&c, 0, 1).is_err());
        assert!(one().simulate_relay_symbol(&c, 0, 1).is_err());
        assert!(ChannelConfig::new(0.0).is_err());
        assert!(Runner::with_workers(0).is_err());
    }

    #[test]
    fn moments_merge_matches_direct() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        let m = a.merge(b);
        assert!((m.mean - all.mean).abs() < 1e-12);
        assert!((m.m2 - all.m2).abs() < 1e-8 * all.m2);
    }

    #[test]
    fn wilson_reference() {
        // z = 1: sqrt(p(1-p)/n + 1/(4n^2)) / (1 + 1/n)
        assert!((wilson_std_error(50, 1000) - 0.006_903_234_246_296_331).abs() < 1e-15);
        assert!(wilson_std_error(0, 100) > 0.0);
    }

    #[test]
    fn deterministic_across_workers() {
        let c = ChannelConfig::new(31.6).unwrap();
        let trials = 3 * BLOCK_TRIALS + 17;
        let base = one().semi_analytic_relay(&c, trials, 7).unwrap();
        let sym = one().simulate_relay_symbol(&c, trials, 7).unwrap();
        for w in [2, 4] {
            let r = Runner::with_workers(w).unwrap();
            assert_eq!(r.semi_analytic_relay(&c, trials, 7).unwrap(), base);
            assert_eq!(r.simulate_relay_symbol(&c, trials, 7).unwrap(), sym);
        }
        assert_ne!(one().semi_analytic_relay(&c, trials, 8).unwrap().mean, base.mean);
    }

    #[test]
    fn i0_matches_identity() {
        let e = one().semi_analytic_i0(10.0, 1.0, 1_000_000, 3).unwrap();
        let exact = 0.5 * (1.0 - (10.0f64 / 12.0).sqrt());
        assert!((exact - 0.0436).abs() < 1e-4);
        assert!(within(&e, exact, 3.0), "{e:?}");
        let spec = QuadratureSpec::default();
        assert!((expect_q_1d(10.0, 1.0, &spec).unwrap().value - exact).abs() < 1e-10);
    }

    #[test]
    fn i2_is_i0_at_half_snr() {
        let i2 = one().semi_analytic_i2(20.0, 1_000_000, 5).unwrap();
        let i0 = one().semi_analytic_i0(10.0, 2.0, 1_000_000, 6).unwrap();
        let sigma = (i2.std_error.powi(2) + i0.std_error.powi(2)).sqrt();
        assert!((i2.mean - i0.mean).abs() < 3.0 * sigma);
    }

    #[test]
    fn i1_matches_quadrature() {
        let e = one().semi_analytic_i1(100.0, 2.0, 2.0, 1_000_000, 11).unwrap();
        let exact = expect_q_2d(100.0, 2.0, 2.0, &QuadratureSpec::default()).unwrap().value;
        assert!(within(&e, exact, 3.0), "{e:?} vs {exact}");
    }

    #[test]
    fn relay_symbol_and_semi_analytic_agree() {
        let spec = QuadratureSpec::default();
        for (s, trials) in [(10.0, 2_000_000), (100.0, 4_000_000)] {
            let c = ChannelConfig::new(s).unwrap();
            let sym = one().simulate_relay_symbol(&c, trials, 21).unwrap();
            let semi = one().semi_analytic_relay(&c, trials / 4, 22).unwrap();
            let sigma = (sym.std_error.powi(2) + semi.std_error.powi(2)).sqrt();
            assert!((sym.mean - semi.mean).abs() < 3.0 * sigma, "s = {s}: {sym:?} {semi:?}");
            let exact = expect_relay_3d(s, &spec).unwrap().value;
            assert!(within(&semi, exact, 3.0), "s = {s}: {semi:?} vs {exact}");
            assert!(!sym.low_confidence());
        }
    }

    #[test]
    fn no_errors_at_high_snr() {
        let c = ChannelConfig::new(1e6).unwrap();
        let e = one().simulate_relay_symbol(&c, 100_000, 1).unwrap();
        assert_eq!(e.error_events, Some(0));
        assert!(e.low_confidence());
    }

    #[test]
    fn std_error_scales_with_trials() {
        let c = ChannelConfig::new(10.0).unwrap();
        let a = one().semi_analytic_relay(&c, 250_000, 2).unwrap();
        let b = one().semi_analytic_relay(&c, 1_000_000, 2).unwrap();
        let ratio = a.std_error / b.std_error;
        assert!((ratio / 2.0 - 1.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn network_draw_limits() {
        // a perfect upstream hop leaves only the C-MRC and direct terms
        let v = network_draw_ber(1.0, 1.0, 1.0, 1e300, UpstreamErrorModel::FirstHop);
        let links = LinkSnrs {
            gamma_sr: 1e300,
            gamma_rd: 1.0,
            gamma_sd: 1.0,
        };
        let expect = instantaneous_ber_relay(&links).value() + q(2.0);
        assert!((v - expect).abs() < 1e-12);
    }
}
