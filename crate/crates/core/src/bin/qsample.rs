use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qsample::closed_form::{rederive_constants, RelayConstants};
use qsample::curve::{Method, Scenario};
use qsample::quadrature::QuadratureSpec;
use qsample::sampling::{
    critical_point_1d_with, critical_point_2d_with, impulse_weight_1d, impulse_weight_2d, stationarity_residual_1d,
    stationarity_residual_2d, SamplingOrder,
};
use qsample::scenario::UpstreamErrorModel;
use qsample::sim::Runner;
use qsample::sweep::{run_sweep, write_csv, SnrGrid, SweepRequest};
use qsample::validation::{run_check, ValidationConfig, CHECK_IDS, CONSTANT_DRIFT_TOL};
use qsample::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Average BER of BPSK over Rayleigh fading: closed forms from the sampling
/// property of the Q-function, checked against quadrature and Monte Carlo.
#[derive(Parser, Debug)]
#[command(name = "qsample", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep an SNR grid and write `scenario,method,snr_db,ber,std_error` CSV
    Sweep(SweepArgs),
    /// Print impulse location, weight and stationarity residual
    CriticalPoint(CriticalPointArgs),
    /// Run the acceptance suite; exits 1 if any check fails
    Validate(ValidateArgs),
    /// Recompute every stored closed-form constant and report the drift
    Rederive(RederiveArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    #[value(name = "closed_form")]
    ClosedForm,
    Quadrature,
    Montecarlo,
    All,
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        match self {
            Self::ClosedForm => vec![Method::ClosedForm],
            Self::Quadrature => vec![Method::Quadrature],
            Self::Montecarlo => vec![Method::MonteCarlo],
            Self::All => vec![Method::ClosedForm, Method::Quadrature, Method::MonteCarlo],
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UpstreamArg {
    /// Slot-4 relay error from the equivalent two-hop SNR
    Equivalent,
    /// Slot-4 relay error from the first hop alone
    FirstHop,
}

#[derive(clap::Args, Debug)]
struct SweepArgs {
    /// One of i0, i1, i2, relay, network
    #[arg(long)]
    scenario: Scenario,

    #[arg(long, value_enum, default_value = "all")]
    method: MethodArg,

    /// Inclusive grid START:STOP:STEP in dB
    #[arg(long, allow_hyphen_values = true)]
    snr_grid_db: SnrGrid,

    /// Monte Carlo trials per SNR point
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,

    /// Seed of the first SNR point; point i uses seed + i
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// First scale of the i1 scenario
    #[arg(long, default_value_t = 2.0)]
    a1: f64,

    /// Second scale of the i1 scenario
    #[arg(long, default_value_t = 2.0)]
    a2: f64,

    /// Write CSV here instead of standard output
    #[arg(long)]
    output: Option<PathBuf>,

    /// Count symbol errors instead of averaging the instantaneous BER (relay only)
    #[arg(long)]
    symbol_level: bool,

    /// Error model of the slot-4 relay (network only)
    #[arg(long, value_enum, default_value = "equivalent")]
    upstream: UpstreamArg,
}

#[derive(clap::Args, Debug)]
struct CriticalPointArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    dim: u8,

    /// Scale `a` in 1D, first scale in 2D
    #[arg(long, default_value_t = 1.0)]
    a1: f64,

    /// Second scale (2D only)
    #[arg(long, default_value_t = 2.0)]
    a2: f64,

    /// Use the N -> infinity stationarity condition instead of N = 1000
    #[arg(long)]
    asymptotic: bool,
}

#[derive(clap::Args, Debug)]
struct ValidateArgs {
    /// Run only these checks (1-9)
    #[arg(long, value_delimiter = ',')]
    check: Vec<u8>,

    /// Monte Carlo trials per SNR point in checks 5 and 6
    #[arg(long, default_value_t = 10_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,

    /// Print every comparison, not only failures
    #[arg(long)]
    verbose: bool,
}

#[derive(clap::Args, Debug)]
struct RederiveArgs {
    /// Use the N -> infinity stationarity condition instead of N = 1000
    #[arg(long)]
    asymptotic: bool,
}

fn order(asymptotic: bool) -> SamplingOrder {
    if asymptotic {
        SamplingOrder::Asymptotic
    } else {
        SamplingOrder::REFERENCE
    }
}

fn usage(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_USAGE)
}

fn failure(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_FAILURE)
}

fn from_error(e: Error) -> ExitCode {
    match e {
        Error::InvalidConfig(_) | Error::Domain { .. } => usage(e),
        _ => failure(e),
    }
}

fn sweep(args: SweepArgs) -> ExitCode {
    let runner = match Runner::from_env() {
        Ok(r) => r,
        Err(e) => return from_error(e),
    };
    let request = SweepRequest {
        trials: args.trials,
        seed: args.seed,
        a1: args.a1,
        a2: args.a2,
        symbol_level: args.symbol_level,
        upstream: match args.upstream {
            UpstreamArg::Equivalent => UpstreamErrorModel::EquivalentChannel,
            UpstreamArg::FirstHop => UpstreamErrorModel::FirstHop,
        },
        ..SweepRequest::new(args.scenario, args.method.methods(), args.snr_grid_db)
    };
    if let Err(e) = request.validate() {
        return from_error(e);
    }
    let out = match run_sweep(&request, &runner) {
        Ok(o) => o,
        Err(e) => return from_error(e),
    };
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    let written = match &args.output {
        Some(path) => File::create(path).and_then(|f| write_csv(&out.curves, BufWriter::new(f))),
        None => write_csv(&out.curves, io::stdout().lock()),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => failure(e),
    }
}

fn critical_point(args: CriticalPointArgs) -> ExitCode {
    let order = order(args.asymptotic);
    let report = if args.dim == 1 {
        critical_point_1d_with(args.a1, order).and_then(|x| {
            Ok(format!(
                "location {x:.10}\nweight {:.10}\nresidual {:.3e}",
                impulse_weight_1d(args.a1)?,
                stationarity_residual_1d(args.a1, x, order)
            ))
        })
    } else {
        critical_point_2d_with(args.a1, args.a2, order).and_then(|(x, y)| {
            Ok(format!(
                "location {x:.10} {y:.10}\nweight {:.10}\nresidual {:.3e}",
                impulse_weight_2d(args.a1, args.a2)?,
                stationarity_residual_2d(args.a1, args.a2, (x, y), order)
            ))
        })
    };
    match report {
        Ok(r) => {
            println!("{r}");
            ExitCode::SUCCESS
        }
        Err(e) => from_error(e),
    }
}

fn validate(args: ValidateArgs) -> ExitCode {
    let runner = match Runner::from_env() {
        Ok(r) => r,
        Err(e) => return from_error(e),
    };
    let ids: Vec<u8> = if args.check.is_empty() {
        CHECK_IDS.to_vec()
    } else {
        args.check.clone()
    };
    if let Some(bad) = ids.iter().find(|id| !CHECK_IDS.contains(id)) {
        return usage(format!("no check numbered {bad}"));
    }
    let config = ValidationConfig {
        mc_trials: args.trials,
        ..ValidationConfig::new(runner)
    };
    let mut all = true;
    let mut stdout = io::stdout().lock();
    for id in ids {
        let r = run_check(id, &config);
        all &= r.passed;
        let _ = writeln!(stdout, "{r}");
        for d in r.details.iter().filter(|d| args.verbose || d.starts_with("FAIL")) {
            let _ = writeln!(stdout, "    {d}");
        }
        let _ = stdout.flush();
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILURE)
    }
}

fn rederive(args: RederiveArgs) -> ExitCode {
    let spec = QuadratureSpec {
        rel_tol: 1e-7,
        abs_tol: 1e-10,
        ..QuadratureSpec::default()
    };
    match rederive_constants(&RelayConstants::PUBLISHED, order(args.asymptotic), &spec) {
        Ok(drifts) => {
            println!("constant,stored,rederived,drift");
            for d in &drifts {
                println!("{},{},{:.6},{:.2e}", d.name, d.stored, d.rederived, d.drift());
            }
            if drifts.iter().all(|d| d.drift() <= CONSTANT_DRIFT_TOL) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILURE)
            }
        }
        Err(e) => failure(e),
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Sweep(a) => sweep(a),
        Command::CriticalPoint(a) => critical_point(a),
        Command::Validate(a) => validate(a),
        Command::Rederive(a) => rederive(a),
    }
}
