//! Command-line front end.
//!
//! Exit codes: `0` success, `1` I/O failure, `2` bad input, `3` engine guard
//! (event cap, overflow), `4` unsupported class.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::engine::{simulate_with, InitialState, Sign, SimulateOptions, DEFAULT_EVENT_CAP};
use crate::error::{RelayError, Result};
use crate::io;
use crate::orbit::{classify, constants, phi_iterate, PoincarePair};
use crate::relay::Params;
use crate::scalar::{Rational, Scalar};
use crate::stability::{instability_demo, multipliers, PerturbationVector};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;
pub const EXIT_ENGINE_GUARD: i32 = 3;
pub const EXIT_UNSUPPORTED_CLASS: i32 = 4;

pub fn exit_code(err: &RelayError) -> i32 {
    match err {
        RelayError::EventCap { .. } | RelayError::Overflow(_) => EXIT_ENGINE_GUARD,
        RelayError::UnsupportedClass(_) => EXIT_UNSUPPORTED_CLASS,
        RelayError::Io(_) => EXIT_IO,
        _ => EXIT_BAD_INPUT,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Float,
    Rational,
}

#[derive(Debug, Parser)]
#[command(name = "relaydelay", version, about = "Exact analysis of x'(t) = R(x(t - 1))")]
pub struct Cli {
    /// Output format (default: csv for simulate, json for analyze).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Numeric backend.
    #[arg(long, global = true, value_enum, env = "RELAY_NUMERIC_MODE", default_value = "float")]
    pub mode: Mode,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate from canonical initial data and write the breakpoints.
    Simulate(SimulateArgs),
    /// Closed-form constants, return map, classification and stability.
    #[command(subcommand)]
    Analyze(Analyze),
}

#[derive(Debug, Args)]
pub struct InitArgs {
    /// Zeros of the initial function in [-1, 0], comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub zeros: Vec<String>,

    /// Sign just right of -1.
    #[arg(long, default_value = "neg")]
    pub sign_left: Sign,

    /// Value x(0).
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub x_end: String,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,

    #[command(flatten)]
    pub init: InitArgs,

    #[arg(long, allow_hyphen_values = true)]
    pub horizon: String,

    /// Write samples of u = exp(lambda x) instead of breakpoints.
    #[arg(long)]
    pub potential: bool,

    #[arg(long, default_value = "1")]
    pub lambda: f64,

    /// Potential sample spacing (default: period / 500).
    #[arg(long, allow_hyphen_values = true)]
    pub sample_step: Option<String>,

    #[arg(long, default_value_t = DEFAULT_EVENT_CAP)]
    pub event_cap: usize,
}

#[derive(Debug, Subcommand)]
pub enum Analyze {
    /// t0, period, theta*, tau*.
    Constants(ParamArgs),
    /// Fixed pair of the return map.
    FixedPoint(ParamArgs),
    /// Gated iterates of the return map.
    Iterate(IterateArgs),
    /// Classify initial data by simulation.
    Classify(ClassifyArgs),
    /// Multipliers of the short cycle.
    Multipliers(ParamArgs),
    /// Growth of a small perturbation of the short cycle.
    Instability(InstabilityArgs),
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
}

#[derive(Debug, Args)]
pub struct IterateArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: String,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: String,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,

    #[command(flatten)]
    pub init: InitArgs,

    /// Shorthand for zeros -theta,-tau,0.
    #[arg(long, allow_hyphen_values = true, requires = "tau", conflicts_with = "zeros")]
    pub theta: Option<String>,

    #[arg(long, allow_hyphen_values = true, requires = "theta")]
    pub tau: Option<String>,

    #[arg(long, allow_hyphen_values = true, default_value = "100")]
    pub horizon: String,
}

#[derive(Debug, Args)]
pub struct InstabilityArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,

    /// Initial deviation gamma0,xi_theta,xi_tau.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "seed")]
    pub delta: Option<Vec<String>>,

    /// Draw a random deviation of max-norm --scale from this seed.
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, allow_hyphen_values = true, default_value = "1e-6")]
    pub scale: String,

    #[arg(long, default_value_t = 200)]
    pub max_periods: usize,
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let bytes = match cli.mode {
        Mode::Float => render::<f64>(cli)?,
        Mode::Rational => render::<Rational>(cli)?,
    };
    match &cli.output {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            f.write_all(&bytes)?;
            f.flush()?;
        }
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

fn params<S: Scalar>(a: &str) -> Result<Params<S>> {
    Params::new(S::parse(a)?)
}

fn initial_state<S: Scalar>(init: &InitArgs) -> Result<InitialState<S>> {
    let zeros = init.zeros.iter().filter(|z| !z.trim().is_empty()).map(|z| S::parse(z)).collect::<Result<Vec<_>>>()?;
    InitialState::new(zeros, init.sign_left, S::parse(&init.x_end)?)
}

fn json_bytes(v: &Value) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

fn render<S: Scalar>(cli: &Cli) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match &cli.command {
        Command::Simulate(args) => {
            let format = cli.format.unwrap_or(Format::Csv);
            let p = params::<S>(&args.a)?.with_lambda(args.lambda)?;
            let init = initial_state(&args.init)?;
            let horizon = S::parse(&args.horizon)?;
            let traj = simulate_with(&init, &p, &horizon, &SimulateOptions { event_cap: args.event_cap })?;
            if args.potential {
                let step = match &args.sample_step {
                    Some(s) => S::parse(s)?,
                    None => constants(&p).period / S::from_int(500),
                };
                let samples = io::potential_samples(&traj, &step)?;
                match format {
                    Format::Csv => io::write_potential_csv(&samples, &mut buf)?,
                    Format::Json => buf = json_bytes(&io::potential_json(&samples, p.lambda()))?,
                }
            } else {
                match format {
                    Format::Csv => io::write_trajectory_csv(&traj, &mut buf)?,
                    Format::Json => buf = json_bytes(&io::trajectory_json(&traj))?,
                }
            }
        }
        Command::Analyze(action) => {
            let format = cli.format.unwrap_or(Format::Json);
            buf = analyze::<S>(action, format)?;
        }
    }
    Ok(buf)
}

fn analyze<S: Scalar>(action: &Analyze, format: Format) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let single_row = |buf: &mut Vec<u8>, header: &[&str], row: Vec<String>| -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf);
        w.write_record(header)?;
        w.write_record(row)?;
        w.flush()?;
        Ok(())
    };
    match action {
        Analyze::Constants(args) => {
            let c = constants(&params::<S>(&args.a)?);
            match format {
                Format::Json => buf = json_bytes(&io::constants_json(&c))?,
                Format::Csv => single_row(
                    &mut buf,
                    &["t0", "period", "theta_star", "tau_star"],
                    vec![c.t0.render(), c.period.render(), c.theta_star.render(), c.tau_star.render()],
                )?,
            }
        }
        Analyze::FixedPoint(args) => {
            let pair = PoincarePair::fixed(&params::<S>(&args.a)?);
            match format {
                Format::Json => buf = json_bytes(&io::pair_json(&pair))?,
                Format::Csv => single_row(&mut buf, &["theta", "tau"], vec![pair.theta.render(), pair.tau.render()])?,
            }
        }
        Analyze::Iterate(args) => {
            let p = params::<S>(&args.a)?;
            let pair = PoincarePair::new(S::parse(&args.theta)?, S::parse(&args.tau)?)?;
            let trace = phi_iterate(&pair, &p, args.n);
            match format {
                Format::Json => buf = json_bytes(&io::iterates_json(&trace, &p))?,
                Format::Csv => io::write_iterates_csv(&trace, &p, &mut buf)?,
            }
        }
        Analyze::Classify(args) => {
            let p = params::<S>(&args.a)?;
            let init = match (&args.theta, &args.tau) {
                (Some(theta), Some(tau)) => PoincarePair::new(S::parse(theta)?, S::parse(tau)?)?.initial_state()?,
                _ => initial_state(&args.init)?,
            };
            let c = classify(&init, &p, &S::parse(&args.horizon)?)?;
            match format {
                Format::Json => buf = json_bytes(&io::classification_json(&c))?,
                Format::Csv => io::write_classification_csv(&c, &mut buf)?,
            }
        }
        Analyze::Multipliers(args) => {
            let m = multipliers(&params::<S>(&args.a)?);
            match format {
                Format::Json => buf = json_bytes(&io::multipliers_json(&m))?,
                Format::Csv => single_row(
                    &mut buf,
                    &["mu1", "mu2", "mu3", "modulus"],
                    m.values.iter().map(|z| io::complex_text(*z)).chain([m.max_modulus.render()]).collect(),
                )?,
            }
        }
        Analyze::Instability(args) => {
            let p = params::<S>(&args.a)?;
            let delta = match (&args.delta, args.seed) {
                (Some(d), _) => match d.as_slice() {
                    [g, x, y] => PerturbationVector::new(S::parse(g)?, S::parse(x)?, S::parse(y)?),
                    _ => return Err(RelayError::Parse(format!("--delta needs 3 components, got {}", d.len()))),
                },
                (None, Some(seed)) => random_delta(seed, &S::parse(&args.scale)?),
                (None, None) => PerturbationVector::new(S::parse(&args.scale)?, S::zero(), S::zero()),
            };
            let log = instability_demo(&delta, &p, args.max_periods)?;
            match format {
                Format::Json => buf = json_bytes(&io::growth_json(&log))?,
                Format::Csv => io::write_growth_csv(&log, &mut buf)?,
            }
        }
    }
    Ok(buf)
}

/// Deviation with components uniform on a grid of `[-scale, scale]`, one of
/// them pinned to `+-scale`.
fn random_delta<S: Scalar>(seed: u64, scale: &S) -> PerturbationVector<S> {
    const STEPS: i64 = 1 << 20;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c: [S; 3] = std::array::from_fn(|_| scale.clone() * S::from_ratio(rng.gen_range(-STEPS..=STEPS), STEPS));
    let pinned = rng.gen_range(0..3);
    c[pinned] = if rng.gen_bool(0.5) { scale.clone() } else { -scale.clone() };
    let [g, x, y] = c;
    PerturbationVector::new(g, x, y)
}
