//! `wdistill` command-line interface.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 invalid spec, 3 numerical
//! failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use wdistill_core::cavity::{run_physical_with, AtomicWPrimeSpec, JCParams};
use wdistill_core::montecarlo::{confidence_interval, Scheme, TrialConfig};
use wdistill_core::protocol::{make_w_state, run_exact_with, RunOptions};
use wdistill_core::statevec::DEFAULT_MAX_DIM;

use crate::error::CliError;
use crate::report::Report;
use crate::sampling::run_trials_parallel;
use crate::specfile::{Ingested, SpecFile};
use crate::sweep::{sweep, to_csv};

/// Environment variable overriding the state-dimension cap.
pub const MAX_DIM_ENV: &str = "WDISTILL_MAX_DIM";

#[derive(Debug, Parser)]
#[command(name = "wdistill", version, about = "Distill W states from non-maximally entangled W-class states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the ancilla-qubit protocol exactly over all measurement branches.
    Distill(SpecArgs),
    /// Run the atom-cavity realization exactly.
    Cavity(CavityArgs),
    /// Estimate the success probability by seeded sampling.
    Sample(SampleArgs),
    /// Tabulate success probability against the smallest coefficient.
    Sweep(SweepArgs),
    /// Print the amplitudes of the N-party W state.
    Wstate(WstateArgs),
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    /// JSON spec file with `coefficients` as [re, im] pairs.
    pub spec: PathBuf,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rescale coefficients that do not have unit norm.
    #[arg(long)]
    pub allow_unnormalized: bool,
}

#[derive(Debug, Args)]
pub struct CavityArgs {
    #[command(flatten)]
    pub common: SpecArgs,
    #[command(flatten)]
    pub jc: JcArgs,
}

#[derive(Debug, Args)]
pub struct JcArgs {
    /// Atom-cavity coupling constant.
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: f64,
    /// Cavity (and atomic) angular frequency.
    #[arg(long, allow_negative_numbers = true)]
    pub omega: f64,
    /// Largest photon number kept in each cavity.
    #[arg(long, default_value_t = 1)]
    pub fock: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Abstract,
    Cavity,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub common: SpecArgs,
    #[arg(long)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SchemeArg::Abstract)]
    pub scheme: SchemeArg,
    /// Coupling constant (cavity scheme).
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// Angular frequency (cavity scheme).
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub fock: usize,
    /// Normal quantile of the Wilson interval.
    #[arg(long, default_value_t = 1.96)]
    pub z: f64,
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub steps: usize,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WstateArgs {
    #[arg(long)]
    pub n: usize,
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    match execute(&cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "wdistill: {e}");
            e.exit_code()
        }
    }
}

fn run_options() -> Result<RunOptions, CliError> {
    let max_dim = match std::env::var(MAX_DIM_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&d| d >= 2)
            .ok_or_else(|| CliError::Usage(format!("{MAX_DIM_ENV} must be an integer >= 2, got {v:?}")))?,
        Err(_) => DEFAULT_MAX_DIM,
    };
    Ok(RunOptions { max_dim, step_order: None })
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Usage(format!("cannot write to standard output: {e}"))),
    }
}

fn emit_report(report: &Report, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    report.validate().map_err(CliError::Numerical)?;
    emit(&report.to_text()?, out, stdout)
}

fn load(args: &SpecArgs) -> Result<Ingested, CliError> {
    SpecFile::load(&args.spec)?.ingest(args.allow_unnormalized)
}

fn numerical(e: wdistill_core::Error) -> CliError {
    CliError::Numerical(e.to_string())
}

pub fn execute(command: &Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Distill(args) => {
            let options = run_options()?;
            let input = load(args)?;
            let r = run_exact_with(&input.spec, &options)?;
            r.check_invariants().map_err(numerical)?;
            emit_report(&Report::from_exact(&r, input.normalization_factor), args.out.as_deref(), stdout)
        }
        Command::Cavity(args) => {
            let options = run_options()?;
            let input = load(&args.common)?;
            let params = JCParams::resonant(args.jc.omega, args.jc.epsilon, args.jc.fock)?;
            let r = run_physical_with(&AtomicWPrimeSpec::from(input.spec), &params, &options)?;
            r.distillation.check_invariants().map_err(numerical)?;
            emit_report(&Report::from_cavity(&r, input.normalization_factor), args.common.out.as_deref(), stdout)
        }
        Command::Sample(args) => sample(args, stdout),
        Command::Sweep(args) => {
            let rows = sweep(args.n, args.steps, &run_options()?)?;
            emit(&to_csv(&rows), args.out.as_deref(), stdout)
        }
        Command::Wstate(args) => {
            let w = make_w_state(args.n).map_err(|e| CliError::Usage(e.to_string()))?;
            let mut text = String::from("basis,amplitude\n");
            for k in 0..args.n {
                let idx = 1usize << (args.n - 1 - k);
                let label: String = (0..args.n).map(|i| if i == k { '1' } else { '0' }).collect();
                text.push_str(&format!("{label},{:.8}\n", w.amps()[idx].re));
            }
            emit(&text, None, stdout)
        }
    }
}

fn sample(args: &SampleArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if !(args.z.is_finite() && args.z > 0.0) {
        return Err(CliError::Usage(format!("--z must be positive, got {}", args.z)));
    }
    let options = run_options()?;
    let input = load(&args.common)?;
    let config = match args.scheme {
        SchemeArg::Abstract => TrialConfig::abstract_scheme(args.trials, args.seed),
        SchemeArg::Cavity => {
            let (Some(epsilon), Some(omega)) = (args.epsilon, args.omega) else {
                return Err(CliError::Usage("--scheme cavity needs --epsilon and --omega".into()));
            };
            TrialConfig::cavity_scheme(args.trials, args.seed, JCParams::resonant(omega, epsilon, args.fock)?)
        }
    };
    let stats = match args.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))?
            .install(|| run_trials_parallel(&input.spec, &config, &options))?,
        None => run_trials_parallel(&input.spec, &config, &options)?,
    };
    let (lo, hi) = confidence_interval(&stats, args.z);
    let scheme = match args.scheme {
        SchemeArg::Abstract => Scheme::Abstract,
        SchemeArg::Cavity => Scheme::Cavity,
    };
    let report = Report::from_sampled(
        &stats,
        input.spec.n(),
        input.spec.min_index(),
        scheme,
        config.params.as_ref(),
        (args.z, lo, hi),
        input.normalization_factor,
    );
    emit_report(&report, args.common.out.as_deref(), stdout)
}
