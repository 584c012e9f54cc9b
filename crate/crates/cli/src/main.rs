mod commands;
mod output;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "hopfsim", version, about = "Orientation-based hidden-variable correlation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the fuzzed algebra identity suite.
    Verify(VerifyArgs),
    /// Estimate the correlation at one pair of polarizer angles.
    Simulate(SimulateArgs),
    /// Tabulate the correlation as a function of Bob's angle (CSV).
    Curve(CurveArgs),
    /// CHSH string and bounds for one angle quadruple.
    Chsh(ChshArgs),
    /// Exhaustive CHSH scan over a grid of angle quadruples.
    Scan(ScanArgs),
    /// Two-station run with independent logs and coincidence matching.
    Stations(StationsArgs),
    /// Match two station logs written by `stations`.
    Match(MatchArgs),
    /// Linear error propagation through `f(w) = v w`.
    Errorprop(ErrorpropArgs),
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Standard,
    RawNormalized,
    Coincidence,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_deg: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub beta_deg: f64,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = EstimatorArg::All)]
    pub estimator: EstimatorArg,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub alpha_deg: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub beta_start: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 180.0)]
    pub beta_end: f64,
    #[arg(long, default_value_t = 5.0)]
    pub beta_step: f64,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ChshArgs {
    /// a,a',b,b' in degrees.
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true, required = true)]
    pub angles: Vec<f64>,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use the closed-form correlation and average exactly over both orientations.
    #[arg(long)]
    pub analytic: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 7.5)]
    pub grid_step: f64,
    /// Sample the correlator with this many trials per angle pair instead of
    /// using the closed form.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Inproc,
    Tcp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MatchArg {
    ByTrial,
    ByTime,
}

#[derive(Args, Debug, Clone)]
pub struct MatchPolicyArgs {
    #[arg(long = "match", value_enum, default_value_t = MatchArg::ByTrial)]
    pub matching: MatchArg,
    #[arg(long, default_value_t = 1000)]
    pub window_ns: u64,
}

#[derive(Args, Debug)]
pub struct StationsArgs {
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,45")]
    pub angles_a: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "22.5,67.5")]
    pub angles_b: Vec<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Inproc)]
    pub mode: ModeArg,
    /// TCP mode: run station A and collect station B's log on this address.
    #[arg(long, conflicts_with = "connect")]
    pub listen: Option<SocketAddr>,
    /// TCP mode: run station B and send its log to this collector.
    #[arg(long)]
    pub connect: Option<SocketAddr>,
    #[command(flatten)]
    pub policy: MatchPolicyArgs,
    #[arg(long, default_value_t = 0)]
    pub jitter_ns: u64,
    #[arg(long)]
    pub run_id: Option<String>,
    /// Write station A's NDJSON log here.
    #[arg(long)]
    pub log_a: Option<PathBuf>,
    /// Write station B's NDJSON log here.
    #[arg(long)]
    pub log_b: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MatchArgs {
    #[arg(long)]
    pub log_a: PathBuf,
    #[arg(long)]
    pub log_b: PathBuf,
    #[command(flatten)]
    pub policy: MatchPolicyArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ErrorpropArgs {
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Direction of the random bivector, x,y,z (normalized).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0,1")]
    pub n_vec: Vec<f64>,
    /// Vector whose dual is the fixed bivector v, x,y,z (normalized).
    /// Defaults to the direction of `--n-vec`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub v_vec: Option<Vec<f64>>,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(a) => commands::verify(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Curve(a) => commands::curve(&a),
        Command::Chsh(a) => commands::chsh(&a),
        Command::Scan(a) => commands::scan(&a),
        Command::Stations(a) => commands::stations(&a),
        Command::Match(a) => commands::match_logs(&a),
        Command::Errorprop(a) => commands::errorprop(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
