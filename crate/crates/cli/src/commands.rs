use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::net::TcpListener;
use std::process::ExitCode;

use hopfsim::chsh::{self, AngleQuad, ChshReport};
use hopfsim::config::{Estimator, ExperimentConfig, OutputFormat};
use hopfsim::error_prop::{self, PropagationResult, RandomBivectorSpec, TaylorCheck};
use hopfsim::ga::{Bivector, Vector3};
use hopfsim::model::{self, Orientation, Station};
use hopfsim::rng::{streams, RngContract};
use hopfsim::stations::{self, MatchPolicy, MatchReport, PairEstimate, StationEvent};
use hopfsim::stats::{self, CorrelationEstimate};
use hopfsim::verify;
use serde::Serialize;

use crate::output::{emit, emit_json, usage, CliResult, Provenance};
use crate::{
    ChshArgs, CurveArgs, ErrorpropArgs, EstimatorArg, FormatArg, MatchArg, MatchArgs, MatchPolicyArgs, ModeArg,
    ScanArgs, SimulateArgs, StationsArgs, VerifyArgs,
};

fn source(seed: u64) -> RngContract {
    RngContract::new(seed, streams::SOURCE)
}

pub fn verify(args: &VerifyArgs) -> CliResult {
    let report = verify::run_identity_suite(args.samples, args.seed);
    let mut text = String::new();
    for f in &report.families {
        let verdict = if f.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(text, "{:<34} {verdict}  cases={}  max_error={:e}", f.name, f.cases, f.max_error);
    }
    let all = report.all_passed();
    let _ = writeln!(
        text,
        "{} of {} identity families passed (tolerance {:e}, seed {})",
        report.families.iter().filter(|f| f.passed).count(),
        report.families.len(),
        report.tolerance,
        report.seed
    );
    emit(None, &text)?;
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Standard => Estimator::Standard,
            EstimatorArg::RawNormalized => Estimator::RawNormalized,
            EstimatorArg::Coincidence => Estimator::Coincidence,
            EstimatorArg::All => Estimator::All,
        }
    }
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Serialize)]
struct EstimateRow {
    estimator: &'static str,
    scalar_part: f64,
    bivector_residual: Bivector,
    residual_norm: f64,
    stderr: f64,
    n: u64,
    /// Only for the coincidence estimator: the standardized-score value at
    /// the same angles, for comparison.
    #[serde(skip_serializing_if = "Option::is_none")]
    standardized_scalar: Option<f64>,
}

impl EstimateRow {
    fn new(estimator: &'static str, e: &CorrelationEstimate) -> Self {
        EstimateRow {
            estimator,
            scalar_part: e.scalar_part,
            bivector_residual: e.bivector_residual,
            residual_norm: e.residual_norm(),
            stderr: e.stderr,
            n: e.n,
            standardized_scalar: None,
        }
    }
}

#[derive(Serialize)]
struct SimulateReport {
    provenance: Provenance,
    alpha_deg: f64,
    beta_deg: f64,
    results: Vec<EstimateRow>,
}

pub fn simulate(args: &SimulateArgs) -> CliResult {
    let cfg = ExperimentConfig {
        estimator: args.estimator.into(),
        format: args.format.into(),
        out: args.out.clone(),
        ..ExperimentConfig::new(vec![args.alpha_deg], vec![args.beta_deg], args.trials, args.seed)?
    };
    let (alpha, beta) = (args.alpha_deg.to_radians(), args.beta_deg.to_radians());
    let rng = source(cfg.master_seed);
    let wants = |e: Estimator| cfg.estimator == e || cfg.estimator == Estimator::All;

    let mut results = Vec::new();
    if wants(Estimator::Standard) {
        let e = stats::correlate_standard(alpha, beta, cfg.trials, &rng)?;
        results.push(EstimateRow::new("standard", &e));
    }
    if wants(Estimator::RawNormalized) {
        let e = stats::correlate_raw_normalized(alpha, beta, cfg.trials, &rng)?;
        results.push(EstimateRow::new("raw_normalized", &e));
    }
    if wants(Estimator::Coincidence) {
        let e = stats::correlate_coincidence(alpha, beta, cfg.trials, &rng)?;
        let mut row = EstimateRow::new("coincidence", &e);
        row.standardized_scalar =
            Some(stats::correlate_standard_from(alpha, beta, &Orientation::BOTH)?.scalar_part);
        results.push(row);
    }

    let out = cfg.out.as_deref();
    match cfg.format {
        OutputFormat::Json => emit_json(
            out,
            &SimulateReport {
                provenance: Provenance::new(Some(cfg.master_seed), Some(cfg.trials)),
                alpha_deg: args.alpha_deg,
                beta_deg: args.beta_deg,
                results,
            },
        )?,
        OutputFormat::Csv => {
            let mut text = String::from(
                "estimator,alpha_deg,beta_deg,scalar,residual_e23,residual_e31,residual_e12,residual_norm,stderr,n\n",
            );
            for r in &results {
                let [b1, b2, b3] = r.bivector_residual.0;
                let _ = writeln!(
                    text,
                    "{},{},{},{},{},{},{},{},{},{}",
                    r.estimator, args.alpha_deg, args.beta_deg, r.scalar_part, b1, b2, b3, r.residual_norm, r.stderr, r.n
                );
            }
            emit(out, &text)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn curve(args: &CurveArgs) -> CliResult {
    let finite = [args.alpha_deg, args.beta_start, args.beta_end, args.beta_step];
    if finite.iter().any(|x| !x.is_finite()) || args.beta_step <= 0.0 || args.beta_end < args.beta_start {
        return Err(usage("curve needs finite angles, --beta-step > 0 and --beta-end >= --beta-start"));
    }
    let steps = ((args.beta_end - args.beta_start) / args.beta_step + 1e-9).floor() as u64;
    let rng = source(args.seed);
    let alpha = args.alpha_deg.to_radians();
    let mut text = String::from("beta_deg,scalar,residual_norm,stderr,n\n");
    for k in 0..=steps {
        let beta_deg = args.beta_start + k as f64 * args.beta_step;
        let e = stats::correlate_standard(alpha, beta_deg.to_radians(), args.trials, &rng)?;
        let _ = writeln!(text, "{beta_deg},{},{},{},{}", e.scalar_part, e.residual_norm(), e.stderr, e.n);
    }
    emit(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ChshOutput {
    provenance: Provenance,
    correlator: &'static str,
    angles_deg: [f64; 4],
    #[serde(flatten)]
    report: ChshReport,
    within_bound: bool,
    within_qm_limit: bool,
    /// `‖[A_a, B_b]‖` for the four pairs (a,b), (a,b′), (a′,b), (a′,b′).
    cross_station_commutator_norms: [f64; 4],
}

pub fn chsh(args: &ChshArgs) -> CliResult {
    let [a, ap, b, bp]: [f64; 4] = args
        .angles
        .as_slice()
        .try_into()
        .map_err(|_| usage(format!("--angles takes exactly four values, got {}", args.angles.len())))?;
    let q = AngleQuad::from_degrees(a, ap, b, bp)?;
    let (report, provenance, correlator) = if args.analytic {
        (chsh::variance_inequality_analytic(&q)?, Provenance::new(None, None), "analytic")
    } else {
        let r = chsh::variance_inequality_report(&q, args.trials, &source(args.seed))?;
        (r, Provenance::new(Some(args.seed), Some(args.trials)), "sampled")
    };
    let mut cross = [0.0; 4];
    for (slot, (x, y)) in cross.iter_mut().zip([(q.alpha, q.beta), (q.alpha, q.beta_p), (q.alpha_p, q.beta), (q.alpha_p, q.beta_p)]) {
        *slot = chsh::cross_station_commutator(x, y, Orientation::Right)?.norm();
    }
    emit_json(
        args.out.as_deref(),
        &ChshOutput {
            provenance,
            correlator,
            angles_deg: [a, ap, b, bp],
            within_bound: report.within_bound(),
            within_qm_limit: report.within_qm_limit(),
            report,
            cross_station_commutator_norms: cross,
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ScanOutput {
    provenance: Provenance,
    correlator: &'static str,
    grid_step_deg: f64,
    quad_deg: [f64; 4],
    value: f64,
    abs_value: f64,
    qm_limit: f64,
    quads_scanned: u64,
    /// Quads where `|S|` exceeds the sine-product bound.
    bound_violations: u64,
}

pub fn scan(args: &ScanArgs) -> CliResult {
    let result = match args.trials {
        None => chsh::scan_max(args.grid_step, model::singlet_correlation)?,
        Some(n) => {
            let rng = source(args.seed);
            chsh::scan_max(args.grid_step, |x, y| {
                stats::correlate_standard(x, y, n, &rng).map_or(f64::NAN, |e| e.scalar_part)
            })?
        }
    };
    emit_json(
        args.out.as_deref(),
        &ScanOutput {
            provenance: Provenance::new(args.trials.map(|_| args.seed), args.trials),
            correlator: if args.trials.is_some() { "sampled" } else { "analytic" },
            grid_step_deg: args.grid_step,
            quad_deg: result.grid_index.map(|k| k as f64 * args.grid_step),
            value: result.value,
            abs_value: result.value.abs(),
            qm_limit: chsh::QM_LIMIT,
            quads_scanned: result.quads_scanned,
            bound_violations: result.bound_violations,
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

fn policy(args: &MatchPolicyArgs, jitter_ns: u64) -> CliResult<MatchPolicy> {
    Ok(match args.matching {
        MatchArg::ByTrial => MatchPolicy { jitter_ns, ..MatchPolicy::by_trial_id() },
        MatchArg::ByTime => MatchPolicy::by_time_window(args.window_ns, jitter_ns)?,
    })
}

#[derive(Serialize)]
struct MatchOutput {
    provenance: Provenance,
    run_id: String,
    policy: MatchPolicy,
    events_a: usize,
    events_b: usize,
    matched_pairs: usize,
    unmatched_a: u64,
    unmatched_b: u64,
    matched_fraction: f64,
    estimates: Vec<PairEstimate>,
}

fn match_output(
    provenance: Provenance,
    log_a: &[StationEvent],
    log_b: &[StationEvent],
    policy: MatchPolicy,
    angles: Option<(&[f64], &[f64])>,
) -> CliResult<MatchOutput> {
    let report: MatchReport = stations::match_coincidences(log_a, log_b, &policy)?;
    let (owned_a, owned_b);
    let (alice, bob) = match angles {
        Some(pair) => pair,
        None => {
            owned_a = stations::angles_from_log(log_a)?;
            owned_b = stations::angles_from_log(log_b)?;
            (owned_a.as_slice(), owned_b.as_slice())
        }
    };
    let run_id = log_a.first().or(log_b.first()).map(|e| e.run.clone()).unwrap_or_default();
    Ok(MatchOutput {
        provenance,
        run_id,
        policy,
        events_a: log_a.len(),
        events_b: log_b.len(),
        matched_pairs: report.pairs.len(),
        unmatched_a: report.unmatched_a,
        unmatched_b: report.unmatched_b,
        matched_fraction: report.matched_fraction(),
        estimates: stations::pair_estimates(&report.pairs, alice, bob)?,
    })
}

fn write_log(path: Option<&std::path::Path>, log: &[StationEvent]) -> CliResult<()> {
    if let Some(p) = path {
        stations::write_ndjson(BufWriter::new(File::create(p)?), log)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SentOutput {
    run_id: String,
    station: &'static str,
    sent_events: usize,
}

pub fn stations(args: &StationsArgs) -> CliResult {
    let mut cfg = ExperimentConfig::new(args.angles_a.clone(), args.angles_b.clone(), args.trials, args.seed)?;
    if let Some(id) = &args.run_id {
        cfg.run_id = id.clone();
        cfg.validate()?;
    }
    let policy = policy(&args.policy, args.jitter_ns)?;
    let provenance = || Provenance::new(Some(cfg.master_seed), Some(cfg.trials));

    let (log_a, log_b) = match (args.mode, args.listen, args.connect) {
        (ModeArg::Inproc, None, None) => stations::run_stations(&cfg, &policy)?,
        (ModeArg::Inproc, _, _) => return Err(usage("--listen and --connect need --mode tcp")),
        (ModeArg::Tcp, Some(addr), None) => {
            let listener = TcpListener::bind(addr)?;
            stations::net::collect(&listener, &cfg, &policy)?
        }
        (ModeArg::Tcp, None, Some(addr)) => {
            let sent = stations::net::send_station_b(addr, &cfg, &policy, 50)?;
            emit_json(
                args.out.as_deref(),
                &SentOutput { run_id: cfg.run_id.clone(), station: "B", sent_events: sent },
            )?;
            return Ok(ExitCode::SUCCESS);
        }
        (ModeArg::Tcp, _, _) => return Err(usage("--mode tcp needs exactly one of --listen or --connect")),
    };
    write_log(args.log_a.as_deref(), &log_a)?;
    write_log(args.log_b.as_deref(), &log_b)?;
    let out = match_output(
        provenance(),
        &log_a,
        &log_b,
        policy,
        Some((&cfg.alice_angles_deg, &cfg.bob_angles_deg)),
    )?;
    emit_json(args.out.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

pub fn match_logs(args: &MatchArgs) -> CliResult {
    let read = |p: &std::path::Path| -> CliResult<Vec<StationEvent>> {
        Ok(stations::read_ndjson(BufReader::new(File::open(p)?))?)
    };
    let (mut log_a, mut log_b) = (read(&args.log_a)?, read(&args.log_b)?);
    // Logs may be given in either order; label them by the station they record.
    if log_a.first().is_some_and(|e| e.station == Station::B) || log_b.first().is_some_and(|e| e.station == Station::A) {
        std::mem::swap(&mut log_a, &mut log_b);
    }
    let policy = policy(&args.policy, 0)?;
    let out = match_output(Provenance::new(None, None), &log_a, &log_b, policy, None)?;
    emit_json(args.out.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ErrorpropOutput {
    provenance: Provenance,
    p: f64,
    n_hat: Vector3,
    v: Bivector,
    result: PropagationResult,
    taylor: TaylorCheck,
}

fn unit_vector(xs: &[f64], flag: &str) -> CliResult<Vector3> {
    let [x, y, z]: [f64; 3] =
        xs.try_into().map_err(|_| usage(format!("{flag} takes exactly three values")))?;
    Vector3::new(x, y, z)
        .normalized()
        .ok_or_else(|| usage(format!("{flag} must be a non-zero vector")))
}

pub fn errorprop(args: &ErrorpropArgs) -> CliResult {
    let n_hat = unit_vector(&args.n_vec, "--n-vec")?;
    let v_dir = match &args.v_vec {
        Some(v) => unit_vector(v, "--v-vec")?,
        None => n_hat,
    };
    let v = v_dir.dual();
    let spec = RandomBivectorSpec::new(args.p, n_hat, source(args.seed))?;
    let result = error_prop::propagate(v, &spec, args.samples)?;
    let taylor = error_prop::taylor_linear_check(v, &spec, args.samples)?;
    emit_json(
        args.out.as_deref(),
        &ErrorpropOutput {
            provenance: Provenance::new(Some(args.seed), Some(args.samples)),
            p: args.p,
            n_hat,
            v,
            result,
            taylor,
        },
    )?;
    Ok(ExitCode::SUCCESS)
}
