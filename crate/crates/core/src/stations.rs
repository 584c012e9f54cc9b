//! Two-station protocol: independent setting switches, per-station event
//! logs and post-hoc coincidence matching.
//!
//! A station sees only its own angle list, its own setting and jitter
//! streams, and the shared hidden-variable sequence. Logs are exchanged as
//! newline-delimited JSON, one [`StationEvent`] per line.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::model::{Analyzer, Orientation, Outcome, Station};
use crate::parallel;
use crate::rng::{streams, RngContract};
use crate::stats::{self, CoincidenceCounts, JointOutcome, LambdaSource};

/// Simulated spacing between emissions.
pub const TRIAL_PERIOD_NS: u64 = 10_000;
/// Simulated clock reading at trial 0.
pub const BASE_TIME_NS: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationEvent {
    pub run: String,
    pub trial: u64,
    pub station: Station,
    pub setting: usize,
    pub angle_deg: f64,
    pub outcome: Outcome,
    pub t_ns: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    ByTrialId,
    ByTimeWindow { window_ns: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchPolicy {
    pub mode: MatchMode,
    /// Upper bound of the uniform timestamp jitter added to every event.
    pub jitter_ns: u64,
}

impl MatchPolicy {
    pub fn by_trial_id() -> Self {
        MatchPolicy { mode: MatchMode::ByTrialId, jitter_ns: 0 }
    }

    pub fn by_time_window(window_ns: u64, jitter_ns: u64) -> Result<Self> {
        if window_ns == 0 {
            return Err(Error::Config("time window must be positive".into()));
        }
        Ok(MatchPolicy { mode: MatchMode::ByTimeWindow { window_ns }, jitter_ns })
    }
}

/// Everything one station is allowed to know.
struct StationInputs<'a, S: LambdaSource + ?Sized> {
    station: Station,
    run_id: &'a str,
    angles_deg: &'a [f64],
    settings: RngContract,
    jitter: RngContract,
    jitter_ns: u64,
    source: &'a S,
    trials: u64,
}

fn station_log<S: LambdaSource + ?Sized>(inp: StationInputs<'_, S>) -> Result<Vec<StationEvent>> {
    let analyzers = inp
        .angles_deg
        .iter()
        .map(|d| Analyzer::new(inp.station, d.to_radians()))
        .collect::<Result<Vec<_>>>()?;
    let chunks = parallel::map_chunks(inp.trials, |range| -> Result<Vec<StationEvent>> {
        range
            .map(|trial| {
                let setting = inp.settings.index(trial, analyzers.len());
                let outcome = analyzers[setting].score_trial(inp.source.lambda(trial), trial)?;
                let jitter = if inp.jitter_ns == 0 {
                    0
                } else {
                    inp.jitter.index(trial, (inp.jitter_ns + 1) as usize) as u64
                };
                Ok(StationEvent {
                    run: inp.run_id.to_owned(),
                    trial,
                    station: inp.station,
                    setting,
                    angle_deg: inp.angles_deg[setting],
                    outcome,
                    t_ns: BASE_TIME_NS + trial * TRIAL_PERIOD_NS + jitter,
                })
            })
            .collect()
    });
    let mut log = Vec::with_capacity(inp.trials as usize);
    for c in chunks {
        log.extend(c?);
    }
    Ok(log)
}

/// Log of one station. Only that station's angles and streams are read.
pub fn run_station(station: Station, config: &ExperimentConfig, policy: &MatchPolicy) -> Result<Vec<StationEvent>> {
    config.validate()?;
    let root = RngContract::new(config.master_seed, streams::SOURCE);
    let (angles, settings, jitter) = match station {
        Station::A => (&config.alice_angles_deg, streams::SETTINGS_A, streams::JITTER_A),
        Station::B => (&config.bob_angles_deg, streams::SETTINGS_B, streams::JITTER_B),
    };
    station_log(StationInputs {
        station,
        run_id: &config.run_id,
        angles_deg: angles,
        settings: root.stream(settings),
        jitter: root.stream(jitter),
        jitter_ns: policy.jitter_ns,
        source: &root,
        trials: config.trials,
    })
}

/// Runs both stations on separate threads and returns `(log_A, log_B)`.
pub fn run_stations(config: &ExperimentConfig, policy: &MatchPolicy) -> Result<(Vec<StationEvent>, Vec<StationEvent>)> {
    config.validate()?;
    std::thread::scope(|s| {
        let a = s.spawn(|| run_station(Station::A, config, policy));
        let b = s.spawn(|| run_station(Station::B, config, policy));
        let a = a.join().map_err(|_| Error::protocol("station A worker panicked"))?;
        let b = b.join().map_err(|_| Error::protocol("station B worker panicked"))?;
        Ok((a?, b?))
    })
}

/// A coincidence formed from one A event and one B event.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub trial_a: u64,
    pub trial_b: u64,
    pub setting_a: usize,
    pub setting_b: usize,
    pub alpha_deg: f64,
    pub beta_deg: f64,
    pub outcome_a: Outcome,
    pub outcome_b: Outcome,
}

impl JointOutcome for MatchedPair {
    fn outcomes(&self) -> (Outcome, Outcome) {
        (self.outcome_a, self.outcome_b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_a: u64,
    pub unmatched_b: u64,
}

impl MatchReport {
    /// Matched pairs over the larger of the two log sizes.
    pub fn matched_fraction(&self) -> f64 {
        let n = self.pairs.len() as u64;
        let denom = (n + self.unmatched_a).max(n + self.unmatched_b);
        if denom == 0 {
            return 0.0;
        }
        n as f64 / denom as f64
    }
}

fn log_identity(log: &[StationEvent], which: &str) -> Result<Option<(Station, String)>> {
    let Some(first) = log.first() else { return Ok(None) };
    let mut seen = HashSet::with_capacity(log.len());
    for e in log {
        if e.station != first.station {
            return Err(Error::protocol(format!("{which} log mixes stations")));
        }
        if e.run != first.run {
            return Err(Error::protocol(format!("{which} log mixes runs {} and {}", first.run, e.run)));
        }
        if !seen.insert(e.trial) {
            return Err(Error::protocol(format!("{which} log repeats trial {}", e.trial)));
        }
    }
    Ok(Some((first.station, first.run.clone())))
}

fn pair(a: &StationEvent, b: &StationEvent) -> MatchedPair {
    MatchedPair {
        trial_a: a.trial,
        trial_b: b.trial,
        setting_a: a.setting,
        setting_b: b.setting,
        alpha_deg: a.angle_deg,
        beta_deg: b.angle_deg,
        outcome_a: a.outcome,
        outcome_b: b.outcome,
    }
}

/// Joins two station logs into coincidences. The argument order does not
/// matter: logs are told apart by their `station` field.
pub fn match_coincidences(
    log_1: &[StationEvent],
    log_2: &[StationEvent],
    policy: &MatchPolicy,
) -> Result<MatchReport> {
    let id_1 = log_identity(log_1, "first")?;
    let id_2 = log_identity(log_2, "second")?;
    let (log_a, log_b) = match (&id_1, &id_2) {
        (Some((s1, r1)), Some((s2, r2))) => {
            if r1 != r2 {
                return Err(Error::protocol(format!("run id mismatch: {r1} vs {r2}")));
            }
            match (s1, s2) {
                (Station::A, Station::B) => (log_1, log_2),
                (Station::B, Station::A) => (log_2, log_1),
                _ => return Err(Error::protocol("both logs come from the same station")),
            }
        }
        (Some((Station::B, _)), None) | (None, Some((Station::A, _))) => (log_2, log_1),
        _ => (log_1, log_2),
    };

    match policy.mode {
        MatchMode::ByTrialId => {
            let by_trial: HashMap<u64, &StationEvent> = log_b.iter().map(|e| (e.trial, e)).collect();
            let mut pairs: Vec<MatchedPair> = log_a
                .iter()
                .filter_map(|a| by_trial.get(&a.trial).map(|b| pair(a, b)))
                .collect();
            pairs.sort_by_key(|p| p.trial_a);
            let n = pairs.len() as u64;
            Ok(MatchReport {
                pairs,
                unmatched_a: log_a.len() as u64 - n,
                unmatched_b: log_b.len() as u64 - n,
            })
        }
        MatchMode::ByTimeWindow { window_ns } => {
            if window_ns == 0 {
                return Err(Error::Config("time window must be positive".into()));
            }
            let mut a: Vec<&StationEvent> = log_a.iter().collect();
            let mut b: Vec<&StationEvent> = log_b.iter().collect();
            a.sort_by_key(|e| (e.t_ns, e.trial));
            b.sort_by_key(|e| (e.t_ns, e.trial));
            let (mut i, mut j) = (0, 0);
            let mut pairs = Vec::new();
            let (mut un_a, mut un_b) = (0u64, 0u64);
            while i < a.len() && j < b.len() {
                let (ta, tb) = (a[i].t_ns, b[j].t_ns);
                if ta.abs_diff(tb) <= window_ns {
                    pairs.push(pair(a[i], b[j]));
                    i += 1;
                    j += 1;
                } else if ta < tb {
                    un_a += 1;
                    i += 1;
                } else {
                    un_b += 1;
                    j += 1;
                }
            }
            un_a += (a.len() - i) as u64;
            un_b += (b.len() - j) as u64;
            Ok(MatchReport { pairs, unmatched_a: un_a, unmatched_b: un_b })
        }
    }
}

/// A record that knows which setting each side used.
pub trait SettingPair: JointOutcome {
    fn settings(&self) -> (usize, usize);
}

impl SettingPair for MatchedPair {
    fn settings(&self) -> (usize, usize) {
        (self.setting_a, self.setting_b)
    }
}

/// One joint trial of the monolithic simulation, with setting indices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonolithicRecord {
    pub trial: u64,
    pub lambda: Orientation,
    pub setting_a: usize,
    pub setting_b: usize,
    pub outcome_a: Outcome,
    pub outcome_b: Outcome,
}

impl JointOutcome for MonolithicRecord {
    fn outcomes(&self) -> (Outcome, Outcome) {
        (self.outcome_a, self.outcome_b)
    }
}

impl SettingPair for MonolithicRecord {
    fn settings(&self) -> (usize, usize) {
        (self.setting_a, self.setting_b)
    }
}

/// The same run evaluated jointly, without separate stations.
pub fn simulate_monolithic(config: &ExperimentConfig) -> Result<Vec<MonolithicRecord>> {
    config.validate()?;
    let source = RngContract::new(config.master_seed, streams::SOURCE);
    let sa = source.stream(streams::SETTINGS_A);
    let sb = source.stream(streams::SETTINGS_B);
    let build = |station, list: &[f64]| {
        list.iter().map(|d| Analyzer::new(station, d.to_radians())).collect::<Result<Vec<_>>>()
    };
    let an_a = build(Station::A, &config.alice_angles_deg)?;
    let an_b = build(Station::B, &config.bob_angles_deg)?;
    let chunks = parallel::map_chunks(config.trials, |range| -> Result<Vec<MonolithicRecord>> {
        range
            .map(|trial| {
                let lambda = source.lambda(trial);
                let (ia, ib) = (sa.index(trial, an_a.len()), sb.index(trial, an_b.len()));
                Ok(MonolithicRecord {
                    trial,
                    lambda,
                    setting_a: ia,
                    setting_b: ib,
                    outcome_a: an_a[ia].score_trial(lambda, trial)?,
                    outcome_b: an_b[ib].score_trial(lambda, trial)?,
                })
            })
            .collect()
    });
    let mut out = Vec::with_capacity(config.trials as usize);
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Estimates for one setting pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    pub setting_a: usize,
    pub setting_b: usize,
    pub alpha_deg: f64,
    pub beta_deg: f64,
    pub counts: CoincidenceCounts,
    /// Coincidence-count estimate; `None` when the pair never occurred.
    pub coincidence: Option<f64>,
    /// Scalar part of the standardized-score covariance at the same angles,
    /// averaged exactly over both orientations.
    pub standardized: f64,
}

/// Per setting pair tallies over `records`, for every combination of the
/// two angle lists (in degrees).
pub fn pair_estimates<T: SettingPair>(
    records: &[T],
    alice_angles_deg: &[f64],
    bob_angles_deg: &[f64],
) -> Result<Vec<PairEstimate>> {
    let (na, nb) = (alice_angles_deg.len(), bob_angles_deg.len());
    let mut counts = vec![CoincidenceCounts::default(); na * nb];
    for r in records {
        let (ia, ib) = r.settings();
        if ia >= na || ib >= nb {
            return Err(Error::protocol(format!("setting pair ({ia}, {ib}) outside the configured lists")));
        }
        counts[ia * nb + ib].add(r.outcomes());
    }
    let mut out = Vec::with_capacity(na * nb);
    for (ia, &alpha_deg) in alice_angles_deg.iter().enumerate() {
        for (ib, &beta_deg) in bob_angles_deg.iter().enumerate() {
            let c = counts[ia * nb + ib];
            let standardized = stats::correlate_standard_from(
                alpha_deg.to_radians(),
                beta_deg.to_radians(),
                &Orientation::BOTH,
            )?
            .scalar_part;
            out.push(PairEstimate {
                setting_a: ia,
                setting_b: ib,
                alpha_deg,
                beta_deg,
                counts: c,
                coincidence: c.correlation(),
                standardized,
            });
        }
    }
    Ok(out)
}

/// Angle list of one station recovered from its log, indexed by setting.
pub fn angles_from_log(log: &[StationEvent]) -> Result<Vec<f64>> {
    let mut angles: Vec<Option<f64>> = Vec::new();
    for e in log {
        if e.setting >= angles.len() {
            angles.resize(e.setting + 1, None);
        }
        match angles[e.setting] {
            None => angles[e.setting] = Some(e.angle_deg),
            Some(a) if a.to_bits() == e.angle_deg.to_bits() => {}
            Some(a) => {
                return Err(Error::protocol(format!(
                    "setting {} logged with angles {a} and {}",
                    e.setting, e.angle_deg
                )))
            }
        }
    }
    angles
        .into_iter()
        .enumerate()
        .map(|(k, a)| a.ok_or_else(|| Error::protocol(format!("setting {k} never occurs in the log"))))
        .collect()
}

pub fn write_ndjson<W: Write>(mut w: W, events: &[StationEvent]) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut w, e).map_err(|err| Error::protocol(err.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ndjson<R: BufRead>(r: R) -> Result<Vec<StationEvent>> {
    let mut out = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e: StationEvent = serde_json::from_str(&line)
            .map_err(|err| Error::protocol(format!("line {}: {err}", k + 1)))?;
        out.push(e);
    }
    Ok(out)
}

/// Two-process deployment over TCP.
pub mod net {
    use std::io::{BufReader, BufWriter};
    use std::net::{Shutdown, TcpListener, TcpStream, ToSocketAddrs};
    use std::thread::sleep;
    use std::time::Duration;

    use super::*;

    /// Runs station A locally, receives station B's log from one peer and
    /// returns `(log_A, log_B)`.
    pub fn collect(
        listener: &TcpListener,
        config: &ExperimentConfig,
        policy: &MatchPolicy,
    ) -> Result<(Vec<StationEvent>, Vec<StationEvent>)> {
        let log_a = run_station(Station::A, config, policy)?;
        let (stream, _) = listener.accept()?;
        let log_b = read_ndjson(BufReader::new(stream))?;
        Ok((log_a, log_b))
    }

    /// Runs station B and streams its log to the collector, retrying the
    /// connection while the collector starts up. Returns the events sent.
    pub fn send_station_b<A: ToSocketAddrs + Copy>(
        addr: A,
        config: &ExperimentConfig,
        policy: &MatchPolicy,
        attempts: u32,
    ) -> Result<usize> {
        let log_b = run_station(Station::B, config, policy)?;
        let mut last = None;
        for _ in 0..attempts.max(1) {
            match TcpStream::connect(addr) {
                Ok(stream) => {
                    write_ndjson(BufWriter::new(&stream), &log_b)?;
                    stream.shutdown(Shutdown::Write)?;
                    return Ok(log_b.len());
                }
                Err(e) => {
                    last = Some(e);
                    sleep(Duration::from_millis(100));
                }
            }
        }
        Err(last.map_or_else(|| Error::protocol("no connection attempt made"), Error::Io))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(a: Vec<f64>, b: Vec<f64>, n: u64, seed: u64) -> ExperimentConfig {
        ExperimentConfig::new(a, b, n, seed).unwrap()
    }

    #[test]
    fn logs_have_one_event_per_trial() {
        let c = cfg(vec![0.0, 45.0], vec![22.5, 67.5], 1000, 3);
        let (a, b) = run_stations(&c, &MatchPolicy::by_trial_id()).unwrap();
        assert_eq!(a.len(), 1000);
        assert_eq!(b.len(), 1000);
        assert!(a.iter().all(|e| e.station == Station::A && e.setting < 2));
    }

    #[test]
    fn single_angle_matches_monolithic_outcomes() {
        let c = cfg(vec![10.0], vec![55.0], 4, 99);
        let (a, b) = run_stations(&c, &MatchPolicy::by_trial_id()).unwrap();
        let mono = simulate_monolithic(&c).unwrap();
        let rng = RngContract::new(99, streams::SOURCE);
        let joint = stats::simulate_trials(10f64.to_radians(), 55f64.to_radians(), 4, &rng).unwrap();
        for i in 0..4 {
            assert_eq!(a[i].outcome, mono[i].outcome_a);
            assert_eq!(b[i].outcome, mono[i].outcome_b);
            assert_eq!(a[i].outcome, joint[i].raw_a);
            assert_eq!(b[i].outcome, joint[i].raw_b);
        }
    }

    #[test]
    fn settings_are_balanced() {
        let n = 100_000u64;
        let c = cfg(vec![0.0, 45.0], vec![22.5, 67.5], n, 5);
        let (a, b) = run_stations(&c, &MatchPolicy::by_trial_id()).unwrap();
        for log in [&a, &b] {
            let zeros = log.iter().filter(|e| e.setting == 0).count() as f64;
            assert!((zeros - n as f64 / 2.0).abs() <= 5.0 * (n as f64).sqrt());
        }
    }

    #[test]
    fn time_window_without_jitter_equals_trial_id() {
        let c = cfg(vec![0.0, 45.0], vec![22.5, 67.5], 5000, 8);
        let (a, b) = run_stations(&c, &MatchPolicy::by_trial_id()).unwrap();
        let by_id = match_coincidences(&a, &b, &MatchPolicy::by_trial_id()).unwrap();
        let by_time = match_coincidences(&a, &b, &MatchPolicy::by_time_window(1000, 0).unwrap()).unwrap();
        assert_eq!(by_id, by_time);
        assert_eq!(by_id.pairs.len(), 5000);
        assert_eq!((by_id.unmatched_a, by_id.unmatched_b), (0, 0));
    }

    #[test]
    fn every_pair_is_perfectly_anticorrelated() {
        let c = cfg(vec![0.0, 45.0], vec![22.5, 67.5], 4000, 12);
        let (a, b) = run_stations(&c, &MatchPolicy::by_trial_id()).unwrap();
        let m = match_coincidences(&a, &b, &MatchPolicy::by_trial_id()).unwrap();
        for est in pair_estimates(&m.pairs, &c.alice_angles_deg, &c.bob_angles_deg).unwrap() {
            assert_eq!(est.coincidence, Some(-1.0));
            let expected = -(2.0 * (est.alpha_deg - est.beta_deg).to_radians()).cos();
            assert!((est.standardized - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn jitter_beyond_window_loses_pairs() {
        let c = cfg(vec![0.0], vec![22.5], 5000, 13);
        let policy = MatchPolicy::by_time_window(1000, 2000).unwrap();
        let (a, b) = run_stations(&c, &policy).unwrap();
        let m = match_coincidences(&a, &b, &policy).unwrap();
        assert!(m.matched_fraction() < 1.0);
        assert!(m.unmatched_a > 0 && m.unmatched_a == m.unmatched_b);
    }

    #[test]
    fn matching_is_symmetric() {
        let c = cfg(vec![0.0, 45.0], vec![22.5], 3000, 21);
        let policy = MatchPolicy::by_time_window(500, 800).unwrap();
        let (a, b) = run_stations(&c, &policy).unwrap();
        for p in [MatchPolicy::by_trial_id(), policy] {
            assert_eq!(match_coincidences(&a, &b, &p).unwrap(), match_coincidences(&b, &a, &p).unwrap());
        }
    }

    #[test]
    fn protocol_errors() {
        let c = cfg(vec![0.0], vec![22.5], 10, 1);
        let (a, mut b) = run_stations(&c, &MatchPolicy::by_trial_id()).unwrap();
        let mut other = b.clone();
        other.iter_mut().for_each(|e| e.run = "other".into());
        assert!(matches!(match_coincidences(&a, &other, &MatchPolicy::by_trial_id()), Err(Error::Protocol(_))));
        b[3].trial = 2;
        assert!(matches!(match_coincidences(&a, &b, &MatchPolicy::by_trial_id()), Err(Error::Protocol(_))));
        assert!(matches!(match_coincidences(&a, &a, &MatchPolicy::by_trial_id()), Err(Error::Protocol(_))));
        assert!(MatchPolicy::by_time_window(0, 0).is_err());
    }

    #[test]
    fn ndjson_round_trip_and_keys() {
        let c = cfg(vec![0.0, 45.0], vec![22.5], 20, 2);
        let (a, _) = run_stations(&c, &MatchPolicy::by_time_window(100, 50).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_ndjson(&mut buf, &a).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        let mut keys: Vec<&str> = first.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(keys, ["angle_deg", "outcome", "run", "setting", "station", "t_ns", "trial"]);
        assert!(first["outcome"] == 1 || first["outcome"] == -1);
        assert_eq!(read_ndjson(buf.as_slice()).unwrap(), a);
        assert_eq!(angles_from_log(&a).unwrap(), vec![0.0, 45.0]);
        assert!(matches!(read_ndjson("{\"run\":1}\n".as_bytes()), Err(Error::Protocol(_))));
    }

    #[test]
    fn tcp_deployment_matches_in_process() {
        let c = cfg(vec![0.0, 45.0], vec![22.5, 67.5], 500, 31);
        let policy = MatchPolicy::by_trial_id();
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let sender = {
            let c = c.clone();
            std::thread::spawn(move || net::send_station_b(addr, &c, &policy, 20))
        };
        let (a, b) = net::collect(&listener, &c, &policy).unwrap();
        assert_eq!(sender.join().unwrap().unwrap(), 500);
        assert_eq!((a, b), run_stations(&c, &policy).unwrap());
    }
}
