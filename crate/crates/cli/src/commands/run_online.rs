use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use drive_events::hmm::{EmissionModel, TransitionMatrix};
use drive_events::online::{online_init, EstimatorFlags, OnlineEstimator, Snapshot};
use serde::{Deserialize, Serialize};

use super::initial_distribution;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{check_malformed, open_output, write_json, SignalReader};

pub const STREAM_SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default)]
pub struct OnlineOptions {
    pub resume: Option<PathBuf>,
    pub snapshot: Option<PathBuf>,
    /// Stop after this many input rows in this invocation.
    pub max_rows: Option<u64>,
}

/// Stream position plus estimator state. Resuming replays the same input
/// from its start and skips the first `rows` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSnapshot {
    pub version: u32,
    pub rows: u64,
    pub malformed: u64,
    pub paused: u64,
    pub last_t: Option<f64>,
    pub estimator: Option<Snapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineRecord {
    /// Estimator time: samples consumed minus one.
    pub t: u64,
    /// `t` column of the row that produced the record.
    pub row_t: f64,
    pub diag: Vec<f64>,
    pub eta_lt: Option<f64>,
    pub eta_rt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineSummary {
    pub summary: bool,
    pub t: u64,
    pub samples: u64,
    pub rows: u64,
    pub malformed: u64,
    /// Rows skipped by the speed gate.
    pub paused: u64,
    pub last_t: Option<f64>,
    pub eta_lt: f64,
    pub eta_rt: f64,
    pub eta: Vec<f64>,
    pub q: Option<TransitionMatrix>,
    pub flags: EstimatorFlags,
    pub snapshot: Option<PathBuf>,
}

fn turn_pair(est: &OnlineEstimator) -> (Option<f64>, Option<f64>) {
    match est.turn_counts() {
        Ok((l, r)) => (Some(l), Some(r)),
        Err(_) => (None, None),
    }
}

struct Stream<'a> {
    cfg: &'a RunConfig,
    em: EmissionModel,
    est: Option<OnlineEstimator>,
    rows: u64,
    malformed: u64,
    paused: u64,
    last_t: Option<f64>,
}

impl Stream<'_> {
    fn feed(&mut self, y: f64) -> CliResult<&OnlineEstimator> {
        match &mut self.est {
            Some(est) => est.step(&self.em, y)?,
            None => {
                let q0 = self.cfg.q0();
                let pi = initial_distribution(&q0);
                self.est = Some(online_init(&pi, &self.em, y, q0, self.cfg.policy, self.cfg.burn_in)?);
            }
        }
        Ok(self.est.as_ref().expect("estimator initialised"))
    }

    fn snapshot(&self) -> StreamSnapshot {
        StreamSnapshot {
            version: STREAM_SNAPSHOT_VERSION,
            rows: self.rows,
            malformed: self.malformed,
            paused: self.paused,
            last_t: self.last_t,
            estimator: self.est.as_ref().map(OnlineEstimator::to_snapshot),
        }
    }
}

fn load_snapshot(path: &Path) -> CliResult<StreamSnapshot> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    let snap: StreamSnapshot = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("snapshot {}: {e}", path.display())))?;
    if snap.version != STREAM_SNAPSHOT_VERSION {
        return Err(CliError::Validation(format!("snapshot version {} is not supported", snap.version)));
    }
    Ok(snap)
}

/// Streams `input` through the online estimator, writing one NDJSON record
/// per `stride` samples and a final summary line to `out`. Memory use does
/// not grow with the stream.
pub fn run_online<R: Read, W: Write>(
    cfg: &RunConfig,
    input: R,
    mut out: W,
    opts: &OnlineOptions,
) -> CliResult<OnlineSummary> {
    let mut s = Stream {
        cfg,
        em: cfg.emission_model()?,
        est: None,
        rows: 0,
        malformed: 0,
        paused: 0,
        last_t: None,
    };
    if let Some(path) = &opts.resume {
        let snap = load_snapshot(path)?;
        if let Some(e) = snap.estimator {
            let est = OnlineEstimator::from_snapshot(e)?;
            if est.policy() != &cfg.policy {
                eprintln!("note: resuming with the snapshot's policy {:?}", est.policy());
            }
            if est.m() != s.em.m() {
                return Err(CliError::Validation(format!(
                    "snapshot has {} states, emission model {}",
                    est.m(),
                    s.em.m()
                )));
            }
            s.est = Some(est);
        }
        (s.rows, s.malformed, s.paused, s.last_t) = (snap.rows, snap.malformed, snap.paused, snap.last_t);
    }

    let mut rdr = SignalReader::new(input)?;
    let mut skip = s.rows;
    let mut budget = opts.max_rows.unwrap_or(u64::MAX);
    let mut warned = 0u32;
    while budget > 0 {
        let Some(row) = rdr.next_row()? else { break };
        if skip > 0 {
            skip -= 1;
            continue;
        }
        budget -= 1;
        s.rows += 1;
        let row = row.and_then(|r| match s.last_t {
            Some(prev) if r.t <= prev => Err(format!("t = {} does not increase (previous {prev})", r.t)),
            _ => Ok(r),
        });
        let rec = match row {
            Ok(r) => r,
            Err(msg) => {
                s.malformed += 1;
                if warned < 10 {
                    eprintln!("warning: skipping line {}: {msg}", rdr.line());
                    warned += 1;
                }
                continue;
            }
        };
        s.last_t = Some(rec.t);
        if rec.speed.is_some_and(|v| v < cfg.speed_threshold) {
            s.paused += 1;
            continue;
        }
        let est = s.feed(rec.y)?;
        if (est.t() + 1) % cfg.stride == 0 {
            let (eta_lt, eta_rt) = turn_pair(est);
            let record = OnlineRecord { t: est.t(), row_t: rec.t, diag: est.q().diagonal(), eta_lt, eta_rt };
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
    }
    if skip > 0 {
        return Err(CliError::Validation(format!(
            "input ended {skip} rows before the snapshot position"
        )));
    }
    if s.malformed > 10 {
        eprintln!("warning: {} malformed rows skipped in total", s.malformed);
    }
    check_malformed(s.malformed, s.rows, cfg.malformed_limit)?;

    if let Some(path) = &opts.snapshot {
        write_json(path, &s.snapshot())?;
    }
    let m = s.em.m();
    let summary = match &s.est {
        Some(est) => {
            let (l, r) = turn_pair(est);
            OnlineSummary {
                summary: true,
                t: est.t(),
                samples: est.t() + 1,
                rows: s.rows,
                malformed: s.malformed,
                paused: s.paused,
                last_t: s.last_t,
                eta_lt: l.unwrap_or(0.0),
                eta_rt: r.unwrap_or(0.0),
                eta: est.accumulate_events().to_vec(),
                q: Some(est.q().clone()),
                flags: est.flags().clone(),
                snapshot: opts.snapshot.clone(),
            }
        }
        None => OnlineSummary {
            summary: true,
            t: 0,
            samples: 0,
            rows: s.rows,
            malformed: s.malformed,
            paused: s.paused,
            last_t: s.last_t,
            eta_lt: 0.0,
            eta_rt: 0.0,
            eta: vec![0.0; m],
            q: None,
            flags: EstimatorFlags::default(),
            snapshot: opts.snapshot.clone(),
        },
    };
    serde_json::to_writer(&mut out, &summary)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(summary)
}

pub fn cmd_run_online(
    cfg: &RunConfig,
    input: &Path,
    output: Option<&Path>,
    opts: &OnlineOptions,
) -> CliResult<OnlineSummary> {
    run_online(cfg, crate::io::open_input(input)?, open_output(output)?, opts)
}
