use std::io::Write;
use std::path::{Path, PathBuf};

use drive_events::damage::{
    count_turns, damage_intensity, extract_events, frame_damage, pm_damage, rainflow_count, rainflow_count_indexed,
    reduce_load, turn_chain_from_q, DamageParams, FrameDamage, TailModel, TurnEvent,
};
use drive_events::hmm::{viterbi, TransitionMatrix};
use drive_events::online::online_init;
use serde::Serialize;

use super::initial_distribution;
use crate::config::{Framing, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::open_output;

/// Load and optional ground truth after speed gating.
#[derive(Debug, Clone, Default)]
pub struct DamageInput {
    pub y: Vec<f64>,
    pub states: Option<Vec<usize>>,
    /// km/h, needed for distance framing.
    pub speed: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventSource {
    Labels,
    Viterbi,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaReport {
    pub beta: f64,
    /// Sum of the expected per-frame damage.
    pub expected: f64,
    /// Rainflow damage of the reduced load.
    pub reduced_load: f64,
    /// Rainflow damage of the full signal.
    pub total_signal: f64,
    pub per_event: Vec<f64>,
    pub frames: FrameDamage,
    /// Reduced-load rainflow damage accumulated by frame.
    pub observed_cumulative: Vec<f64>,
    /// Frames whose tail truncation was flagged.
    pub diverged_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DamageReport {
    pub samples: usize,
    /// Exclusive end sample of every frame.
    pub frame_ends: Vec<usize>,
    /// Expected turn count at each frame end.
    pub eta: Vec<f64>,
    pub event_source: EventSource,
    pub observed_left: usize,
    pub observed_right: usize,
    /// Frames whose estimated matrix gave no valid turn chain.
    pub degenerate_frames: usize,
    pub betas: Vec<BetaReport>,
    pub events: Vec<TurnEvent>,
    /// Zeros alternating with the turn extremes.
    pub reduced: Vec<f64>,
}

/// Splits `n` samples into `frames` consecutive frames of equal duration or
/// equal travelled distance.
pub fn frame_ends(n: usize, cfg: &RunConfig, speed: Option<&[f64]>) -> CliResult<Vec<usize>> {
    let f = cfg.frames.min(n).max(1);
    match cfg.framing {
        Framing::Time => Ok((1..=f).map(|k| (k * n).div_ceil(f)).collect()),
        Framing::Distance => {
            let speed = speed.ok_or_else(|| CliError::Validation("distance framing needs a speed column".into()))?;
            let mut cum = Vec::with_capacity(n);
            let mut d = 0.0;
            for &v in speed {
                d += v / 3.6 * cfg.sample_period;
                cum.push(d);
            }
            if !(d > 0.0) {
                return Err(CliError::Validation("no distance travelled; use time framing".into()));
            }
            let mut ends = Vec::with_capacity(f);
            let mut i = 0;
            for k in 1..f {
                let target = d * k as f64 / f as f64;
                while i < n && cum[i] < target {
                    i += 1;
                }
                ends.push((i + 1).min(n));
            }
            ends.push(n);
            Ok(ends)
        }
    }
}

/// Online pass recording the expected turn count and the estimate at each
/// frame end.
fn online_frames(
    y: &[f64],
    ends: &[usize],
    cfg: &RunConfig,
) -> CliResult<(Vec<f64>, Vec<TransitionMatrix>)> {
    let em = cfg.emission_model()?;
    let q0 = cfg.q0();
    let mut est = online_init(&initial_distribution(&q0), &em, y[0], q0, cfg.policy, cfg.burn_in)?;
    let mut eta = Vec::with_capacity(ends.len());
    let mut qs = Vec::with_capacity(ends.len());
    let mut next = ends.iter().peekable();
    for (i, &yi) in y.iter().enumerate() {
        if i > 0 {
            est.step(&em, yi)?;
        }
        while next.peek().is_some_and(|&&e| e == i + 1) {
            next.next();
            let (l, r) = est.turn_counts()?;
            eta.push(l + r);
            qs.push(est.q().clone());
        }
    }
    Ok((eta, qs))
}

/// Cumulative damage of the reduced-load cycles, each booked in the frame
/// holding the turn of its maximum.
fn observed_by_frame(reduced: &[f64], events: &[TurnEvent], ends: &[usize], params: &DamageParams) -> Vec<f64> {
    let mut per_frame = vec![0.0; ends.len()];
    for (r, c) in rainflow_count_indexed(reduced) {
        let ev = &events[((r.max(1) - 1) / 2).min(events.len() - 1)];
        let k = ends.partition_point(|&e| e <= ev.start).min(ends.len() - 1);
        per_frame[k] += params.alpha * c.range().powf(params.beta);
    }
    per_frame
        .iter()
        .scan(0.0, |acc, d| {
            *acc += d;
            Some(*acc)
        })
        .collect()
}

pub fn damage_report(input: &DamageInput, cfg: &RunConfig) -> CliResult<DamageReport> {
    let y = &input.y;
    let n = y.len();
    if n == 0 {
        return Err(CliError::Validation("no samples to analyse".into()));
    }
    let em = cfg.emission_model()?;
    if em.m() != 3 {
        return Err(CliError::Validation(format!("damage needs the three turn states, model has {}", em.m())));
    }
    let ends = frame_ends(n, cfg, input.speed.as_deref())?;
    let (eta, qs) = online_frames(y, &ends, cfg)?;

    let (path, event_source) = match &input.states {
        Some(s) => (s.clone(), EventSource::Labels),
        None => {
            eprintln!("warning: no state labels; turn events come from Viterbi decoding with the final estimate");
            let q = qs.last().expect("at least one frame");
            (viterbi(y, q, &em, &initial_distribution(q))?.states, EventSource::Viterbi)
        }
    };
    if let Some(k) = path.iter().find(|&&k| k >= 3) {
        return Err(CliError::Validation(format!("state label {k} outside 0..3")));
    }
    let events = extract_events(&path, cfg.min_event_duration);
    let (observed_left, observed_right) = count_turns(&events);
    let reduced = reduce_load(y, &events)?;
    let tails = TailModel::empirical_from_reduced(&reduced);
    if events.is_empty() {
        eprintln!("warning: no turns detected; expected damage is zero");
    }

    let chains: Vec<_> = qs.iter().map(turn_chain_from_q).collect();
    let degenerate_frames = chains.iter().filter(|c| c.is_err()).count();
    if degenerate_frames > 0 {
        eprintln!("warning: {degenerate_frames} frames have no valid turn chain; their damage is zero");
    }
    let full_cycles = rainflow_count(y);
    let reduced_cycles = rainflow_count(&reduced);
    let mut betas = Vec::with_capacity(cfg.betas.len());
    for &beta in &cfg.betas {
        let params = DamageParams::with_beta(beta)?;
        let mut per_event = Vec::with_capacity(ends.len());
        let mut diverged_frames = 0;
        for chain in &chains {
            let d = match chain {
                Ok(c) if !events.is_empty() => {
                    let di = damage_intensity(c, &tails, &params, &cfg.quadrature)?;
                    diverged_frames += di.diverged as usize;
                    di.per_turn
                }
                _ => 0.0,
            };
            per_event.push(d);
        }
        let frames = frame_damage(&eta, &per_event)?;
        let observed_cumulative = if events.is_empty() {
            vec![0.0; ends.len()]
        } else {
            observed_by_frame(&reduced, &events, &ends, &params)
        };
        betas.push(BetaReport {
            beta,
            expected: frames.total(),
            reduced_load: pm_damage(&reduced_cycles, &params),
            total_signal: pm_damage(&full_cycles, &params),
            per_event,
            frames,
            observed_cumulative,
            diverged_frames,
        });
    }
    Ok(DamageReport {
        samples: n,
        frame_ends: ends,
        eta,
        event_source,
        observed_left,
        observed_right,
        degenerate_frames,
        betas,
        events,
        reduced,
    })
}

#[derive(Serialize)]
struct SummaryBeta {
    beta: f64,
    expected: f64,
    reduced_load: f64,
    total_signal: f64,
    diverged_frames: usize,
}

#[derive(Serialize)]
struct Summary<'a> {
    samples: usize,
    frames: usize,
    event_source: EventSource,
    observed_left: usize,
    observed_right: usize,
    expected_turns: f64,
    degenerate_frames: usize,
    totals: Vec<SummaryBeta>,
    reduced_load: Option<&'a Path>,
}

/// Columns `index,value,sample`; `sample` is the start of the turn behind an
/// extreme and empty for the zeros.
fn write_reduced(path: &Path, report: &DamageReport) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(open_output(Some(path))?);
    w.write_record(["index", "value", "sample"])?;
    for (i, v) in report.reduced.iter().enumerate() {
        let sample = if i % 2 == 1 { report.events[i / 2].start.to_string() } else { String::new() };
        w.write_record([i.to_string(), v.to_string(), sample])?;
    }
    w.flush()?;
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

/// Writes the frame table to `output` (standard output when absent). With a
/// file output the summary goes to `<stem>.summary.json` and the reduced
/// load to `<stem>.reduced.csv`; otherwise the summary goes to standard
/// error.
pub fn cmd_damage_report(input: &DamageInput, cfg: &RunConfig, output: Option<&Path>) -> CliResult<DamageReport> {
    let report = damage_report(input, cfg)?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(open_output(output)?);
    w.write_record(["beta", "frame", "end_sample", "delta_eta", "d", "delta_d", "cumulative", "observed_cumulative"])?;
    for b in &report.betas {
        for k in 0..report.frame_ends.len() {
            w.write_record([
                b.beta.to_string(),
                k.to_string(),
                report.frame_ends[k].to_string(),
                b.frames.delta_eta[k].to_string(),
                b.per_event[k].to_string(),
                b.frames.delta_damage[k].to_string(),
                b.frames.cumulative[k].to_string(),
                b.observed_cumulative[k].to_string(),
            ])?;
        }
    }
    w.flush()?;

    let file_output = output.filter(|p| p.as_os_str() != "-");
    let reduced_path = file_output.map(|p| sibling(p, ".reduced.csv"));
    if let Some(rp) = &reduced_path {
        write_reduced(rp, &report)?;
    }
    let summary = Summary {
        samples: report.samples,
        frames: report.frame_ends.len(),
        event_source: report.event_source,
        observed_left: report.observed_left,
        observed_right: report.observed_right,
        expected_turns: report.eta.last().copied().unwrap_or(0.0),
        degenerate_frames: report.degenerate_frames,
        totals: report
            .betas
            .iter()
            .map(|b| SummaryBeta {
                beta: b.beta,
                expected: b.expected,
                reduced_load: b.reduced_load,
                total_signal: b.total_signal,
                diverged_frames: b.diverged_frames,
            })
            .collect(),
        reduced_load: reduced_path.as_deref(),
    };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    match file_output {
        Some(p) => {
            let sp = sibling(p, ".summary.json");
            std::fs::write(&sp, text).map_err(|e| CliError::io(sp.display(), e))?;
        }
        None => std::io::stderr().write_all(text.as_bytes())?,
    }
    Ok(report)
}
