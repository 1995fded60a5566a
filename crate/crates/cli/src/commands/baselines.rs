use std::path::Path;

use drive_events::damage::{count_turns, extract_events};
use drive_events::hmm::{batch_em, viterbi, EmissionModel};
use drive_events::online::{online_init, ForgettingPolicy};
use rayon::prelude::*;
use serde::Serialize;

use super::initial_distribution;
use super::simulate::run_simulation;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::open_output;

/// `(left, right)` turn counts.
pub type Counts = (f64, f64);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JourneyCounts {
    pub seed: Option<u64>,
    pub observed: Counts,
    /// One entry per configured policy.
    pub online: Vec<Counts>,
    pub viterbi: Option<Counts>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodStats {
    pub method: String,
    pub journeys: usize,
    pub mean_lt: f64,
    pub mean_rt: f64,
    /// Mean signed error `estimate - observed`.
    pub mean_err_lt: f64,
    pub mean_err_rt: f64,
    pub mean_abs_err_lt: f64,
    pub mean_abs_err_rt: f64,
    pub std_abs_err_lt: f64,
    pub std_abs_err_rt: f64,
    /// Mean absolute error over both directions relative to the mean
    /// observed count.
    pub relative_abs_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub journeys: Vec<JourneyCounts>,
    /// Observed counts first, then the policies, then Viterbi.
    pub methods: Vec<MethodStats>,
}

pub fn policy_label(p: &ForgettingPolicy) -> String {
    match *p {
        ForgettingPolicy::Decaying { alpha } => format!("decaying({alpha})"),
        ForgettingPolicy::Fixed { gamma } => format!("fixed({gamma})"),
        ForgettingPolicy::FixedFromRk { r, k } => format!("rk({r},{k})"),
        ForgettingPolicy::PerState { base } => format!("per_state({base})"),
    }
}

/// Online estimates for every policy and the Viterbi count for one journey.
pub fn journey_counts(
    y: &[f64],
    states: &[usize],
    em: &EmissionModel,
    cfg: &RunConfig,
    seed: Option<u64>,
) -> CliResult<JourneyCounts> {
    if y.is_empty() || y.len() != states.len() {
        return Err(CliError::Validation("journey needs one state label per sample".into()));
    }
    let (l, r) = count_turns(&extract_events(states, cfg.min_event_duration));
    let observed = (l as f64, r as f64);

    let m = em.m();
    let mut dens = vec![0.0; y.len() * m];
    for (row, &yi) in dens.chunks_exact_mut(m).zip(y) {
        em.log_densities_into(yi, row);
    }
    let q0 = cfg.q0();
    let pi = initial_distribution(&q0);
    let online = cfg
        .policies
        .iter()
        .map(|&policy| {
            let mut est = online_init(&pi, em, y[0], q0.clone(), policy, cfg.burn_in)?;
            for row in dens.chunks_exact(m).skip(1) {
                est.step_log_densities(row);
            }
            Ok(est.turn_counts()?)
        })
        .collect::<CliResult<Vec<_>>>()?;

    let viterbi = if cfg.viterbi_em_iters > 0 {
        let fit = batch_em(y, &q0, em, &pi, cfg.viterbi_em_iters)?;
        let q = &fit.last().q;
        let path = viterbi(y, q, em, &initial_distribution(q))?.states;
        let (l, r) = count_turns(&extract_events(&path, cfg.min_event_duration));
        Some((l as f64, r as f64))
    } else {
        None
    };
    Ok(JourneyCounts { seed, observed, online, viterbi })
}

fn mean(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count();
    if n == 0 {
        0.0
    } else {
        xs.sum::<f64>() / n as f64
    }
}

fn std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs.iter().copied());
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn method_stats(method: &str, estimates: &[Counts], observed: &[Counts]) -> MethodStats {
    let err: Vec<Counts> = estimates.iter().zip(observed).map(|(e, o)| (e.0 - o.0, e.1 - o.1)).collect();
    let abs_l: Vec<f64> = err.iter().map(|e| e.0.abs()).collect();
    let abs_r: Vec<f64> = err.iter().map(|e| e.1.abs()).collect();
    let obs_mean = mean(observed.iter().flat_map(|o| [o.0, o.1]));
    let abs_mean = mean(abs_l.iter().chain(&abs_r).copied());
    MethodStats {
        method: method.to_string(),
        journeys: estimates.len(),
        mean_lt: mean(estimates.iter().map(|e| e.0)),
        mean_rt: mean(estimates.iter().map(|e| e.1)),
        mean_err_lt: mean(err.iter().map(|e| e.0)),
        mean_err_rt: mean(err.iter().map(|e| e.1)),
        mean_abs_err_lt: mean(abs_l.iter().copied()),
        mean_abs_err_rt: mean(abs_r.iter().copied()),
        std_abs_err_lt: std(&abs_l),
        std_abs_err_rt: std(&abs_r),
        relative_abs_err: if obs_mean > 0.0 { abs_mean / obs_mean } else { 0.0 },
    }
}

pub fn summarize(journeys: Vec<JourneyCounts>, cfg: &RunConfig) -> Comparison {
    let observed: Vec<Counts> = journeys.iter().map(|j| j.observed).collect();
    let mut methods = vec![method_stats("observed", &observed, &observed)];
    for (i, p) in cfg.policies.iter().enumerate() {
        let est: Vec<Counts> = journeys.iter().map(|j| j.online[i]).collect();
        methods.push(method_stats(&policy_label(p), &est, &observed));
    }
    let vit: Option<Vec<Counts>> = journeys.iter().map(|j| j.viterbi).collect();
    if let Some(v) = vit {
        methods.push(method_stats("viterbi", &v, &observed));
    }
    Comparison { journeys, methods }
}

/// Replicated simulated journeys with seeds `seed, seed + 1, ...`, run in
/// parallel and merged in seed order.
pub fn compare_simulated(cfg: &RunConfig) -> CliResult<Comparison> {
    if cfg.replications == 0 {
        return Err(CliError::Validation("replications must be positive".into()));
    }
    let em = cfg.emission_model()?;
    let journeys = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            let sim = run_simulation(&RunConfig { seed, ..cfg.clone() })?;
            journey_counts(&sim.y, &sim.path, &em, cfg, Some(seed))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(summarize(journeys, cfg))
}

pub fn compare_recorded(y: &[f64], states: &[usize], cfg: &RunConfig) -> CliResult<Comparison> {
    let em = cfg.emission_model()?;
    let journey = journey_counts(y, states, &em, cfg, None)?;
    Ok(summarize(vec![journey], cfg))
}

pub fn write_comparison(cmp: &Comparison, output: Option<&Path>) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(open_output(output)?);
    for m in &cmp.methods {
        w.serialize(m)?;
    }
    w.flush()?;
    Ok(())
}
