use std::io::Write;
use std::path::Path;

use drive_events::gal::{gal_fit_mle, GalParams};
use serde::Serialize;

use crate::config::CONFIG_VERSION;
use crate::error::{CliError, CliResult};
use crate::io::{open_output, Signal};

/// Below this many labelled samples a state's fit is flagged.
pub const MIN_STATE_SAMPLES: usize = 100;

/// Written as a configuration fragment so it can be passed to `--config`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmissionFile {
    pub version: u32,
    pub emission: Vec<GalParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateFit {
    pub samples: usize,
    pub params: GalParams,
    pub log_likelihood: f64,
    pub converged: bool,
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Fits each of the `m` states from its labelled samples, starting from
/// location = median, shift = mean - median, shape 1, scale = std.
pub fn fit_states(sig: &Signal, m: usize) -> CliResult<Vec<StateFit>> {
    let states = sig
        .states()
        .ok_or_else(|| CliError::Validation("fit-emission needs a state column on every row".into()))?;
    let mut groups = vec![Vec::new(); m];
    for (&k, r) in states.iter().zip(&sig.records) {
        groups
            .get_mut(k)
            .ok_or_else(|| CliError::Validation(format!("state label {k} outside 0..{m}")))?
            .push(r.y);
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(k, mut ys)| {
            let n = ys.len();
            if n < 2 {
                return Err(CliError::Validation(format!("state {k} has {n} samples; cannot fit")));
            }
            if n < MIN_STATE_SAMPLES {
                eprintln!("warning: state {k} has only {n} samples (< {MIN_STATE_SAMPLES}); fit is unreliable");
            }
            let mean = ys.iter().sum::<f64>() / n as f64;
            let sd = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
            let fit_input = ys.clone();
            let med = median(&mut ys);
            let init = GalParams::new(med, mean - med, 1.0, sd)
                .map_err(|e| CliError::Validation(format!("state {k}: {e}")))?;
            let fit = gal_fit_mle(&fit_input, &init)?;
            if !fit.converged {
                eprintln!("warning: state {k} fit stopped at the evaluation budget");
            }
            Ok(StateFit { samples: n, params: fit.params, log_likelihood: fit.log_likelihood, converged: fit.converged })
        })
        .collect()
}

pub fn cmd_fit_emission(sig: &Signal, m: usize, output: Option<&Path>) -> CliResult<Vec<StateFit>> {
    let fits = fit_states(sig, m)?;
    let file = EmissionFile { version: CONFIG_VERSION, emission: fits.iter().map(|f| f.params).collect() };
    let mut out = open_output(output)?;
    serde_json::to_writer_pretty(&mut out, &file)?;
    writeln!(out)?;
    out.flush()?;
    Ok(fits)
}
