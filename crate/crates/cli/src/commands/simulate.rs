use std::io::Write;
use std::path::{Path, PathBuf};

use drive_events::hmm::{InitialDistribution, SF};
use drive_events::sim::{simulate, SimResult};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::io::{open_output, write_json, Columns, SignalRecord, SignalWriter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub version: u32,
    pub seed: u64,
    pub samples: usize,
    /// Segment starts followed by the total length.
    pub boundaries: Vec<usize>,
    pub observed_left: usize,
    pub observed_right: usize,
}

/// `journey.csv` -> `journey.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Simulates the configured schedule. Turn journeys start straight ahead,
/// other models uniformly.
pub fn run_simulation(cfg: &RunConfig) -> CliResult<SimResult> {
    let em = cfg.emission_model()?;
    let schedule = cfg.schedule()?;
    let pi0 = if em.m() == 3 { InitialDistribution::point(3, SF) } else { InitialDistribution::uniform(em.m()) };
    Ok(simulate(&schedule, &em, &pi0, cfg.seed)?)
}

pub fn sim_records(sim: &SimResult) -> impl Iterator<Item = SignalRecord> + '_ {
    sim.y.iter().zip(&sim.path).enumerate().map(|(i, (&y, &k))| SignalRecord {
        t: i as f64,
        y,
        state: Some(k),
        speed: None,
    })
}

/// Writes the CSV (`t` is the sample index) and, for a file output, the
/// sidecar next to it.
pub fn cmd_simulate(cfg: &RunConfig, output: Option<&Path>) -> CliResult<Sidecar> {
    let sim = run_simulation(cfg)?;
    let mut w = SignalWriter::new(open_output(output)?, Columns { state: true, speed: false })?;
    for rec in sim_records(&sim) {
        w.write(&rec)?;
    }
    w.finish()?.flush()?;
    let sidecar = Sidecar {
        version: 1,
        seed: sim.seed,
        samples: sim.y.len(),
        boundaries: sim.boundaries.clone(),
        observed_left: sim.observed_left,
        observed_right: sim.observed_right,
    };
    match output {
        Some(p) if p.as_os_str() != "-" => write_json(&sidecar_path(p), &sidecar)?,
        _ => eprintln!("note: no sidecar written for standard output"),
    }
    Ok(sidecar)
}
