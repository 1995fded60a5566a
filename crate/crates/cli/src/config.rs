//! Versioned JSON run configuration. Every key is optional; unknown keys
//! are rejected.

use std::path::Path;

use drive_events::damage::QuadratureConfig;
use drive_events::gal::GalParams;
use drive_events::hmm::{EmissionModel, TransitionMatrix};
use drive_events::online::{ForgettingPolicy, DEFAULT_BURN_IN, DEFAULT_STAY};
use drive_events::sim::{RegimeSchedule, Segment, SAMPLE_PERIOD};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Framing {
    Time,
    Distance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub version: u32,
    /// Per-state GAL parameters in RT, SF, LT order.
    pub emission: Option<Vec<GalParams>>,
    pub policy: ForgettingPolicy,
    /// Policies compared by `compare-baselines`.
    pub policies: Vec<ForgettingPolicy>,
    pub burn_in: u64,
    pub q0: Option<TransitionMatrix>,
    pub frames: usize,
    pub framing: Framing,
    pub betas: Vec<f64>,
    /// Samples below this speed (km/h) are skipped.
    pub speed_threshold: f64,
    pub seed: u64,
    pub stride: u64,
    /// Simulation schedule; the four-segment reference journey when absent.
    pub schedule: Option<Vec<Segment>>,
    pub sample_period: f64,
    pub min_event_duration: usize,
    pub quadrature: QuadratureConfig,
    pub replications: usize,
    /// Batch EM iterations fitting the matrix used for Viterbi decoding;
    /// zero skips the Viterbi baseline.
    pub viterbi_em_iters: usize,
    /// Largest tolerated fraction of malformed input rows.
    pub malformed_limit: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            emission: None,
            policy: ForgettingPolicy::Fixed { gamma: 0.002 },
            policies: vec![
                ForgettingPolicy::Decaying { alpha: 0.9 },
                ForgettingPolicy::Fixed { gamma: 0.01 },
                ForgettingPolicy::Fixed { gamma: 0.002 },
                ForgettingPolicy::Fixed { gamma: 0.001 },
            ],
            burn_in: DEFAULT_BURN_IN,
            q0: None,
            frames: 1000,
            framing: Framing::Time,
            betas: vec![3.0, 5.0],
            speed_threshold: 10.0,
            seed: 0,
            stride: 100,
            schedule: None,
            sample_period: SAMPLE_PERIOD,
            min_event_duration: 1,
            quadrature: QuadratureConfig::default(),
            replications: 20,
            viterbi_em_iters: 5,
            malformed_limit: 0.01,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let cfg: Self = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p.display(), e))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Validation(format!("config {}: {e}", p.display())))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Validation(msg));
        if self.version != CONFIG_VERSION {
            return bad(format!("config version {} is not supported (expected {CONFIG_VERSION})", self.version));
        }
        self.policy.validate()?;
        for p in &self.policies {
            p.validate()?;
        }
        let m = self.emission_model()?.m();
        let q0 = self.q0();
        if q0.m() != m {
            return bad(format!("q0 has {} states, emission model {m}", q0.m()));
        }
        if self.frames == 0 {
            return bad("frames must be positive".into());
        }
        if self.stride == 0 {
            return bad("stride must be positive".into());
        }
        if let Some(b) = self.betas.iter().find(|b| !(**b > 1.0 && b.is_finite())) {
            return bad(format!("damage exponent {b} must exceed 1"));
        }
        if !(self.sample_period > 0.0) || !self.speed_threshold.is_finite() {
            return bad("sample period must be positive and speed threshold finite".into());
        }
        if !(0.0..1.0).contains(&self.malformed_limit) {
            return bad(format!("malformed_limit {} must lie in [0, 1)", self.malformed_limit));
        }
        if let Some(s) = &self.schedule {
            RegimeSchedule::new(s.clone())?;
        }
        Ok(())
    }

    pub fn emission_model(&self) -> CliResult<EmissionModel> {
        match &self.emission {
            None => Ok(EmissionModel::reference()),
            Some(states) => Ok(EmissionModel::new(states.clone())?),
        }
    }

    pub fn q0(&self) -> TransitionMatrix {
        let m = self.emission.as_ref().map_or(3, Vec::len);
        self.q0.clone().unwrap_or_else(|| TransitionMatrix::persistent(m.max(1), DEFAULT_STAY))
    }

    pub fn schedule(&self) -> CliResult<RegimeSchedule> {
        match &self.schedule {
            None => Ok(RegimeSchedule::reference()),
            Some(s) => Ok(RegimeSchedule::new(s.clone())?),
        }
    }
}

/// Builds a policy from command-line flags; `None` when no flag is set.
pub fn policy_from_flags(
    name: Option<&str>,
    gamma: Option<f64>,
    alpha: Option<f64>,
    rk: Option<&str>,
) -> CliResult<Option<ForgettingPolicy>> {
    let rk = rk.map(parse_rk).transpose()?;
    let name = match (name, gamma, alpha, rk) {
        (Some(n), ..) => n.to_string(),
        (None, _, _, Some(_)) => "rk".into(),
        (None, Some(_), _, _) => "fixed".into(),
        (None, None, Some(_), _) => "decaying".into(),
        (None, None, None, None) => return Ok(None),
    };
    let need_gamma = || gamma.ok_or_else(|| CliError::Validation(format!("policy {name} needs --gamma")));
    let policy = match name.as_str() {
        "decaying" => ForgettingPolicy::Decaying { alpha: alpha.unwrap_or(0.9) },
        "fixed" => ForgettingPolicy::Fixed { gamma: need_gamma()? },
        "per-state" => ForgettingPolicy::PerState { base: need_gamma()? },
        "rk" => {
            let (r, k) = rk.ok_or_else(|| CliError::Validation("policy rk needs --rk R,K".into()))?;
            ForgettingPolicy::FixedFromRk { r, k }
        }
        other => {
            return Err(CliError::Validation(format!(
                "unknown policy {other} (expected decaying, fixed, rk or per-state)"
            )))
        }
    };
    policy.validate()?;
    Ok(Some(policy))
}

fn parse_rk(s: &str) -> CliResult<(f64, u64)> {
    let bad = || CliError::Validation(format!("--rk expects R,K (got {s})"));
    let (r, k) = s.split_once(',').ok_or_else(bad)?;
    Ok((r.trim().parse().map_err(|_| bad())?, k.trim().parse().map_err(|_| bad())?))
}

pub fn parse_beta_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|b| b.trim().parse::<f64>().map_err(|_| CliError::Validation(format!("bad damage exponent {b}"))))
        .collect()
}
