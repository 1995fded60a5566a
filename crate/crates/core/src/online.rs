//! Online EM for the transition matrix with pluggable forgetting factors,
//! and online expected-event counting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::{
    bayes_update, filter_init, kernel_into, m_step_into, predict_into, EmissionModel, FilterDistribution,
    InitialDistribution, SufficientStats, TransitionMatrix, LT, RT,
};
use crate::markov::stationary_distribution;

/// Steps with the transition matrix frozen before the first M-step.
pub const DEFAULT_BURN_IN: u64 = 50;
/// Diagonal of the default starting transition matrix.
pub const DEFAULT_STAY: f64 = 0.9;
/// Floor for per-state forgetting factors.
pub const GAMMA_MIN: f64 = 1e-6;
pub const SNAPSHOT_VERSION: u32 = 1;

/// Step size of the newest observation in the statistics recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForgettingPolicy {
    /// `gamma_t = t^-alpha`, `0.5 < alpha <= 1`.
    Decaying { alpha: f64 },
    Fixed { gamma: f64 },
    /// Fixed factor giving the latest `k + 1` observations total weight `r`.
    FixedFromRk { r: f64, k: u64 },
    /// `gamma_j = base * pi_bar_j`, per destination state.
    PerState { base: f64 },
}

impl ForgettingPolicy {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Decaying { alpha } => alpha > 0.5 && alpha <= 1.0,
            Self::Fixed { gamma } => gamma > 0.0 && gamma < 1.0,
            Self::FixedFromRk { r, .. } => r > 0.0 && r < 1.0,
            Self::PerState { base } => base > 0.0 && base < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid forgetting policy {self:?}")))
        }
    }

    /// Scalar factor for step `t >= 1`; for `PerState` this is the base.
    pub fn base_gamma(&self, t: u64) -> f64 {
        match *self {
            Self::Decaying { alpha } => (t.max(1) as f64).powf(-alpha),
            Self::Fixed { gamma } => gamma,
            Self::FixedFromRk { r, k } => rk_gamma(r, k),
            Self::PerState { base } => base,
        }
    }
}

fn rk_gamma(r: f64, k: u64) -> f64 {
    1.0 - (1.0 - r).powf(1.0 / (k as f64 + 1.0))
}

/// The `gamma` for which the latest `k + 1` observations carry total weight
/// `r`: `1 - (1 - gamma)^(k + 1) = r`.
pub fn gamma_from_rk(r: f64, k: u64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!("weight fraction {r} must lie in (0, 1)")));
    }
    Ok(rk_gamma(r, k))
}

/// Per-destination-state forgetting factors for the next step.
pub fn resolve_gamma(policy: &ForgettingPolicy, state: &OnlineEstimator) -> Vec<f64> {
    let mut out = vec![0.0; state.m()];
    resolve_gamma_into(policy, state.t + 1, &state.pi_bar, &mut out);
    out
}

fn resolve_gamma_into(policy: &ForgettingPolicy, t: u64, pi_bar: &[f64], out: &mut [f64]) {
    match *policy {
        ForgettingPolicy::PerState { base } => {
            for (g, p) in out.iter_mut().zip(pi_bar) {
                *g = (base * p).clamp(GAMMA_MIN, 1.0);
            }
        }
        _ => {
            let g = policy.base_gamma(t);
            out.iter_mut().for_each(|o| *o = g);
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Scratch {
    log_dens: Vec<f64>,
    pred: Vec<f64>,
    kernel: Vec<f64>,
    gammas: Vec<f64>,
    rho_row: Vec<f64>,
    s: Vec<f64>,
}

impl Scratch {
    fn new(m: usize) -> Self {
        Self {
            log_dens: vec![0.0; m],
            pred: vec![0.0; m],
            kernel: vec![0.0; m * m],
            gammas: vec![0.0; m],
            rho_row: vec![0.0; m],
            s: vec![0.0; m * m],
        }
    }
}

/// Running state of the online estimator. Steps must be applied in
/// observation order; all buffers are allocated once.
#[derive(Debug, Clone)]
pub struct OnlineEstimator {
    phi: Vec<f64>,
    t: u64,
    stats: SufficientStats,
    q: TransitionMatrix,
    burn_in: u64,
    eta: Vec<f64>,
    pi_bar: Vec<f64>,
    policy: ForgettingPolicy,
    flags: EstimatorFlags,
    scratch: Scratch,
}

/// Counters of the numerical safeguards that fired.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorFlags {
    /// Observations with zero likelihood under every state.
    pub degenerate_steps: u64,
    /// M-steps where at least one row of the statistics had no mass.
    pub frozen_row_steps: u64,
    /// Steps whose transition matrix had no unique stationary law.
    pub nonunique_stationary_steps: u64,
}

/// `phi_0` from the usual filter start, zero statistics, `Q0` as given.
pub fn online_init(
    pi: &InitialDistribution,
    em: &EmissionModel,
    y0: f64,
    q0: TransitionMatrix,
    policy: ForgettingPolicy,
    burn_in: u64,
) -> Result<OnlineEstimator> {
    policy.validate()?;
    let m = q0.m();
    if em.m() != m {
        return Err(Error::Dimension { expected: m, got: em.m() });
    }
    let start = filter_init(pi, em, y0)?;
    let pi_bar = stationary_distribution(&q0).pi;
    Ok(OnlineEstimator {
        phi: start.dist.phi,
        t: 0,
        stats: SufficientStats::zeros(m),
        q: q0,
        burn_in,
        eta: vec![0.0; m],
        pi_bar,
        policy,
        flags: EstimatorFlags { degenerate_steps: start.degenerate as u64, ..Default::default() },
        scratch: Scratch::new(m),
    })
}

/// Value-in, value-out form of [`OnlineEstimator::step`].
pub fn online_step(mut state: OnlineEstimator, em: &EmissionModel, y: f64) -> Result<OnlineEstimator> {
    state.step(em, y)?;
    Ok(state)
}

impl OnlineEstimator {
    pub fn m(&self) -> usize {
        self.q.m()
    }

    /// Number of observations processed after `y0`.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn q(&self) -> &TransitionMatrix {
        &self.q
    }

    pub fn filter(&self) -> FilterDistribution {
        FilterDistribution { phi: self.phi.clone(), t: self.t }
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn stats(&self) -> &SufficientStats {
        &self.stats
    }

    pub fn policy(&self) -> &ForgettingPolicy {
        &self.policy
    }

    pub fn burn_in(&self) -> u64 {
        self.burn_in
    }

    pub fn pi_bar(&self) -> &[f64] {
        &self.pi_bar
    }

    pub fn flags(&self) -> &EstimatorFlags {
        &self.flags
    }

    /// Expected number of entries into each state so far.
    pub fn accumulate_events(&self) -> &[f64] {
        &self.eta
    }

    /// Current `S(i, j)`, row-major.
    pub fn s_matrix(&self) -> Vec<f64> {
        self.stats.s_matrix(&self.phi)
    }

    pub fn step(&mut self, em: &EmissionModel, y: f64) -> Result<()> {
        if !y.is_finite() {
            return Err(Error::Input(format!("non-finite observation {y}")));
        }
        let mut ld = std::mem::take(&mut self.scratch.log_dens);
        em.log_densities_into(y, &mut ld);
        self.step_log_densities(&ld);
        self.scratch.log_dens = ld;
        Ok(())
    }

    /// One step given `ln g(k, y)` for every state, so several estimators
    /// can share the density evaluations of one stream.
    pub fn step_log_densities(&mut self, log_dens: &[f64]) {
        assert_eq!(log_dens.len(), self.m());
        let sc = &mut self.scratch;
        resolve_gamma_into(&self.policy, self.t + 1, &self.pi_bar, &mut sc.gammas);
        kernel_into(&self.phi, &self.q, &mut sc.kernel);
        predict_into(&self.phi, &self.q, &mut sc.pred);
        let (_, degenerate) = bayes_update(&sc.pred, log_dens, &mut self.phi);
        self.flags.degenerate_steps += degenerate as u64;
        self.stats.update(&sc.kernel, &sc.gammas, &mut sc.rho_row);
        self.t += 1;

        if self.t >= self.burn_in {
            self.stats.s_matrix_into(&self.phi, &mut sc.s);
            if m_step_into(&sc.s, &mut self.q) {
                self.flags.frozen_row_steps += 1;
            }
        }

        let st = stationary_distribution(&self.q);
        self.flags.nonunique_stationary_steps += (!st.unique) as u64;
        let m = self.m();
        for i in 0..m {
            let entering: f64 = (0..m).filter(|&j| j != i).map(|j| st.pi[j] * self.q.get(j, i)).sum();
            self.eta[i] += entering;
        }
        let w = self.policy.base_gamma(self.t);
        for (pb, p) in self.pi_bar.iter_mut().zip(&st.pi) {
            *pb += w * (p - *pb);
        }
    }

    /// `(eta_LT, eta_RT)` in the canonical three-state labeling.
    pub fn turn_counts(&self) -> Result<(f64, f64)> {
        turn_counts(self)
    }

    pub fn to_snapshot(&self) -> Snapshot {
        Snapshot {
            version: SNAPSHOT_VERSION,
            t: self.t,
            phi: self.phi.clone(),
            rho: self.stats.rho.clone(),
            q: self.q.clone(),
            burn_in: self.burn_in,
            eta: self.eta.clone(),
            pi_bar: self.pi_bar.clone(),
            policy: self.policy,
            flags: self.flags.clone(),
        }
    }

    pub fn from_snapshot(s: Snapshot) -> Result<Self> {
        if s.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!("unsupported snapshot version {}", s.version)));
        }
        s.policy.validate()?;
        let m = s.q.m();
        let lens = [(s.phi.len(), m), (s.rho.len(), m * m * m), (s.eta.len(), m), (s.pi_bar.len(), m)];
        if let Some(&(got, expected)) = lens.iter().find(|(g, e)| g != e) {
            return Err(Error::Dimension { expected, got });
        }
        FilterDistribution { phi: s.phi.clone(), t: s.t }.validate()?;
        Ok(Self {
            phi: s.phi,
            t: s.t,
            stats: SufficientStats { m, rho: s.rho },
            q: s.q,
            burn_in: s.burn_in,
            eta: s.eta,
            pi_bar: s.pi_bar,
            policy: s.policy,
            flags: s.flags,
            scratch: Scratch::new(m),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(&self.to_snapshot()).map_err(|e| Error::Snapshot(e.to_string()))
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let s: Snapshot = serde_json::from_str(json).map_err(|e| Error::Snapshot(e.to_string()))?;
        Self::from_snapshot(s)
    }
}

/// Serializable estimator state; restoring it resumes a stream bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub version: u32,
    pub t: u64,
    pub phi: Vec<f64>,
    pub rho: Vec<f64>,
    pub q: TransitionMatrix,
    pub burn_in: u64,
    pub eta: Vec<f64>,
    pub pi_bar: Vec<f64>,
    pub policy: ForgettingPolicy,
    pub flags: EstimatorFlags,
}

/// `(eta_LT, eta_RT)`; requires three states.
pub fn turn_counts(state: &OnlineEstimator) -> Result<(f64, f64)> {
    if state.m() != 3 {
        return Err(Error::Labeling(state.m()));
    }
    Ok((state.eta[LT], state.eta[RT]))
}
