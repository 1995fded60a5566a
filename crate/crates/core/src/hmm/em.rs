use crate::error::{Error, Result};

use super::{bayes_update, kernel_into, predict_into};
use super::types::{
    EmissionModel, FilterDistribution, InitialDistribution, SufficientStats, TransitionMatrix,
};

/// Log-likelihood of an observation sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLik {
    pub value: f64,
    /// Observations no state could explain; each contributed a floor value.
    pub degenerate_steps: usize,
}

fn check_inputs(y: &[f64], q: &TransitionMatrix, em: &EmissionModel, pi: &InitialDistribution) -> Result<()> {
    if y.is_empty() {
        return Err(Error::Input("empty observation sequence".into()));
    }
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::Input(format!("non-finite observation {bad}")));
    }
    for m in [em.m(), pi.m()] {
        if m != q.m() {
            return Err(Error::Dimension { expected: q.m(), got: m });
        }
    }
    Ok(())
}

/// `ln p(y_0..y_T)` by the scaled forward recursion.
pub fn loglik(y: &[f64], q: &TransitionMatrix, em: &EmissionModel, pi: &InitialDistribution) -> Result<LogLik> {
    check_inputs(y, q, em, pi)?;
    let m = q.m();
    let mut ld = vec![0.0; m];
    let mut phi = vec![0.0; m];
    let mut pred = vec![0.0; m];

    em.log_densities_into(y[0], &mut ld);
    let (mut total, d0) = bayes_update(pi.probs(), &ld, &mut phi);
    let mut degenerate_steps = d0 as usize;
    for &yt in &y[1..] {
        predict_into(&phi, q, &mut pred);
        em.log_densities_into(yt, &mut ld);
        let (c, d) = bayes_update(&pred, &ld, &mut phi);
        total += c;
        degenerate_steps += d as usize;
    }
    Ok(LogLik { value: total, degenerate_steps })
}

/// Result of one full pass of the recursive E-step.
#[derive(Debug, Clone, PartialEq)]
pub struct EStep {
    pub stats: SufficientStats,
    /// Filter at the last observation.
    pub phi: FilterDistribution,
    /// Normalized expected transition counts `S(i, j)`, row-major; entries
    /// sum to one once at least one transition has been observed.
    pub s: Vec<f64>,
    pub loglik: LogLik,
}

/// Forward-only E-step: filter and sufficient-statistic recursions with
/// step size `1/t`, giving the exact smoothed transition frequencies.
pub fn e_step(y: &[f64], q: &TransitionMatrix, em: &EmissionModel, pi: &InitialDistribution) -> Result<EStep> {
    check_inputs(y, q, em, pi)?;
    let m = q.m();
    let mut ld = vec![0.0; m];
    let mut phi = vec![0.0; m];
    let mut pred = vec![0.0; m];
    let mut kernel = vec![0.0; m * m];
    let mut gammas = vec![0.0; m];
    let mut scratch = vec![0.0; m];
    let mut stats = SufficientStats::zeros(m);

    em.log_densities_into(y[0], &mut ld);
    let (mut total, d0) = bayes_update(pi.probs(), &ld, &mut phi);
    let mut degenerate_steps = d0 as usize;
    for (t, &yt) in y.iter().enumerate().skip(1) {
        kernel_into(&phi, q, &mut kernel);
        predict_into(&phi, q, &mut pred);
        em.log_densities_into(yt, &mut ld);
        let (c, d) = bayes_update(&pred, &ld, &mut phi);
        total += c;
        degenerate_steps += d as usize;
        gammas.iter_mut().for_each(|g| *g = 1.0 / t as f64);
        stats.update(&kernel, &gammas, &mut scratch);
    }
    let s = stats.s_matrix(&phi);
    Ok(EStep {
        stats,
        phi: FilterDistribution { phi, t: (y.len() - 1) as u64 },
        s,
        loglik: LogLik { value: total, degenerate_steps },
    })
}

/// `q(i, j) = S(i, j) / sum_j S(i, j)`; rows of `S` without mass keep the
/// corresponding row of `prev`. Returns the new matrix and which rows were
/// kept.
pub(crate) fn m_step(s: &[f64], prev: &TransitionMatrix) -> (TransitionMatrix, Vec<bool>) {
    let m = prev.m();
    let mut q = prev.as_slice().to_vec();
    let kept = (0..m).map(|i| !normalize_row(&s[i * m..(i + 1) * m], &mut q[i * m..(i + 1) * m])).collect();
    (TransitionMatrix::from_flat_unchecked(m, q), kept)
}

/// In-place form of [`m_step`]; returns whether any row was kept.
pub(crate) fn m_step_into(s: &[f64], q: &mut TransitionMatrix) -> bool {
    let m = q.m();
    let mut any_kept = false;
    for (i, row) in q.as_mut_slice().chunks_mut(m).enumerate() {
        any_kept |= !normalize_row(&s[i * m..(i + 1) * m], row);
    }
    any_kept
}

fn normalize_row(s_row: &[f64], q_row: &mut [f64]) -> bool {
    let total: f64 = s_row.iter().sum();
    if total > 0.0 && total.is_finite() {
        for (q, s) in q_row.iter_mut().zip(s_row) {
            *q = s / total;
        }
        true
    } else {
        false
    }
}

/// One point of the EM trajectory: a transition matrix and the
/// log-likelihood of the data under it.
#[derive(Debug, Clone, PartialEq)]
pub struct EmIterate {
    pub q: TransitionMatrix,
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmResult {
    /// `n_iters + 1` entries, starting with `q_init`.
    pub iterates: Vec<EmIterate>,
    /// States whose row of `S` was empty in some iteration.
    pub unvisited: Vec<bool>,
}

impl EmResult {
    pub fn last(&self) -> &EmIterate {
        self.iterates.last().expect("at least the initial iterate")
    }
}

/// Batch EM for the transition matrix with emission parameters held fixed.
pub fn batch_em(
    y: &[f64],
    q_init: &TransitionMatrix,
    em: &EmissionModel,
    pi: &InitialDistribution,
    n_iters: usize,
) -> Result<EmResult> {
    if n_iters == 0 {
        return Err(Error::Domain("batch EM needs at least one iteration".into()));
    }
    let mut q = q_init.clone();
    let mut unvisited = vec![false; q.m()];
    let mut iterates = Vec::with_capacity(n_iters + 1);
    for n in 0..=n_iters {
        let e = e_step(y, &q, em, pi)?;
        iterates.push(EmIterate { q: q.clone(), loglik: e.loglik.value });
        if n == n_iters {
            break;
        }
        let (next, kept) = m_step(&e.s, &q);
        for (u, k) in unvisited.iter_mut().zip(kept) {
            *u |= k;
        }
        q = next;
    }
    Ok(EmResult { iterates, unvisited })
}
