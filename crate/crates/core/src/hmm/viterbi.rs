use crate::error::{Error, Result};

use super::types::{EmissionModel, InitialDistribution, TransitionMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiPath {
    pub states: Vec<usize>,
    /// Joint log-probability of the path and the observations.
    pub log_prob: f64,
}

/// Maximum a-posteriori state path. Ties go to the lower state index.
pub fn viterbi(y: &[f64], q: &TransitionMatrix, em: &EmissionModel, pi: &InitialDistribution) -> Result<ViterbiPath> {
    if y.is_empty() {
        return Err(Error::Input("empty observation sequence".into()));
    }
    let m = q.m();
    if em.m() != m || pi.m() != m {
        return Err(Error::Dimension { expected: m, got: if em.m() != m { em.m() } else { pi.m() } });
    }
    let ln_q: Vec<f64> = q.as_slice().iter().map(|p| p.ln()).collect();
    let mut ld = vec![0.0; m];
    let mut score: Vec<f64> = pi.probs().iter().map(|p| p.ln()).collect();
    em.log_densities_into(y[0], &mut ld);
    for (s, l) in score.iter_mut().zip(&ld) {
        *s += l;
    }
    let mut back = vec![0u32; (y.len() - 1) * m];
    let mut next = vec![0.0; m];
    for (t, &yt) in y.iter().enumerate().skip(1) {
        em.log_densities_into(yt, &mut ld);
        let bp = &mut back[(t - 1) * m..t * m];
        for k in 0..m {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for j in 0..m {
                let v = score[j] + ln_q[j * m + k];
                if v > best {
                    best = v;
                    arg = j;
                }
            }
            next[k] = best + ld[k];
            bp[k] = arg as u32;
        }
        std::mem::swap(&mut score, &mut next);
    }
    let mut last = 0;
    for k in 1..m {
        if score[k] > score[last] {
            last = k;
        }
    }
    let log_prob = score[last];
    let mut states = vec![0; y.len()];
    states[y.len() - 1] = last;
    for t in (1..y.len()).rev() {
        states[t - 1] = back[(t - 1) * m + states[t]] as usize;
    }
    Ok(ViterbiPath { states, log_prob })
}

/// `ln p(z, y)` for a given state path.
pub fn path_log_prob(
    path: &[usize],
    y: &[f64],
    q: &TransitionMatrix,
    em: &EmissionModel,
    pi: &InitialDistribution,
) -> f64 {
    assert_eq!(path.len(), y.len());
    let mut lp = pi.probs()[path[0]].ln() + em.state(path[0]).ln_pdf_resolved(y[0]);
    for t in 1..y.len() {
        lp += q.get(path[t - 1], path[t]).ln() + em.state(path[t]).ln_pdf_resolved(y[t]);
    }
    lp
}
