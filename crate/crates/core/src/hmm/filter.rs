use crate::error::{Error, Result};

use super::types::{EmissionModel, FilterDistribution, InitialDistribution, TransitionMatrix};

/// Log-normalizer substituted for an observation no state can explain.
pub(crate) const LOG_FLOOR: f64 = -745.0;

/// A normalized filter together with the log of its normalizing constant,
/// `ln p(y_t | y_0..y_{t-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterUpdate {
    pub dist: FilterDistribution,
    pub log_norm: f64,
    /// Every state assigned zero likelihood; `dist` fell back to uniform and
    /// `log_norm` to a floor value.
    pub degenerate: bool,
}

/// `out(k) ∝ prior(k) exp(log_dens(k))`, evaluated after subtracting the
/// largest log-density. Returns `(log normalizer, degenerate)`.
pub(crate) fn bayes_update(prior: &[f64], log_dens: &[f64], out: &mut [f64]) -> (f64, bool) {
    let mx = prior
        .iter()
        .zip(log_dens)
        .filter(|(p, _)| **p > 0.0)
        .map(|(_, l)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    let uniform = |out: &mut [f64]| {
        let u = 1.0 / out.len() as f64;
        out.iter_mut().for_each(|o| *o = u);
    };
    if mx == f64::NEG_INFINITY || mx.is_nan() {
        uniform(out);
        return (LOG_FLOOR, true);
    }
    let mut total = 0.0;
    for ((o, p), l) in out.iter_mut().zip(prior).zip(log_dens) {
        *o = if mx == f64::INFINITY {
            if *l == f64::INFINITY { *p } else { 0.0 }
        } else {
            p * (l - mx).exp()
        };
        total += *o;
    }
    if !(total > 0.0 && total.is_finite()) {
        uniform(out);
        return (LOG_FLOOR, true);
    }
    out.iter_mut().for_each(|o| *o /= total);
    (mx + total.ln(), false)
}

/// `out(k) = sum_j phi(j) q(j, k)`.
pub(crate) fn predict_into(phi: &[f64], q: &TransitionMatrix, out: &mut [f64]) {
    let m = q.m();
    out.iter_mut().for_each(|o| *o = 0.0);
    for (j, &pj) in phi.iter().enumerate() {
        if pj == 0.0 {
            continue;
        }
        for (o, qjk) in out.iter_mut().zip(q.row(j)) {
            *o += pj * qjk;
        }
    }
    debug_assert_eq!(out.len(), m);
}

/// Column-normalized retrospective kernel `r(k'|k) ∝ phi(k') q(k', k)`,
/// written row-major as `kernel[k' * m + k]`. Returns whether some column
/// had no mass (and was set uniform).
pub(crate) fn kernel_into(phi: &[f64], q: &TransitionMatrix, kernel: &mut [f64]) -> bool {
    let m = q.m();
    let mut unreachable = false;
    for k in 0..m {
        let mut col = 0.0;
        for kp in 0..m {
            let v = phi[kp] * q.get(kp, k);
            kernel[kp * m + k] = v;
            col += v;
        }
        if col > 0.0 {
            for kp in 0..m {
                kernel[kp * m + k] /= col;
            }
        } else {
            unreachable = true;
            for kp in 0..m {
                kernel[kp * m + k] = 1.0 / m as f64;
            }
        }
    }
    unreachable
}

fn check_dims(m: usize, em: &EmissionModel) -> Result<()> {
    if em.m() != m {
        return Err(Error::Dimension { expected: m, got: em.m() });
    }
    Ok(())
}

/// `phi_0(k) ∝ pi_k g(k, y0)`.
pub fn filter_init(pi: &InitialDistribution, em: &EmissionModel, y0: f64) -> Result<FilterUpdate> {
    check_dims(pi.m(), em)?;
    if y0.is_nan() {
        return Err(Error::Input("NaN observation".into()));
    }
    let ld = em.log_densities(y0);
    let mut phi = vec![0.0; pi.m()];
    let (log_norm, degenerate) = bayes_update(pi.probs(), &ld, &mut phi);
    Ok(FilterUpdate { dist: FilterDistribution { phi, t: 0 }, log_norm, degenerate })
}

/// One-step Bayes filter using the density of the incoming observation.
pub fn filter_step(
    phi: &FilterDistribution,
    q: &TransitionMatrix,
    em: &EmissionModel,
    y_next: f64,
) -> Result<FilterUpdate> {
    check_dims(q.m(), em)?;
    if phi.m() != q.m() {
        return Err(Error::Dimension { expected: q.m(), got: phi.m() });
    }
    if y_next.is_nan() {
        return Err(Error::Input("NaN observation".into()));
    }
    let mut pred = vec![0.0; q.m()];
    predict_into(&phi.phi, q, &mut pred);
    let ld = em.log_densities(y_next);
    let mut out = vec![0.0; q.m()];
    let (log_norm, degenerate) = bayes_update(&pred, &ld, &mut out);
    Ok(FilterUpdate { dist: FilterDistribution { phi: out, t: phi.t + 1 }, log_norm, degenerate })
}

/// Backward-retrospective kernel of a filter step.
#[derive(Debug, Clone, PartialEq)]
pub struct RetroKernel {
    pub m: usize,
    /// `r(k'|k)` at `[k' * m + k]`; each column sums to one.
    pub r: Vec<f64>,
    /// Some destination state had zero predicted mass.
    pub unreachable: bool,
}

impl RetroKernel {
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.r[from * self.m + to]
    }
}

pub fn retrospective_kernel(phi: &FilterDistribution, q: &TransitionMatrix) -> Result<RetroKernel> {
    if phi.m() != q.m() {
        return Err(Error::Dimension { expected: q.m(), got: phi.m() });
    }
    let m = q.m();
    let mut r = vec![0.0; m * m];
    let unreachable = kernel_into(&phi.phi, q, &mut r);
    Ok(RetroKernel { m, r, unreachable })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gal::GalParams;

    fn em_equal(m: usize) -> EmissionModel {
        EmissionModel::new(vec![GalParams { delta: 0.0, mu: 0.0, nu: 1.0, sigma: 1.0 }; m]).unwrap()
    }

    fn dist(phi: Vec<f64>) -> FilterDistribution {
        FilterDistribution { phi, t: 0 }
    }

    #[test]
    fn init_uniform_prior_equal_densities() {
        let u = filter_init(&InitialDistribution::uniform(3), &em_equal(3), 0.4).unwrap();
        for p in &u.dist.phi {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn init_point_mass_is_preserved() {
        let u = filter_init(&InitialDistribution::point(3, 0), &EmissionModel::reference(), 0.9).unwrap();
        assert_eq!(u.dist.phi, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn init_normalizes_densities() {
        let mut phi = vec![0.0; 3];
        let ld = [0.2f64.ln(), 0.5f64.ln(), 0.3f64.ln()];
        let (ln_norm, degenerate) = bayes_update(&[1.0 / 3.0; 3], &ld, &mut phi);
        assert!(!degenerate);
        for (a, b) in phi.iter().zip([0.2, 0.5, 0.3]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((ln_norm - (1.0f64 / 3.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_observation_falls_back_to_uniform() {
        let mut phi = vec![0.0; 2];
        let (ln_norm, degenerate) = bayes_update(&[0.5, 0.5], &[f64::NEG_INFINITY; 2], &mut phi);
        assert!(degenerate);
        assert_eq!(phi, vec![0.5, 0.5]);
        assert_eq!(ln_norm, LOG_FLOOR);
    }

    #[test]
    fn two_state_hand_computation() {
        let q = TransitionMatrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let mut pred = vec![0.0; 2];
        predict_into(&[0.5, 0.5], &q, &mut pred);
        assert!((pred[0] - 0.55).abs() < 1e-15 && (pred[1] - 0.45).abs() < 1e-15);
        let mut out = vec![0.0; 2];
        bayes_update(&pred, &[0.0, 0.5f64.ln()], &mut out);
        assert!((out[0] - 0.55 / 0.775).abs() < 1e-12);
        assert!((out[0] - 0.70968).abs() < 1e-5);
        assert!((out[1] - 0.29032).abs() < 1e-5);
    }

    #[test]
    fn uniform_rows_with_equal_emissions_keep_phi() {
        let q = TransitionMatrix::uniform(3);
        let phi = dist(vec![0.2, 0.3, 0.5]);
        let next = filter_step(&phi, &q, &em_equal(3), 1.1).unwrap();
        for p in &next.dist.phi {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        // identity rows with equal emissions keep phi itself
        let same = filter_step(&phi, &TransitionMatrix::identity(3), &em_equal(3), 1.1).unwrap();
        for (a, b) in same.dist.phi.iter().zip(&phi.phi) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(same.dist.t, 1);
    }

    #[test]
    fn identity_is_pure_bayes_reweighting() {
        let em = EmissionModel::reference();
        let phi = dist(vec![0.2, 0.5, 0.3]);
        let y = 0.8;
        let next = filter_step(&phi, &TransitionMatrix::identity(3), &em, y).unwrap();
        let w: Vec<f64> = (0..3).map(|k| phi.phi[k] * em.state(k).pdf(y)).collect();
        let s: f64 = w.iter().sum();
        for k in 0..3 {
            assert!((next.dist.phi[k] - w[k] / s).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_examples() {
        let q = TransitionMatrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let r = retrospective_kernel(&dist(vec![0.7, 0.3]), &q).unwrap();
        assert!((r.get(0, 0) - 0.63 / 0.69).abs() < 1e-15);
        assert!((r.get(1, 0) - 0.06 / 0.69).abs() < 1e-15);
        assert!((r.get(0, 0) - 0.913).abs() < 1e-3);

        let u = retrospective_kernel(&dist(vec![0.25; 4]), &TransitionMatrix::uniform(4)).unwrap();
        assert!(u.r.iter().all(|v| (v - 0.25).abs() < 1e-15));

        let p = retrospective_kernel(&dist(vec![1.0, 0.0, 0.0]), &TransitionMatrix::city()).unwrap();
        for k in 0..3 {
            assert_eq!(p.get(0, k), 1.0);
        }
        assert!(!p.unreachable);
    }

    #[test]
    fn unreachable_column_is_uniform_and_flagged() {
        let q = TransitionMatrix::identity(2);
        let r = retrospective_kernel(&dist(vec![1.0, 0.0]), &q).unwrap();
        assert!(r.unreachable);
        assert_eq!(r.get(0, 1), 0.5);
        assert_eq!(r.get(1, 1), 0.5);
    }
}
