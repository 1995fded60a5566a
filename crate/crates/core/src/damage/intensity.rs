use serde::{Deserialize, Serialize};

use super::rainflow::DamageParams;
use super::tails::TailModel;
use super::turn_chain::{TurnChain, TURN_LEFT, TURN_RIGHT};
use crate::error::{Error, Result};

/// Below this determinant the renewal system is treated as singular.
const DET_TOL: f64 = 1e-14;

/// Probabilities, after a left (index 0) or right (index 1) turn, that a
/// later left turn exceeds `v` before any right turn drops below `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitProbabilities {
    pub p: [f64; 2],
    /// The system was singular and `p` is its zero limit.
    pub singular: bool,
}

pub fn solve_p2(chain: &TurnChain, tails: &TailModel, u: f64, v: f64) -> Result<HitProbabilities> {
    if !(u <= 0.0 && v >= 0.0) {
        return Err(Error::Domain(format!("hit probabilities need u <= 0 <= v (got {u}, {v})")));
    }
    Ok(hit_probabilities(chain, tails.upper(v), 1.0 - tails.lower(u)))
}

/// `exceed = P(M > v)`, `stay_above = P(m >= u)`.
fn hit_probabilities(chain: &TurnChain, exceed: f64, stay_above: f64) -> HitProbabilities {
    let p = &chain.p;
    let short = 1.0 - exceed;
    let (l, r) = (TURN_LEFT, TURN_RIGHT);
    let a11 = 1.0 - short * p[l][l];
    let a12 = -stay_above * p[l][r];
    let a21 = -short * p[r][l];
    let a22 = 1.0 - stay_above * p[r][r];
    let det = a11 * a22 - a12 * a21;
    if det.abs() < DET_TOL {
        return HitProbabilities { p: [0.0, 0.0], singular: true };
    }
    let b1 = p[l][l] * exceed;
    let b2 = p[r][l] * exceed;
    let p1 = (b1 * a22 - a12 * b2) / det;
    let p2 = (a11 * b2 - a21 * b1) / det;
    HitProbabilities { p: [p1.clamp(0.0, 1.0), p2.clamp(0.0, 1.0)], singular: false }
}

/// Intensity of upcrossings of `[u, v]` per reduced-load step.
pub fn osc_intensity(chain: &TurnChain, tails: &TailModel, u: f64, v: f64) -> Result<f64> {
    if !(u < v) {
        return Err(Error::Domain(format!("interval needs u < v (got {u}, {v})")));
    }
    Ok(osc_unchecked(chain, tails, u, v))
}

fn osc_unchecked(chain: &TurnChain, tails: &TailModel, u: f64, v: f64) -> f64 {
    let pi_left = chain.pi[TURN_LEFT];
    let pi_right = chain.pi[TURN_RIGHT];
    if v < 0.0 {
        0.5 * pi_right * tails.lower(u)
    } else if u > 0.0 {
        0.5 * pi_left * tails.upper(v)
    } else {
        let h = hit_probabilities(chain, tails.upper(v), 1.0 - tails.lower(u));
        0.5 * pi_right * tails.lower(u) * h.p[TURN_RIGHT]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Midpoint nodes per axis on the mixed-sign region.
    pub nodes: usize,
    /// Midpoint nodes for the one-dimensional same-sign regions.
    pub line_nodes: usize,
    /// Tails are truncated where they drop below this value.
    pub tail_cutoff: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { nodes: 201, line_nodes: 20_001, tail_cutoff: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DamageIntensity {
    /// Expected damage per turn event.
    pub per_turn: f64,
    /// Contributions of `u < v < 0`, `u <= 0 <= v` and `0 < u < v`.
    pub regions: [f64; 3],
    /// Estimated damage beyond the truncated tails.
    pub remainder: f64,
    /// The remainder exceeds 1% of the integral.
    pub diverged: bool,
}

fn midpoint<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> f64 {
    if b <= a || n == 0 {
        return 0.0;
    }
    let h = (b - a) / n as f64;
    (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
}

/// `2 alpha beta (beta - 1) int int_{u < v} (v - u)^(beta - 2) mu(u, v) du dv`,
/// the expected damage per turn (two reduced-load steps).
pub fn damage_intensity(
    chain: &TurnChain,
    tails: &TailModel,
    params: &DamageParams,
    cfg: &QuadratureConfig,
) -> Result<DamageIntensity> {
    let params = DamageParams::new(params.alpha, params.beta)?;
    if cfg.nodes == 0 || cfg.line_nodes == 0 || !(cfg.tail_cutoff > 0.0 && cfg.tail_cutoff < 1.0) {
        return Err(Error::Domain(format!("invalid quadrature settings {cfg:?}")));
    }
    let beta = params.beta;
    let lo = tails.lower_extent(cfg.tail_cutoff);
    let hi = tails.upper_extent(cfg.tail_cutoff);
    let pi_left = chain.pi[TURN_LEFT];
    let pi_right = chain.pi[TURN_RIGHT];

    // Inner integral over v in (u, 0) done in closed form.
    let r1 = 0.5 * pi_right * beta * midpoint(lo, 0.0, cfg.line_nodes, |u| tails.lower(u) * (-u).powf(beta - 1.0));
    let r3 = 0.5 * pi_left * beta * midpoint(0.0, hi, cfg.line_nodes, |v| tails.upper(v) * v.powf(beta - 1.0));

    let n = cfg.nodes;
    let (hu, hv) = ((0.0 - lo) / n as f64, hi / n as f64);
    let mut r2 = 0.0;
    if hu > 0.0 && hv > 0.0 {
        let vs: Vec<(f64, f64)> = (0..n)
            .map(|j| {
                let v = (j as f64 + 0.5) * hv;
                (v, tails.upper(v))
            })
            .collect();
        for i in 0..n {
            let u = lo + (i as f64 + 0.5) * hu;
            let below = tails.lower(u);
            if below == 0.0 {
                continue;
            }
            let mut row = 0.0;
            for &(v, exceed) in &vs {
                let h = hit_probabilities(chain, exceed, 1.0 - below);
                row += (v - u).powf(beta - 2.0) * h.p[TURN_RIGHT];
            }
            r2 += below * row;
        }
        r2 *= 0.5 * pi_right * beta * (beta - 1.0) * hu * hv;
    }

    let integral = r1 + r2 + r3;
    // E[X^beta; X beyond the cut] is of the order P(X beyond) * cut^beta.
    let remainder =
        0.5 * (pi_left * tails.upper(hi) * hi.powf(beta) + pi_right * tails.lower(lo) * (-lo).powf(beta));
    let scale = 2.0 * params.alpha;
    Ok(DamageIntensity {
        per_turn: scale * integral,
        regions: [scale * r1, scale * r2, scale * r3],
        remainder: scale * remainder,
        diverged: remainder > 0.01 * integral,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symmetric_chain() -> TurnChain {
        TurnChain::new(1.0 / 3.0, 1.0 / 3.0).unwrap()
    }

    #[test]
    fn vanishing_coefficients_give_turn_probabilities() {
        let c = TurnChain::new(0.3, 0.6).unwrap();
        let t = TailModel::Rayleigh { scale_up: 2.2, scale_down: 2.3 };
        let h = solve_p2(&c, &t, 0.0, 0.0).unwrap();
        assert!((h.p[0] - 0.3).abs() < 1e-15 && (h.p[1] - 0.4).abs() < 1e-15);
        let h = hit_probabilities(&c, 1.0, 0.0);
        assert_eq!(h.p, [0.3, 0.4]);
        assert!(solve_p2(&c, &t, 0.5, 1.0).is_err());
    }

    #[test]
    fn singular_system_is_flagged() {
        let c = TurnChain::new(0.5, 0.5).unwrap();
        let h = hit_probabilities(&c, 0.0, 1.0);
        assert!(h.singular);
        assert_eq!(h.p, [0.0, 0.0]);
    }

    #[test]
    fn osc_examples() {
        let t = TailModel::Rayleigh { scale_up: 2.2, scale_down: 2.3 };
        let c = symmetric_chain();
        let mid = osc_intensity(&c, &t, -1e-12, 1e-12).unwrap();
        assert!((mid - 1.0 / 6.0).abs() < 1e-9, "{mid}");
        let low = osc_intensity(&c, &t, -2.3, -1.0).unwrap();
        assert!((low - 0.25 * (-0.5f64).exp()).abs() < 1e-15);
        assert!((low - 0.1516).abs() < 1e-4);
        assert!(osc_intensity(&c, &t, 0.5, 60.0).unwrap() < 1e-100);
        assert!(osc_intensity(&c, &t, 1.0, 1.0).is_err());
    }

    #[test]
    fn no_oscillation_no_damage() {
        let t = TailModel::empirical(vec![], vec![]);
        let d = damage_intensity(
            &symmetric_chain(),
            &t,
            &DamageParams::with_beta(3.0).unwrap(),
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert_eq!(d.per_turn, 0.0);
        assert!(!d.diverged);
    }
}
