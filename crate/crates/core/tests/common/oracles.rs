//! Brute-force and Monte Carlo oracles shared by the property suites and
//! the acceptance run.
#![allow(dead_code)]

use drive_events::damage::*;
use drive_events::gal::GalParams;
use drive_events::hmm::{path_log_prob, EmissionModel, InitialDistribution, TransitionMatrix, SF};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Cycles straight from the definition, O(n^2).
pub fn brute_force_cycles(load: &[f64]) -> Vec<RainflowCycle> {
    let tp = turning_points(load);
    let mut out = Vec::new();
    for i in 1..tp.len() {
        let max = tp[i];
        if max <= tp[i - 1] {
            continue;
        }
        let mut left = f64::INFINITY;
        let mut j = i;
        while j > 0 {
            j -= 1;
            if tp[j] >= max {
                break;
            }
            left = left.min(tp[j]);
        }
        let mut right = f64::INFINITY;
        let mut exceeded = false;
        for &x in &tp[i + 1..] {
            if x > max {
                exceeded = true;
                break;
            }
            right = right.min(x);
        }
        let rfc_min = if exceeded { left.max(right) } else { left };
        out.push(RainflowCycle { rfc_min, max });
    }
    out
}

pub fn random_walk(rng: &mut ChaCha8Rng, n: usize, integer: bool) -> Vec<f64> {
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            x += if integer { rng.random_range(-3i32..=3) as f64 } else { rng.random_range(-1.0..1.0) };
            x
        })
        .collect()
}

pub fn level_grid(load: &[f64]) -> Vec<f64> {
    let mut vals = load.to_vec();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    let mut grid = vec![vals[0] - 0.5];
    for w in vals.windows(2) {
        grid.push(w[0]);
        grid.push(0.5 * (w[0] + w[1]));
    }
    grid.push(*vals.last().unwrap());
    grid.push(vals.last().unwrap() + 0.5);
    grid
}

pub fn cycles_through(cycles: &[RainflowCycle], u: f64, v: f64) -> u64 {
    cycles.iter().filter(|c| c.rfc_min < u && c.max > v).count() as u64
}

/// `beta (beta - 1) sum_u sum_v (v - u)^(beta - 2) N(u, v) du dv` on a
/// midpoint grid of `levels` cells spanning the load.
pub fn crossing_damage(load: &[f64], beta: f64, levels: usize) -> f64 {
    let lo = load.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = load.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let h = (hi - lo) / levels as f64;
    let mid: Vec<f64> = (0..levels).map(|i| lo + (i as f64 + 0.5) * h).collect();
    let mut total = 0.0;
    for (a, &u) in mid.iter().enumerate() {
        for &v in &mid[a + 1..] {
            let n = interval_upcross_count(load, u, v).unwrap() as f64;
            total += (v - u).powf(beta - 2.0) * n;
        }
    }
    beta * (beta - 1.0) * total * h * h
}

pub fn random_city_like_q(rng: &mut ChaCha8Rng) -> TransitionMatrix {
    let mut rows = Vec::new();
    for _ in 0..3 {
        let raw: Vec<f64> = (0..3).map(|_| 0.01 + rng.random::<f64>()).collect();
        let s: f64 = raw.iter().sum();
        rows.push(raw.into_iter().map(|x| x / s).collect());
    }
    TransitionMatrix::from_rows(&rows).unwrap()
}

pub fn simulate_path(q: &TransitionMatrix, n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = SF;
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            z = if u < q.get(z, 0) {
                0
            } else if u < q.get(z, 0) + q.get(z, 1) {
                1
            } else {
                2
            };
            z
        })
        .collect()
}

/// Extremes of the turns of a simulated reference-style journey.
pub fn journey_tails() -> TailModel {
    let j = drive_events::sim::reference_journey(4);
    TailModel::empirical_from_reduced(&reduce_load(&j.y, &j.events).unwrap())
}

pub fn random_simplex<R: Rng>(rng: &mut R, m: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| floor + rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

pub fn random_q<R: Rng>(rng: &mut R, m: usize) -> TransitionMatrix {
    let q: Vec<f64> = (0..m).flat_map(|_| random_simplex(rng, m, 0.02)).collect();
    TransitionMatrix::from_flat(m, q).unwrap()
}

pub fn random_em<R: Rng>(rng: &mut R, m: usize) -> EmissionModel {
    let states = (0..m)
        .map(|_| {
            GalParams::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-0.5..0.5),
                rng.random_range(0.3..5.0),
                rng.random_range(0.3..1.5),
            )
            .unwrap()
        })
        .collect();
    EmissionModel::new(states).unwrap()
}

pub struct Instance {
    pub q: TransitionMatrix,
    pub em: EmissionModel,
    pub pi: InitialDistribution,
    pub y: Vec<f64>,
}

pub fn random_instance(seed: u64, m: usize, t: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Instance {
        q: random_q(&mut rng, m),
        em: random_em(&mut rng, m),
        pi: InitialDistribution::new(random_simplex(&mut rng, m, 0.05)).unwrap(),
        y: (0..t).map(|_| rng.random_range(-2.0..2.0)).collect(),
    }
}

/// Every state path with its joint probability `p(z, y)`.
pub fn enumerate_paths(inst: &Instance) -> Vec<(Vec<usize>, f64)> {
    let m = inst.q.m();
    let t = inst.y.len();
    let total = m.pow(t as u32);
    (0..total)
        .map(|mut code| {
            let mut z = vec![0; t];
            for slot in z.iter_mut() {
                *slot = code % m;
                code /= m;
            }
            let lp = path_log_prob(&z, &inst.y, &inst.q, &inst.em, &inst.pi);
            (z, lp.exp())
        })
        .collect()
}

/// Rainflow damage per turn of a reduced load whose turn directions follow
/// `chain` and whose extremes are drawn from the given samples.
pub fn simulated_reduced_damage(
    chain: &TurnChain,
    maxima: &[f64],
    minima: &[f64],
    params: &DamageParams,
    n_turns: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reduced = Vec::with_capacity(2 * n_turns + 1);
    reduced.push(0.0);
    let mut cur = if rng.random::<f64>() < chain.pi[TURN_LEFT] { TURN_LEFT } else { TURN_RIGHT };
    for _ in 0..n_turns {
        let e = if cur == TURN_LEFT {
            maxima[rng.random_range(0..maxima.len())]
        } else {
            minima[rng.random_range(0..minima.len())]
        };
        reduced.push(e);
        reduced.push(0.0);
        cur = if rng.random::<f64>() < chain.p[cur][TURN_LEFT] { TURN_LEFT } else { TURN_RIGHT };
    }
    pm_damage(&rainflow_count(&reduced), params) / n_turns as f64
}
