use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Material constants of the Palmgren-Miner rule `alpha * sum h^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DamageParams {
    pub alpha: f64,
    pub beta: f64,
}

impl DamageParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta > 1.0 && beta.is_finite()) {
            return Err(Error::Domain(format!("damage parameters need alpha > 0, beta > 1 (got {alpha}, {beta})")));
        }
        Ok(Self { alpha, beta })
    }

    pub fn with_beta(beta: f64) -> Result<Self> {
        Self::new(1.0, beta)
    }
}

/// A local maximum paired with its rainflow minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RainflowCycle {
    pub rfc_min: f64,
    pub max: f64,
}

impl RainflowCycle {
    pub fn range(&self) -> f64 {
        self.max - self.rfc_min
    }
}

/// Alternating local extrema with both end points. Plateaus collapse to
/// their first sample; a constant or empty load has no turning points.
pub fn turning_points(load: &[f64]) -> Vec<f64> {
    turning_point_indices(load).into_iter().map(|i| load[i]).collect()
}

pub fn turning_point_indices(load: &[f64]) -> Vec<usize> {
    let mut distinct: Vec<usize> = Vec::with_capacity(load.len());
    for (i, &x) in load.iter().enumerate() {
        if distinct.last().is_none_or(|&j| load[j] != x) {
            distinct.push(i);
        }
    }
    if distinct.len() < 2 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(distinct.len());
    out.push(distinct[0]);
    for w in distinct.windows(3) {
        let (a, b, c) = (load[w[0]], load[w[1]], load[w[2]]);
        if (b > a) != (c > b) {
            out.push(w[1]);
        }
    }
    out.push(distinct[distinct.len() - 1]);
    out
}

struct Open {
    max: f64,
    left_min: f64,
    /// Smallest load after this maximum, up to the next open maximum.
    gap_min: f64,
}

/// One cycle per local maximum of the turning points, in order of the
/// maxima. The first sample is never a maximum; the last one is when it
/// lies above its predecessor.
///
/// The minimum on the left of a maximum `M` is taken back to the nearest
/// earlier load `>= M` (or the start); on the right, up to the first later
/// load `> M`. A maximum never exceeded to its right takes the left minimum.
pub fn rainflow_count(load: &[f64]) -> Vec<RainflowCycle> {
    rainflow_count_indexed(load).into_iter().map(|(_, c)| c).collect()
}

/// [`rainflow_count`] with the sample index of each maximum.
pub fn rainflow_count_indexed(load: &[f64]) -> Vec<(usize, RainflowCycle)> {
    let at = turning_point_indices(load);
    let tp: Vec<f64> = at.iter().map(|&i| load[i]).collect();
    if tp.len() < 2 {
        return Vec::new();
    }
    let mut found: Vec<(usize, RainflowCycle)> = Vec::with_capacity(tp.len() / 2 + 1);
    // Sentinel bottom entry covering the loads before every open maximum.
    let mut stack: Vec<(usize, Open)> =
        vec![(usize::MAX, Open { max: f64::INFINITY, left_min: f64::NAN, gap_min: tp[0] })];
    for (i, w) in tp.windows(2).enumerate() {
        let (prev, x) = (w[0], w[1]);
        let idx = i + 1;
        if x < prev {
            let top = &mut stack.last_mut().expect("sentinel").1;
            top.gap_min = top.gap_min.min(x);
            continue;
        }
        let mut right_min = f64::INFINITY;
        while stack.last().expect("sentinel").1.max < x {
            let (at, open) = stack.pop().expect("sentinel never popped");
            right_min = right_min.min(open.gap_min);
            found.push((at, RainflowCycle { rfc_min: open.left_min.max(right_min), max: open.max }));
        }
        let below = &mut stack.last_mut().expect("sentinel").1;
        below.gap_min = below.gap_min.min(right_min);
        let left_min = below.gap_min;
        stack.push((idx, Open { max: x, left_min, gap_min: f64::INFINITY }));
    }
    for (at, open) in stack.into_iter().skip(1) {
        found.push((at, RainflowCycle { rfc_min: open.left_min, max: open.max }));
    }
    found.sort_unstable_by_key(|(i, _)| *i);
    found.into_iter().map(|(i, c)| (at[i], c)).collect()
}

/// `alpha * sum_i h_i^beta`.
pub fn pm_damage(cycles: &[RainflowCycle], params: &DamageParams) -> f64 {
    params.alpha * cycles.iter().map(|c| c.range().powf(params.beta)).sum::<f64>()
}

/// Completed passages from strictly below `u` to strictly above `v`.
pub fn interval_upcross_count(load: &[f64], u: f64, v: f64) -> Result<u64> {
    if !(u < v) {
        return Err(Error::Domain(format!("interval needs u < v (got {u}, {v})")));
    }
    let mut below = false;
    let mut count = 0;
    for &x in load {
        if x < u {
            below = true;
        } else if below && x > v {
            count += 1;
            below = false;
        }
    }
    Ok(count)
}
