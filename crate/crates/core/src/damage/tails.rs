use serde::{Deserialize, Serialize};

/// Minimum number of extremes of each sign for a Rayleigh fit.
pub const MIN_RAYLEIGH_EXTREMES: usize = 10;

/// Distributions of the turn extremes: `P(M > v)` for left-turn maxima and
/// `P(m < u)` for right-turn minima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailModel {
    /// Sorted samples; survival estimates are right-continuous.
    Empirical { maxima: Vec<f64>, minima: Vec<f64> },
    /// `P(M > v) = exp(-(v / up)^2 / 2)`, `P(m < u) = exp(-(u / down)^2 / 2)`.
    Rayleigh { scale_up: f64, scale_down: f64 },
}

impl TailModel {
    pub fn empirical(mut maxima: Vec<f64>, mut minima: Vec<f64>) -> Self {
        maxima.sort_by(f64::total_cmp);
        minima.sort_by(f64::total_cmp);
        Self::Empirical { maxima, minima }
    }

    /// Positive entries of a reduced load are maxima, negative ones minima.
    pub fn empirical_from_reduced(reduced: &[f64]) -> Self {
        let maxima = reduced.iter().copied().filter(|x| *x > 0.0).collect();
        let minima = reduced.iter().copied().filter(|x| *x < 0.0).collect();
        Self::empirical(maxima, minima)
    }

    /// `P(M > v)`, one for `v <= 0`.
    pub fn upper(&self, v: f64) -> f64 {
        if v <= 0.0 {
            return 1.0;
        }
        match self {
            Self::Empirical { maxima, .. } => {
                if maxima.is_empty() {
                    return 0.0;
                }
                let at_most = maxima.partition_point(|x| *x <= v);
                (maxima.len() - at_most) as f64 / maxima.len() as f64
            }
            Self::Rayleigh { scale_up, .. } => (-0.5 * (v / scale_up).powi(2)).exp(),
        }
    }

    /// `P(m < u)`, one for `u >= 0`.
    pub fn lower(&self, u: f64) -> f64 {
        if u >= 0.0 {
            return 1.0;
        }
        match self {
            Self::Empirical { minima, .. } => {
                if minima.is_empty() {
                    return 0.0;
                }
                minima.partition_point(|x| *x < u) as f64 / minima.len() as f64
            }
            Self::Rayleigh { scale_down, .. } => (-0.5 * (u / scale_down).powi(2)).exp(),
        }
    }

    /// Smallest `v >= 0` with `P(M > v) <= cutoff`.
    pub fn upper_extent(&self, cutoff: f64) -> f64 {
        match self {
            Self::Empirical { maxima, .. } => maxima.last().copied().unwrap_or(0.0).max(0.0),
            Self::Rayleigh { scale_up, .. } => scale_up * (-2.0 * cutoff.ln()).sqrt(),
        }
    }

    /// Largest `u <= 0` with `P(m < u) <= cutoff`.
    pub fn lower_extent(&self, cutoff: f64) -> f64 {
        match self {
            Self::Empirical { minima, .. } => minima.first().copied().unwrap_or(0.0).min(0.0),
            Self::Rayleigh { scale_down, .. } => -scale_down * (-2.0 * cutoff.ln()).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub tails: TailModel,
    /// Too few extremes of some sign; `tails` is empirical.
    pub fell_back: bool,
}

/// Method-of-moments Rayleigh scales `sqrt(mean(x^2) / 2)` for the positive
/// and negative entries of a reduced load.
pub fn fit_rayleigh_tails(reduced: &[f64]) -> TailFit {
    let pos: Vec<f64> = reduced.iter().copied().filter(|x| *x > 0.0).collect();
    let neg: Vec<f64> = reduced.iter().copied().filter(|x| *x < 0.0).collect();
    if pos.len() < MIN_RAYLEIGH_EXTREMES || neg.len() < MIN_RAYLEIGH_EXTREMES {
        return TailFit { tails: TailModel::empirical(pos, neg), fell_back: true };
    }
    let scale = |xs: &[f64]| (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64 / 2.0).sqrt();
    TailFit { tails: TailModel::Rayleigh { scale_up: scale(&pos), scale_down: scale(&neg) }, fell_back: false }
}
