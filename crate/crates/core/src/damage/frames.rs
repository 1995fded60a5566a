use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDamage {
    pub delta_eta: Vec<f64>,
    pub delta_damage: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl FrameDamage {
    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

/// `delta_d_k = (eta_k - eta_{k-1}) d_k` from the expected event counts at
/// the end of each frame (`eta_0 = 0`) and the per-event damage of each
/// frame.
pub fn frame_damage(eta: &[f64], per_event: &[f64]) -> Result<FrameDamage> {
    if eta.len() != per_event.len() {
        return Err(Error::Dimension { expected: eta.len(), got: per_event.len() });
    }
    let mut prev = 0.0;
    let mut acc = 0.0;
    let mut out = FrameDamage {
        delta_eta: Vec::with_capacity(eta.len()),
        delta_damage: Vec::with_capacity(eta.len()),
        cumulative: Vec::with_capacity(eta.len()),
    };
    for (k, (&e, &d)) in eta.iter().zip(per_event).enumerate() {
        if e < prev || !e.is_finite() {
            return Err(Error::Input(format!("event count decreases at frame {k} ({prev} -> {e})")));
        }
        let de = e - prev;
        acc += de * d;
        out.delta_eta.push(de);
        out.delta_damage.push(de * d);
        out.cumulative.push(acc);
        prev = e;
    }
    Ok(out)
}
