use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::{LT, RT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Turn {
    #[serde(rename = "LT")]
    Left,
    #[serde(rename = "RT")]
    Right,
}

impl Turn {
    /// Turn of a canonical state index, if it is one.
    pub fn of_state(k: usize) -> Option<Self> {
        match k {
            LT => Some(Self::Left),
            RT => Some(Self::Right),
            _ => None,
        }
    }
}

/// A maximal run of one turn state over samples `start..stop`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnEvent {
    pub turn: Turn,
    pub start: usize,
    pub stop: usize,
}

impl TurnEvent {
    pub fn len(&self) -> usize {
        self.stop - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.stop == self.start
    }
}

/// Turn events of a canonical state path; runs shorter than
/// `min_duration` samples are dropped.
pub fn extract_events(path: &[usize], min_duration: usize) -> Vec<TurnEvent> {
    let mut events = Vec::new();
    let mut start = 0;
    for i in 1..=path.len() {
        if i == path.len() || path[i] != path[start] {
            if let Some(turn) = Turn::of_state(path[start]) {
                if i - start >= min_duration.max(1) {
                    events.push(TurnEvent { turn, start, stop: i });
                }
            }
            start = i;
        }
    }
    events
}

/// `(left, right)` event counts.
pub fn count_turns(events: &[TurnEvent]) -> (usize, usize) {
    let left = events.iter().filter(|e| e.turn == Turn::Left).count();
    (left, events.len() - left)
}

/// Per-turn extremes: the maximum of a left turn, the minimum of a right
/// turn.
pub fn turn_extremes(load: &[f64], events: &[TurnEvent]) -> Result<Vec<f64>> {
    let mut prev_stop = 0;
    let mut out = Vec::with_capacity(events.len());
    for (n, e) in events.iter().enumerate() {
        if e.is_empty() {
            return Err(Error::Input(format!("event {n} is empty")));
        }
        if e.start < prev_stop {
            return Err(Error::Input(format!("event {n} overlaps or precedes the previous one")));
        }
        if e.stop > load.len() {
            return Err(Error::Input(format!("event {n} ends at {} beyond the load ({})", e.stop, load.len())));
        }
        let span = &load[e.start..e.stop];
        out.push(match e.turn {
            Turn::Left => span.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Turn::Right => span.iter().copied().fold(f64::INFINITY, f64::min),
        });
        prev_stop = e.stop;
    }
    Ok(out)
}

/// `[0, e_1, 0, e_2, ..., e_n, 0]` with `e_i` the extreme of turn `i`.
pub fn reduce_load(load: &[f64], events: &[TurnEvent]) -> Result<Vec<f64>> {
    let extremes = turn_extremes(load, events)?;
    let mut out = Vec::with_capacity(2 * extremes.len() + 1);
    out.push(0.0);
    for e in extremes {
        out.push(e);
        out.push(0.0);
    }
    Ok(out)
}
