use crate::error::{Error, Result};
use crate::hmm::{TransitionMatrix, LT, RT, SF};
use crate::markov::stationary_distribution;

/// Index of left turns in the turn chain (label 1).
pub const TURN_LEFT: usize = 0;
/// Index of right turns in the turn chain (label 2).
pub const TURN_RIGHT: usize = 1;

/// Chain of successive turn directions.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnChain {
    pub p: [[f64; 2]; 2],
    /// Stationary distribution of `p`.
    pub pi: [f64; 2],
}

impl TurnChain {
    pub fn new(p_left_left: f64, p_right_right: f64) -> Result<Self> {
        for p in [p_left_left, p_right_right] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!("turn persistence {p} outside [0, 1]")));
            }
        }
        let p = [[p_left_left, 1.0 - p_left_left], [1.0 - p_right_right, p_right_right]];
        let q = TransitionMatrix::from_flat(2, p.concat()).expect("rows sum to one");
        let st = stationary_distribution(&q);
        Ok(Self { p, pi: [st.pi[0], st.pi[1]] })
    }

    /// Alternating turns, equal frequencies.
    pub fn alternating() -> Self {
        Self::new(0.0, 0.0).expect("valid")
    }
}

/// Turn chain induced by a three-state (RT, SF, LT) driving chain.
pub fn turn_chain_from_q(q: &TransitionMatrix) -> Result<TurnChain> {
    if q.m() != 3 {
        return Err(Error::Labeling(q.m()));
    }
    let stay = |k: usize| q.get(k, k);
    for (k, name) in [(RT, "right-turn"), (SF, "straight"), (LT, "left-turn")] {
        if stay(k) >= 1.0 {
            return Err(Error::DegenerateChain(format!("{name} state is absorbing")));
        }
    }
    let ll = q.get(LT, SF) * q.get(SF, LT) / ((1.0 - stay(SF)) * (1.0 - stay(LT)));
    let rr = q.get(RT, SF) * q.get(SF, RT) / ((1.0 - stay(SF)) * (1.0 - stay(RT)));
    TurnChain::new(ll, rr)
}

/// Left-to-right probability by summing over the excursions through the
/// straight state; equals `1 - p(left, left)` for any valid matrix.
pub fn left_to_right_by_paths(q: &TransitionMatrix) -> f64 {
    (q.get(LT, SF) * q.get(SF, RT) / (1.0 - q.get(SF, SF)) + q.get(LT, RT)) / (1.0 - q.get(LT, LT))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn city_and_highway() {
        let c = turn_chain_from_q(&TransitionMatrix::city()).unwrap();
        assert!((c.p[TURN_LEFT][TURN_LEFT] - 1.0 / 3.0).abs() < 1e-15);
        assert!((left_to_right_by_paths(&TransitionMatrix::city()) - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.pi[0] - 0.5).abs() < 1e-15);
        let h = turn_chain_from_q(&TransitionMatrix::highway()).unwrap();
        assert!((h.p[TURN_LEFT][TURN_LEFT] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn absorbing_states_are_rejected() {
        let q = TransitionMatrix::from_rows(&[vec![0.9, 0.1, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.1, 0.9]]).unwrap();
        assert!(matches!(turn_chain_from_q(&q), Err(Error::DegenerateChain(_))));
        assert!(matches!(turn_chain_from_q(&TransitionMatrix::uniform(2)), Err(Error::Labeling(2))));
    }
}
