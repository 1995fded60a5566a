//! Regime-switching journeys: a Markov chain of driving states whose
//! transition matrix changes per segment, with GAL observations.
//!
//! Chain and observations draw from separate ChaCha8 streams of one seed,
//! so either can be reproduced without the other.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::damage::{count_turns, extract_events, TurnEvent};
use crate::error::{Error, Result};
use crate::hmm::{EmissionModel, InitialDistribution, TransitionMatrix, SF};

const CHAIN_STREAM: u64 = 0;
const EMISSION_STREAM: u64 = 1;

/// Samples per segment of the four-segment reference journey.
pub const REFERENCE_SEGMENT_LEN: usize = 50_000;
/// Sampling period of the reference journey, seconds.
pub const SAMPLE_PERIOD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub q: TransitionMatrix,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Segment>", into = "Vec<Segment>")]
pub struct RegimeSchedule {
    segments: Vec<Segment>,
}

impl RegimeSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let Some(first) = segments.first() else {
            return Err(Error::Input("schedule has no segments".into()));
        };
        let m = first.q.m();
        for (i, s) in segments.iter().enumerate() {
            if s.len == 0 {
                return Err(Error::Input(format!("segment {i} has zero length")));
            }
            if s.q.m() != m {
                return Err(Error::Dimension { expected: m, got: s.q.m() });
            }
        }
        Ok(Self { segments })
    }

    /// City, highway, city, highway; equal segment lengths.
    pub fn reference() -> Self {
        let seg = |q| Segment { q, len: REFERENCE_SEGMENT_LEN };
        Self::new(vec![
            seg(TransitionMatrix::city()),
            seg(TransitionMatrix::highway()),
            seg(TransitionMatrix::city()),
            seg(TransitionMatrix::highway()),
        ])
        .expect("valid preset")
    }

    pub fn single(q: TransitionMatrix, len: usize) -> Result<Self> {
        Self::new(vec![Segment { q, len }])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn m(&self) -> usize {
        self.segments[0].q.m()
    }

    pub fn total_len(&self) -> usize {
        self.segments.iter().map(|s| s.len).sum()
    }

    /// Start index of every segment followed by the total length.
    pub fn boundaries(&self) -> Vec<usize> {
        let mut out = vec![0];
        for s in &self.segments {
            out.push(out.last().unwrap() + s.len);
        }
        out
    }

    /// Matrix active at sample `t`.
    pub fn matrix_at(&self, t: usize) -> &TransitionMatrix {
        let mut end = 0;
        for s in &self.segments {
            end += s.len;
            if t < end {
                return &s.q;
            }
        }
        &self.segments.last().expect("non-empty").q
    }
}

impl TryFrom<Vec<Segment>> for RegimeSchedule {
    type Error = Error;

    fn try_from(segments: Vec<Segment>) -> Result<Self> {
        Self::new(segments)
    }
}

impl From<RegimeSchedule> for Vec<Segment> {
    fn from(s: RegimeSchedule) -> Self {
        s.segments
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn draw_index<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // round-off: the last state with positive mass
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// State path; the transition into sample `t` uses the matrix of the
/// segment containing `t`.
pub fn simulate_chain(schedule: &RegimeSchedule, pi0: &InitialDistribution, seed: u64) -> Result<Vec<usize>> {
    if pi0.m() != schedule.m() {
        return Err(Error::Dimension { expected: schedule.m(), got: pi0.m() });
    }
    let mut rng = stream(seed, CHAIN_STREAM);
    let mut path = Vec::with_capacity(schedule.total_len());
    let mut state = draw_index(&mut rng, pi0.probs());
    for seg in schedule.segments() {
        for _ in 0..seg.len {
            if !path.is_empty() {
                state = draw_index(&mut rng, seg.q.row(state));
            }
            path.push(state);
        }
    }
    Ok(path)
}

/// Independent GAL draws given the path.
pub fn simulate_observations(path: &[usize], em: &EmissionModel, seed: u64) -> Result<Vec<f64>> {
    if let Some(&bad) = path.iter().find(|&&k| k >= em.m()) {
        return Err(Error::Input(format!("state {bad} outside the emission model")));
    }
    let mixing: Vec<_> = em.states().iter().map(|p| p.mixing()).collect();
    let mut rng = stream(seed, EMISSION_STREAM);
    Ok(path.iter().map(|&k| em.state(k).draw(&mixing[k], &mut rng)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub seed: u64,
    pub path: Vec<usize>,
    pub y: Vec<f64>,
    /// Maximal runs of a turn state in the true path.
    pub events: Vec<TurnEvent>,
    /// Segment starts followed by the total length.
    pub boundaries: Vec<usize>,
    pub observed_left: usize,
    pub observed_right: usize,
}

pub fn simulate(
    schedule: &RegimeSchedule,
    em: &EmissionModel,
    pi0: &InitialDistribution,
    seed: u64,
) -> Result<SimResult> {
    if em.m() != schedule.m() {
        return Err(Error::Dimension { expected: schedule.m(), got: em.m() });
    }
    let path = simulate_chain(schedule, pi0, seed)?;
    let y = simulate_observations(&path, em, seed)?;
    let events = if em.m() == 3 { extract_events(&path, 1) } else { Vec::new() };
    let (observed_left, observed_right) = count_turns(&events);
    Ok(SimResult { seed, path, y, events, boundaries: schedule.boundaries(), observed_left, observed_right })
}

/// The four-segment reference journey starting straight ahead.
pub fn reference_journey(seed: u64) -> SimResult {
    simulate(&RegimeSchedule::reference(), &EmissionModel::reference(), &InitialDistribution::point(3, SF), seed)
        .expect("valid preset")
}
