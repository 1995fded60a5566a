pub mod baselines;
pub mod damage_report;
pub mod fit_emission;
pub mod run_online;
pub mod simulate;

use drive_events::hmm::{InitialDistribution, TransitionMatrix};
use drive_events::markov::stationary_distribution;

/// Filter start for observed data: the stationary law of `q0`.
pub(crate) fn initial_distribution(q0: &TransitionMatrix) -> InitialDistribution {
    InitialDistribution::new(stationary_distribution(q0).pi).unwrap_or_else(|_| InitialDistribution::uniform(q0.m()))
}
