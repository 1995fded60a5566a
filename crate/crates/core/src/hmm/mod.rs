//! Hidden Markov model over a finite set of driving states with GAL
//! emissions: model types, forward filtering, the recursive E-step, batch
//! EM for the transition matrix and Viterbi decoding.

mod em;
mod filter;
mod types;
mod viterbi;

pub use em::{batch_em, e_step, loglik, EmIterate, EmResult, EStep, LogLik};
pub use filter::{filter_init, filter_step, retrospective_kernel, FilterUpdate, RetroKernel};
pub use types::{
    EmissionModel, FilterDistribution, InitialDistribution, SufficientStats, TransitionMatrix, LT,
    RT, SF,
};
pub use viterbi::{path_log_prob, viterbi, ViterbiPath};

pub(crate) use filter::{bayes_update, kernel_into, predict_into};
pub(crate) use em::m_step_into;
