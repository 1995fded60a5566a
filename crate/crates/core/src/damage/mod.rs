//! Fatigue damage of turn loads: rainflow and interval-upcrossing counts,
//! reduced loads, the turn chain of a driving-state matrix and the expected
//! damage per turn.

mod events;
mod frames;
mod intensity;
mod rainflow;
mod tails;
mod turn_chain;

pub use events::{count_turns, extract_events, reduce_load, turn_extremes, Turn, TurnEvent};
pub use frames::{frame_damage, FrameDamage};
pub use intensity::{
    damage_intensity, osc_intensity, solve_p2, DamageIntensity, HitProbabilities, QuadratureConfig,
};
pub use rainflow::{
    interval_upcross_count, pm_damage, rainflow_count, rainflow_count_indexed, turning_point_indices, turning_points, DamageParams,
    RainflowCycle,
};
pub use tails::{fit_rayleigh_tails, TailFit, TailModel, MIN_RAYLEIGH_EXTREMES};
pub use turn_chain::{left_to_right_by_paths, turn_chain_from_q, TurnChain, TURN_LEFT, TURN_RIGHT};
