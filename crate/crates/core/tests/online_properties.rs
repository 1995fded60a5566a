use drive_events::gal::GalParams;
use drive_events::hmm::{batch_em, loglik, EmissionModel, InitialDistribution, TransitionMatrix, LT, RT};
use drive_events::markov::stationary_distribution;
use drive_events::online::{
    gamma_from_rk, online_init, online_step, ForgettingPolicy, OnlineEstimator, DEFAULT_BURN_IN,
};
use drive_events::sim::{simulate, RegimeSchedule};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn start(em: &EmissionModel, y0: f64, policy: ForgettingPolicy) -> OnlineEstimator {
    online_init(
        &InitialDistribution::uniform(em.m()),
        em,
        y0,
        TransitionMatrix::persistent(em.m(), 0.9),
        policy,
        DEFAULT_BURN_IN,
    )
    .unwrap()
}

fn stationary_city(n: usize, seed: u64) -> Vec<f64> {
    let s = RegimeSchedule::single(TransitionMatrix::city(), n).unwrap();
    simulate(&s, &EmissionModel::reference(), &InitialDistribution::uniform(3), seed).unwrap().y
}

#[test]
fn rk_pairs_from_the_simulation_study() {
    for (r, k, want) in [(0.9, 200, 0.01), (0.9, 1000, 0.002), (0.9, 2400, 0.001), (0.8, 2000, 0.0008)] {
        let g = gamma_from_rk(r, k).unwrap();
        assert!((g / want - 1.0).abs() < 0.15, "({r}, {k}) -> {g}");
        assert!((1.0 - (1.0 - g).powi(k as i32 + 1) - r).abs() < 1e-12);
    }
}

#[test]
fn matrix_stays_row_stochastic_on_noise() {
    let em = EmissionModel::reference();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for policy in [
        ForgettingPolicy::Fixed { gamma: 0.01 },
        ForgettingPolicy::PerState { base: 0.01 },
        ForgettingPolicy::Decaying { alpha: 0.6 },
    ] {
        let mut est = start(&em, 0.0, policy);
        for _ in 0..100_000 {
            est.step(&em, rng.random_range(-3.0..3.0)).unwrap();
            for i in 0..3 {
                let row = est.q().row(i);
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
                assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
            }
            assert!((est.phi().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn statistics_stay_bounded_without_information() {
    let p = GalParams::new(0.0, 0.0, 1.0, 1.0).unwrap();
    let em = EmissionModel::new(vec![p; 3]).unwrap();
    let mut est = start(&em, 0.3, ForgettingPolicy::Fixed { gamma: 0.05 });
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50_000 {
        est.step(&em, rng.random_range(-2.0..2.0)).unwrap();
        assert!(est.stats().rho.iter().all(|r| (0.0..=1.0).contains(r)));
    }
}

#[test]
fn events_are_monotone_and_resume_exactly() {
    let em = EmissionModel::reference();
    let y = stationary_city(20_000, 3);
    let mut whole = start(&em, y[0], ForgettingPolicy::Fixed { gamma: 0.002 });
    let mut prev = whole.accumulate_events().to_vec();
    let mut resumed = None;
    for (t, &yt) in y.iter().enumerate().skip(1) {
        whole.step(&em, yt).unwrap();
        let eta = whole.accumulate_events();
        assert!(eta.iter().zip(&prev).all(|(a, b)| a >= b));
        prev = eta.to_vec();
        if t == 9_999 {
            resumed = Some((OnlineEstimator::from_json(&whole.to_json().unwrap()).unwrap(), eta.to_vec()));
        }
    }
    let (mut second, eta_first) = resumed.unwrap();
    for &yt in &y[10_000..] {
        second = online_step(second, &em, yt).unwrap();
    }
    assert_eq!(second.to_snapshot(), whole.to_snapshot());
    assert!(second.accumulate_events().iter().zip(&eta_first).all(|(a, b)| a >= b));
    let (lt, rt) = whole.turn_counts().unwrap();
    assert_eq!((lt, rt), (whole.accumulate_events()[LT], whole.accumulate_events()[RT]));
}

#[test]
fn decaying_policy_converges_on_stationary_data() {
    let em = EmissionModel::reference();
    let y = stationary_city(200_000, 4);
    let mut est = start(&em, y[0], ForgettingPolicy::Decaying { alpha: 0.9 });
    for &yt in &y[1..] {
        est.step(&em, yt).unwrap();
    }
    let d = est.q().max_abs_diff(&TransitionMatrix::city());
    assert!(d < 0.02, "{:?}", est.q().to_rows());
}

#[test]
fn decaying_estimate_fits_held_out_data_like_batch_em() {
    let em = EmissionModel::reference();
    let pi = InitialDistribution::uniform(3);
    let y = stationary_city(220_000, 5);
    let (train, held_out) = y.split_at(200_000);
    let mut est = start(&em, train[0], ForgettingPolicy::Decaying { alpha: 0.9 });
    for &yt in &train[1..] {
        est.step(&em, yt).unwrap();
    }
    let batch = batch_em(train, &TransitionMatrix::persistent(3, 0.9), &em, &pi, 50).unwrap();
    let ll_online = loglik(held_out, est.q(), &em, &pi).unwrap().value;
    let ll_batch = loglik(held_out, &batch.last().q, &em, &pi).unwrap().value;
    assert!(((ll_online - ll_batch) / ll_batch).abs() < 1e-3, "{ll_online} vs {ll_batch}");
}

proptest! {
    #[test]
    fn stationary_solution_is_invariant(seed in any::<u64>(), m in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut flat = Vec::new();
        for _ in 0..m {
            let raw: Vec<f64> = (0..m).map(|_| 0.01 + rng.random::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            flat.extend(raw.into_iter().map(|x| x / s));
        }
        let q = TransitionMatrix::from_flat(m, flat).unwrap();
        let st = stationary_distribution(&q);
        prop_assert!(st.unique);
        prop_assert!((st.pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for j in 0..m {
            let back: f64 = (0..m).map(|i| st.pi[i] * q.get(i, j)).sum();
            prop_assert!((back - st.pi[j]).abs() < 1e-12);
        }
    }
}
