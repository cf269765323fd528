mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{date, day_charging_at, gradient_check};
use evcharge::agent::{greedy_action, Checkpoint, DqnLearner, TrainConfig, Transition, CHECKPOINT_VERSION};
use evcharge::env::{Action, EnvConfig, EnvSettings, N_FEATURES};
use evcharge::harness::train;
use evcharge::Error;

#[test]
fn td_gradients_match_finite_differences() {
    let worst = (0..100).map(gradient_check).fold(0.0, f64::max);
    assert!(worst < 1e-4, "worst relative error {worst:e}");
}

#[test]
fn gamma_zero_learns_the_immediate_reward_argmax() {
    // four one-step states with a known best action each
    let states: [[f64; N_FEATURES]; 4] = [
        [0.1, 0.9, 0.2, 0.0, 0.5, 0.1],
        [0.9, 0.0, 0.8, 0.3, 0.7, 0.4],
        [0.5, 0.5, 0.1, 0.6, 0.9, 0.6],
        [1.0, 0.2, 0.5, 0.9, 0.3, 0.9],
    ];
    let rewards = [[-0.25, 3.0], [0.0, -10.0], [-0.25, 2.0], [0.0, -4.0]];
    let config = TrainConfig {
        gamma: 0.0,
        learning_rate: 5e-3,
        batch_size: 16,
        buffer_capacity: 1000,
        hidden_layers: vec![16],
        target_sync_interval: 50,
        seed: 9,
        ..TrainConfig::default()
    };
    let mut learner = DqnLearner::new(config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..6000 {
        let s = rng.random_range(0..states.len());
        let a = if rng.random_bool(0.5) { Action::Charge } else { Action::Idle };
        learner
            .observe(Transition {
                state: states[s],
                action: a,
                reward: rewards[s][a.index()],
                next_state: [0.0; N_FEATURES],
                done: false,
            })
            .unwrap();
    }
    for (s, r) in states.iter().zip(rewards) {
        let best = if r[1] > r[0] { Action::Charge } else { Action::Idle };
        assert_eq!(greedy_action(learner.online().q_values(s).unwrap()), best, "state {s:?}");
    }
}

fn two_days() -> Vec<evcharge::data::HouseholdDay> {
    vec![
        day_charging_at(date(0), 2.0, 1.0, &[76, 77, 78], 3.3),
        day_charging_at(date(1), 0.0, 1.5, &[80, 81], 3.3),
    ]
}

fn small_config(epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size: 16,
        hidden_layers: vec![16],
        target_sync_interval: 100,
        eval_every: 1,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn training_reproduces_bit_for_bit() {
    let days = two_days();
    let env = EnvConfig::from_training_days(&days, &EnvSettings::default()).unwrap();
    let a = train(&days, &env, &small_config(5, 3)).unwrap();
    let b = train(&days, &env, &small_config(5, 3)).unwrap();
    let bits = |c: &Checkpoint| c.network.params().iter().map(|p| p.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.final_checkpoint), bits(&b.final_checkpoint));
    assert_eq!(a.curve, b.curve);
    let c = train(&days, &env, &small_config(5, 4)).unwrap();
    assert_ne!(bits(&a.final_checkpoint), bits(&c.final_checkpoint));
}

#[test]
fn checkpoints_round_trip_and_reject_other_versions() {
    let days = two_days();
    let env = EnvConfig::from_training_days(&days, &EnvSettings::default()).unwrap();
    let ckpt = train(&days, &env, &small_config(2, 1)).unwrap().final_checkpoint;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ckpt.json");
    ckpt.save(&path).unwrap();
    assert_eq!(Checkpoint::load(&path).unwrap(), ckpt);

    let mut value: serde_json::Value = serde_json::from_str(&ckpt.to_json().unwrap()).unwrap();
    value["version"] = serde_json::json!(CHECKPOINT_VERSION + 1);
    let err = Checkpoint::from_json(&value.to_string()).unwrap_err();
    assert!(matches!(err, Error::CheckpointVersion { found, expected } if found == CHECKPOINT_VERSION + 1 && expected == CHECKPOINT_VERSION));
}

#[test]
fn repeated_day_training_improves_episode_reward() {
    let days = vec![day_charging_at(date(0), 0.0, 1.0, &[70, 71, 72, 73], 3.3)];
    let env = EnvConfig::from_training_days(&days, &EnvSettings::default()).unwrap();
    let config = TrainConfig {
        epochs: 400,
        batch_size: 32,
        hidden_layers: vec![16, 16],
        train_every: 2,
        eval_every: 50,
        seed: 2,
        ..TrainConfig::default()
    };
    let out = train(&days, &env, &config).unwrap();
    let rewards: Vec<f64> = out.curve.episodes.iter().map(|e| e.total_reward).collect();
    let first = rewards[..100].iter().sum::<f64>() / 100.0;
    let last = rewards[rewards.len() - 100..].iter().sum::<f64>() / 100.0;
    assert!(last > first, "first 100 mean {first}, last 100 mean {last}");
}
