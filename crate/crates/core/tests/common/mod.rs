#![allow(dead_code)]

use chrono::NaiveDate;

use evcharge::data::{HouseholdDay, SLOTS_PER_DAY};
use evcharge::env::{BatterySpec, EnvConfig, FeatureScaling, RewardWeights};
use evcharge::flexibility::FlexibilityProfile;
use evcharge::tariff::{CostQuantiles, TariffSchedule};

pub fn date(offset: i64) -> NaiveDate {
    NaiveDate::from_ymd_opt(2018, 6, 1).unwrap() + chrono::Duration::days(offset)
}

/// Environment with a hand-set habit index and cost thresholds on the default tariff and battery.
pub fn env_with(index: Vec<f64>, cost_q: CostQuantiles) -> EnvConfig {
    EnvConfig {
        tariff: TariffSchedule::default(),
        flex: FlexibilityProfile::from_index(index).unwrap(),
        cost_q,
        battery: BatterySpec::default(),
        weights: RewardWeights::default(),
        scaling: FeatureScaling::default(),
    }
}

pub fn flat_env() -> EnvConfig {
    env_with(vec![0.5; SLOTS_PER_DAY], CostQuantiles { q25: 0.01, q50: 0.02, q75: 0.03 })
}

/// A day with constant PV and load and the given EV power in `slots`.
pub fn day_charging_at(date: NaiveDate, pv: f64, load: f64, slots: &[usize], kw: f64) -> HouseholdDay {
    let mut ev = vec![0.0; SLOTS_PER_DAY];
    for &t in slots {
        ev[t] = kw;
    }
    HouseholdDay::new(date, vec![pv; SLOTS_PER_DAY], vec![load; SLOTS_PER_DAY], ev).unwrap()
}

use evcharge::agent::{td_loss, td_loss_and_grad, Activation, QNetwork, TdScratch, Transition};
use evcharge::env::{Action, N_FEATURES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative error `|a - n| / (|a| + |n|)` between the analytic TD-loss gradient
/// and central finite differences on one random (net, batch) draw.
pub fn gradient_check(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dims = vec![N_FEATURES];
    for _ in 0..rng.random_range(1..=2) {
        dims.push(rng.random_range(2..=8));
    }
    dims.push(2);
    let net = QNetwork::new(&dims, Activation::Softplus, &mut rng).unwrap();
    let target = QNetwork::new(&dims, Activation::Softplus, &mut rng).unwrap();
    let gamma = rng.random_range(0.0..1.0);
    let batch: Vec<Transition> = (0..rng.random_range(1..=8))
        .map(|_| Transition {
            state: std::array::from_fn(|_| rng.random_range(-1.0..1.0)),
            action: if rng.random_bool(0.5) { Action::Charge } else { Action::Idle },
            reward: rng.random_range(-15.0..10.0),
            next_state: std::array::from_fn(|_| rng.random_range(-1.0..1.0)),
            done: rng.random_bool(0.2),
        })
        .collect();

    let mut scratch = TdScratch::default();
    td_loss_and_grad(&net, &target, &batch, gamma, &mut scratch);
    let analytic = scratch.grad().to_vec();

    let h = 1e-5;
    let mut probe = net.clone();
    let numeric: Vec<f64> = (0..net.param_count())
        .map(|i| {
            let p = net.params()[i];
            probe.params_mut()[i] = p + h;
            let up = td_loss(&probe, &target, &batch, gamma);
            probe.params_mut()[i] = p - h;
            let down = td_loss(&probe, &target, &batch, gamma);
            probe.params_mut()[i] = p;
            (up - down) / (2.0 * h)
        })
        .collect();

    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut analytic.iter().zip(&numeric).map(|(a, n)| a - n));
    let scale = norm(&mut analytic.iter().copied()) + norm(&mut numeric.iter().copied());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}
