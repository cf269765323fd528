//! Exact reward-maximising action sequences for one day.
//!
//! Charging is the only thing that moves SoC and the running charged power,
//! and each charge depends only on the current SoC. Both are therefore fixed
//! by the number of charges taken so far, so the state collapses to
//! `(slot, charges so far)` and a backward recursion over that grid is exact.

use serde::{Deserialize, Serialize};

use crate::data::{daily_ev_demand, HouseholdDay, SLOTS_PER_DAY};
use crate::env::{starting_soc, Action, EnvConfig, Episode};
use crate::error::{Error, Result};

/// Largest horizon accepted by [`exhaustive_oracle`].
pub const EXHAUSTIVE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub actions: Vec<Action>,
    /// Undiscounted reward of `actions` replayed through the environment.
    pub total_reward: f64,
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 || horizon > SLOTS_PER_DAY {
        return Err(Error::Config(format!("horizon must lie in 1..={SLOTS_PER_DAY}, got {horizon}")));
    }
    Ok(())
}

/// Replays `actions` from the start of the day and sums the rewards.
pub fn replay_reward(env: &EnvConfig, day: &HouseholdDay, actions: &[Action]) -> Result<f64> {
    let mut episode = Episode::new(env, day);
    let mut total = 0.0;
    for &a in actions {
        total += episode.step(a)?.reward.total;
    }
    Ok(total)
}

/// Backward induction over `(slot, charges taken)` for the first `horizon` slots.
/// Ties resolve to idle.
pub fn dp_oracle(env: &EnvConfig, day: &HouseholdDay, horizon: usize) -> Result<OracleSolution> {
    check_horizon(horizon)?;
    let p_day = daily_ev_demand(day);

    // Battery state after k charges.
    let mut ladder = Vec::with_capacity(horizon + 1);
    let mut state = env.observe(day, 0, 0.0, starting_soc(&env.battery, p_day));
    ladder.push((state.ev_run, state.soc));
    for _ in 0..horizon {
        state = env.transition(day, p_day, &state, Action::Charge).next;
        state.t = 0;
        ladder.push((state.ev_run, state.soc));
    }

    // value[k] holds the best reward-to-go from slot t+1 with k charges taken.
    let mut value = vec![0.0; horizon + 1];
    let mut choice = vec![Vec::new(); horizon];
    for t in (0..horizon).rev() {
        let mut next_value = vec![f64::NEG_INFINITY; t + 1];
        let mut best = Vec::with_capacity(t + 1);
        for (k, slot) in next_value.iter_mut().enumerate() {
            let (ev_run, soc) = ladder[k];
            let s = env.observe(day, t, ev_run, soc);
            let idle = env.transition(day, p_day, &s, Action::Idle).reward.total + value[k];
            let charge = env.transition(day, p_day, &s, Action::Charge).reward.total + value[k + 1];
            if charge > idle {
                *slot = charge;
                best.push(Action::Charge);
            } else {
                *slot = idle;
                best.push(Action::Idle);
            }
        }
        choice[t] = best;
        value = next_value;
    }

    let mut actions = Vec::with_capacity(horizon);
    let mut k = 0;
    for row in &choice {
        let a = row[k];
        if a == Action::Charge {
            k += 1;
        }
        actions.push(a);
    }
    let total_reward = replay_reward(env, day, &actions)?;
    debug_assert!((total_reward - value[0]).abs() < 1e-6);
    Ok(OracleSolution { actions, total_reward })
}

/// Brute force over all `2^horizon` sequences, each replayed through an episode.
pub fn exhaustive_oracle(env: &EnvConfig, day: &HouseholdDay, horizon: usize) -> Result<OracleSolution> {
    check_horizon(horizon)?;
    if horizon > EXHAUSTIVE_LIMIT {
        return Err(Error::HorizonTooLarge {
            horizon,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    // Slot 0 is the most significant bit, so the first strict maximum is the schedule that
    // idles earliest, the same tie-break the dynamic program uses.
    let decode = |mask: u32| -> Vec<Action> {
        (0..horizon)
            .map(|t| if mask >> (horizon - 1 - t) & 1 == 1 { Action::Charge } else { Action::Idle })
            .collect()
    };
    let mut best: Option<(f64, u32)> = None;
    for mask in 0..(1u32 << horizon) {
        let total = replay_reward(env, day, &decode(mask))?;
        if best.is_none_or(|(b, _)| total > b) {
            best = Some((total, mask));
        }
    }
    let (total_reward, mask) = best.expect("at least one sequence");
    Ok(OracleSolution {
        actions: decode(mask),
        total_reward,
    })
}
