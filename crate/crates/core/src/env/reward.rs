//! Sub-rewards for one charging decision and their weighted total.
//!
//! r1 grades the decision against the day's energy budget and PV availability,
//! r2 against the household's charging habit, r3 against the slot's cost and
//! r4 penalises driving the battery to full.

use serde::{Deserialize, Serialize};

use super::Action;
use crate::flexibility::FlexibilityProfile;
use crate::tariff::CostQuantiles;

/// Multiple of the day's metered EV demand that may be charged before r1 turns punitive.
pub const ENERGY_BUDGET_FACTOR: f64 = 1.05;

/// Lower edge of the accepted daily-energy band, reported at evaluation.
pub const ENERGY_FLOOR_FACTOR: f64 = 0.95;

pub fn within_budget(ev_run_after: f64, p_day_ev: f64) -> bool {
    ev_run_after <= ENERGY_BUDGET_FACTOR * p_day_ev
}

/// Energy/solar reward. `ev_run_after` includes the power of this step's charge.
pub fn reward_r1(action: Action, pv: f64, ev_run_after: f64, p_day_ev: f64) -> f64 {
    let within = within_budget(ev_run_after, p_day_ev);
    match (action, within) {
        (Action::Charge, true) if pv > 0.0 => 3.0,
        (Action::Charge, true) => 2.0,
        (Action::Charge, false) => -10.0,
        (Action::Idle, true) => -0.25,
        (Action::Idle, false) => 0.0,
    }
}

/// Habit reward: charging in slots the user historically charges in pays off.
pub fn reward_r2(action: Action, flex_value: f64, flex: &FlexibilityProfile) -> f64 {
    match action {
        Action::Idle => 0.0,
        Action::Charge if flex_value <= flex.q25 => -2.0,
        Action::Charge if flex_value <= flex.q50 => -1.0,
        Action::Charge if flex_value <= flex.q75 => 1.0,
        Action::Charge => 2.0,
    }
}

/// Cost reward: `step_cost` is the slot cost with this step's charge included.
pub fn reward_r3(action: Action, step_cost: f64, q: &CostQuantiles) -> f64 {
    match action {
        Action::Idle => 0.0,
        Action::Charge if step_cost <= q.q25 => 2.0,
        Action::Charge if step_cost <= q.q50 => 1.0,
        Action::Charge if step_cost <= q.q75 => -1.0,
        Action::Charge => -2.0,
    }
}

/// Overcharge penalty on the post-charge (unclamped) SoC.
pub fn reward_r4(action: Action, soc_after: f64) -> f64 {
    match action {
        Action::Charge if soc_after >= 1.0 => -10.0,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights(pub [f64; 4]);

impl Default for RewardWeights {
    fn default() -> Self {
        Self([1.0; 4])
    }
}

pub fn total_reward(r: [f64; 4], weights: &RewardWeights) -> f64 {
    r.iter().zip(weights.0.iter()).map(|(r, w)| r * w).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub total: f64,
    pub weights: RewardWeights,
}

impl RewardBreakdown {
    pub fn new(r: [f64; 4], weights: RewardWeights) -> Self {
        Self {
            r1: r[0],
            r2: r[1],
            r3: r[2],
            r4: r[3],
            total: total_reward(r, &weights),
            weights,
        }
    }

    pub fn parts(&self) -> [f64; 4] {
        [self.r1, self.r2, self.r3, self.r4]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SLOTS_PER_DAY;

    fn flex(q25: f64, q50: f64, q75: f64) -> FlexibilityProfile {
        let mut p = FlexibilityProfile::from_index(vec![0.0; SLOTS_PER_DAY]).unwrap();
        (p.q25, p.q50, p.q75) = (q25, q50, q75);
        p
    }

    #[test]
    fn r1_cases() {
        assert_eq!(reward_r1(Action::Charge, 2.0, 10.0, 20.0), 3.0);
        assert_eq!(reward_r1(Action::Charge, 0.0, 10.0, 20.0), 2.0);
        assert_eq!(reward_r1(Action::Charge, 2.0, 22.0, 20.0), -10.0);
        assert_eq!(reward_r1(Action::Idle, 2.0, 10.0, 20.0), -0.25);
        assert_eq!(reward_r1(Action::Idle, 0.0, 30.0, 20.0), 0.0);
        // boundary belongs to the budget
        assert_eq!(reward_r1(Action::Charge, 0.0, 21.0, 20.0), 2.0);
    }

    #[test]
    fn r2_cases() {
        let f = flex(0.1, 0.3, 0.5);
        assert_eq!(reward_r2(Action::Idle, 0.9, &f), 0.0);
        assert_eq!(reward_r2(Action::Charge, 0.9, &f), 2.0);
        assert_eq!(reward_r2(Action::Charge, 0.1, &f), -2.0);
        assert_eq!(reward_r2(Action::Charge, 0.2, &f), -1.0);
        assert_eq!(reward_r2(Action::Charge, 0.5, &f), 1.0);
    }

    #[test]
    fn r3_cases() {
        let q = CostQuantiles { q25: 0.01, q50: 0.02, q75: 0.03 };
        assert_eq!(reward_r3(Action::Idle, 1.0, &q), 0.0);
        assert_eq!(reward_r3(Action::Charge, -0.05, &q), 2.0);
        assert_eq!(reward_r3(Action::Charge, 0.015, &q), 1.0);
        assert_eq!(reward_r3(Action::Charge, 0.03, &q), -1.0);
        assert_eq!(reward_r3(Action::Charge, 0.5, &q), -2.0);
    }

    #[test]
    fn r4_cases() {
        assert_eq!(reward_r4(Action::Charge, 1.01), -10.0);
        assert_eq!(reward_r4(Action::Charge, 0.8), 0.0);
        assert_eq!(reward_r4(Action::Idle, 1.0), 0.0);
    }

    #[test]
    fn weighted_totals() {
        let ones = RewardWeights::default();
        assert_eq!(total_reward([3.0, 2.0, 2.0, 0.0], &ones), 7.0);
        assert_eq!(total_reward([0.0; 4], &ones), 0.0);
        assert_eq!(total_reward([3.0, 0.0, 0.0, 0.0], &RewardWeights([2.0, 1.0, 1.0, 1.0])), 6.0);
        let b = RewardBreakdown::new([3.0, -1.0, 2.0, -10.0], RewardWeights([0.5, 2.0, 1.0, 0.1]));
        assert_eq!(b.total, 0.5 * 3.0 - 2.0 + 2.0 - 1.0);
    }
}
