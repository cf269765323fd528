//! Charging policies and per-day rollouts.

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::oracle::dp_oracle;
use crate::agent::{greedy_action, QNetwork};
use crate::data::{daily_ev_demand, HouseholdDay, SLOTS_PER_DAY};
use crate::env::reward::ENERGY_BUDGET_FACTOR;
use crate::env::{charging_power, starting_soc, Action, EnvConfig, EnvState, Episode};
use crate::error::Result;
use crate::flexibility::DEFAULT_CHARGING_THRESHOLD_KW;

#[derive(Debug, Clone)]
pub enum Policy {
    /// Greedy with respect to a trained Q-network.
    Dqn(QNetwork),
    /// The household's recorded EV consumption, not driven through the environment.
    MeteredReplay,
    /// Fair coin per slot, seeded per day.
    Random { seed: u64 },
    /// Charges in the cheapest slots until the budget is met.
    TariffGreedy,
    /// Charges whenever PV is present and budget remains.
    SolarGreedy,
    /// Exact reward maximiser.
    DpOracle,
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Dqn(_) => "dqn",
            Policy::MeteredReplay => "metered",
            Policy::Random { .. } => "random",
            Policy::TariffGreedy => "tariff-greedy",
            Policy::SolarGreedy => "solar-greedy",
            Policy::DpOracle => "oracle",
        }
    }
}

/// One slot of a rollout. Reward columns are empty for metered replay, whose
/// action marks slots above the charging threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: usize,
    pub price: f64,
    pub pv: f64,
    pub non_ev: f64,
    pub action: Option<u8>,
    pub p_ev: f64,
    /// SoC at the start of the slot.
    pub soc: f64,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub r3: Option<f64>,
    pub r4: Option<f64>,
    #[serde(rename = "R")]
    pub total: Option<f64>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub date: NaiveDate,
    pub policy: String,
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    pub fn ev_power(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.p_ev).collect()
    }

    /// Sum of slot costs, accumulated in slot order.
    pub fn cost(&self) -> f64 {
        self.rows.iter().map(|r| r.cost).sum()
    }

    pub fn total_reward(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.total).sum()
    }

    pub fn charged_kw(&self) -> f64 {
        self.rows.iter().map(|r| r.p_ev).sum()
    }
}

/// Drives `actions` through an episode and records every slot.
pub fn trajectory_from_actions(env: &EnvConfig, day: &HouseholdDay, policy: &str, actions: &[Action]) -> Result<Trajectory> {
    let mut episode = Episode::new(env, day);
    let mut rows = Vec::with_capacity(actions.len());
    for &a in actions {
        let before = *episode.state();
        let step = episode.step(a)?;
        rows.push(row_for(&before, a, step.p_ev, step.cost, Some(step.reward.parts()), Some(step.reward.total)));
    }
    Ok(Trajectory {
        date: day.date(),
        policy: policy.to_string(),
        rows,
    })
}

fn row_for(s: &EnvState, a: Action, p_ev: f64, cost: f64, r: Option<[f64; 4]>, total: Option<f64>) -> TrajectoryRow {
    TrajectoryRow {
        t: s.t,
        price: s.price,
        pv: s.pv,
        non_ev: s.non_ev,
        action: Some(a.index() as u8),
        p_ev,
        soc: s.soc,
        r1: r.map(|r| r[0]),
        r2: r.map(|r| r[1]),
        r3: r.map(|r| r[2]),
        r4: r.map(|r| r[3]),
        total,
        cost,
    }
}

/// The recorded day priced with the same slot-cost function as the environment.
/// SoC follows the recorded power from the same starting point.
pub fn metered_trajectory(env: &EnvConfig, day: &HouseholdDay) -> Trajectory {
    let mut soc = starting_soc(&env.battery, daily_ev_demand(day));
    let rows = (0..SLOTS_PER_DAY)
        .map(|t| {
            let p_ev = day.ev_metered()[t];
            let action = if p_ev > DEFAULT_CHARGING_THRESHOLD_KW { Action::Charge } else { Action::Idle };
            let s = env.observe(day, t, 0.0, soc);
            let cost = env.tariff.step_cost(t, Action::Charge, p_ev, s.non_ev, s.pv);
            let row = row_for(&s, action, p_ev, cost, None, None);
            soc = (soc + env.battery.soc_gain(p_ev)).min(env.battery.soc_max);
            row
        })
        .collect();
    Trajectory {
        date: day.date(),
        policy: Policy::MeteredReplay.name().to_string(),
        rows,
    }
}

fn day_seed(seed: u64, date: NaiveDate) -> u64 {
    seed ^ (date.num_days_from_ce() as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Rule-based action sequence; `order` ranks slots by preference, best first.
fn budgeted_plan(env: &EnvConfig, day: &HouseholdDay, order: &[usize]) -> Vec<Action> {
    let p_day = daily_ev_demand(day);
    let budget = ENERGY_BUDGET_FACTOR * p_day;
    let mut charge = vec![false; SLOTS_PER_DAY];
    let mut planned = Vec::new();
    for &t in order {
        planned.push(t);
        planned.sort_unstable();
        // charging power depends on SoC, which depends on how many charges precede
        let mut soc = starting_soc(&env.battery, p_day);
        let mut run = 0.0;
        for _ in &planned {
            let p = charging_power(&env.battery, soc);
            run += p;
            soc = (soc + env.battery.soc_gain(p)).min(env.battery.soc_max);
        }
        if run > budget {
            planned.retain(|&x| x != t);
            break;
        }
        charge[t] = true;
    }
    charge.into_iter().map(|c| if c { Action::Charge } else { Action::Idle }).collect()
}

fn tariff_greedy_plan(env: &EnvConfig, day: &HouseholdDay) -> Vec<Action> {
    let mut order: Vec<usize> = (0..SLOTS_PER_DAY).collect();
    let price = |t: usize| env.tariff.price_at(t);
    let net = |t: usize| day.non_ev()[t] - day.pv()[t];
    // cheapest tariff first, then the slots with the most surplus PV
    order.sort_by(|&a, &b| price(a).total_cmp(&price(b)).then(net(a).total_cmp(&net(b))).then(a.cmp(&b)));
    budgeted_plan(env, day, &order)
}

fn solar_greedy_plan(env: &EnvConfig, day: &HouseholdDay) -> Vec<Action> {
    let order: Vec<usize> = (0..SLOTS_PER_DAY).filter(|&t| day.pv()[t] > 0.0).collect();
    budgeted_plan(env, day, &order)
}

/// Runs `policy` over a full day.
pub fn rollout(policy: &Policy, env: &EnvConfig, day: &HouseholdDay) -> Result<Trajectory> {
    let name = policy.name();
    match policy {
        Policy::MeteredReplay => Ok(metered_trajectory(env, day)),
        Policy::DpOracle => {
            let sol = dp_oracle(env, day, SLOTS_PER_DAY)?;
            trajectory_from_actions(env, day, name, &sol.actions)
        }
        Policy::TariffGreedy => trajectory_from_actions(env, day, name, &tariff_greedy_plan(env, day)),
        Policy::SolarGreedy => trajectory_from_actions(env, day, name, &solar_greedy_plan(env, day)),
        Policy::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(day_seed(*seed, day.date()));
            let actions: Vec<Action> = (0..SLOTS_PER_DAY)
                .map(|_| if rng.random_bool(0.5) { Action::Charge } else { Action::Idle })
                .collect();
            trajectory_from_actions(env, day, name, &actions)
        }
        Policy::Dqn(net) => {
            let mut episode = Episode::new(env, day);
            let mut actions = Vec::with_capacity(SLOTS_PER_DAY);
            while !episode.is_done() {
                let a = greedy_action(net.q_values(&episode.features())?);
                episode.step(a)?;
                actions.push(a);
            }
            trajectory_from_actions(env, day, name, &actions)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::Activation;
    use crate::data::fixtures::{date, day_charging_at};
    use crate::env::fixtures::env_with;
    use crate::tariff::CostQuantiles;

    fn env() -> EnvConfig {
        env_with(vec![0.5; SLOTS_PER_DAY], CostQuantiles { q25: 0.01, q50: 0.02, q75: 0.03 })
    }

    #[test]
    fn every_policy_produces_a_full_day() {
        let env = env();
        let day = day_charging_at(date(2018, 7, 1), &[80, 81, 82, 83], 3.3);
        let net = QNetwork::zeros(&[6, 4, 2], Activation::Softplus).unwrap();
        for p in [
            Policy::Dqn(net),
            Policy::MeteredReplay,
            Policy::Random { seed: 3 },
            Policy::TariffGreedy,
            Policy::SolarGreedy,
            Policy::DpOracle,
        ] {
            let tr = rollout(&p, &env, &day).unwrap();
            assert_eq!(tr.rows.len(), SLOTS_PER_DAY, "{}", p.name());
            assert!(tr.rows.iter().enumerate().all(|(i, r)| r.t == i));
        }
    }

    #[test]
    fn metered_cost_matches_daily_cost_exactly() {
        let env = env();
        let day = day_charging_at(date(2018, 7, 1), &[60, 61, 90], 3.3);
        let tr = metered_trajectory(&env, &day);
        assert_eq!(tr.cost(), env.tariff.daily_cost(&day, day.ev_metered()));
        assert_eq!(tr.ev_power(), day.ev_metered());
        assert_eq!(tr.total_reward(), None);
    }

    #[test]
    fn tariff_greedy_stays_in_budget_and_uses_off_peak() {
        let env = env();
        let day = day_charging_at(date(2018, 7, 1), &[60, 61, 62, 63], 3.3);
        let tr = rollout(&Policy::TariffGreedy, &env, &day).unwrap();
        let demand = daily_ev_demand(&day);
        assert!(tr.charged_kw() <= ENERGY_BUDGET_FACTOR * demand);
        // one 3.3 kW charge lifts SoC past the taper, the rest run at 1.5 kW
        assert!((tr.charged_kw() - (3.3 + 7.0 * 1.5)).abs() < 1e-9);
        for r in tr.rows.iter().filter(|r| r.action == Some(1)) {
            assert_eq!(r.price, env.tariff.min_price());
        }
    }

    #[test]
    fn random_policy_is_reproducible() {
        let env = env();
        let day = day_charging_at(date(2018, 7, 1), &[60], 3.3);
        let a = rollout(&Policy::Random { seed: 9 }, &env, &day).unwrap();
        let b = rollout(&Policy::Random { seed: 9 }, &env, &day).unwrap();
        assert_eq!(a, b);
    }
}
