//! The daily charging decision process.
//!
//! Each episode replays one household day slot by slot. At every slot the agent
//! either charges at the charger's current power level or stays idle; SoC and
//! the running charged power follow deterministically from the decision.

mod battery;
pub mod reward;

use serde::{Deserialize, Serialize};

pub use battery::{charging_power, starting_soc, BatterySpec};
pub use reward::{
    reward_r1, reward_r2, reward_r3, reward_r4, total_reward, RewardBreakdown, RewardWeights,
    ENERGY_BUDGET_FACTOR, ENERGY_FLOOR_FACTOR,
};

use crate::data::{daily_ev_demand, HouseholdDay, SLOTS_PER_DAY};
use crate::error::{Error, Result};
use crate::flexibility::{FlexibilityProfile, DEFAULT_CHARGING_THRESHOLD_KW};
use crate::tariff::{cost_quantiles, CostFilter, CostQuantiles, TariffSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Idle = 0,
    Charge = 1,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::Idle, Action::Charge];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Action::Idle),
            1 => Some(Action::Charge),
            _ => None,
        }
    }

    /// 1.0 when charging, 0.0 when idle.
    pub fn indicator(self) -> f64 {
        self.index() as f64
    }
}

/// Raw observation at slot `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    /// $/kWh
    pub price: f64,
    /// kW
    pub pv: f64,
    /// kW
    pub non_ev: f64,
    /// Sum of EV charging powers since the start of the day (kW-sum).
    pub ev_run: f64,
    pub soc: f64,
    pub t: usize,
}

/// Normalisation caps for the agent-facing feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureScaling {
    pub pv_cap_kw: f64,
    pub load_cap_kw: f64,
}

impl Default for FeatureScaling {
    fn default() -> Self {
        Self {
            pv_cap_kw: 10.0,
            load_cap_kw: 5.0,
        }
    }
}

pub const N_FEATURES: usize = 6;

/// User-facing environment settings; the data-derived parts (habit profile and
/// cost thresholds) are filled in by [`EnvConfig::from_training_days`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvSettings {
    pub tariff: TariffSchedule,
    pub battery: BatterySpec,
    pub weights: RewardWeights,
    pub scaling: FeatureScaling,
    pub charging_threshold_kw: f64,
    pub cost_filter: CostFilter,
}

impl Default for EnvSettings {
    fn default() -> Self {
        Self {
            tariff: TariffSchedule::default(),
            battery: BatterySpec::default(),
            weights: RewardWeights::default(),
            scaling: FeatureScaling::default(),
            charging_threshold_kw: DEFAULT_CHARGING_THRESHOLD_KW,
            cost_filter: CostFilter::default(),
        }
    }
}

/// Everything an episode needs besides the day itself. Immutable and shareable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub tariff: TariffSchedule,
    pub flex: FlexibilityProfile,
    pub cost_q: CostQuantiles,
    pub battery: BatterySpec,
    pub weights: RewardWeights,
    pub scaling: FeatureScaling,
}

impl EnvConfig {
    pub fn from_training_days<'a>(
        days: impl IntoIterator<Item = &'a HouseholdDay> + Clone,
        settings: &EnvSettings,
    ) -> Result<Self> {
        settings.battery.validate()?;
        let flex = FlexibilityProfile::build(days.clone(), settings.charging_threshold_kw)?;
        let cost_q = cost_quantiles(days, &settings.tariff, settings.cost_filter)?;
        Ok(Self {
            tariff: settings.tariff.clone(),
            flex,
            cost_q,
            battery: settings.battery.clone(),
            weights: settings.weights,
            scaling: settings.scaling.clone(),
        })
    }

    /// Slot `t` observation for the given battery state; `t == 96` is the terminal state.
    pub fn observe(&self, day: &HouseholdDay, t: usize, ev_run: f64, soc: f64) -> EnvState {
        let (price, pv, non_ev) = if t < SLOTS_PER_DAY {
            (self.tariff.price_at(t), day.pv()[t], day.non_ev()[t])
        } else {
            (0.0, 0.0, 0.0)
        };
        EnvState {
            price,
            pv,
            non_ev,
            ev_run,
            soc,
            t,
        }
    }

    /// Min-max scaled feature vector fed to the Q-network.
    pub fn features(&self, state: &EnvState, p_day_ev: f64) -> [f64; N_FEATURES] {
        let budget = (ENERGY_BUDGET_FACTOR * p_day_ev).max(self.battery.p_high_kw);
        [
            state.price / self.tariff.max_price(),
            state.pv / self.scaling.pv_cap_kw,
            state.non_ev / self.scaling.load_cap_kw,
            state.ev_run / budget,
            state.soc,
            state.t as f64 / SLOTS_PER_DAY as f64,
        ]
    }

    /// Applies `action` at `state` without touching any episode. Rewards are
    /// graded on the pre-transition slot; r1 sees the running power after the
    /// charge and r4 the unclamped post-charge SoC.
    pub fn transition(&self, day: &HouseholdDay, p_day_ev: f64, state: &EnvState, action: Action) -> Step {
        let t = state.t;
        let (p_ev, soc_unclamped) = match action {
            Action::Charge => {
                let p = charging_power(&self.battery, state.soc);
                (p, state.soc + self.battery.soc_gain(p))
            }
            Action::Idle => (0.0, state.soc),
        };
        let ev_run = state.ev_run + p_ev;
        let cost = self.tariff.step_cost(t, action, p_ev, state.non_ev, state.pv);
        let r = [
            reward_r1(action, state.pv, ev_run, p_day_ev),
            reward_r2(action, self.flex.flex_at(t), &self.flex),
            reward_r3(action, cost, &self.cost_q),
            reward_r4(action, soc_unclamped),
        ];
        let soc = soc_unclamped.min(self.battery.soc_max);
        Step {
            next: self.observe(day, t + 1, ev_run, soc),
            reward: RewardBreakdown::new(r, self.weights),
            done: t + 1 == SLOTS_PER_DAY,
            action,
            p_ev,
            cost,
            soc_unclamped,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub next: EnvState,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub action: Action,
    pub p_ev: f64,
    /// Slot cost in $ with this step's EV power included.
    pub cost: f64,
    pub soc_unclamped: f64,
}

/// One day of decisions. Single-threaded mutable state borrowing a shared config.
#[derive(Debug, Clone)]
pub struct Episode<'a> {
    env: &'a EnvConfig,
    day: &'a HouseholdDay,
    p_day_ev: f64,
    soc_start: f64,
    state: EnvState,
    done: bool,
}

impl<'a> Episode<'a> {
    pub fn new(env: &'a EnvConfig, day: &'a HouseholdDay) -> Self {
        let p_day_ev = daily_ev_demand(day);
        let soc_start = starting_soc(&env.battery, p_day_ev);
        Self {
            env,
            day,
            p_day_ev,
            soc_start,
            state: env.observe(day, 0, 0.0, soc_start),
            done: false,
        }
    }

    pub fn reset(&mut self) -> EnvState {
        self.state = self.env.observe(self.day, 0, 0.0, self.soc_start);
        self.done = false;
        self.state
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn features(&self) -> [f64; N_FEATURES] {
        self.env.features(&self.state, self.p_day_ev)
    }

    pub fn p_day_ev(&self) -> f64 {
        self.p_day_ev
    }

    pub fn soc_start(&self) -> f64 {
        self.soc_start
    }

    pub fn day(&self) -> &'a HouseholdDay {
        self.day
    }

    pub fn env(&self) -> &'a EnvConfig {
        self.env
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn step(&mut self, action: Action) -> Result<Step> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let step = self.env.transition(self.day, self.p_day_ev, &self.state, action);
        self.state = step.next;
        self.done = step.done;
        Ok(step)
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Config with a hand-set habit profile (`flex_at(t)` = `index[t]`) and cost thresholds.
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
}
