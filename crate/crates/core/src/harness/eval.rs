//! Per-day and aggregate policy metrics against the household's metered behaviour.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::policy::{metered_trajectory, rollout, Policy, Trajectory};
use crate::data::{daily_ev_demand, HouseholdDay};
use crate::env::{EnvConfig, ENERGY_BUDGET_FACTOR, ENERGY_FLOOR_FACTOR};
use crate::error::Result;
use crate::stats::mean;

/// Metered costs closer to zero than this make a relative saving meaningless.
pub const MIN_METERED_COST: f64 = 1e-9;

/// What counts as solar available to the charger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolarAccounting {
    /// All PV output in the slot.
    #[default]
    Gross,
    /// PV left after the non-EV load.
    NetOfLoad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub date: NaiveDate,
    pub daily_ev_demand: f64,
    pub metered_cost: f64,
    pub policy_cost: f64,
    /// `None` when the metered cost is too close to zero.
    pub cost_savings_pct: Option<f64>,
    /// `None` when the policy did not charge.
    pub solar_utilization_pct: Option<f64>,
    pub total_reward: Option<f64>,
    pub charged_kw: f64,
    /// Charged power over the day's metered demand; `None` for days without demand.
    pub energy_ratio: Option<f64>,
    /// Whether the charged power lands within the accepted band around demand.
    pub energy_in_band: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub policy: String,
    pub solar_accounting: SolarAccounting,
    pub days: usize,
    pub mean_cost_savings_pct: Option<f64>,
    pub mean_solar_utilization_pct: Option<f64>,
    pub mean_total_reward: Option<f64>,
    pub mean_daily_ev_demand: Option<f64>,
    /// Days whose savings could not be expressed relative to a near-zero metered cost.
    pub flagged_days: Vec<NaiveDate>,
    pub rows: Vec<EvalRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayEvaluation {
    pub row: EvalRow,
    pub policy: Trajectory,
    pub metered: Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    pub days: Vec<DayEvaluation>,
}

/// Percentage of charged power drawn while PV was available.
pub fn solar_utilization(day: &HouseholdDay, ev: &[f64], accounting: SolarAccounting) -> Option<f64> {
    let charged: f64 = ev.iter().sum();
    if charged <= 0.0 {
        return None;
    }
    let from_pv: f64 = ev
        .iter()
        .zip(day.pv().iter().zip(day.non_ev()))
        .map(|(&p, (&pv, &load))| {
            let avail = match accounting {
                SolarAccounting::Gross => pv,
                SolarAccounting::NetOfLoad => (pv - load).max(0.0),
            };
            p.min(avail)
        })
        .sum();
    Some(100.0 * from_pv / charged)
}

/// `(C_metered - C_policy) / |C_metered|` in percent.
pub fn cost_savings_pct(metered: f64, policy: f64) -> Option<f64> {
    (metered.abs() >= MIN_METERED_COST).then(|| 100.0 * (metered - policy) / metered.abs())
}

pub fn evaluate_day(policy: &Policy, env: &EnvConfig, day: &HouseholdDay, accounting: SolarAccounting) -> Result<DayEvaluation> {
    let metered = metered_trajectory(env, day);
    let traj = match policy {
        Policy::MeteredReplay => metered.clone(),
        other => rollout(other, env, day)?,
    };
    let demand = daily_ev_demand(day);
    let ev = traj.ev_power();
    let charged = traj.charged_kw();
    let metered_cost = metered.cost();
    let policy_cost = traj.cost();
    let energy_ratio = (demand > 0.0).then(|| charged / demand);
    let row = EvalRow {
        date: day.date(),
        daily_ev_demand: demand,
        metered_cost,
        policy_cost,
        cost_savings_pct: cost_savings_pct(metered_cost, policy_cost),
        solar_utilization_pct: solar_utilization(day, &ev, accounting),
        total_reward: traj.total_reward(),
        charged_kw: charged,
        energy_ratio,
        energy_in_band: match energy_ratio {
            Some(r) => (ENERGY_FLOOR_FACTOR..=ENERGY_BUDGET_FACTOR).contains(&r),
            None => charged == 0.0,
        },
    };
    Ok(DayEvaluation {
        row,
        policy: traj,
        metered,
    })
}

/// Evaluates `policy` on each day in order.
pub fn evaluate<'a>(
    policy: &Policy,
    env: &EnvConfig,
    days: impl IntoIterator<Item = &'a HouseholdDay>,
    accounting: SolarAccounting,
) -> Result<Evaluation> {
    let days = days
        .into_iter()
        .map(|d| evaluate_day(policy, env, d, accounting))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<EvalRow> = days.iter().map(|d| d.row.clone()).collect();
    let report = EvalReport {
        policy: policy.name().to_string(),
        solar_accounting: accounting,
        days: rows.len(),
        mean_cost_savings_pct: mean(rows.iter().filter_map(|r| r.cost_savings_pct)),
        mean_solar_utilization_pct: mean(rows.iter().filter_map(|r| r.solar_utilization_pct)),
        mean_total_reward: mean(rows.iter().filter_map(|r| r.total_reward)),
        mean_daily_ev_demand: mean(rows.iter().map(|r| r.daily_ev_demand)),
        flagged_days: rows.iter().filter(|r| r.cost_savings_pct.is_none()).map(|r| r.date).collect(),
        rows,
    };
    Ok(Evaluation { report, days })
}
