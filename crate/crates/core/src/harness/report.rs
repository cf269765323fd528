//! Evaluation artefacts on disk: summary, per-day trajectories, plot series
//! and grid consumption per tariff period.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::eval::Evaluation;
use super::policy::Trajectory;
use super::train::LearningCurve;
use crate::data::SLOTS_PER_HOUR;
use crate::error::{Error, Result};
use crate::tariff::{ClockTime, TariffSchedule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: usize,
    pub time: ClockTime,
    pub price: f64,
    pub period: String,
    pub pv: f64,
    pub non_ev: f64,
    pub ev_metered: f64,
    pub ev_policy: f64,
    pub soc_metered: f64,
    pub soc_policy: f64,
    pub grid_metered: f64,
    pub grid_policy: f64,
}

/// Net grid energy drawn in one tariff period of one day, in kWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TouPeriodRow {
    pub date: NaiveDate,
    pub period: String,
    pub price: f64,
    pub grid_metered_kwh: f64,
    pub grid_policy_kwh: f64,
}

/// Slot net grid power in kW; negative when exporting.
fn grid_kw(pv: f64, non_ev: f64, ev: f64) -> f64 {
    ev + non_ev - pv
}

/// Per-slot grid energy of a trajectory in kWh.
pub fn grid_kwh(traj: &Trajectory) -> Vec<f64> {
    traj.rows.iter().map(|r| grid_kw(r.pv, r.non_ev, r.p_ev) / SLOTS_PER_HOUR).collect()
}

/// Sums grid energy by tariff band label, in order of first appearance.
pub fn tou_breakdown(tariff: &TariffSchedule, traj: &Trajectory) -> Vec<(String, f64, f64)> {
    let mut out: Vec<(String, f64, f64)> = Vec::new();
    for (row, kwh) in traj.rows.iter().zip(grid_kwh(traj)) {
        let band = tariff.band_at(row.t);
        let label = band.label();
        match out.iter_mut().find(|(l, _, _)| *l == label) {
            Some(entry) => entry.2 += kwh,
            None => out.push((label, band.price, kwh)),
        }
    }
    out
}

pub fn tou_rows(tariff: &TariffSchedule, evaluation: &Evaluation) -> Vec<TouPeriodRow> {
    evaluation
        .days
        .iter()
        .flat_map(|d| {
            let metered = tou_breakdown(tariff, &d.metered);
            let policy = tou_breakdown(tariff, &d.policy);
            metered
                .into_iter()
                .zip(policy)
                .map(|((period, price, m), (_, _, p))| TouPeriodRow {
                    date: d.row.date,
                    period,
                    price,
                    grid_metered_kwh: m,
                    grid_policy_kwh: p,
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

pub fn series_rows(tariff: &TariffSchedule, policy: &Trajectory, metered: &Trajectory) -> Vec<SeriesRow> {
    policy
        .rows
        .iter()
        .zip(&metered.rows)
        .map(|(p, m)| SeriesRow {
            t: p.t,
            time: ClockTime(p.t as u32 * 15),
            price: p.price,
            period: tariff.band_at(p.t).label(),
            pv: p.pv,
            non_ev: p.non_ev,
            ev_metered: m.p_ev,
            ev_policy: p.p_ev,
            soc_metered: m.soc,
            soc_policy: p.soc,
            grid_metered: grid_kw(m.pv, m.non_ev, m.p_ev),
            grid_policy: grid_kw(p.pv, p.non_ev, p.p_ev),
        })
        .collect()
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Paths of everything [`write_report`] produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub summary: PathBuf,
    pub trajectories: Vec<PathBuf>,
    pub series: Vec<PathBuf>,
    pub tou: PathBuf,
}

/// Writes `summary.json`, `trajectories/<date>.csv`, `series/<date>.csv` and
/// `tou_periods.csv` under `dir`.
pub fn write_report(dir: impl AsRef<Path>, tariff: &TariffSchedule, evaluation: &Evaluation) -> Result<ReportFiles> {
    let dir = dir.as_ref();
    let traj_dir = dir.join("trajectories");
    let series_dir = dir.join("series");
    for d in [dir, &traj_dir, &series_dir] {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let summary = dir.join("summary.json");
    write_json(&summary, &evaluation.report)?;

    let mut files = ReportFiles {
        summary,
        trajectories: Vec::new(),
        series: Vec::new(),
        tou: dir.join("tou_periods.csv"),
    };
    for d in &evaluation.days {
        let name = format!("{}.csv", d.row.date);
        let path = traj_dir.join(&name);
        write_rows(&path, &d.policy.rows)?;
        files.trajectories.push(path);
        let path = series_dir.join(&name);
        write_rows(&path, &series_rows(tariff, &d.policy, &d.metered))?;
        files.series.push(path);
    }
    write_rows(&files.tou, &tou_rows(tariff, evaluation))?;
    Ok(files)
}

/// Writes `episodes.csv` and `greedy.csv` under `dir`.
pub fn write_learning_curve(dir: impl AsRef<Path>, curve: &LearningCurve) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_rows(&dir.join("episodes.csv"), &curve.episodes)?;
    write_rows(&dir.join("greedy.csv"), &curve.greedy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::{date, day_charging_at};
    use crate::data::SLOTS_PER_DAY;
    use crate::env::fixtures::env_with;
    use crate::harness::eval::{evaluate, SolarAccounting};
    use crate::harness::policy::Policy;
    use crate::tariff::CostQuantiles;

    #[test]
    fn tou_totals_conserve_daily_grid_energy() {
        let env = env_with(vec![0.5; SLOTS_PER_DAY], CostQuantiles { q25: 0.01, q50: 0.02, q75: 0.03 });
        let days = [day_charging_at(date(2018, 7, 1), &[3, 50, 60, 90], 3.3)];
        let ev = evaluate(&Policy::TariffGreedy, &env, &days, SolarAccounting::Gross).unwrap();
        let rows = tou_rows(&env.tariff, &ev);
        assert_eq!(rows.len(), 3);
        let total_p: f64 = rows.iter().map(|r| r.grid_policy_kwh).sum();
        let total_m: f64 = rows.iter().map(|r| r.grid_metered_kwh).sum();
        assert!((total_p - grid_kwh(&ev.days[0].policy).iter().sum::<f64>()).abs() < 1e-9);
        assert!((total_m - grid_kwh(&ev.days[0].metered).iter().sum::<f64>()).abs() < 1e-9);
        let extra = (ev.days[0].policy.charged_kw() - ev.days[0].metered.charged_kw()) / 4.0;
        assert!((total_p - total_m - extra).abs() < 1e-9);
    }

    #[test]
    fn report_writes_one_trajectory_per_day() {
        let env = env_with(vec![0.5; SLOTS_PER_DAY], CostQuantiles { q25: 0.01, q50: 0.02, q75: 0.03 });
        let days = [
            day_charging_at(date(2018, 7, 1), &[70], 3.3),
            day_charging_at(date(2018, 7, 2), &[71], 3.3),
        ];
        let ev = evaluate(&Policy::DpOracle, &env, &days, SolarAccounting::Gross).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = write_report(dir.path(), &env.tariff, &ev).unwrap();
        assert_eq!(files.trajectories.len(), 2);
        let text = fs::read_to_string(&files.trajectories[0]).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,price,pv,non_ev,action,p_ev,soc,r1,r2,r3,r4,R,cost");
        assert_eq!(lines.count(), SLOTS_PER_DAY);
        assert!(files.summary.exists() && files.tou.exists());
    }
}
