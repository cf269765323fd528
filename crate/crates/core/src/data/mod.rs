//! Household time series: one 96-slot day of PV generation, non-EV load and
//! metered EV charging, grouped into a dataset with a train/test partition.
//!
//! Slot `t` covers minutes `[15t, 15(t+1))` after local midnight and holds the
//! average power over that window in kW. Energy in kWh is therefore `power / 4`.

mod csv_io;
mod synth;

use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{
    ingest_csv, load_dataset, read_json, write_csv, write_json, ColumnMap, IngestOptions, IngestReport,
};
pub use synth::{synthesize_dataset, synthesize_day, EvSession, SynthProfile};

/// Number of 15-minute slots in a day.
pub const SLOTS_PER_DAY: usize = 96;

/// Slots per hour; converts slot-average kW into kWh.
pub const SLOTS_PER_HOUR: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDay")]
pub struct HouseholdDay {
    date: NaiveDate,
    pv: Vec<f64>,
    non_ev: Vec<f64>,
    ev_metered: Vec<f64>,
}

#[derive(Deserialize)]
struct RawDay {
    date: NaiveDate,
    pv: Vec<f64>,
    non_ev: Vec<f64>,
    ev_metered: Vec<f64>,
}

impl TryFrom<RawDay> for HouseholdDay {
    type Error = Error;

    fn try_from(raw: RawDay) -> Result<Self> {
        HouseholdDay::new(raw.date, raw.pv, raw.non_ev, raw.ev_metered)
    }
}

impl HouseholdDay {
    pub fn new(date: NaiveDate, pv: Vec<f64>, non_ev: Vec<f64>, ev_metered: Vec<f64>) -> Result<Self> {
        for (name, series) in [("pv", &pv), ("non_ev", &non_ev), ("ev_metered", &ev_metered)] {
            if series.len() != SLOTS_PER_DAY {
                return Err(Error::InvalidDay {
                    date,
                    reason: format!("{name} has {} slots, expected {SLOTS_PER_DAY}", series.len()),
                });
            }
            if let Some(t) = series.iter().position(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidDay {
                    date,
                    reason: format!("{name}[{t}] = {} is negative or non-finite", series[t]),
                });
            }
        }
        Ok(Self {
            date,
            pv,
            non_ev,
            ev_metered,
        })
    }

    pub fn date(&self) -> NaiveDate {
        self.date
    }

    pub fn pv(&self) -> &[f64] {
        &self.pv
    }

    pub fn non_ev(&self) -> &[f64] {
        &self.non_ev
    }

    pub fn ev_metered(&self) -> &[f64] {
        &self.ev_metered
    }

    /// Copy of this day with the metered EV series multiplied by `factor`.
    pub fn with_scaled_ev(&self, factor: f64) -> Result<Self> {
        let ev = self.ev_metered.iter().map(|v| v * factor).collect();
        Self::new(self.date, self.pv.clone(), self.non_ev.clone(), ev)
    }

    /// Copy of this day with the metered EV series replaced.
    pub fn with_ev(&self, ev_metered: Vec<f64>) -> Result<Self> {
        Self::new(self.date, self.pv.clone(), self.non_ev.clone(), ev_metered)
    }
}

/// Sum of the metered EV slot powers for the day (a kW-sum; divide by 4 for kWh).
pub fn daily_ev_demand(day: &HouseholdDay) -> f64 {
    day.ev_metered.iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Test,
}

/// Chronologically ordered days with unique dates and a train/test label per day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    days: Vec<HouseholdDay>,
    partition: Vec<Partition>,
}

impl Dataset {
    /// Builds a dataset with every day in the training partition.
    pub fn new(mut days: Vec<HouseholdDay>) -> Result<Self> {
        days.sort_by_key(|d| d.date);
        for pair in days.windows(2) {
            if pair[0].date == pair[1].date {
                return Err(Error::DuplicateDate(pair[0].date));
            }
        }
        let partition = vec![Partition::Train; days.len()];
        Ok(Self { days, partition })
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn days(&self) -> &[HouseholdDay] {
        &self.days
    }

    pub fn partition_of(&self, index: usize) -> Partition {
        self.partition[index]
    }

    /// Marks the last `n_test` days (chronologically) as test days.
    pub fn with_test_tail(mut self, n_test: usize) -> Self {
        let n = self.days.len();
        let cut = n.saturating_sub(n_test);
        for (i, p) in self.partition.iter_mut().enumerate() {
            *p = if i >= cut { Partition::Test } else { Partition::Train };
        }
        self
    }

    /// Marks exactly the given dates as test days.
    pub fn with_test_dates(mut self, dates: &[NaiveDate]) -> Result<Self> {
        let wanted: BTreeSet<_> = dates.iter().copied().collect();
        for date in &wanted {
            if !self.days.iter().any(|d| d.date == *date) {
                return Err(Error::UnknownDay(*date));
            }
        }
        for (day, p) in self.days.iter().zip(self.partition.iter_mut()) {
            *p = if wanted.contains(&day.date) {
                Partition::Test
            } else {
                Partition::Train
            };
        }
        Ok(self)
    }

    fn filtered(&self, which: Partition) -> impl Iterator<Item = &HouseholdDay> + Clone + '_ {
        self.days
            .iter()
            .zip(&self.partition)
            .filter(move |(_, p)| **p == which)
            .map(|(d, _)| d)
    }

    pub fn train_days(&self) -> impl Iterator<Item = &HouseholdDay> + Clone + '_ {
        self.filtered(Partition::Train)
    }

    pub fn test_days(&self) -> impl Iterator<Item = &HouseholdDay> + Clone + '_ {
        self.filtered(Partition::Test)
    }

    pub fn day(&self, date: NaiveDate) -> Result<&HouseholdDay> {
        self.days
            .iter()
            .find(|d| d.date == date)
            .ok_or(Error::UnknownDay(date))
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    pub fn flat_day(date: NaiveDate, pv: f64, non_ev: f64, ev: f64) -> HouseholdDay {
        HouseholdDay::new(
            date,
            vec![pv; SLOTS_PER_DAY],
            vec![non_ev; SLOTS_PER_DAY],
            vec![ev; SLOTS_PER_DAY],
        )
        .unwrap()
    }

    /// A day whose EV series is zero except at the listed slots.
    pub fn day_charging_at(date: NaiveDate, slots: &[usize], kw: f64) -> HouseholdDay {
        let mut ev = vec![0.0; SLOTS_PER_DAY];
        for &t in slots {
            ev[t] = kw;
        }
        HouseholdDay::new(date, vec![0.0; SLOTS_PER_DAY], vec![0.5; SLOTS_PER_DAY], ev).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn rejects_wrong_length_and_negative_values() {
        let d = date(2018, 4, 22);
        assert!(HouseholdDay::new(d, vec![0.0; 95], vec![0.0; 96], vec![0.0; 96]).is_err());
        let mut pv = vec![0.0; 96];
        pv[3] = -0.1;
        assert!(HouseholdDay::new(d, pv, vec![0.0; 96], vec![0.0; 96]).is_err());
        let mut ev = vec![0.0; 96];
        ev[3] = f64::NAN;
        assert!(HouseholdDay::new(d, vec![0.0; 96], vec![0.0; 96], ev).is_err());
    }

    #[test]
    fn demand_of_zero_day_is_zero() {
        assert_eq!(daily_ev_demand(&flat_day(date(2018, 1, 1), 1.0, 1.0, 0.0)), 0.0);
    }

    #[test]
    fn demand_of_four_full_power_slots() {
        let day = day_charging_at(date(2018, 1, 1), &[70, 71, 72, 73], 3.3);
        assert!((daily_ev_demand(&day) - 13.2).abs() < 1e-12);
    }

    #[test]
    fn demand_reproduces_a_table_total() {
        // 21.9 spread as six full 3.3 kW slots plus a 2.1 kW remainder.
        let mut ev = vec![0.0; SLOTS_PER_DAY];
        for v in ev.iter_mut().skip(72).take(6) {
            *v = 3.3;
        }
        ev[78] = 2.1;
        let day = HouseholdDay::new(date(2018, 4, 22), vec![0.0; 96], vec![0.4; 96], ev).unwrap();
        assert!((daily_ev_demand(&day) - 21.9).abs() < 1e-9);
    }

    #[test]
    fn duplicate_dates_rejected() {
        let d = date(2018, 4, 22);
        let err = Dataset::new(vec![flat_day(d, 0.0, 0.0, 0.0), flat_day(d, 1.0, 0.0, 0.0)]);
        assert!(matches!(err, Err(Error::DuplicateDate(_))));
    }

    #[test]
    fn partitions_are_disjoint() {
        let days = (1..=5).map(|i| flat_day(date(2018, 5, i), 0.0, 1.0, 0.0)).collect();
        let ds = Dataset::new(days).unwrap().with_test_tail(2);
        let train: Vec<_> = ds.train_days().map(|d| d.date()).collect();
        let test: Vec<_> = ds.test_days().map(|d| d.date()).collect();
        assert_eq!(train.len(), 3);
        assert_eq!(test, vec![date(2018, 5, 4), date(2018, 5, 5)]);
        assert!(train.iter().all(|d| !test.contains(d)));

        let ds = ds.with_test_dates(&[date(2018, 5, 1)]).unwrap();
        assert_eq!(ds.test_days().count(), 1);
        assert!(ds.with_test_dates(&[date(2019, 1, 1)]).is_err());
    }

    #[test]
    fn json_deserialization_validates() {
        let bad = r#"{"date":"2018-01-01","pv":[1.0],"non_ev":[],"ev_metered":[]}"#;
        assert!(serde_json::from_str::<HouseholdDay>(bad).is_err());
        let good = flat_day(date(2018, 1, 1), 1.0, 0.5, 0.0);
        let text = serde_json::to_string(&good).unwrap();
        assert_eq!(serde_json::from_str::<HouseholdDay>(&text).unwrap(), good);
    }
}
