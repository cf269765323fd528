//! Per-slot charging habit of the household: the share of historical days on
//! which the EV was charging in each 15-minute slot.

use serde::{Deserialize, Serialize};

use crate::data::{HouseholdDay, SLOTS_PER_DAY};
use crate::error::{Error, Result};
use crate::stats;

/// Metered EV power above which a slot counts as "charging" (kW).
pub const DEFAULT_CHARGING_THRESHOLD_KW: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlexibilityProfile {
    index: Vec<f64>,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
}

impl FlexibilityProfile {
    /// Wraps a precomputed index and derives its quartiles over the 96 slot values.
    pub fn from_index(index: Vec<f64>) -> Result<Self> {
        if index.len() != SLOTS_PER_DAY {
            return Err(Error::Config(format!("flexibility index needs {SLOTS_PER_DAY} values")));
        }
        if index.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Config("flexibility index values must lie in [0, 1]".into()));
        }
        let (q25, q50, q75) = stats::quartiles(&index);
        Ok(Self { index, q25, q50, q75 })
    }

    /// Builds the index from historical days: `index[t]` is the fraction of days
    /// whose metered EV power at slot `t` exceeds `threshold_kw`.
    pub fn build<'a>(days: impl IntoIterator<Item = &'a HouseholdDay>, threshold_kw: f64) -> Result<Self> {
        let mut counts = [0u32; SLOTS_PER_DAY];
        let mut n_days = 0u32;
        for day in days {
            n_days += 1;
            for (count, &kw) in counts.iter_mut().zip(day.ev_metered()) {
                if kw > threshold_kw {
                    *count += 1;
                }
            }
        }
        if n_days == 0 {
            return Err(Error::EmptyDataset("training"));
        }
        let index = counts.iter().map(|&c| f64::from(c) / f64::from(n_days)).collect();
        Self::from_index(index)
    }

    pub fn flex_at(&self, slot: usize) -> f64 {
        self.index[slot]
    }

    pub fn index(&self) -> &[f64] {
        &self.index
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::{date, day_charging_at};

    #[test]
    fn always_and_never_charged_slots() {
        let days: Vec<_> = (1..=3).map(|d| day_charging_at(date(2018, 6, d), &[80], 3.3)).collect();
        let p = FlexibilityProfile::build(&days, DEFAULT_CHARGING_THRESHOLD_KW).unwrap();
        assert_eq!(p.flex_at(80), 1.0);
        assert_eq!(p.flex_at(10), 0.0);
    }

    #[test]
    fn half_the_days() {
        let days = vec![
            day_charging_at(date(2018, 6, 1), &[40], 3.3),
            day_charging_at(date(2018, 6, 2), &[40], 1.5),
            day_charging_at(date(2018, 6, 3), &[], 3.3),
            day_charging_at(date(2018, 6, 4), &[40], 0.05),
        ];
        let p = FlexibilityProfile::build(&days, DEFAULT_CHARGING_THRESHOLD_KW).unwrap();
        assert_eq!(p.flex_at(40), 0.5);
    }

    #[test]
    fn constant_index_quantiles() {
        let p = FlexibilityProfile::from_index(vec![0.3; SLOTS_PER_DAY]).unwrap();
        assert_eq!((p.q25, p.q50, p.q75), (0.3, 0.3, 0.3));
    }

    #[test]
    fn zero_data_and_fixture_values() {
        let days = vec![day_charging_at(date(2018, 6, 1), &[], 3.3)];
        let p = FlexibilityProfile::build(&days, DEFAULT_CHARGING_THRESHOLD_KW).unwrap();
        assert!(p.index().iter().all(|&v| v == 0.0));

        let mut index = vec![0.0; SLOTS_PER_DAY];
        index[40] = 0.25;
        assert_eq!(FlexibilityProfile::from_index(index).unwrap().flex_at(40), 0.25);
    }

    #[test]
    fn errors() {
        assert!(FlexibilityProfile::build(std::iter::empty(), 0.1).is_err());
        assert!(FlexibilityProfile::from_index(vec![0.5; 10]).is_err());
        assert!(FlexibilityProfile::from_index(vec![1.5; SLOTS_PER_DAY]).is_err());
    }
}
