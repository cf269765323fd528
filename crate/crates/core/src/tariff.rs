//! Time-of-use tariffs, per-slot electricity cost and the cost thresholds used
//! to grade charging decisions.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::{HouseholdDay, SLOTS_PER_DAY, SLOTS_PER_HOUR};
use crate::env::Action;
use crate::error::{Error, Result};
use crate::stats;

const MINUTES_PER_DAY: u32 = 24 * 60;

/// Wall-clock time of day in minutes, written as `"HH:MM"` (with `"24:00"` allowed as an end).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ClockTime(pub u32);

impl fmt::Display for ClockTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.0 / 60, self.0 % 60)
    }
}

impl std::str::FromStr for ClockTime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = || Error::InvalidTariff(format!("bad time {s:?}, expected HH:MM"));
        let (h, m) = s.trim().split_once(':').ok_or_else(err)?;
        let h: u32 = h.parse().map_err(|_| err())?;
        let m: u32 = m.parse().map_err(|_| err())?;
        if m >= 60 || h * 60 + m > MINUTES_PER_DAY {
            return Err(err());
        }
        Ok(ClockTime(h * 60 + m))
    }
}

impl Serialize for ClockTime {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClockTime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TariffBand {
    pub start: ClockTime,
    pub end: ClockTime,
    /// $/kWh
    pub price: f64,
    #[serde(default)]
    pub period: Option<String>,
}

impl TariffBand {
    fn contains(&self, minute: u32) -> bool {
        self.start.0 <= minute && minute < self.end.0
    }

    /// Period label, falling back to the price when the band is unnamed.
    pub fn label(&self) -> String {
        self.period.clone().unwrap_or_else(|| format!("{}", self.price))
    }
}

/// Bands sorted by start time that partition the day with no gap or overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TariffFile", into = "TariffFile")]
pub struct TariffSchedule {
    bands: Vec<TariffBand>,
}

#[derive(Serialize, Deserialize)]
struct TariffFile {
    bands: Vec<TariffBand>,
}

impl TryFrom<TariffFile> for TariffSchedule {
    type Error = Error;

    fn try_from(file: TariffFile) -> Result<Self> {
        TariffSchedule::new(file.bands)
    }
}

impl From<TariffSchedule> for TariffFile {
    fn from(s: TariffSchedule) -> Self {
        TariffFile { bands: s.bands }
    }
}

impl Default for TariffSchedule {
    fn default() -> Self {
        Self::austin_summer_2018()
    }
}

impl TariffSchedule {
    pub fn new(mut bands: Vec<TariffBand>) -> Result<Self> {
        if bands.is_empty() {
            return Err(Error::InvalidTariff("no bands".into()));
        }
        bands.sort_by_key(|b| b.start);
        let mut cursor = 0;
        for band in &bands {
            if !(band.price.is_finite() && band.price >= 0.0) {
                return Err(Error::InvalidTariff(format!("price {} must be finite and >= 0", band.price)));
            }
            if band.start.0 != cursor {
                return Err(Error::InvalidTariff(format!(
                    "{} at {}, next band starts at {}",
                    if band.start.0 > cursor { "gap" } else { "overlap" },
                    ClockTime(cursor),
                    band.start
                )));
            }
            if band.end <= band.start {
                return Err(Error::InvalidTariff(format!("empty band {}-{}", band.start, band.end)));
            }
            cursor = band.end.0;
        }
        if cursor != MINUTES_PER_DAY {
            return Err(Error::InvalidTariff(format!("bands end at {}, not 24:00", ClockTime(cursor))));
        }
        Ok(Self { bands })
    }

    /// 2018 summer weekday residential tariff for Austin, Texas.
    pub fn austin_summer_2018() -> Self {
        const OFF_PEAK: f64 = 0.01188;
        const MID_PEAK: f64 = 0.06218;
        const ON_PEAK: f64 = 0.11003;
        let band = |start: u32, end: u32, price: f64, period: &str| TariffBand {
            start: ClockTime(start * 60),
            end: ClockTime(end * 60),
            price,
            period: Some(period.to_string()),
        };
        Self::new(vec![
            band(0, 6, OFF_PEAK, "off-peak"),
            band(6, 14, MID_PEAK, "mid-peak"),
            band(14, 20, ON_PEAK, "on-peak"),
            band(20, 22, MID_PEAK, "mid-peak"),
            band(22, 24, OFF_PEAK, "off-peak"),
        ])
        .expect("built-in schedule is valid")
    }

    /// Loads a schedule from JSON (`{"bands": [...]}` or a bare array) or TOML
    /// (`[[bands]]` tables), chosen by file extension.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_toml = path.extension().is_some_and(|e| e == "toml");
        Self::parse(&text, is_toml)
    }

    pub fn parse(text: &str, is_toml: bool) -> Result<Self> {
        if is_toml {
            let file: TariffFile = toml::from_str(text).map_err(|e| Error::InvalidTariff(e.to_string()))?;
            return Self::new(file.bands);
        }
        match serde_json::from_str::<Vec<TariffBand>>(text) {
            Ok(bands) => Self::new(bands),
            Err(_) => Ok(serde_json::from_str::<TariffSchedule>(text)?),
        }
    }

    pub fn bands(&self) -> &[TariffBand] {
        &self.bands
    }

    /// The band whose interval contains the start of `slot`.
    pub fn band_at(&self, slot: usize) -> &TariffBand {
        assert!(slot < SLOTS_PER_DAY, "slot {slot} out of range");
        let minute = slot as u32 * 15;
        self.bands
            .iter()
            .find(|b| b.contains(minute))
            .expect("bands cover the whole day")
    }

    /// Price in $/kWh at `slot`.
    pub fn price_at(&self, slot: usize) -> f64 {
        self.band_at(slot).price
    }

    pub fn max_price(&self) -> f64 {
        self.bands.iter().map(|b| b.price).fold(0.0, f64::max)
    }

    pub fn min_price(&self) -> f64 {
        self.bands.iter().map(|b| b.price).fold(f64::INFINITY, f64::min)
    }

    /// Signed cost of slot `slot` in $: `price * (a * p_ev + p_non_ev - p_pv) / 4`.
    /// Negative values mean net export.
    pub fn step_cost(&self, slot: usize, action: Action, p_ev: f64, p_non_ev: f64, p_pv: f64) -> f64 {
        slot_cost(self.price_at(slot), action, p_ev, p_non_ev, p_pv)
    }

    /// Sum of slot costs for a day under an arbitrary EV power series.
    pub fn daily_cost(&self, day: &HouseholdDay, ev: &[f64]) -> f64 {
        (0..SLOTS_PER_DAY)
            .map(|t| self.step_cost(t, Action::Charge, ev[t], day.non_ev()[t], day.pv()[t]))
            .sum()
    }
}

pub fn slot_cost(price: f64, action: Action, p_ev: f64, p_non_ev: f64, p_pv: f64) -> f64 {
    price * (action.indicator() * p_ev + p_non_ev - p_pv) / SLOTS_PER_HOUR
}

/// Which slot costs are dropped before forming quantiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostFilter {
    /// Drop slots with cost <= 0.
    #[default]
    NonPositive,
    /// Drop only slots with cost < 0.
    Negative,
}

impl CostFilter {
    fn keeps(self, cost: f64) -> bool {
        match self {
            CostFilter::NonPositive => cost > 0.0,
            CostFilter::Negative => cost >= 0.0,
        }
    }
}

/// Quartiles of metered per-slot cost in $ per slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostQuantiles {
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
}

impl CostQuantiles {
    pub fn from_costs(costs: &[f64], filter: CostFilter) -> Result<Self> {
        let kept: Vec<f64> = costs.iter().copied().filter(|&c| filter.keeps(c)).collect();
        if kept.is_empty() {
            return Err(Error::NoPositiveCosts);
        }
        let (q25, q50, q75) = stats::quartiles(&kept);
        Ok(Self { q25, q50, q75 })
    }
}

/// Pools the metered cost of every slot of every given day (EV term taken from
/// `ev_metered`) and returns its quartiles after filtering.
pub fn cost_quantiles<'a>(
    days: impl IntoIterator<Item = &'a HouseholdDay>,
    schedule: &TariffSchedule,
    filter: CostFilter,
) -> Result<CostQuantiles> {
    let mut costs = Vec::new();
    let mut n_days = 0;
    for day in days {
        n_days += 1;
        costs.extend((0..SLOTS_PER_DAY).map(|t| {
            schedule.step_cost(t, Action::Charge, day.ev_metered()[t], day.non_ev()[t], day.pv()[t])
        }));
    }
    if n_days == 0 {
        return Err(Error::EmptyDataset("training"));
    }
    CostQuantiles::from_costs(&costs, filter)
}
