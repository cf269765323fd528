use serde::{Deserialize, Serialize};

use crate::data::SLOTS_PER_HOUR;
use crate::error::{Error, Result};

/// EV battery and home charger parameters. Defaults describe a 24 kWh Nissan
/// Leaf on a Level 2 charger (90.5% charging efficiency).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatterySpec {
    pub capacity_kwh: f64,
    pub efficiency: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    /// Charging power while SoC <= `taper_soc` (kW).
    pub p_high_kw: f64,
    /// Charging power above `taper_soc` (kW).
    pub p_low_kw: f64,
    pub taper_soc: f64,
}

impl Default for BatterySpec {
    fn default() -> Self {
        Self {
            capacity_kwh: 24.0,
            efficiency: 0.905,
            soc_min: 0.1,
            soc_max: 1.0,
            p_high_kw: 3.3,
            p_low_kw: 1.5,
            taper_soc: 0.9,
        }
    }
}

impl BatterySpec {
    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 <= self.soc_min
            && self.soc_min < self.taper_soc
            && self.taper_soc < self.soc_max
            && self.soc_max <= 1.0
            && 0.0 < self.efficiency
            && self.efficiency <= 1.0
            && 0.0 < self.p_low_kw
            && self.p_low_kw < self.p_high_kw
            && self.capacity_kwh > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidBattery(format!("{self:?}")))
        }
    }

    /// SoC gained by one slot of charging at `p_kw`.
    pub fn soc_gain(&self, p_kw: f64) -> f64 {
        self.efficiency * p_kw / (SLOTS_PER_HOUR * self.capacity_kwh)
    }
}

/// SoC at the start of the day, assuming the day's metered EV demand refilled
/// the battery completely: `1 - η·P_day/(4·E)`, floored at `soc_min`.
pub fn starting_soc(battery: &BatterySpec, p_day_ev: f64) -> f64 {
    (1.0 - battery.soc_gain(p_day_ev)).max(battery.soc_min)
}

/// Two-level charger: full power up to and including the taper SoC, reduced above it.
pub fn charging_power(battery: &BatterySpec, soc: f64) -> f64 {
    if soc <= battery.taper_soc {
        battery.p_high_kw
    } else {
        battery.p_low_kw
    }
}
