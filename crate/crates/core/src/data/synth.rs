//! Seeded synthetic household days, used when metered data is not available.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, HouseholdDay, SLOTS_PER_DAY, SLOTS_PER_HOUR};
use crate::error::{Error, Result};

/// One recurring charging session: a start time drawn uniformly from
/// `[start_hour_min, start_hour_max)` and an energy drawn uniformly from
/// `energy_kwh * (1 ± energy_jitter)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvSession {
    pub start_hour_min: f64,
    pub start_hour_max: f64,
    pub energy_kwh: f64,
    #[serde(default)]
    pub energy_jitter: f64,
    /// Probability that the session happens on a given day.
    #[serde(default = "one")]
    pub probability: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthProfile {
    pub pv_peak_kw: f64,
    pub pv_window_start_hour: f64,
    pub pv_window_end_hour: f64,
    /// Centre of the PV bell; the window midpoint when unset.
    pub pv_center_hour: Option<f64>,
    pub pv_sigma_hours: f64,
    /// Daily clear-sky factor is drawn uniformly from `[pv_clearness_min, 1]`.
    pub pv_clearness_min: f64,
    pub base_load_kw: f64,
    pub morning_peak_kw: f64,
    pub evening_peak_kw: f64,
    /// Relative standard deviation of the multiplicative load noise.
    pub load_noise: f64,
    pub ev_charge_kw: f64,
    pub ev_sessions: Vec<EvSession>,
}

impl Default for SynthProfile {
    fn default() -> Self {
        Self {
            pv_peak_kw: 4.0,
            pv_window_start_hour: 7.0,
            pv_window_end_hour: 19.0,
            pv_center_hour: None,
            pv_sigma_hours: 2.0,
            pv_clearness_min: 0.8,
            base_load_kw: 0.5,
            morning_peak_kw: 0.4,
            evening_peak_kw: 0.9,
            load_noise: 0.15,
            ev_charge_kw: 3.3,
            ev_sessions: vec![EvSession {
                start_hour_min: 18.0,
                start_hour_max: 21.0,
                energy_kwh: 6.0,
                energy_jitter: 0.05,
                probability: 1.0,
            }],
        }
    }
}

impl SynthProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidProfile(msg.to_string()));
        if !(self.pv_peak_kw > 0.0) {
            return bad("pv_peak_kw must be positive");
        }
        if !(self.base_load_kw > 0.0) {
            return bad("base_load_kw must be positive");
        }
        if !(self.ev_charge_kw > 0.0) {
            return bad("ev_charge_kw must be positive");
        }
        if !(self.pv_sigma_hours > 0.0) {
            return bad("pv_sigma_hours must be positive");
        }
        if !(0.0..=24.0).contains(&self.pv_window_start_hour)
            || !(self.pv_window_start_hour < self.pv_window_end_hour && self.pv_window_end_hour <= 24.0)
        {
            return bad("PV window must satisfy 0 <= start < end <= 24");
        }
        if !(0.0..=1.0).contains(&self.pv_clearness_min) {
            return bad("pv_clearness_min must lie in [0, 1]");
        }
        if self.morning_peak_kw < 0.0 || self.evening_peak_kw < 0.0 || self.load_noise < 0.0 {
            return bad("load shape parameters must be non-negative");
        }
        for s in &self.ev_sessions {
            if !(s.energy_kwh > 0.0) {
                return bad("session energy must be positive");
            }
            if !(0.0..1.0).contains(&s.energy_jitter) || !(0.0..=1.0).contains(&s.probability) {
                return bad("session jitter must lie in [0, 1) and probability in [0, 1]");
            }
            if !(0.0 <= s.start_hour_min && s.start_hour_min <= s.start_hour_max && s.start_hour_max < 24.0) {
                return bad("session start window must satisfy 0 <= min <= max < 24");
            }
        }
        Ok(())
    }
}

fn bump(hour: f64, center: f64, width: f64) -> f64 {
    (-0.5 * ((hour - center) / width).powi(2)).exp()
}

/// Generates one day. The same `(seed, profile, date)` always yields the same day.
pub fn synthesize_day(seed: u64, profile: &SynthProfile, date: NaiveDate) -> Result<HouseholdDay> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let center = profile
        .pv_center_hour
        .unwrap_or(0.5 * (profile.pv_window_start_hour + profile.pv_window_end_hour));
    let clearness = rng.random_range(profile.pv_clearness_min..=1.0);
    let pv: Vec<f64> = (0..SLOTS_PER_DAY)
        .map(|t| {
            let hour = (t as f64 + 0.5) / SLOTS_PER_HOUR;
            if hour < profile.pv_window_start_hour || hour >= profile.pv_window_end_hour {
                0.0
            } else {
                profile.pv_peak_kw * clearness * bump(hour, center, profile.pv_sigma_hours)
            }
        })
        .collect();

    let noise = Normal::new(0.0, profile.load_noise).map_err(|e| Error::InvalidProfile(e.to_string()))?;
    let floor = 0.1 * profile.base_load_kw;
    let non_ev: Vec<f64> = (0..SLOTS_PER_DAY)
        .map(|t| {
            let hour = (t as f64 + 0.5) / SLOTS_PER_HOUR;
            let shape = profile.base_load_kw
                + profile.morning_peak_kw * bump(hour, 7.5, 1.0)
                + profile.evening_peak_kw * bump(hour, 19.5, 1.5);
            (shape * (1.0 + noise.sample(&mut rng))).max(floor)
        })
        .collect();

    let mut ev = vec![0.0; SLOTS_PER_DAY];
    for session in &profile.ev_sessions {
        let happens = rng.random_bool(session.probability);
        let start_hour = if session.start_hour_min < session.start_hour_max {
            rng.random_range(session.start_hour_min..session.start_hour_max)
        } else {
            session.start_hour_min
        };
        let jitter = if session.energy_jitter > 0.0 {
            rng.random_range(-session.energy_jitter..session.energy_jitter)
        } else {
            0.0
        };
        if !happens {
            continue;
        }
        let mut remaining_kwh = session.energy_kwh * (1.0 + jitter);
        let mut t = (start_hour * SLOTS_PER_HOUR) as usize;
        // Full-power slots, then the remainder as a partial slot. Overlapping
        // sessions spill into the following slots.
        while remaining_kwh > 1e-12 && t < SLOTS_PER_DAY {
            let headroom_kw = profile.ev_charge_kw - ev[t];
            let kw = headroom_kw.min(remaining_kwh * SLOTS_PER_HOUR);
            if kw > 0.0 {
                ev[t] += kw;
                remaining_kwh -= kw / SLOTS_PER_HOUR;
            }
            t += 1;
        }
    }

    HouseholdDay::new(date, pv, non_ev, ev)
}

/// Generates `n_days` consecutive days starting at `start`. Day `i` uses a seed
/// derived from `(seed, i)` so each day is reproducible on its own.
pub fn synthesize_dataset(n_days: usize, seed: u64, profile: &SynthProfile, start: NaiveDate) -> Result<Dataset> {
    let days = (0..n_days)
        .map(|i| {
            let day_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64);
            synthesize_day(day_seed, profile, start + chrono::Duration::days(i as i64))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(days)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::daily_ev_demand;

    fn d0() -> NaiveDate {
        NaiveDate::from_ymd_opt(2018, 4, 22).unwrap()
    }

    #[test]
    fn no_pv_before_window() {
        let profile = SynthProfile {
            pv_peak_kw: 4.0,
            pv_window_start_hour: 7.0,
            pv_window_end_hour: 19.0,
            ..Default::default()
        };
        let day = synthesize_day(7, &profile, d0()).unwrap();
        assert!(day.pv()[..28].iter().all(|&v| v == 0.0));
        assert!(day.pv()[76..].iter().all(|&v| v == 0.0));
        assert!(day.pv()[48] > 0.0);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let profile = SynthProfile::default();
        let a = synthesize_day(7, &profile, d0()).unwrap();
        let b = synthesize_day(7, &profile, d0()).unwrap();
        assert_eq!(a, b);
        let c = synthesize_day(8, &profile, d0()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn evening_session_energy_integrates_to_target() {
        let profile = SynthProfile {
            ev_sessions: vec![EvSession {
                start_hour_min: 18.0,
                start_hour_max: 21.0,
                energy_kwh: 6.0,
                energy_jitter: 0.05,
                probability: 1.0,
            }],
            ..Default::default()
        };
        let day = synthesize_day(7, &profile, d0()).unwrap();
        let kwh = daily_ev_demand(&day) / SLOTS_PER_HOUR;
        assert!((5.7..=6.3).contains(&kwh), "{kwh}");
        // contiguous block at 3.3 kW with at most one partial slot
        let active: Vec<usize> = (0..SLOTS_PER_DAY).filter(|&t| day.ev_metered()[t] > 0.0).collect();
        assert!(active.windows(2).all(|w| w[1] == w[0] + 1));
        let partial = active.iter().filter(|&&t| day.ev_metered()[t] < 3.3 - 1e-12).count();
        assert!(partial <= 1);
        assert!(active.iter().all(|&t| day.ev_metered()[t] <= 3.3 + 1e-12));
        assert!(active[0] >= 72 && active[0] < 84);
    }

    #[test]
    fn non_positive_peaks_rejected() {
        for profile in [
            SynthProfile { pv_peak_kw: 0.0, ..Default::default() },
            SynthProfile { base_load_kw: -1.0, ..Default::default() },
            SynthProfile { ev_charge_kw: 0.0, ..Default::default() },
        ] {
            assert!(matches!(synthesize_day(1, &profile, d0()), Err(Error::InvalidProfile(_))));
        }
    }

    #[test]
    fn dataset_has_consecutive_unique_days() {
        let ds = synthesize_dataset(5, 3, &SynthProfile::default(), d0()).unwrap();
        assert_eq!(ds.len(), 5);
        assert_eq!(ds.days()[4].date(), d0() + chrono::Duration::days(4));
        assert_ne!(ds.days()[0].pv(), ds.days()[1].pv());
    }
}
