use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use super::{Dataset, HouseholdDay, SLOTS_PER_DAY};
use crate::error::{Error, Result};

/// Maps the logical series onto CSV header names.
///
/// Exactly one of `non_ev` and `total` must be set. With `total`, the non-EV load
/// is derived as `total - ev`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub timestamp: String,
    pub pv: String,
    pub non_ev: Option<String>,
    pub total: Option<String>,
    pub ev: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            pv: "pv_kw".into(),
            non_ev: Some("non_ev_kw".into()),
            total: None,
            ev: "ev_kw".into(),
        }
    }
}

impl FromStr for ColumnMap {
    type Err = Error;

    /// Parses `key=column` pairs separated by commas, e.g.
    /// `timestamp=localminute,pv=solar,total=grid,ev=car1`. Unlisted keys keep
    /// their defaults; giving `total` clears the default `non_ev` column.
    fn from_str(spec: &str) -> Result<Self> {
        let mut map = ColumnMap::default();
        let mut saw_non_ev = false;
        for pair in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::ColumnMap(format!("expected key=column, got {pair:?}")))?;
            let value = value.trim().to_string();
            match key.trim() {
                "timestamp" => map.timestamp = value,
                "pv" => map.pv = value,
                "non_ev" => {
                    map.non_ev = Some(value);
                    saw_non_ev = true;
                }
                "total" => map.total = Some(value),
                "ev" => map.ev = value,
                other => return Err(Error::ColumnMap(format!("unknown key {other:?}"))),
            }
        }
        if map.total.is_some() && !saw_non_ev {
            map.non_ev = None;
        }
        if map.total.is_some() == map.non_ev.is_some() {
            return Err(Error::ColumnMap("give exactly one of non_ev and total".into()));
        }
        Ok(map)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestOptions {
    /// Linearly interpolate interior gaps of at most [`IngestOptions::MAX_GAP`]
    /// consecutive slots instead of dropping the day.
    pub gap_fill: bool,
}

impl IngestOptions {
    pub const MAX_GAP: usize = 2;
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub dataset: Dataset,
    pub rows_read: usize,
    pub rejected_negative: usize,
    pub dropped_days: Vec<NaiveDate>,
    pub filled_slots: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct SlotAccumulator {
    pv: f64,
    non_ev: f64,
    ev: f64,
    count: u32,
}

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let raw = raw.trim();
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
        .or_else(|| DateTime::parse_from_rfc3339(raw).ok().map(|dt| dt.naive_local()))
        .or_else(|| {
            DateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S%#z")
                .ok()
                .map(|dt| dt.naive_local())
        })
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::ColumnMap(format!("column {name:?} not found in header")))
}

/// Reads a household CSV, averages rows into 15-minute slots and returns the
/// complete days. Rows carrying a negative power value are rejected and counted.
pub fn ingest_csv(path: impl AsRef<Path>, columns: &ColumnMap, options: IngestOptions) -> Result<IngestReport> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, columns, options)
}

pub(crate) fn ingest_reader(reader: impl Read, columns: &ColumnMap, options: IngestOptions) -> Result<IngestReport> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let ts_col = column_index(&headers, &columns.timestamp)?;
    let pv_col = column_index(&headers, &columns.pv)?;
    let ev_col = column_index(&headers, &columns.ev)?;
    let load_col = match (&columns.non_ev, &columns.total) {
        (Some(name), None) => column_index(&headers, name)?,
        (None, Some(name)) => column_index(&headers, name)?,
        _ => return Err(Error::ColumnMap("give exactly one of non_ev and total".into())),
    };
    let load_is_total = columns.total.is_some();

    let mut slots: BTreeMap<NaiveDate, [SlotAccumulator; SLOTS_PER_DAY]> = BTreeMap::new();
    let mut rows_read = 0;
    let mut rejected_negative = 0;

    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        rows_read += 1;
        let field = |col: usize| record.get(col).unwrap_or("");
        let number = |col: usize| -> Result<f64> {
            field(col).parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("column {col}: {e} ({:?})", field(col)),
            })
        };

        let ts = parse_timestamp(field(ts_col)).ok_or_else(|| Error::Parse {
            line,
            message: format!("unrecognised timestamp {:?}", field(ts_col)),
        })?;
        let pv = number(pv_col)?;
        let ev = number(ev_col)?;
        let load = number(load_col)?;
        let non_ev = if load_is_total { load - ev } else { load };
        if [pv, ev, non_ev].iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line,
                message: "non-finite power value".into(),
            });
        }
        if pv < 0.0 || ev < 0.0 || non_ev < 0.0 {
            rejected_negative += 1;
            continue;
        }

        let slot = (ts.hour() * 4 + ts.minute() / 15) as usize;
        let acc = &mut slots.entry(ts.date()).or_insert([SlotAccumulator::default(); SLOTS_PER_DAY])[slot];
        acc.pv += pv;
        acc.non_ev += non_ev;
        acc.ev += ev;
        acc.count += 1;
    }

    if rejected_negative > 0 {
        log::warn!("rejected {rejected_negative} row(s) with negative power values");
    }

    let mut days = Vec::new();
    let mut dropped_days = Vec::new();
    let mut filled_slots = 0;
    for (date, acc) in slots {
        let mut series: [Vec<Option<f64>>; 3] = Default::default();
        for a in &acc {
            let n = f64::from(a.count);
            let avg = |s: f64| (a.count > 0).then(|| s / n);
            series[0].push(avg(a.pv));
            series[1].push(avg(a.non_ev));
            series[2].push(avg(a.ev));
        }
        let missing = series[0].iter().filter(|v| v.is_none()).count();
        if missing > 0 && !(options.gap_fill && fill_gaps(&mut series)) {
            log::warn!("dropping {date}: {missing} slot(s) missing");
            dropped_days.push(date);
            continue;
        }
        filled_slots += missing;
        let [pv, non_ev, ev] = series.map(|s| s.into_iter().map(|v| v.unwrap_or(0.0)).collect::<Vec<_>>());
        days.push(HouseholdDay::new(date, pv, non_ev, ev)?);
    }

    if days.is_empty() {
        return Err(Error::NoCompleteDays);
    }
    Ok(IngestReport {
        dataset: Dataset::new(days)?,
        rows_read,
        rejected_negative,
        dropped_days,
        filled_slots,
    })
}

/// Interpolates interior runs of at most `MAX_GAP` missing slots in place.
/// Returns `false` (leaving the series untouched) if any gap is too long or
/// touches the start or end of the day.
fn fill_gaps(series: &mut [Vec<Option<f64>>; 3]) -> bool {
    let present: Vec<bool> = series[0].iter().map(Option::is_some).collect();
    let mut runs = Vec::new();
    let mut t = 0;
    while t < SLOTS_PER_DAY {
        if present[t] {
            t += 1;
            continue;
        }
        let start = t;
        while t < SLOTS_PER_DAY && !present[t] {
            t += 1;
        }
        if start == 0 || t == SLOTS_PER_DAY || t - start > IngestOptions::MAX_GAP {
            return false;
        }
        runs.push((start, t));
    }
    for s in series.iter_mut() {
        for &(start, end) in &runs {
            let left = s[start - 1].unwrap();
            let right = s[end].unwrap();
            let span = (end - start + 1) as f64;
            for (k, t) in (start..end).enumerate() {
                let w = (k + 1) as f64 / span;
                s[t] = Some(left + w * (right - left));
            }
        }
    }
    true
}

/// Writes days in the ingest schema (`timestamp,pv_kw,non_ev_kw,ev_kw`), one row per slot.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(dataset, BufWriter::new(file))
}

pub(crate) fn write_csv_to(dataset: &Dataset, writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["timestamp", "pv_kw", "non_ev_kw", "ev_kw"])?;
    for day in dataset.days() {
        let midnight = day.date().and_hms_opt(0, 0, 0).expect("midnight exists");
        for t in 0..SLOTS_PER_DAY {
            let ts = midnight + chrono::Duration::minutes(15 * t as i64);
            wtr.write_record([
                ts.format("%Y-%m-%dT%H:%M:%S").to_string(),
                day.pv()[t].to_string(),
                day.non_ev()[t].to_string(),
                day.ev_metered()[t].to_string(),
            ])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn write_json(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), dataset.days())?;
    Ok(())
}

/// Reads a JSON array of days as written by [`write_json`].
pub fn read_json(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Dataset::new(serde_json::from_str(&text)?)
}

/// Loads a dataset from `.json` (day array) or any other extension (slot CSV).
pub fn load_dataset(path: impl AsRef<Path>, columns: &ColumnMap, options: IngestOptions) -> Result<Dataset> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => read_json(path),
        _ => Ok(ingest_csv(path, columns, options)?.dataset),
    }
}
