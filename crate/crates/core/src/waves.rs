//! Waves of limit-down events in minute-resolution trading data, and how
//! the driving-node probability and k-core index of failing stocks evolve
//! around each wave's peak.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::contagion::CascadeResult;
use crate::error::WaveError;
use crate::stats::{pearson, summarize, Correlation, Summary};

/// First touch of the lower price limit by a stock.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FailureEvent {
    pub date: NaiveDate,
    /// Minutes since midnight.
    pub minute: u32,
    pub stock: String,
}

impl FailureEvent {
    pub fn parse(timestamp: &str, stock: impl Into<String>) -> Option<Self> {
        let ts = NaiveDateTime::parse_from_str(timestamp.trim(), "%Y-%m-%d %H:%M").ok()?;
        Some(Self {
            date: ts.date(),
            minute: ts.hour() * 60 + ts.minute(),
            stock: stock.into(),
        })
    }
}

pub fn format_minute(minute: u32) -> String {
    format!("{:02}:{:02}", minute / 60, minute % 60)
}

/// Trading sessions of a day as inclusive `[start, end]` minute ranges.
/// Waves never cross a session boundary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sessions(Vec<(u32, u32)>);

impl Default for Sessions {
    fn default() -> Self {
        Self(vec![(9 * 60 + 30, 11 * 60 + 30), (13 * 60, 15 * 60)])
    }
}

impl Sessions {
    pub fn new(mut ranges: Vec<(u32, u32)>) -> Result<Self, WaveError> {
        ranges.sort_unstable();
        for r in &ranges {
            if r.0 > r.1 || r.1 >= 24 * 60 {
                return Err(WaveError::Session(format!("{}-{}", format_minute(r.0), format_minute(r.1))));
            }
        }
        for w in ranges.windows(2) {
            if w[1].0 <= w[0].1 {
                return Err(WaveError::Session("overlapping sessions".into()));
            }
        }
        Ok(Self(ranges))
    }

    /// Parses `HH:MM-HH:MM[,HH:MM-HH:MM...]`.
    pub fn parse(spec: &str) -> Result<Self, WaveError> {
        let mut ranges = Vec::new();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (a, b) = part
                .split_once('-')
                .ok_or_else(|| WaveError::Session(part.to_string()))?;
            let t = |s: &str| {
                NaiveTime::parse_from_str(s.trim(), "%H:%M")
                    .map(|t| t.hour() * 60 + t.minute())
                    .map_err(|_| WaveError::Session(part.to_string()))
            };
            ranges.push((t(a)?, t(b)?));
        }
        Self::new(ranges)
    }

    pub fn ranges(&self) -> &[(u32, u32)] {
        &self.0
    }

    pub fn session_of(&self, minute: u32) -> Option<usize> {
        self.0.iter().position(|&(a, b)| minute >= a && minute <= b)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventSet {
    /// Sorted by `(date, minute, stock)`.
    pub events: Vec<FailureEvent>,
    pub outside_sessions: usize,
    pub duplicates: usize,
}

/// Keeps the first event per stock and day, drops events outside the
/// sessions, and sorts the rest.
pub fn normalize_events(events: impl IntoIterator<Item = FailureEvent>, sessions: &Sessions) -> EventSet {
    let mut out = EventSet::default();
    let mut first: BTreeMap<(NaiveDate, String), u32> = BTreeMap::new();
    for ev in events {
        if sessions.session_of(ev.minute).is_none() {
            out.outside_sessions += 1;
            continue;
        }
        match first.entry((ev.date, ev.stock)) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(ev.minute);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                out.duplicates += 1;
                if ev.minute < *o.get() {
                    o.insert(ev.minute);
                }
            }
        }
    }
    out.events = first
        .into_iter()
        .map(|((date, stock), minute)| FailureEvent { date, minute, stock })
        .collect();
    out.events.sort();
    if out.outside_sessions > 0 || out.duplicates > 0 {
        log::warn!(
            "dropped {} event(s) outside sessions and {} repeat event(s)",
            out.outside_sessions,
            out.duplicates
        );
    }
    out
}

#[derive(Debug, Deserialize)]
struct EventRow {
    timestamp: String,
    stock_id: String,
}

/// Reads a `timestamp,stock_id` CSV with `YYYY-MM-DD HH:MM` timestamps.
pub fn read_events_csv<R: Read>(reader: R) -> Result<Vec<FailureEvent>, WaveError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut events = Vec::new();
    let headers = rdr.headers()?.clone();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row: EventRow = record.deserialize(Some(&headers))?;
        let ev = FailureEvent::parse(&row.timestamp, row.stock_id).ok_or_else(|| WaveError::BadEvent {
            line,
            reason: format!("bad timestamp {:?}", row.timestamp),
        })?;
        events.push(ev);
    }
    Ok(events)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Wave {
    pub date: NaiveDate,
    pub session: usize,
    pub start: u32,
    pub end: u32,
    /// Failures per minute over `start..=end`.
    pub counts: Vec<u32>,
    /// Minutes reaching the wave's maximum count.
    pub peaks: Vec<u32>,
}

impl Wave {
    /// Earliest maximal minute; the reference point for time-to-peak.
    pub fn peak(&self) -> u32 {
        self.peaks[0]
    }

    pub fn n_failures(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn contains(&self, date: NaiveDate, minute: u32) -> bool {
        self.date == date && minute >= self.start && minute <= self.end
    }
}

/// Splits events into maximal runs of failure minutes within a session,
/// bridging runs of at most `gap_tolerance` empty minutes. Events outside
/// every session are ignored.
pub fn detect_waves(events: &[FailureEvent], gap_tolerance: u32, sessions: &Sessions) -> Vec<Wave> {
    let mut counts: BTreeMap<(NaiveDate, usize, u32), u32> = BTreeMap::new();
    for ev in events {
        if let Some(session) = sessions.session_of(ev.minute) {
            *counts.entry((ev.date, session, ev.minute)).or_default() += 1;
        }
    }
    let mut waves: Vec<Wave> = Vec::new();
    let mut current: Option<Wave> = None;
    for ((date, session, minute), count) in counts {
        if let Some(w) = current.as_mut() {
            if w.date == date && w.session == session && minute - w.end - 1 <= gap_tolerance {
                for _ in w.end + 1..minute {
                    w.counts.push(0);
                }
                w.counts.push(count);
                w.end = minute;
                continue;
            }
        }
        if let Some(w) = current.take() {
            waves.push(w);
        }
        current = Some(Wave {
            date,
            session,
            start: minute,
            end: minute,
            counts: vec![count],
            peaks: Vec::new(),
        });
    }
    waves.extend(current);
    for w in &mut waves {
        let top = *w.counts.iter().max().expect("wave has a minute");
        w.peaks = w
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == top)
            .map(|(i, _)| w.start + i as u32)
            .collect();
    }
    waves
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinutePd {
    pub wave: usize,
    pub minute: u32,
    pub n_failed: usize,
    /// Largest driving-node probability among that minute's failures with a
    /// known probability.
    pub max_pd: Option<f64>,
    /// Signed distance to the wave's peak in minutes.
    pub time_to_peak: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SideStatus {
    Ok,
    TooFewMinutes,
    ZeroVariance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideCorrelation {
    pub n: usize,
    pub status: SideStatus,
    pub correlation: Option<Correlation>,
}

impl SideCorrelation {
    fn of(points: &[(f64, f64)]) -> Self {
        let n = points.len();
        if n < 3 {
            return Self {
                n,
                status: SideStatus::TooFewMinutes,
                correlation: None,
            };
        }
        let (x, y): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        match pearson(&x, &y) {
            Some(c) => Self {
                n,
                status: SideStatus::Ok,
                correlation: Some(c),
            },
            None => Self {
                n,
                status: SideStatus::ZeroVariance,
                correlation: None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveCorrelation {
    pub wave: usize,
    /// Minutes up to and including the peak.
    pub before: SideCorrelation,
    /// Minutes from the peak on.
    pub after: SideCorrelation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdTimeline {
    pub minutes: Vec<MinutePd>,
    pub per_wave: Vec<WaveCorrelation>,
    pub pooled_before: SideCorrelation,
    pub pooled_after: SideCorrelation,
    /// Events whose stock has no known probability.
    pub missing: usize,
}

/// Per-minute maximum driving-node probability of failing stocks against
/// the signed distance to the wave peak, with Pearson correlations computed
/// separately before and after the peak.
pub fn max_pd_timeline(events: &[FailureEvent], p_d: &HashMap<String, f64>, waves: &[Wave]) -> PdTimeline {
    let mut by_minute: BTreeMap<(NaiveDate, u32), (usize, Option<f64>)> = BTreeMap::new();
    let mut missing = 0;
    for ev in events {
        let slot = by_minute.entry((ev.date, ev.minute)).or_insert((0, None));
        slot.0 += 1;
        match p_d.get(&ev.stock) {
            Some(&p) => slot.1 = Some(slot.1.map_or(p, |cur: f64| cur.max(p))),
            None => missing += 1,
        }
    }
    if missing > 0 {
        log::warn!("{missing} event(s) reference stocks without a driving-node probability");
    }

    let mut minutes = Vec::new();
    let mut per_wave = Vec::new();
    let mut pooled_before = Vec::new();
    let mut pooled_after = Vec::new();
    for (wi, w) in waves.iter().enumerate() {
        let mut before = Vec::new();
        let mut after = Vec::new();
        for (&(_, minute), &(n_failed, max_pd)) in by_minute.range((w.date, w.start)..=(w.date, w.end)) {
            let time_to_peak = minute as i64 - w.peak() as i64;
            minutes.push(MinutePd {
                wave: wi,
                minute,
                n_failed,
                max_pd,
                time_to_peak,
            });
            if let Some(pd) = max_pd {
                let point = (time_to_peak as f64, pd);
                if time_to_peak <= 0 {
                    before.push(point);
                }
                if time_to_peak >= 0 {
                    after.push(point);
                }
            }
        }
        pooled_before.extend_from_slice(&before);
        pooled_after.extend_from_slice(&after);
        per_wave.push(WaveCorrelation {
            wave: wi,
            before: SideCorrelation::of(&before),
            after: SideCorrelation::of(&after),
        });
    }
    PdTimeline {
        minutes,
        per_wave,
        pooled_before: SideCorrelation::of(&pooled_before),
        pooled_after: SideCorrelation::of(&pooled_after),
        missing,
    }
}

/// Per-bucket distribution of k-core indices of failing stocks. Buckets
/// come back in key order; empty buckets never appear.
pub fn kcore_trajectory<K: Ord + Clone>(failures: &[(K, usize)], k_core: &[usize]) -> Vec<(K, Summary)> {
    let mut buckets: BTreeMap<K, Vec<f64>> = BTreeMap::new();
    for (key, stock) in failures {
        buckets.entry(key.clone()).or_default().push(k_core[*stock] as f64);
    }
    buckets
        .into_iter()
        .filter_map(|(k, v)| summarize(&v).map(|s| (k, s)))
        .collect()
}

/// `(step, stock)` pairs of a cascade, shock included at step 0.
pub fn cascade_failures(result: &CascadeResult) -> Vec<(usize, usize)> {
    result
        .timeline
        .iter()
        .enumerate()
        .flat_map(|(tau, stocks)| stocks.iter().map(move |&s| (tau, s)))
        .collect()
}
