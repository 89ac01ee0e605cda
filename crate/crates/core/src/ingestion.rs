//! Reading raw activity and binning it into monthly series.
//!
//! Two input shapes are accepted: individual events (`entity_id,timestamp`)
//! and pre-aggregated occurrence tables (`entity_id,month,count[,state]`).
//! Both end up as one [`ActivitySeries`] per entity.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::calendar::Month;

const EVENT_HEADER: [&str; 2] = ["entity_id", "timestamp"];
const OCCURRENCE_HEADER: [&str; 3] = ["entity_id", "month", "count"];

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("malformed header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("{} malformed row(s); first: {}", .0.len(), .0[0])]
    Rows(Vec<RowError>),
    #[error("record {index} (`{entity_id}` at {month}) lies outside the observation window {epoch}..={end}")]
    OutsideWindow {
        index: usize,
        entity_id: String,
        month: Month,
        epoch: Month,
        end: Month,
    },
    #[error("observation window ends ({end}) before it starts ({epoch})")]
    InvalidWindow { epoch: Month, end: Month },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A single unparseable data row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventRecord {
    pub entity_id: String,
    /// Calendar date of the event; any time-of-day component is discarded on parse.
    pub timestamp: NaiveDate,
}

impl EventRecord {
    pub fn month(&self) -> Month {
        Month::new(self.timestamp.year(), self.timestamp.month())
    }
}

/// One row of an occurrence table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceRecord {
    pub entity_id: String,
    pub month: Month,
    pub count: u64,
    /// Optional location label (a state, for legislative terms).
    pub state: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationWindow {
    pub epoch_month: Month,
    pub end_month: Month,
}

impl ObservationWindow {
    pub fn new(epoch_month: Month, end_month: Month) -> Result<Self, IngestError> {
        if end_month < epoch_month {
            return Err(IngestError::InvalidWindow {
                epoch: epoch_month,
                end: end_month,
            });
        }
        Ok(ObservationWindow {
            epoch_month,
            end_month,
        })
    }

    pub fn contains(&self, month: Month) -> bool {
        month >= self.epoch_month && month <= self.end_month
    }

    /// Same epoch, different analysis cutoff.
    pub fn with_end(&self, end_month: Month) -> Result<Self, IngestError> {
        ObservationWindow::new(self.epoch_month, end_month)
    }

    /// Smallest window covering every event.
    pub fn spanning(events: &[EventRecord]) -> Option<Self> {
        let first = events.iter().map(EventRecord::month).min()?;
        let last = events.iter().map(EventRecord::month).max()?;
        Some(ObservationWindow {
            epoch_month: first,
            end_month: last,
        })
    }
}

/// Monthly activity of one entity, from its first active month through the
/// analysis end month.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivitySeries {
    pub entity_id: String,
    pub start_month: Month,
    pub counts: Vec<u64>,
}

impl ActivitySeries {
    pub fn end_month(&self) -> Month {
        self.start_month.offset(self.counts.len() as i32 - 1)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn last_active_month(&self) -> Month {
        let last = self.counts.iter().rposition(|&c| c > 0).unwrap_or(0);
        self.start_month.offset(last as i32)
    }

    /// Activity strictly after `month`, within this series.
    pub fn active_after(&self, month: Month) -> bool {
        self.last_active_month() > month
    }

    /// The prefix of this series ending at `end` (inclusive). `None` when the
    /// entity had not started by then.
    pub fn truncated(&self, end: Month) -> Option<ActivitySeries> {
        if end < self.start_month {
            return None;
        }
        let len = (end.since(self.start_month) + 1) as usize;
        let mut counts: Vec<u64> = self.counts.iter().copied().take(len).collect();
        counts.resize(len, 0);
        Some(ActivitySeries {
            entity_id: self.entity_id.clone(),
            start_month: self.start_month,
            counts,
        })
    }

    /// True when activity began within the final two months before `end`;
    /// such entities are too young to fit.
    pub fn has_insufficient_history(&self, end: Month) -> bool {
        self.start_month >= end.offset(-1)
    }
}

fn header_matches(found: &csv::StringRecord, expected: &[&str]) -> bool {
    found.len() >= expected.len()
        && found
            .iter()
            .zip(expected)
            .all(|(f, e)| f.trim().trim_start_matches('\u{feff}') == *e)
}

fn header_error(found: &csv::StringRecord, expected: &[&str]) -> IngestError {
    IngestError::Header {
        expected: expected.join(","),
        found: found.iter().collect::<Vec<_>>().join(","),
    }
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source)
}

/// Parses `YYYY-MM-DD` or `YYYY-MM`, ignoring anything finer than a day
/// (`2006-03-15T10:22:00`, `2006-03-15 10:22`).
pub fn parse_timestamp(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    let date_part = match raw.char_indices().nth(10) {
        Some((i, c)) if c == 'T' || c == ' ' => &raw[..i],
        Some(_) => return None,
        None => raw,
    };
    if date_part.len() == 7 {
        let month: Month = date_part.parse().ok()?;
        return NaiveDate::from_ymd_opt(month.year(), month.month(), 1);
    }
    NaiveDate::parse_from_str(date_part, "%Y-%m-%d").ok()
}

/// Reads an event CSV. Every bad row is collected; if any exist the whole
/// parse fails with [`IngestError::Rows`].
pub fn parse_events<R: Read>(source: R) -> Result<Vec<EventRecord>, IngestError> {
    let mut rdr = reader(source);
    let header = rdr.headers()?.clone();
    if header.len() != EVENT_HEADER.len() || !header_matches(&header, &EVENT_HEADER) {
        return Err(header_error(&header, &EVENT_HEADER));
    }

    let mut events = Vec::new();
    let mut bad = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 2 {
            bad.push(RowError {
                line,
                message: format!("expected 2 fields, found {}", row.len()),
            });
            continue;
        }
        let entity_id = &row[0];
        if entity_id.is_empty() {
            bad.push(RowError {
                line,
                message: "empty entity_id".into(),
            });
            continue;
        }
        match parse_timestamp(&row[1]) {
            Some(timestamp) => events.push(EventRecord {
                entity_id: entity_id.to_string(),
                timestamp,
            }),
            None => bad.push(RowError {
                line,
                message: format!("unparseable timestamp `{}`", &row[1]),
            }),
        }
    }
    if bad.is_empty() {
        Ok(events)
    } else {
        Err(IngestError::Rows(bad))
    }
}

/// Reads an occurrence table. A fourth `state` column is optional.
pub fn parse_occurrences<R: Read>(source: R) -> Result<Vec<OccurrenceRecord>, IngestError> {
    let mut rdr = reader(source);
    let header = rdr.headers()?.clone();
    let has_state = header.len() == 4 && header[3].trim() == "state";
    if !(header.len() == 3 || has_state) || !header_matches(&header, &OCCURRENCE_HEADER) {
        return Err(header_error(&header, &OCCURRENCE_HEADER));
    }
    let width = header.len();

    let mut out = Vec::new();
    let mut bad = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != width {
            bad.push(RowError {
                line,
                message: format!("expected {width} fields, found {}", row.len()),
            });
            continue;
        }
        if row[0].is_empty() {
            bad.push(RowError {
                line,
                message: "empty entity_id".into(),
            });
            continue;
        }
        let month = match row[1].parse::<Month>() {
            Ok(m) => m,
            Err(e) => {
                bad.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let count = match row[2].parse::<u64>() {
            Ok(c) => c,
            Err(_) => {
                bad.push(RowError {
                    line,
                    message: format!("invalid count `{}`", &row[2]),
                });
                continue;
            }
        };
        out.push(OccurrenceRecord {
            entity_id: row[0].to_string(),
            month,
            count,
            state: has_state.then(|| row[3].to_string()),
        });
    }
    if bad.is_empty() {
        Ok(out)
    } else {
        Err(IngestError::Rows(bad))
    }
}

fn bin_counts<I>(items: I, window: ObservationWindow) -> Result<BTreeMap<String, ActivitySeries>, IngestError>
where
    I: IntoIterator<Item = (usize, String, Month, u64)>,
{
    let mut per_entity: BTreeMap<String, BTreeMap<Month, u64>> = BTreeMap::new();
    for (index, entity_id, month, count) in items {
        if !window.contains(month) {
            return Err(IngestError::OutsideWindow {
                index,
                entity_id,
                month,
                epoch: window.epoch_month,
                end: window.end_month,
            });
        }
        if count == 0 {
            continue;
        }
        *per_entity.entry(entity_id).or_default().entry(month).or_default() += count;
    }

    Ok(per_entity
        .into_iter()
        .filter_map(|(entity_id, months)| {
            let start_month = *months.keys().next()?;
            let len = (window.end_month.since(start_month) + 1) as usize;
            let mut counts = vec![0u64; len];
            for (month, c) in months {
                counts[month.since(start_month) as usize] += c;
            }
            Some((
                entity_id.clone(),
                ActivitySeries {
                    entity_id,
                    start_month,
                    counts,
                },
            ))
        })
        .collect())
}

/// Counts each entity's events per month from its first event through
/// `window.end_month`.
pub fn bin_monthly(
    events: &[EventRecord],
    window: ObservationWindow,
) -> Result<BTreeMap<String, ActivitySeries>, IngestError> {
    bin_counts(
        events
            .iter()
            .enumerate()
            .map(|(i, e)| (i, e.entity_id.clone(), e.month(), 1)),
        window,
    )
}

/// Sums occurrence counts per entity and month (across states). Entities
/// whose counts are all zero are dropped.
pub fn bin_occurrences(
    records: &[OccurrenceRecord],
    window: ObservationWindow,
) -> Result<BTreeMap<String, ActivitySeries>, IngestError> {
    bin_counts(
        records
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.entity_id.clone(), r.month, r.count)),
        window,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(id: &str, y: i32, m: u32) -> EventRecord {
        EventRecord {
            entity_id: id.into(),
            timestamp: NaiveDate::from_ymd_opt(y, m, 1).unwrap(),
        }
    }

    fn window(y0: i32, m0: u32, y1: i32, m1: u32) -> ObservationWindow {
        ObservationWindow::new(Month::new(y0, m0), Month::new(y1, m1)).unwrap()
    }

    #[test]
    fn parses_a_single_event() {
        let events = parse_events("entity_id,timestamp\nC1,2006-03-15\n".as_bytes()).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].entity_id, "C1");
        assert_eq!(events[0].month(), Month::new(2006, 3));
    }

    #[test]
    fn accepts_month_only_and_subday_timestamps_with_crlf() {
        let src = "entity_id,timestamp\r\nA,2006-03\r\nB,2007-01-02T10:11:12\r\nC,2007-01-02 10:11\r\n";
        let events = parse_events(src.as_bytes()).unwrap();
        assert_eq!(events[0].month(), Month::new(2006, 3));
        assert_eq!(events[1].month(), Month::new(2007, 1));
        assert_eq!(events[2].month(), Month::new(2007, 1));
    }

    #[test]
    fn empty_body_is_empty_collection() {
        assert!(parse_events("entity_id,timestamp\n".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn bad_row_cites_its_line() {
        let err = parse_events("entity_id,timestamp\nC1,not-a-date\nC2,2006-01-01\n,2006-01-01\n".as_bytes())
            .unwrap_err();
        match err {
            IngestError::Rows(rows) => {
                assert_eq!(rows.len(), 2);
                assert_eq!(rows[0].line, 2);
                assert!(rows[0].message.contains("not-a-date"));
                assert_eq!(rows[1].line, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_header_is_a_format_error() {
        let err = parse_events("id,when\nC1,2006-01-01\n".as_bytes()).unwrap_err();
        assert!(matches!(err, IngestError::Header { .. }));
    }

    #[test]
    fn bins_counts_with_zero_fill() {
        let events = vec![ev("C1", 2006, 3), ev("C1", 2006, 3), ev("C1", 2006, 5)];
        let series = bin_monthly(&events, window(2006, 1, 2006, 6)).unwrap();
        let c1 = &series["C1"];
        assert_eq!(c1.start_month, Month::new(2006, 3));
        assert_eq!(c1.counts, vec![2, 0, 1, 0]);
    }

    #[test]
    fn single_event_at_end_month() {
        let series = bin_monthly(&[ev("C1", 2006, 6)], window(2006, 1, 2006, 6)).unwrap();
        assert_eq!(series["C1"].counts, vec![1]);
        assert!(series["C1"].has_insufficient_history(Month::new(2006, 6)));
    }

    #[test]
    fn event_outside_window_is_identified() {
        let err = bin_monthly(&[ev("C1", 2006, 3), ev("C9", 2007, 1)], window(2006, 1, 2006, 6))
            .unwrap_err();
        match err {
            IngestError::OutsideWindow { index, entity_id, .. } => {
                assert_eq!(index, 1);
                assert_eq!(entity_id, "C9");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn occurrence_table_with_states() {
        let src = "entity_id,month,count,state\nclean water act,2010-01,3,TX\nclean water act,2010-03,2,CA\nclean water act,2010-01,1,CA\n";
        let recs = parse_occurrences(src.as_bytes()).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].state.as_deref(), Some("TX"));
        let series = bin_occurrences(&recs, window(2010, 1, 2010, 4)).unwrap();
        assert_eq!(series["clean water act"].counts, vec![4, 0, 2, 0]);
    }

    #[test]
    fn occurrence_table_without_states() {
        let recs = parse_occurrences("entity_id,month,count\nX,2010-02,0\nX,2010-03,5\n".as_bytes()).unwrap();
        assert!(recs.iter().all(|r| r.state.is_none()));
        let series = bin_occurrences(&recs, window(2010, 1, 2010, 4)).unwrap();
        assert_eq!(series["X"].start_month, Month::new(2010, 3));
        assert_eq!(series["X"].counts, vec![5, 0]);
    }

    #[test]
    fn truncation_keeps_prefix() {
        let s = ActivitySeries {
            entity_id: "e".into(),
            start_month: Month::new(2000, 1),
            counts: vec![1, 2, 0, 3],
        };
        assert_eq!(s.truncated(Month::new(2000, 2)).unwrap().counts, vec![1, 2]);
        assert!(s.truncated(Month::new(1999, 12)).is_none());
        assert_eq!(s.last_active_month(), Month::new(2000, 4));
    }
}
