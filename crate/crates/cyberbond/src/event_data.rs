//! Ingestion of cyber-event records.
//!
//! Events come in as a CSV with header `date,loss_usd,category`: ISO-8601
//! dates, loss blank when undisclosed, category free-form. From a sorted
//! event series two derived series feed the fitting stage:
//!
//! - intervals: unique event dates, consecutive day differences, then the
//!   differences themselves deduplicated keeping first occurrence;
//! - losses: disclosed strictly-positive amounts, in date order.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("no event rows found")]
    Empty,
    #[error("need at least 2 unique event dates to form intervals, got {0}")]
    InsufficientDates(usize),
}

/// One cyber event: date, optional disclosed loss (USD), optional category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CyberEvent {
    pub date: NaiveDate,
    pub loss_amount: Option<f64>,
    pub category: Option<String>,
}

/// Events sorted non-decreasing by date.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSeries {
    events: Vec<CyberEvent>,
}

impl EventSeries {
    /// Build a series from unordered events; sorts by date (stable).
    pub fn new(mut events: Vec<CyberEvent>) -> Self {
        events.sort_by_key(|e| e.date);
        EventSeries { events }
    }

    pub fn events(&self) -> &[CyberEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Deduplicated inter-event gaps in whole days; every element positive and
/// pairwise distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSeries {
    intervals: Vec<u32>,
}

impl IntervalSeries {
    pub fn values(&self) -> &[u32] {
        &self.intervals
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.intervals.iter().map(|&d| d as f64).collect()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

/// Disclosed loss amounts (USD), strictly positive, in date order.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSeries {
    losses: Vec<f64>,
}

impl LossSeries {
    pub fn values(&self) -> &[f64] {
        &self.losses
    }

    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }
}

/// Load events from a `date,loss_usd,category` CSV (header required).
///
/// Rows with malformed dates or non-positive losses are rejected with the
/// offending row number; the returned series is sorted by date.
pub fn load_events<P: AsRef<Path>>(path: P) -> Result<EventSeries, DataError> {
    let path_str = path.as_ref().display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => DataError::Io {
                path: path_str.clone(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => DataError::Row {
                row: 0,
                message: e.to_string(),
            },
        })?;

    let mut events = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 2; // 1-based, after the header line
        let record = record.map_err(|e| DataError::Row {
            row,
            message: e.to_string(),
        })?;
        let date_field = record.get(0).ok_or_else(|| DataError::Row {
            row,
            message: "missing date column".into(),
        })?;
        let date =
            NaiveDate::parse_from_str(date_field, "%Y-%m-%d").map_err(|e| DataError::Row {
                row,
                message: format!("bad date '{date_field}': {e}"),
            })?;

        let loss_amount = match record.get(1) {
            None | Some("") => None,
            Some(raw) => {
                let value: f64 = raw.parse().map_err(|_| DataError::Row {
                    row,
                    message: format!("bad loss amount '{raw}'"),
                })?;
                if !(value.is_finite() && value > 0.0) {
                    return Err(DataError::Row {
                        row,
                        message: format!("loss amount must be > 0 when disclosed, got {raw}"),
                    });
                }
                Some(value)
            }
        };

        let category = match record.get(2) {
            None | Some("") => None,
            Some(tag) => Some(tag.to_string()),
        };

        events.push(CyberEvent {
            date,
            loss_amount,
            category,
        });
    }

    if events.is_empty() {
        return Err(DataError::Empty);
    }
    Ok(EventSeries::new(events))
}

/// Derive the interval series: unique dates, day differences, then unique
/// differences keeping the first occurrence in chronological order.
pub fn prepare_intervals(events: &EventSeries) -> Result<IntervalSeries, DataError> {
    let mut dates: Vec<NaiveDate> = events.events.iter().map(|e| e.date).collect();
    dates.dedup();
    if dates.len() < 2 {
        return Err(DataError::InsufficientDates(dates.len()));
    }
    let mut seen = std::collections::HashSet::new();
    let mut intervals = Vec::new();
    for pair in dates.windows(2) {
        let gap = (pair[1] - pair[0]).num_days();
        debug_assert!(gap > 0);
        let gap = gap as u32;
        if seen.insert(gap) {
            intervals.push(gap);
        }
    }
    Ok(IntervalSeries { intervals })
}

/// Extract disclosed losses in date order; empty result allowed.
pub fn extract_losses(events: &EventSeries) -> LossSeries {
    let losses = events.events.iter().filter_map(|e| e.loss_amount).collect();
    LossSeries { losses }
}

/// Subset with a matching category tag, order preserved.
pub fn filter_category(events: &EventSeries, category: &str) -> EventSeries {
    let events = events
        .events
        .iter()
        .filter(|e| e.category.as_deref() == Some(category))
        .cloned()
        .collect();
    EventSeries { events }
}
