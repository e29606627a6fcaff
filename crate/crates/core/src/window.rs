//! Regression data points from commit streams.
//!
//! Window boundaries are whole-second offsets from the first commit; there is
//! no calendar alignment. Windows with zero output or zero team size are
//! never emitted as samples.

use std::collections::{BTreeSet, HashMap};

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::CommitRecord;

pub const DAY_SECONDS: i64 = 86_400;
pub const SORNETTE_PERIOD_DAYS: i64 = 250;
pub const SORNETTE_WINDOW_DAYS: i64 = 5;
pub const SCHOLTES_OUTPUT_DAYS: i64 = 7;
pub const SCHOLTES_TEAM_DAYS: i64 = 295;
/// Candidate windows in one full period.
pub const WINDOWS_PER_PERIOD: usize = (SORNETTE_PERIOD_DAYS / SORNETTE_WINDOW_DAYS) as usize;
/// A trailing partial period needs at least this many samples to be kept.
pub const MIN_TRAILING_SAMPLES: usize = 2;

/// What counts as team output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// Number of modified files per commit.
    FileEdits,
    /// Line-level edit distance summed over non-binary files.
    Levenshtein,
}

impl Measure {
    pub fn of(self, record: &CommitRecord) -> f64 {
        match self {
            Measure::FileEdits => record.files_modified() as f64,
            Measure::Levenshtein => record.total_distance() as f64,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::FileEdits => "file_edits",
            Measure::Levenshtein => "levenshtein",
        }
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "file_edits" | "files" => Ok(Measure::FileEdits),
            "levenshtein" | "lev" => Ok(Measure::Levenshtein),
            other => Err(Error::Config(format!("unknown measure `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
    pub team_window_start: DateTime<Utc>,
    pub team_size: u32,
    pub output: f64,
    pub productivity: f64,
}

/// One candidate output window, emitted or not.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputWindow {
    pub index: usize,
    pub start: i64,
    pub end: i64,
    pub team_window_start: i64,
    /// Commits whose timestamp falls in `[start, end)`.
    pub commits: usize,
    pub team_size: u32,
    pub output: f64,
}

impl OutputWindow {
    pub fn is_empty(&self) -> bool {
        self.team_size == 0 || self.output <= 0.0
    }

    fn to_sample(&self) -> WindowSample {
        WindowSample {
            window_start: instant(self.start),
            window_end: instant(self.end),
            team_window_start: instant(self.team_window_start),
            team_size: self.team_size,
            output: self.output,
            productivity: self.output / f64::from(self.team_size),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodSamples {
    pub period_index: usize,
    pub period_start: DateTime<Utc>,
    pub period_end: DateTime<Utc>,
    pub candidate_windows: usize,
    pub samples: Vec<WindowSample>,
}

fn instant(seconds: i64) -> DateTime<Utc> {
    Utc.timestamp_opt(seconds, 0).single().expect("timestamp in range")
}

/// Analyzed span: from the first commit up to one second past the last.
fn span(records: &[CommitRecord]) -> Result<(i64, i64)> {
    let first = records.first().ok_or(Error::EmptyRecords)?;
    let last = records.last().unwrap();
    debug_assert!(records.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
    Ok((first.unix_seconds(), last.unix_seconds() + 1))
}

/// All candidate 5-day windows over the analyzed span, team and output both
/// taken from the same window.
pub fn sornette_output_windows(records: &[CommitRecord], measure: Measure) -> Result<Vec<OutputWindow>> {
    let (origin, end) = span(records)?;
    let width = SORNETTE_WINDOW_DAYS * DAY_SECONDS;
    let count = ((end - origin) + width - 1) / width;
    let mut windows: Vec<(OutputWindow, BTreeSet<&str>)> = (0..count as usize)
        .map(|i| {
            let start = origin + i as i64 * width;
            let w = OutputWindow {
                index: i,
                start,
                end: start + width,
                team_window_start: start,
                commits: 0,
                team_size: 0,
                output: 0.0,
            };
            (w, BTreeSet::new())
        })
        .collect();
    for r in records {
        let i = ((r.unix_seconds() - origin) / width) as usize;
        let (w, team) = &mut windows[i];
        w.commits += 1;
        w.output += measure.of(r);
        team.insert(r.author_email.as_str());
    }
    Ok(windows
        .into_iter()
        .map(|(mut w, team)| {
            w.team_size = team.len() as u32;
            w
        })
        .collect())
}

/// Splits the history into 250-day periods of 5-day windows.
pub fn build_sornette_periods(records: &[CommitRecord], measure: Measure) -> Result<Vec<PeriodSamples>> {
    let (origin, end) = span(records)?;
    let windows = sornette_output_windows(records, measure)?;
    let period_len = SORNETTE_PERIOD_DAYS * DAY_SECONDS;

    let mut periods = Vec::new();
    for (index, chunk) in windows.chunks(WINDOWS_PER_PERIOD).enumerate() {
        let start = origin + index as i64 * period_len;
        let samples: Vec<WindowSample> = chunk
            .iter()
            .filter(|w| !w.is_empty())
            .map(OutputWindow::to_sample)
            .collect();
        let partial = start + period_len > end;
        if partial && samples.len() < MIN_TRAILING_SAMPLES {
            continue;
        }
        periods.push(PeriodSamples {
            period_index: index,
            period_start: instant(start),
            period_end: instant(start + period_len),
            candidate_windows: chunk.len(),
            samples,
        });
    }
    Ok(periods)
}

/// All candidate 7-day output windows, each paired with the trailing 295-day
/// team window that ends with it (clipped at the first commit).
pub fn scholtes_output_windows(records: &[CommitRecord], measure: Measure) -> Result<Vec<OutputWindow>> {
    let (origin, end) = span(records)?;
    let width = SCHOLTES_OUTPUT_DAYS * DAY_SECONDS;
    let team_len = SCHOLTES_TEAM_DAYS * DAY_SECONDS;
    let count = ((end - origin) + width - 1) / width;

    let mut windows = Vec::with_capacity(count as usize);
    let mut members: HashMap<&str, usize> = HashMap::new();
    let (mut head, mut tail, mut out) = (0usize, 0usize, 0usize);
    for i in 0..count as usize {
        let start = origin + i as i64 * width;
        let stop = start + width;
        let team_start = (stop - team_len).max(origin);
        while head < records.len() && records[head].unix_seconds() < stop {
            *members.entry(records[head].author_email.as_str()).or_default() += 1;
            head += 1;
        }
        while tail < head && records[tail].unix_seconds() < team_start {
            let email = records[tail].author_email.as_str();
            let n = members.get_mut(email).expect("member present");
            *n -= 1;
            if *n == 0 {
                members.remove(email);
            }
            tail += 1;
        }
        let mut window = OutputWindow {
            index: i,
            start,
            end: stop,
            team_window_start: team_start,
            commits: 0,
            team_size: members.len() as u32,
            output: 0.0,
        };
        while out < records.len() && records[out].unix_seconds() < stop {
            window.commits += 1;
            window.output += measure.of(&records[out]);
            out += 1;
        }
        windows.push(window);
    }
    Ok(windows)
}

/// Weekly output against the trailing 295-day team size.
pub fn build_scholtes_samples(records: &[CommitRecord], measure: Measure) -> Result<Vec<WindowSample>> {
    Ok(scholtes_output_windows(records, measure)?
        .iter()
        .filter(|w| !w.is_empty())
        .map(OutputWindow::to_sample)
        .collect())
}

/// Drops every commit of authors who have exactly one commit in `records`.
/// A single pass: authors left with one commit afterwards are kept.
pub fn filter_one_time_contributors(records: &[CommitRecord]) -> Vec<CommitRecord> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for r in records {
        *counts.entry(r.author_email.as_str()).or_default() += 1;
    }
    records
        .iter()
        .filter(|r| counts[r.author_email.as_str()] >= 2)
        .cloned()
        .collect()
}

/// Drops commits made within the first `days` days after the first commit.
pub fn apply_front_load_filter(records: &[CommitRecord], days: u32) -> Vec<CommitRecord> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let threshold = first.unix_seconds() + i64::from(days) * DAY_SECONDS;
    records
        .iter()
        .filter(|r| r.unix_seconds() >= threshold)
        .cloned()
        .collect()
}

/// Removes the `floor(fraction * n)` smallest and largest commits by total
/// edit distance. Ties are ordered by commit hash; survivors keep their order.
pub fn trim_levenshtein_outliers(records: &[CommitRecord], fraction: f64) -> Result<Vec<CommitRecord>> {
    if !(0.0..0.5).contains(&fraction) {
        return Err(Error::InvalidFraction(fraction));
    }
    let n = records.len();
    // the epsilon absorbs representation error in products like 0.025 * 40
    let cut = (fraction * n as f64 + 1e-9).floor() as usize;
    if cut == 0 {
        return Ok(records.to_vec());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&records[a], &records[b]);
        ra.total_distance()
            .cmp(&rb.total_distance())
            .then_with(|| ra.commit_id.cmp(&rb.commit_id))
    });
    let mut keep = vec![false; n];
    for &i in &order[cut..n - cut] {
        keep[i] = true;
    }
    Ok(records
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(r, _)| r.clone())
        .collect())
}
