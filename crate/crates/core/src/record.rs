//! Mined commit records and their JSON Lines file form.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One modified file within a commit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileEdit {
    pub path: String,
    pub is_binary: bool,
    /// Line-level edit distance in characters. Always 0 for binary files.
    pub levenshtein_distance: u64,
}

/// One mined, non-merge commit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitRecord {
    pub commit_id: String,
    /// Lower-cased, trimmed author email; never empty.
    pub author_email: String,
    pub timestamp: DateTime<Utc>,
    pub is_merge: bool,
    pub file_edits: Vec<FileEdit>,
}

impl CommitRecord {
    /// Number of modified files, binary ones included.
    pub fn files_modified(&self) -> usize {
        self.file_edits.len()
    }

    /// Summed edit distance over the non-binary files of this commit.
    pub fn total_distance(&self) -> u64 {
        self.file_edits
            .iter()
            .filter(|e| !e.is_binary)
            .map(|e| e.levenshtein_distance)
            .sum()
    }

    pub fn unix_seconds(&self) -> i64 {
        self.timestamp.timestamp()
    }
}

/// Normalizes an author email into a team-member identifier.
pub fn normalize_email(raw: &str) -> String {
    raw.trim().to_lowercase()
}

/// Canonical record order: ascending timestamp, ties by commit hash.
pub fn sort_records(records: &mut [CommitRecord]) {
    records.sort_by(|a, b| {
        a.timestamp
            .cmp(&b.timestamp)
            .then_with(|| a.commit_id.cmp(&b.commit_id))
    });
}

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireFile {
    path: String,
    binary: bool,
    lev: i64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireRecord {
    commit: String,
    author_email: String,
    timestamp: String,
    files: Vec<WireFile>,
}

impl From<&CommitRecord> for WireRecord {
    fn from(r: &CommitRecord) -> Self {
        WireRecord {
            commit: r.commit_id.clone(),
            author_email: r.author_email.clone(),
            timestamp: format_timestamp(&r.timestamp),
            files: r
                .file_edits
                .iter()
                .map(|f| WireFile {
                    path: f.path.clone(),
                    binary: f.is_binary,
                    lev: f.levenshtein_distance as i64,
                })
                .collect(),
        }
    }
}

impl TryFrom<WireRecord> for CommitRecord {
    type Error = String;

    fn try_from(w: WireRecord) -> std::result::Result<Self, String> {
        if w.commit.is_empty() {
            return Err("empty commit id".into());
        }
        let author_email = normalize_email(&w.author_email);
        if author_email.is_empty() {
            return Err("empty author_email".into());
        }
        let timestamp = DateTime::parse_from_rfc3339(&w.timestamp)
            .map_err(|e| format!("bad timestamp `{}`: {e}", w.timestamp))?
            .with_timezone(&Utc);
        let mut file_edits = Vec::with_capacity(w.files.len());
        for f in w.files {
            if f.lev < 0 {
                return Err(format!("negative distance {} for `{}`", f.lev, f.path));
            }
            if f.binary && f.lev != 0 {
                return Err(format!("binary file `{}` carries distance {}", f.path, f.lev));
            }
            file_edits.push(FileEdit {
                path: f.path,
                is_binary: f.binary,
                levenshtein_distance: f.lev as u64,
            });
        }
        Ok(CommitRecord {
            commit_id: w.commit,
            author_email,
            timestamp,
            is_merge: false,
            file_edits,
        })
    }
}

/// Serializes records as JSON Lines into any writer.
pub fn write_records<W: Write>(records: &[CommitRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, &WireRecord::from(r))?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn persist_records(records: &[CommitRecord], destination: &Path) -> Result<()> {
    let file = File::create(destination).map_err(|e| Error::io(destination, e))?;
    write_records(records, BufWriter::new(file)).map_err(|e| Error::io(destination, e))
}

/// Loads and validates a record file. Blank lines are ignored; any schema or
/// ordering violation is reported with its 1-based line number.
pub fn load_records(source: &Path) -> Result<Vec<CommitRecord>> {
    let file = File::open(source).map_err(|e| Error::io(source, e))?;
    let schema = |line: usize, message: String| Error::Schema {
        path: source.to_path_buf(),
        line,
        message,
    };
    let mut records: Vec<CommitRecord> = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let wire: WireRecord =
            serde_json::from_str(&line).map_err(|e| schema(lineno, e.to_string()))?;
        let record = CommitRecord::try_from(wire).map_err(|m| schema(lineno, m))?;
        if let Some(prev) = records.last() {
            let ordered = (prev.timestamp, &prev.commit_id) <= (record.timestamp, &record.commit_id);
            if !ordered {
                return Err(schema(lineno, "records are not sorted by (timestamp, commit)".into()));
            }
        }
        records.push(record);
    }
    Ok(records)
}
