//! Dataset manifests: which projects form a sample, and over which dates.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, TimeZone, Utc};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{load_records, CommitRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectEntry {
    pub id: String,
    /// Repository path or clone URL.
    pub locator: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub name: String,
    pub projects: Vec<ProjectEntry>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for p in &self.projects {
            if p.id.is_empty() || p.id.contains(['/', '\\']) {
                return Err(Error::Config(format!("{}: invalid project id `{}`", self.name, p.id)));
            }
            if !seen.insert(p.id.as_str()) {
                return Err(Error::Config(format!("{}: duplicate project id `{}`", self.name, p.id)));
            }
            if p.start >= p.end {
                return Err(Error::Config(format!("{}: project `{}` has start >= end", self.name, p.id)));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Record file of a project inside a records directory.
pub fn record_path(records_dir: &Path, project_id: &str) -> PathBuf {
    records_dir.join(format!("{project_id}.jsonl"))
}

/// Records of one project; `None` when its record file is missing.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectData {
    pub id: String,
    pub records: Option<Vec<CommitRecord>>,
}

impl ProjectData {
    pub fn new(id: impl Into<String>, records: Vec<CommitRecord>) -> Self {
        ProjectData {
            id: id.into(),
            records: Some(records),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub name: String,
    pub projects: Vec<ProjectData>,
}

/// Keeps records dated from `start` through `end`, both days inclusive.
pub fn clip_records(records: Vec<CommitRecord>, start: NaiveDate, end: NaiveDate) -> Vec<CommitRecord> {
    let from = Utc.from_utc_datetime(&start.and_hms_opt(0, 0, 0).unwrap());
    let until = crate::miner::cutoff_instant(end);
    records
        .into_iter()
        .filter(|r| r.timestamp >= from && r.timestamp < until)
        .collect()
}

/// Loads every project's records, clipped to its analysis dates. A missing
/// record file leaves the project without data; any other failure is fatal.
pub fn load_dataset(manifest: &DatasetManifest, records_dir: &Path) -> Result<LoadedDataset> {
    let mut projects = Vec::with_capacity(manifest.projects.len());
    for entry in &manifest.projects {
        let path = record_path(records_dir, &entry.id);
        let records = match load_records(&path) {
            Ok(records) => Some(clip_records(records, entry.start, entry.end)),
            Err(Error::Io { source, .. }) if source.kind() == std::io::ErrorKind::NotFound => {
                warn!("{}: no record file at {}", entry.id, path.display());
                None
            }
            Err(e) => return Err(e),
        };
        projects.push(ProjectData {
            id: entry.id.clone(),
            records,
        });
    }
    Ok(LoadedDataset {
        name: manifest.name.clone(),
        projects,
    })
}
