//! Commit extraction from git repositories.

use std::path::{Path, PathBuf};
use std::process::Command;

use chrono::{DateTime, NaiveDate, TimeZone, Utc};
use git2::{Blob, Commit, Delta, DiffFindOptions, DiffOptions, FileMode, Oid, Repository};
use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::distance::commit_edit_distance;
use crate::error::{Error, Result};
use crate::record::{normalize_email, sort_records, CommitRecord, FileEdit};

/// Bytes inspected for a NUL when deciding whether content is binary.
pub const BINARY_SNIFF_LEN: usize = 8000;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningReport {
    pub project: String,
    /// Emitted records plus excluded merges.
    pub commits_total: u64,
    pub merges_excluded: u64,
    pub binary_edits_skipped: u64,
    pub out_of_order_commits_reordered: u64,
    pub cutoff_date: NaiveDate,
    pub commits_after_cutoff: u64,
    pub unparsable_commits_skipped: u64,
    pub empty_identity_skipped: u64,
}

/// True when either side of an edit looks binary.
pub fn is_binary(content: &[u8]) -> bool {
    content[..content.len().min(BINARY_SNIFF_LEN)].contains(&0)
}

/// First instant after the cutoff day; commits at or after it are excluded.
pub fn cutoff_instant(cutoff: NaiveDate) -> DateTime<Utc> {
    let next = cutoff.succ_opt().unwrap_or(NaiveDate::MAX);
    Utc.from_utc_datetime(&next.and_hms_opt(0, 0, 0).unwrap())
}

/// A repository opened for mining. Remote locators are cloned into a
/// temporary directory that lives as long as this value.
pub struct MinedRepo {
    repo: Repository,
    project: String,
    _clone: Option<tempfile::TempDir>,
}

fn looks_remote(locator: &str) -> bool {
    locator.contains("://") || locator.starts_with("git@")
}

pub fn project_name(locator: &str) -> String {
    let trimmed = locator.trim_end_matches('/');
    let last = trimmed.rsplit(['/', ':']).next().unwrap_or(trimmed);
    last.strip_suffix(".git").unwrap_or(last).to_string()
}

impl MinedRepo {
    pub fn open(locator: &str) -> Result<Self> {
        let unreadable = |message: String| Error::UnreadableRepository {
            locator: locator.to_string(),
            message,
        };
        let project = project_name(locator);
        if Path::new(locator).exists() {
            let repo = Repository::open(locator).map_err(|e| unreadable(e.message().to_string()))?;
            return Ok(MinedRepo {
                repo,
                project,
                _clone: None,
            });
        }
        if !looks_remote(locator) {
            return Err(unreadable("no such path".into()));
        }
        let dir = tempfile::tempdir().map_err(|e| unreadable(e.to_string()))?;
        let target: PathBuf = dir.path().join("repo");
        let status = Command::new("git")
            .args(["clone", "--quiet", "--no-checkout", locator])
            .arg(&target)
            .status()
            .map_err(|e| unreadable(format!("cannot run git: {e}")))?;
        if !status.success() {
            return Err(unreadable(format!("git clone exited with {status}")));
        }
        let repo = Repository::open(&target).map_err(|e| unreadable(e.message().to_string()))?;
        Ok(MinedRepo {
            repo,
            project,
            _clone: Some(dir),
        })
    }

    pub fn project(&self) -> &str {
        &self.project
    }

    /// Walks every commit reachable from HEAD and returns the non-merge
    /// commits authored up to and including `cutoff`, sorted by author time.
    pub fn extract(&self, cutoff: NaiveDate) -> Result<(Vec<CommitRecord>, MiningReport)> {
        let repo = &self.repo;
        let limit = cutoff_instant(cutoff).timestamp();
        let mut report = MiningReport {
            project: self.project.clone(),
            cutoff_date: cutoff,
            ..Default::default()
        };

        let mut walk = repo.revwalk()?;
        walk.push_head().map_err(|e| Error::UnreadableRepository {
            locator: self.project.clone(),
            message: e.message().to_string(),
        })?;

        let mut records = Vec::new();
        for oid in walk {
            let commit = repo.find_commit(oid?)?;
            let author = commit.author();
            let when = author.when().seconds();
            let (Some(email), Some(timestamp)) = (author.email().ok(), Utc.timestamp_opt(when, 0).single())
            else {
                debug!("{}: unparsable metadata in {}", self.project, commit.id());
                report.unparsable_commits_skipped += 1;
                continue;
            };
            if when >= limit {
                report.commits_after_cutoff += 1;
                continue;
            }
            if commit.parent_count() > 1 {
                report.merges_excluded += 1;
                report.commits_total += 1;
                continue;
            }
            let author_email = normalize_email(email);
            if author_email.is_empty() {
                warn!("{}: commit {} has no author email", self.project, commit.id());
                report.empty_identity_skipped += 1;
                continue;
            }
            if commit.parents().any(|p| p.author().when().seconds() > when) {
                report.out_of_order_commits_reordered += 1;
            }
            let file_edits = self.file_edits(&commit, &mut report)?;
            report.commits_total += 1;
            records.push(CommitRecord {
                commit_id: commit.id().to_string(),
                author_email,
                timestamp,
                is_merge: false,
                file_edits,
            });
        }
        sort_records(&mut records);
        Ok((records, report))
    }

    fn file_edits(&self, commit: &Commit, report: &mut MiningReport) -> Result<Vec<FileEdit>> {
        let repo = &self.repo;
        let new_tree = commit.tree()?;
        let old_tree = match commit.parents().next() {
            Some(parent) => Some(parent.tree()?),
            None => None,
        };
        let mut opts = DiffOptions::new();
        opts.ignore_submodules(true);
        let mut diff = repo.diff_tree_to_tree(old_tree.as_ref(), Some(&new_tree), Some(&mut opts))?;
        diff.find_similar(Some(DiffFindOptions::new().renames(true)))?;

        let mut edits = Vec::new();
        for delta in diff.deltas() {
            let (old, new) = (delta.old_file(), delta.new_file());
            if old.mode() == FileMode::Commit || new.mode() == FileMode::Commit {
                continue;
            }
            if delta.status() == Delta::Unmodified {
                continue;
            }
            let path = new
                .path()
                .or_else(|| old.path())
                .map(|p| p.to_string_lossy().replace('\\', "/"))
                .unwrap_or_default();
            let before = load_blob(repo, old.id())?;
            let after = load_blob(repo, new.id())?;
            let before = before.as_ref().map_or(&[][..], Blob::content);
            let after = after.as_ref().map_or(&[][..], Blob::content);

            if is_binary(before) || is_binary(after) {
                report.binary_edits_skipped += 1;
                edits.push(FileEdit {
                    path,
                    is_binary: true,
                    levenshtein_distance: 0,
                });
                continue;
            }
            let distance = commit_edit_distance(
                &String::from_utf8_lossy(before),
                &String::from_utf8_lossy(after),
            );
            edits.push(FileEdit {
                path,
                is_binary: false,
                levenshtein_distance: distance,
            });
        }
        Ok(edits)
    }
}

fn load_blob(repo: &Repository, id: Oid) -> Result<Option<Blob<'_>>> {
    if id.is_zero() {
        return Ok(None);
    }
    Ok(Some(repo.find_blob(id)?))
}

/// Mines one repository given a local path or a clone URL.
pub fn extract_commits(locator: &str, cutoff: NaiveDate) -> Result<(Vec<CommitRecord>, MiningReport)> {
    MinedRepo::open(locator)?.extract(cutoff)
}
