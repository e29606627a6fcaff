//! Team-size vs productivity scaling analysis over git commit histories.
//!
//! The crate mines commit streams from git repositories, turns them into
//! regression samples under two windowing schemes (short fixed windows split
//! into 250-day periods, and weekly output with a trailing 295-day team
//! window), fits log-log / log-lin regressions, and runs the experiments that
//! measure how filtering and window choices move the verdict between
//! sublinear and superlinear scaling.

pub mod bias;
pub mod config;
pub mod distance;
pub mod error;
pub mod fixture;
pub mod manifest;
pub mod miner;
pub mod record;
pub mod regression;
pub mod report;
pub mod scaling;
pub mod special;
pub mod stats;
pub mod synth;
pub mod window;

pub use distance::{commit_edit_distance, levenshtein};
pub use error::{Error, Result};
pub use miner::{extract_commits, MiningReport};
pub use bias::{CrossRow, CrossTable, HeadlineSpec};
pub use config::RunConfig;
pub use manifest::{DatasetManifest, LoadedDataset, ProjectData, ProjectEntry};
pub use record::{load_records, persist_records, CommitRecord, FileEdit};
pub use scaling::{Classification, Method, MethodSpec, Model};
pub use window::Measure;
