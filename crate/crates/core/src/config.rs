//! Run configuration, stored as TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bias::{default_front_load_grid, HeadlineSpec};
use crate::error::{Error, Result};
use crate::scaling::{Contributors, MethodSpec, Model, DEFAULT_P_THRESHOLD};
use crate::window::Measure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset manifests (JSON).
    pub manifests: Vec<PathBuf>,
    /// Directory holding `<project id>.jsonl` record files.
    pub records_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Overrides the output measure of every method when set.
    pub measure: Option<Measure>,
    pub methods: Vec<MethodSpec>,
    /// Significance filter used by the comparison experiments.
    pub p_threshold: f64,
    pub front_load_grid: Vec<u32>,
    /// Per-tail outlier trim applied in the front-load sweep.
    pub outlier_fraction: f64,
    /// Drop one-time contributors in the sweep and comparisons.
    pub filter_one_timers: bool,
    pub sweep_model: Model,
    pub jobs: usize,
    pub headline: HeadlineSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        let h = HeadlineSpec::default();
        RunConfig {
            manifests: Vec::new(),
            records_dir: PathBuf::from("records"),
            out_dir: PathBuf::from("out"),
            measure: None,
            methods: vec![
                h.original_sornette,
                h.adjusted_sornette,
                h.original_scholtes,
                MethodSpec::scholtes(Model::LogLin),
                h.adjusted_scholtes,
            ],
            p_threshold: DEFAULT_P_THRESHOLD,
            front_load_grid: default_front_load_grid(),
            outlier_fraction: 0.0,
            filter_one_timers: false,
            sweep_model: Model::LogLog,
            jobs: 1,
            headline: h,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        if self.front_load_grid.is_empty() || self.front_load_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("front_load_grid must be non-empty and strictly ascending".into()));
        }
        let p = self.p_threshold;
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Config(format!("p_threshold {p} outside (0, 1]")));
        }
        self.sweep_spec().validate()?;
        for spec in self.effective_methods() {
            spec.validate()?;
        }
        Ok(())
    }

    fn contributors(&self) -> Contributors {
        if self.filter_one_timers {
            Contributors::FilteredOneTimers
        } else {
            Contributors::All
        }
    }

    /// Configured methods with the measure override applied.
    pub fn effective_methods(&self) -> Vec<MethodSpec> {
        self.methods
            .iter()
            .map(|m| match self.measure {
                Some(measure) => MethodSpec { measure, ..*m },
                None => *m,
            })
            .collect()
    }

    /// Base analysis for the front-load sweep.
    pub fn sweep_spec(&self) -> MethodSpec {
        let spec = MethodSpec::scholtes(self.sweep_model)
            .with_outlier_fraction(self.outlier_fraction)
            .with_contributors(self.contributors());
        match self.measure {
            Some(measure) => MethodSpec { measure, ..spec },
            None => spec,
        }
    }

    /// Base analysis for the p-filter and first-period comparisons.
    pub fn comparison_spec(&self) -> MethodSpec {
        let spec = MethodSpec::sornette()
            .with_p_threshold(Some(self.p_threshold))
            .with_contributors(self.contributors());
        match self.measure {
            Some(measure) => MethodSpec { measure, ..spec },
            None => spec,
        }
    }
}
