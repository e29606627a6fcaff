//! Project-level scaling statistics and their classification.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::CommitRecord;
use crate::regression::ols_fit;
use crate::window::{
    apply_front_load_filter, build_scholtes_samples, build_sornette_periods,
    filter_one_time_contributors, trim_levenshtein_outliers, Measure, PeriodSamples, WindowSample,
};

/// Default significance filter for period slopes.
pub const DEFAULT_P_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Mean of per-period log-log slopes of output on team size.
    Sornette,
    /// One slope of (log) productivity on (log) team size.
    Scholtes,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sornette => "sornette",
            Method::Scholtes => "scholtes",
        }
    }

    /// Coefficient value separating sub- from superlinear scaling.
    pub fn boundary(self) -> f64 {
        match self {
            Method::Sornette => 1.0,
            Method::Scholtes => 0.0,
        }
    }

    pub fn default_measure(self) -> Measure {
        match self {
            Method::Sornette => Measure::FileEdits,
            Method::Scholtes => Measure::Levenshtein,
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sornette" => Ok(Method::Sornette),
            "scholtes" => Ok(Method::Scholtes),
            _ => Err(Error::InvalidInput(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    LogLog,
    LogLin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contributors {
    All,
    FilteredOneTimers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Sublinear,
    Superlinear,
    Undetermined,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Sublinear => "sublinear",
            Classification::Superlinear => "superlinear",
            Classification::Undetermined => "undetermined",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Classification {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sublinear" => Ok(Classification::Sublinear),
            "superlinear" => Ok(Classification::Superlinear),
            "undetermined" => Ok(Classification::Undetermined),
            _ => Err(Error::InvalidInput(format!("unknown classification `{s}`"))),
        }
    }
}

/// Strictly above the method's boundary is superlinear; on or below it is
/// sublinear.
pub fn classify(coefficient: Option<f64>, method: Method) -> Classification {
    match coefficient {
        None => Classification::Undetermined,
        Some(c) if c.is_nan() => Classification::Undetermined,
        Some(c) if c > method.boundary() => Classification::Superlinear,
        Some(_) => Classification::Sublinear,
    }
}

/// One fully specified analysis: the regression method, its variant and the
/// record filters applied before windowing.
///
/// Text form: `method[:option]*`, options being `loglog`, `loglin`, `all`,
/// `no-one-timers`, `p=<threshold>`, `unfiltered`, `fl=<days>`,
/// `trim=<fraction>` and `measure=<file_edits|levenshtein>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSpec {
    pub method: Method,
    pub model: Model,
    pub contributors: Contributors,
    /// Sornette only: keep period slopes with p strictly below this.
    pub p_threshold: Option<f64>,
    pub front_load_days: u32,
    /// Outlier trim per tail; 0 disables trimming.
    pub outlier_fraction: f64,
    pub measure: Measure,
}

impl MethodSpec {
    /// Original Sornette setup: file edits, p < 0.01.
    pub fn sornette() -> Self {
        MethodSpec {
            method: Method::Sornette,
            model: Model::LogLog,
            contributors: Contributors::All,
            p_threshold: Some(DEFAULT_P_THRESHOLD),
            front_load_days: 0,
            outlier_fraction: 0.0,
            measure: Measure::FileEdits,
        }
    }

    /// Original Scholtes setup with the given model.
    pub fn scholtes(model: Model) -> Self {
        MethodSpec {
            method: Method::Scholtes,
            model,
            contributors: Contributors::All,
            p_threshold: None,
            front_load_days: 0,
            outlier_fraction: 0.0,
            measure: Measure::Levenshtein,
        }
    }

    pub fn with_p_threshold(mut self, p: Option<f64>) -> Self {
        self.p_threshold = p;
        self
    }

    pub fn with_front_load_days(mut self, days: u32) -> Self {
        self.front_load_days = days;
        self
    }

    pub fn with_outlier_fraction(mut self, fraction: f64) -> Self {
        self.outlier_fraction = fraction;
        self
    }

    pub fn with_contributors(mut self, contributors: Contributors) -> Self {
        self.contributors = contributors;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.method == Method::Sornette && self.model == Model::LogLin {
            return Err(Error::Config("the sornette method is log-log only".into()));
        }
        if self.method == Method::Scholtes && self.p_threshold.is_some() {
            return Err(Error::Config("the scholtes method takes no p filter".into()));
        }
        if let Some(p) = self.p_threshold {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Config(format!("p threshold {p} outside (0, 1]")));
            }
        }
        if !(0.0..0.5).contains(&self.outlier_fraction) {
            return Err(Error::InvalidFraction(self.outlier_fraction));
        }
        Ok(())
    }

    /// Short label naming the variant, used as a CSV column.
    pub fn variant_label(&self) -> String {
        let model = match self.model {
            Model::LogLog => "loglog",
            Model::LogLin => "loglin",
        };
        let who = match self.contributors {
            Contributors::All => "all",
            Contributors::FilteredOneTimers => "no_one_timers",
        };
        let mut label = format!("{model}/{who}");
        match self.p_threshold {
            Some(p) => label.push_str(&format!("/p<{p}")),
            None => label.push_str("/unfiltered"),
        }
        if self.front_load_days > 0 {
            label.push_str(&format!("/fl{}", self.front_load_days));
        }
        if self.outlier_fraction > 0.0 {
            label.push_str(&format!("/trim{}", self.outlier_fraction));
        }
        if self.measure != self.method.default_measure() {
            label.push_str(&format!("/{}", self.measure.as_str()));
        }
        label
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.method.as_str())?;
        f.write_str(match self.model {
            Model::LogLog => ":loglog",
            Model::LogLin => ":loglin",
        })?;
        f.write_str(match self.contributors {
            Contributors::All => ":all",
            Contributors::FilteredOneTimers => ":no-one-timers",
        })?;
        match self.p_threshold {
            Some(p) => write!(f, ":p={p}")?,
            None => f.write_str(":unfiltered")?,
        }
        write!(
            f,
            ":fl={}:trim={}:measure={}",
            self.front_load_days,
            self.outlier_fraction,
            self.measure.as_str()
        )
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |what: &str| Error::Config(format!("method `{s}`: {what}"));
        let mut parts = s.split(':').map(str::trim);
        let mut spec = match parts.next() {
            Some("sornette") => MethodSpec::sornette(),
            Some("scholtes") => MethodSpec::scholtes(Model::LogLog),
            _ => return Err(bad("must start with `sornette` or `scholtes`")),
        };
        for opt in parts {
            match opt.split_once('=') {
                None => match opt {
                    "loglog" => spec.model = Model::LogLog,
                    "loglin" => spec.model = Model::LogLin,
                    "all" => spec.contributors = Contributors::All,
                    "no-one-timers" => spec.contributors = Contributors::FilteredOneTimers,
                    "unfiltered" => spec.p_threshold = None,
                    other => return Err(bad(&format!("unknown option `{other}`"))),
                },
                Some(("p", v)) => spec.p_threshold = Some(v.parse().map_err(|_| bad("bad p"))?),
                Some(("fl", v)) => spec.front_load_days = v.parse().map_err(|_| bad("bad fl"))?,
                Some(("trim", v)) => spec.outlier_fraction = v.parse().map_err(|_| bad("bad trim"))?,
                Some(("measure", v)) => spec.measure = v.parse()?,
                Some((k, _)) => return Err(bad(&format!("unknown option `{k}`"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl Serialize for MethodSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MethodSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Regression outcome of one 250-day period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodBeta {
    pub period_index: usize,
    pub n_windows: usize,
    /// `None` when the period had too few usable windows.
    pub beta: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingEstimate {
    pub method: Method,
    pub coefficient: Option<f64>,
    /// Sornette only.
    pub period_betas: Vec<PeriodBeta>,
    /// Points behind the coefficient: contributing periods (Sornette) or
    /// samples (Scholtes).
    pub n_points: usize,
    pub classification: Classification,
}

impl ScalingEstimate {
    fn new(method: Method, coefficient: Option<f64>, period_betas: Vec<PeriodBeta>, n_points: usize) -> Self {
        ScalingEstimate {
            method,
            coefficient,
            period_betas,
            n_points,
            classification: classify(coefficient, method),
        }
    }

    pub fn undetermined(method: Method) -> Self {
        ScalingEstimate::new(method, None, Vec::new(), 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectScaling {
    pub project: String,
    pub spec: MethodSpec,
    #[serde(flatten)]
    pub estimate: ScalingEstimate,
}

/// Log-log slope of output on team size for each period.
pub fn period_betas(periods: &[PeriodSamples]) -> Vec<PeriodBeta> {
    periods
        .iter()
        .map(|p| {
            let points: Vec<(f64, f64)> = p
                .samples
                .iter()
                .map(|s| (f64::from(s.team_size).ln(), s.output.ln()))
                .collect();
            let fit = ols_fit(&points).ok();
            PeriodBeta {
                period_index: p.period_index,
                n_windows: p.samples.len(),
                beta: fit.map(|f| f.slope),
                p_value: fit.map(|f| f.p_value),
            }
        })
        .collect()
}

/// Mean of the period slopes passing the filter, `None` when none does.
pub fn average_beta<'a>(betas: impl IntoIterator<Item = &'a PeriodBeta>, p_threshold: Option<f64>) -> (Option<f64>, usize) {
    let kept: Vec<f64> = betas
        .into_iter()
        .filter_map(|b| match (b.beta, b.p_value, p_threshold) {
            (Some(beta), _, None) => Some(beta),
            (Some(beta), Some(p), Some(limit)) if p < limit => Some(beta),
            _ => None,
        })
        .collect();
    if kept.is_empty() {
        (None, 0)
    } else {
        (Some(kept.iter().sum::<f64>() / kept.len() as f64), kept.len())
    }
}

pub fn sornette_average_beta(periods: &[PeriodSamples], p_threshold: Option<f64>) -> ScalingEstimate {
    let betas = period_betas(periods);
    let (coefficient, used) = average_beta(&betas, p_threshold);
    ScalingEstimate::new(Method::Sornette, coefficient, betas, used)
}

pub fn scholtes_alpha3(samples: &[WindowSample], model: Model) -> ScalingEstimate {
    let points: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| {
            let size = f64::from(s.team_size);
            let x = match model {
                Model::LogLog => size.ln(),
                Model::LogLin => size,
            };
            (x, s.productivity.ln())
        })
        .collect();
    match ols_fit(&points) {
        Ok(fit) => ScalingEstimate::new(Method::Scholtes, Some(fit.slope), Vec::new(), fit.n_points),
        Err(_) => ScalingEstimate::undetermined(Method::Scholtes),
    }
}

/// Applies the record filters of `spec` in their fixed order: outlier trim,
/// one-time contributors, front-load days.
pub fn prepare_records(records: &[CommitRecord], spec: &MethodSpec) -> Result<Vec<CommitRecord>> {
    let mut out = if spec.outlier_fraction > 0.0 {
        trim_levenshtein_outliers(records, spec.outlier_fraction)?
    } else {
        records.to_vec()
    };
    if spec.contributors == Contributors::FilteredOneTimers {
        out = filter_one_time_contributors(&out);
    }
    if spec.front_load_days > 0 {
        out = apply_front_load_filter(&out, spec.front_load_days);
    }
    Ok(out)
}

/// Full pipeline for one project. Missing or insufficient data yields an
/// undetermined estimate rather than an error.
pub fn estimate_project(records: &[CommitRecord], spec: &MethodSpec) -> Result<ScalingEstimate> {
    spec.validate()?;
    let prepared = prepare_records(records, spec)?;
    if prepared.is_empty() {
        return Ok(ScalingEstimate::undetermined(spec.method));
    }
    Ok(match spec.method {
        Method::Sornette => {
            let periods = build_sornette_periods(&prepared, spec.measure)?;
            sornette_average_beta(&periods, spec.p_threshold)
        }
        Method::Scholtes => {
            let samples = build_scholtes_samples(&prepared, spec.measure)?;
            scholtes_alpha3(&samples, spec.model)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveTeamSize {
    pub n_effective: f64,
    pub members: usize,
    pub shares: Vec<f64>,
}

/// Entropy-based team size `2^H` of a work distribution.
pub fn effective_team_size(work: &[f64]) -> Result<EffectiveTeamSize> {
    if work.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidInput("work amounts must be finite and non-negative".into()));
    }
    let total: f64 = work.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroWork);
    }
    let shares: Vec<f64> = work.iter().map(|w| w / total).collect();
    let entropy: f64 = shares
        .iter()
        .filter(|f| **f > 0.0)
        .map(|f| -f * f.log2())
        .sum();
    Ok(EffectiveTeamSize {
        n_effective: entropy.exp2().clamp(1.0, work.len() as f64),
        members: work.len(),
        shares,
    })
}
