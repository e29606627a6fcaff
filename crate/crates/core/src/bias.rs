//! Experiments measuring how sampling and pipeline choices move the
//! sub/superlinear verdict.
//!
//! Per-project work runs on the ambient rayon pool; results are always
//! collected in input order, so output does not depend on scheduling.

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifest::{LoadedDataset, ProjectData};
use crate::record::CommitRecord;
use crate::scaling::{
    average_beta, classify, estimate_project, period_betas, prepare_records, Classification, Method,
    MethodSpec, Model, PeriodBeta, ProjectScaling, ScalingEstimate, DEFAULT_P_THRESHOLD,
};
use crate::stats::{ks_two_sample, wilcoxon_signed_rank, TestOutcome};
use crate::window::build_sornette_periods;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossRow {
    pub method: Method,
    pub variant: String,
    pub dataset: String,
    pub sublinear: usize,
    pub superlinear: usize,
    pub undetermined: usize,
    pub total: usize,
}

impl CrossRow {
    pub fn determined(&self) -> usize {
        self.total - self.undetermined
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CrossTable {
    pub rows: Vec<CrossRow>,
}

impl CrossTable {
    pub fn find(&self, spec: &MethodSpec, dataset: &str) -> Option<&CrossRow> {
        let variant = spec.variant_label();
        self.rows
            .iter()
            .find(|r| r.method == spec.method && r.variant == variant && r.dataset == dataset)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetScaling {
    pub dataset: String,
    pub scaling: ProjectScaling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossApplication {
    pub scalings: Vec<DatasetScaling>,
    pub table: CrossTable,
}

fn estimate_or_undetermined(project: &ProjectData, spec: &MethodSpec) -> Result<ScalingEstimate> {
    match &project.records {
        Some(records) => estimate_project(records, spec),
        None => Ok(ScalingEstimate::undetermined(spec.method)),
    }
}

/// Runs every method on every project of every dataset and counts the
/// verdicts per (method variant, dataset).
pub fn cross_apply(datasets: &[LoadedDataset], methods: &[MethodSpec]) -> Result<CrossApplication> {
    for spec in methods {
        spec.validate()?;
    }
    let jobs: Vec<(&LoadedDataset, &ProjectData, &MethodSpec)> = methods
        .iter()
        .flat_map(|spec| {
            datasets
                .iter()
                .flat_map(move |d| d.projects.iter().map(move |p| (d, p, spec)))
        })
        .collect();
    for d in datasets {
        for p in d.projects.iter().filter(|p| p.records.is_none()) {
            warn!("{}/{}: no records, counted as undetermined", d.name, p.id);
        }
    }
    let scalings = jobs
        .par_iter()
        .map(|(d, p, spec)| {
            Ok(DatasetScaling {
                dataset: d.name.clone(),
                scaling: ProjectScaling {
                    project: p.id.clone(),
                    spec: **spec,
                    estimate: estimate_or_undetermined(p, spec)?,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for spec in methods {
        let variant = spec.variant_label();
        for d in datasets {
            let mut row = CrossRow {
                method: spec.method,
                variant: variant.clone(),
                dataset: d.name.clone(),
                sublinear: 0,
                superlinear: 0,
                undetermined: 0,
                total: 0,
            };
            for s in scalings
                .iter()
                .filter(|s| s.dataset == d.name && s.scaling.spec == *spec)
            {
                row.total += 1;
                match s.scaling.estimate.classification {
                    Classification::Sublinear => row.sublinear += 1,
                    Classification::Superlinear => row.superlinear += 1,
                    Classification::Undetermined => row.undetermined += 1,
                }
            }
            rows.push(row);
        }
    }
    Ok(CrossApplication {
        scalings,
        table: CrossTable { rows },
    })
}

/// Two values of the same statistic for one project.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectPair {
    pub project: String,
    pub first: f64,
    pub second: f64,
}

fn as_pairs(pairs: &[ProjectPair]) -> Vec<(f64, f64)> {
    pairs.iter().map(|p| (p.first, p.second)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PFilterComparison {
    /// `first` = filtered average beta, `second` = unfiltered.
    pub pairs: Vec<ProjectPair>,
    pub wilcoxon: TestOutcome,
    /// KS test between the filtered and unfiltered distributions.
    pub ks: TestOutcome,
    /// Mean of `(filtered - unfiltered) / filtered`.
    pub mean_relative_reduction: f64,
    pub sublinear_filtered: usize,
    pub sublinear_unfiltered: usize,
}

fn sornette_betas(records: &[CommitRecord], spec: &MethodSpec) -> Result<Vec<PeriodBeta>> {
    let prepared = prepare_records(records, spec)?;
    if prepared.is_empty() {
        return Ok(Vec::new());
    }
    Ok(period_betas(&build_sornette_periods(&prepared, spec.measure)?))
}

/// Average beta with and without the p filter over the same periods, for
/// every project determined both ways.
pub fn p_filter_comparison(projects: &[ProjectData], base: &MethodSpec) -> Result<PFilterComparison> {
    let threshold = base.p_threshold.unwrap_or(DEFAULT_P_THRESHOLD);
    let spec = base.with_p_threshold(Some(threshold));
    spec.validate()?;
    if spec.method != Method::Sornette {
        return Err(Error::Config("p filter comparison needs the sornette method".into()));
    }
    let per_project = projects
        .par_iter()
        .map(|p| -> Result<Option<ProjectPair>> {
            let Some(records) = &p.records else {
                return Ok(None);
            };
            let betas = sornette_betas(records, &spec)?;
            let (filtered, _) = average_beta(&betas, Some(threshold));
            let (unfiltered, _) = average_beta(&betas, None);
            Ok(filtered.zip(unfiltered).map(|(f, u)| ProjectPair {
                project: p.id.clone(),
                first: f,
                second: u,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<ProjectPair> = per_project.into_iter().flatten().collect();
    if pairs.is_empty() {
        return Err(Error::NoEligibleProjects("no project has an average beta under both settings"));
    }
    let wilcoxon = wilcoxon_signed_rank(&as_pairs(&pairs))?;
    let firsts: Vec<f64> = pairs.iter().map(|p| p.first).collect();
    let seconds: Vec<f64> = pairs.iter().map(|p| p.second).collect();
    let ks = ks_two_sample(&firsts, &seconds)?;
    let mean_relative_reduction =
        pairs.iter().map(|p| (p.first - p.second) / p.first).sum::<f64>() / pairs.len() as f64;
    let sub = |v: f64| classify(Some(v), Method::Sornette) == Classification::Sublinear;
    Ok(PFilterComparison {
        sublinear_filtered: firsts.iter().filter(|v| sub(**v)).count(),
        sublinear_unfiltered: seconds.iter().filter(|v| sub(**v)).count(),
        pairs,
        wilcoxon,
        ks,
        mean_relative_reduction,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepProject {
    pub project: String,
    /// One entry per grid value; `None` where undetermined.
    pub alpha3: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub grid: Vec<u32>,
    pub projects: Vec<SweepProject>,
    /// Mean alpha3 over determined projects per grid value.
    pub mean_alpha3: Vec<Option<f64>>,
    pub determined: Vec<usize>,
    pub total: usize,
}

/// Default grid: 0 to 720 days in 30-day steps.
pub fn default_front_load_grid() -> Vec<u32> {
    (0..=720).step_by(30).collect()
}

/// Re-estimates alpha3 for each front-load value in `grid`. `base` carries
/// the model, contributor filter and optional outlier trim; its own
/// front-load setting is replaced by each grid value.
pub fn sweep_front_load_days(projects: &[ProjectData], grid: &[u32], base: &MethodSpec) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty front-load grid".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("front-load grid must be strictly ascending".into()));
    }
    if base.method != Method::Scholtes {
        return Err(Error::Config("the front-load sweep uses the scholtes method".into()));
    }
    base.validate()?;
    let rows = projects
        .par_iter()
        .map(|p| -> Result<SweepProject> {
            let alpha3 = grid
                .iter()
                .map(|&days| {
                    let spec = base.with_front_load_days(days);
                    estimate_or_undetermined(p, &spec).map(|e| e.coefficient)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepProject {
                project: p.id.clone(),
                alpha3,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut mean_alpha3 = Vec::with_capacity(grid.len());
    let mut determined = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let values: Vec<f64> = rows.iter().filter_map(|r| r.alpha3[i]).collect();
        determined.push(values.len());
        mean_alpha3.push((!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64));
    }
    Ok(SweepResult {
        grid: grid.to_vec(),
        total: rows.len(),
        projects: rows,
        mean_alpha3,
        determined,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodDropComparison {
    /// `first` = average beta over all periods, `second` = without period 0.
    pub pairs: Vec<ProjectPair>,
    pub wilcoxon: TestOutcome,
    pub mean_relative_change: f64,
}

/// Average beta with and without the first 250-day period, over projects
/// with at least two periods.
pub fn drop_first_period_comparison(projects: &[ProjectData], spec: &MethodSpec) -> Result<PeriodDropComparison> {
    spec.validate()?;
    if spec.method != Method::Sornette {
        return Err(Error::Config("first-period comparison needs the sornette method".into()));
    }
    let per_project = projects
        .par_iter()
        .map(|p| -> Result<Option<ProjectPair>> {
            let Some(records) = &p.records else {
                return Ok(None);
            };
            let betas = sornette_betas(records, spec)?;
            if betas.len() < 2 {
                return Ok(None);
            }
            let (all, _) = average_beta(&betas, spec.p_threshold);
            let (rest, _) = average_beta(betas.iter().filter(|b| b.period_index != 0), spec.p_threshold);
            Ok(all.zip(rest).map(|(a, r)| ProjectPair {
                project: p.id.clone(),
                first: a,
                second: r,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<ProjectPair> = per_project.into_iter().flatten().collect();
    if pairs.is_empty() {
        return Err(Error::NoEligibleProjects("no project has two determinable periods"));
    }
    let wilcoxon = wilcoxon_signed_rank(&as_pairs(&pairs))?;
    let mean_relative_change =
        pairs.iter().map(|p| (p.second - p.first) / p.first).sum::<f64>() / pairs.len() as f64;
    Ok(PeriodDropComparison {
        pairs,
        wilcoxon,
        mean_relative_change,
    })
}

/// Which rows of a cross table make up the headline comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadlineSpec {
    pub sornette_dataset: String,
    pub scholtes_dataset: String,
    pub original_sornette: MethodSpec,
    pub original_scholtes: MethodSpec,
    pub adjusted_sornette: MethodSpec,
    pub adjusted_scholtes: MethodSpec,
}

impl Default for HeadlineSpec {
    fn default() -> Self {
        HeadlineSpec {
            sornette_dataset: "sornette".into(),
            scholtes_dataset: "scholtes".into(),
            original_sornette: MethodSpec::sornette(),
            original_scholtes: MethodSpec::scholtes(Model::LogLog),
            adjusted_sornette: MethodSpec::sornette().with_p_threshold(None),
            adjusted_scholtes: MethodSpec::scholtes(Model::LogLog).with_front_load_days(330),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperlinearShare {
    pub method: Method,
    pub variant: String,
    pub dataset: String,
    pub superlinear: usize,
    pub determined: usize,
    /// Percent of determined projects; `None` when none is determined.
    pub percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Headline {
    pub name: &'static str,
    pub sornette_percent: f64,
    pub scholtes_percent: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperlinearitySummary {
    pub shares: Vec<SuperlinearShare>,
    /// The headlines whose rows exist in the table, in fixed order:
    /// original, selection-adjusted, method-adjusted, both-adjusted.
    pub headlines: Vec<Headline>,
}

pub fn percent(superlinear: usize, determined: usize) -> Option<f64> {
    (determined > 0).then(|| 100.0 * superlinear as f64 / determined as f64)
}

/// Superlinear share of determined projects per table row, plus the four
/// headline gaps between the two methods.
pub fn superlinearity_summary(table: &CrossTable, headline: &HeadlineSpec) -> SuperlinearitySummary {
    let shares = table
        .rows
        .iter()
        .map(|r| SuperlinearShare {
            method: r.method,
            variant: r.variant.clone(),
            dataset: r.dataset.clone(),
            superlinear: r.superlinear,
            determined: r.determined(),
            percent: percent(r.superlinear, r.determined()),
        })
        .collect();

    let share_of = |spec: &MethodSpec, datasets: &[&str]| -> Option<f64> {
        let mut sup = 0;
        let mut det = 0;
        for d in datasets {
            let row = table.find(spec, d)?;
            sup += row.superlinear;
            det += row.determined();
        }
        percent(sup, det)
    };
    let own_sornette = [headline.sornette_dataset.as_str()];
    let own_scholtes = [headline.scholtes_dataset.as_str()];
    let both = [headline.sornette_dataset.as_str(), headline.scholtes_dataset.as_str()];
    type Plan<'a> = (&'static str, &'a MethodSpec, &'a [&'a str], &'a MethodSpec, &'a [&'a str]);
    let plans: [Plan; 4] = [
        ("original", &headline.original_sornette, &own_sornette, &headline.original_scholtes, &own_scholtes),
        ("selection_adjusted", &headline.original_sornette, &both, &headline.original_scholtes, &both),
        ("method_adjusted", &headline.adjusted_sornette, &own_sornette, &headline.adjusted_scholtes, &own_scholtes),
        ("both_adjusted", &headline.adjusted_sornette, &both, &headline.adjusted_scholtes, &both),
    ];
    let headlines = plans
        .iter()
        .filter_map(|(name, so, so_sets, sc, sc_sets)| {
            let s = share_of(so, so_sets)?;
            let c = share_of(sc, sc_sets)?;
            Some(Headline {
                name,
                sornette_percent: s,
                scholtes_percent: c,
                difference: s - c,
            })
        })
        .collect();
    SuperlinearitySummary { shares, headlines }
}
