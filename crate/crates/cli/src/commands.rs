use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;
use rayon::prelude::*;
use teamscale_core::bias::{
    cross_apply, drop_first_period_comparison, p_filter_comparison, superlinearity_summary,
    sweep_front_load_days,
};
use teamscale_core::manifest::{load_dataset, record_path};
use teamscale_core::miner::MiningReport;
use teamscale_core::report;
use teamscale_core::{
    extract_commits, persist_records, CommitRecord, DatasetManifest, LoadedDataset, MethodSpec,
    ProjectData, RunConfig,
};

use crate::{AnalyzeArgs, Cli, Command, CompareArgs, DataArgs, MineArgs, SweepArgs};

pub fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(out) = cli.out {
        config.out_dir = out;
    }
    if let Some(jobs) = cli.jobs {
        config.jobs = jobs.into();
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.jobs).build()?;
    pool.install(|| match cli.command {
        Command::Mine(args) => mine(&config, args),
        Command::Analyze(args) => analyze(config, args),
        Command::Sweep(args) => sweep(config, args),
        Command::Compare(args) => compare(config, args),
        Command::Report => report_cmd(&config),
    })
}

/// `<records>.report.json` next to a record file.
fn mining_report_path(records: &Path) -> PathBuf {
    records.with_extension("report.json")
}

fn write_mined(records: &[CommitRecord], report: &MiningReport, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    persist_records(records, path)?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    report::write_file(&mining_report_path(path), json.as_bytes())?;
    Ok(())
}

fn describe(report: &MiningReport, records: usize, path: &Path) -> String {
    format!(
        "{}: {records} commits -> {} ({} merges, {} after cutoff, {} binary edits skipped)",
        report.project,
        path.display(),
        report.merges_excluded,
        report.commits_after_cutoff,
        report.binary_edits_skipped
    )
}

fn mine(config: &RunConfig, args: MineArgs) -> Result<()> {
    if let Some(manifest_path) = &args.manifest {
        let manifest = DatasetManifest::load(manifest_path)?;
        let dir = args.records.clone().unwrap_or_else(|| config.records_dir.clone());
        let results: Vec<Result<String>> = manifest
            .projects
            .par_iter()
            .map(|entry| {
                let (records, report) = extract_commits(&entry.locator, entry.end)
                    .with_context(|| format!("mining {}", entry.id))?;
                let path = record_path(&dir, &entry.id);
                write_mined(&records, &report, &path)?;
                Ok(describe(&report, records.len(), &path))
            })
            .collect();
        let mut failures = 0;
        for r in results {
            match r {
                Ok(line) => println!("{line}"),
                Err(e) => {
                    failures += 1;
                    eprintln!("error: {e:#}");
                }
            }
        }
        if failures > 0 {
            bail!("{failures} of {} projects could not be mined", manifest.projects.len());
        }
        return Ok(());
    }
    let locator = args.locator.expect("clap enforces a locator");
    let cutoff = args.cutoff.expect("clap enforces a cutoff");
    let (records, report) = extract_commits(&locator, cutoff)?;
    let path = args
        .output
        .unwrap_or_else(|| record_path(&config.out_dir, &report.project));
    write_mined(&records, &report, &path)?;
    println!("{}", describe(&report, records.len(), &path));
    Ok(())
}

fn apply_data_args(config: &mut RunConfig, data: DataArgs) -> Result<()> {
    if !data.manifests.is_empty() {
        config.manifests = data.manifests;
    }
    if let Some(records) = data.records {
        config.records_dir = records;
    }
    if data.measure.is_some() {
        config.measure = data.measure;
    }
    if data.no_one_timers {
        config.filter_one_timers = true;
    }
    config.validate()?;
    Ok(())
}

fn load_datasets(config: &RunConfig) -> Result<Vec<LoadedDataset>> {
    if config.manifests.is_empty() {
        bail!("no dataset manifest given; pass --manifest or set `manifests` in the config");
    }
    let mut datasets = Vec::new();
    for path in &config.manifests {
        let manifest = DatasetManifest::load(path)?;
        let dataset = load_dataset(&manifest, &config.records_dir)?;
        if !dataset.projects.is_empty() && dataset.projects.iter().all(|p| p.records.is_none()) {
            bail!(
                "no record files for manifest {} in {}; run `teamscale mine --manifest` first",
                path.display(),
                config.records_dir.display()
            );
        }
        datasets.push(dataset);
    }
    Ok(datasets)
}

/// All projects of all datasets; an id used by more than one dataset is
/// qualified as `<dataset>/<id>`.
fn pooled(datasets: Vec<LoadedDataset>) -> Vec<ProjectData> {
    let mut uses: HashMap<String, usize> = HashMap::new();
    for d in &datasets {
        for p in &d.projects {
            *uses.entry(p.id.clone()).or_default() += 1;
        }
    }
    let mut out = Vec::new();
    for d in datasets {
        for mut p in d.projects {
            if uses[&p.id] > 1 {
                p.id = format!("{}/{}", d.name, p.id);
            }
            out.push(p);
        }
    }
    out
}

fn analyze(mut config: RunConfig, args: AnalyzeArgs) -> Result<()> {
    if !args.methods.is_empty() {
        config.methods = args.methods;
    }
    apply_data_args(&mut config, args.data)?;
    let methods: Vec<MethodSpec> = config.effective_methods();
    let datasets = load_datasets(&config)?;
    let app = cross_apply(&datasets, &methods)?;
    let out = &config.out_dir;
    report::write_scaling_csv(&out.join("scaling.csv"), &app.scalings)?;
    report::write_periods_csv(&out.join("periods.csv"), &app.scalings)?;
    report::write_crosstable_csv(&out.join("crosstable.csv"), &app.table)?;
    for row in &app.table.rows {
        println!(
            "{:<9} {:<40} {:<12} sub {:>4}  super {:>4}  undetermined {:>4}",
            row.method.as_str(),
            row.variant,
            row.dataset,
            row.sublinear,
            row.superlinear,
            row.undetermined
        );
    }
    info!("wrote scaling.csv, periods.csv, crosstable.csv to {}", out.display());
    Ok(())
}

fn sweep(mut config: RunConfig, args: SweepArgs) -> Result<()> {
    if !args.grid.is_empty() {
        config.front_load_grid = args.grid;
    }
    if let Some(model) = args.model {
        config.sweep_model = model;
    }
    if let Some(trim) = args.trim {
        config.outlier_fraction = trim;
    }
    apply_data_args(&mut config, args.data)?;
    let projects = pooled(load_datasets(&config)?);
    let result = sweep_front_load_days(&projects, &config.front_load_grid, &config.sweep_spec())?;
    let out = &config.out_dir;
    report::write_sweep_csvs(&out.join("sweep.csv"), &out.join("sweep_summary.csv"), &result)?;
    report::write_file(&out.join("sweep.svg"), report::sweep_svg(&result).as_bytes())?;
    for (i, days) in result.grid.iter().enumerate() {
        println!(
            "fl={days:<4} mean alpha3 {:>10}  determined {}/{}",
            report::fmt_opt(result.mean_alpha3[i]),
            result.determined[i],
            result.total
        );
    }
    Ok(())
}

fn compare(mut config: RunConfig, args: CompareArgs) -> Result<()> {
    if let Some(p) = args.p_threshold {
        config.p_threshold = p;
    }
    apply_data_args(&mut config, args.data)?;
    let projects = pooled(load_datasets(&config)?);
    let base = config.comparison_spec();
    let p_filter = p_filter_comparison(&projects, &base).context("p-filter comparison")?;
    let drop_first = drop_first_period_comparison(&projects, &base).context("first-period comparison")?;
    let rows = report::compare_rows(&p_filter, &drop_first);
    let out = &config.out_dir;
    report::write_compare_csv(&out.join("compare.csv"), &rows)?;
    report::write_pairs_csv(
        &out.join("compare_pairs.csv"),
        &[("drop_first_period", &drop_first.pairs), ("p_filter", &p_filter.pairs)],
    )?;
    for r in &rows {
        println!(
            "{:<18} statistic {:>10}  p {:>12}  n {}",
            r.experiment,
            report::fmt_num(r.outcome.statistic),
            report::fmt_num(r.outcome.p_value),
            r.outcome.n_effective
        );
    }
    println!(
        "sublinear projects: {} filtered, {} unfiltered",
        p_filter.sublinear_filtered, p_filter.sublinear_unfiltered
    );
    Ok(())
}

fn report_cmd(config: &RunConfig) -> Result<()> {
    let out = &config.out_dir;
    let scaling = report::read_scaling_csv(&out.join("scaling.csv"))
        .context("reading analyze output; run `teamscale analyze` first")?;
    let table = report::read_crosstable_csv(&out.join("crosstable.csv"))
        .context("reading analyze output; run `teamscale analyze` first")?;
    let hists = report::histograms(&scaling);
    report::write_histogram_csv(&out.join("histogram.csv"), &hists)?;
    for h in &hists {
        let name = format!("histogram_{}_{}.svg", h.method.as_str(), report::slug(&h.variant));
        report::write_file(&out.join(name), report::histogram_svg(h).as_bytes())?;
    }
    let summary = superlinearity_summary(&table, &config.headline);
    report::write_summary_csvs(&out.join("superlinearity.csv"), &out.join("headlines.csv"), &summary)?;
    report::write_file(&out.join("summary.svg"), report::summary_svg(&summary).as_bytes())?;
    for h in &summary.headlines {
        println!(
            "{:<20} sornette {:>6}%  scholtes {:>6}%  difference {:>6}",
            h.name,
            report::fmt_percent(h.sornette_percent),
            report::fmt_percent(h.scholtes_percent),
            report::fmt_percent(h.difference)
        );
    }
    if summary.headlines.is_empty() {
        println!("no headline rows found in crosstable.csv");
    }
    Ok(())
}
