//! CSV and SVG emission.
//!
//! Numbers are written with Rust's `Display` for `f64`, the shortest
//! decimal that parses back to the same value; missing values are empty
//! cells. Rows are sorted before writing so output never depends on
//! evaluation order. Every number drawn in an SVG also appears in a CSV.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::bias::{
    CrossRow, CrossTable, DatasetScaling, PFilterComparison, PeriodDropComparison, ProjectPair,
    SuperlinearitySummary, SweepResult,
};
use crate::error::{Error, Result};
use crate::scaling::{Classification, Method};
use crate::stats::TestOutcome;

pub const HISTOGRAM_MIN: f64 = -1.5;
pub const HISTOGRAM_MAX: f64 = 2.5;
/// Bins per unit; width 0.1.
const BINS_PER_UNIT: f64 = 10.0;
pub const HISTOGRAM_BINS: usize = 40;

pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        // Fold -0 into 0.
        return "0".into();
    }
    x.to_string()
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// Two-decimal rendering used for percentages shown in charts.
pub fn fmt_percent(x: f64) -> String {
    format!("{x:.2}")
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    write_file(path, &csv_bytes(header, rows)?)
}

pub const SCALING_HEADER: [&str; 7] =
    ["project", "method", "variant", "coefficient", "classification", "n_points", "dataset"];

/// One line of `scaling.csv`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ScalingRow {
    pub project: String,
    pub method: Method,
    pub variant: String,
    pub coefficient: Option<f64>,
    pub classification: Classification,
    pub n_points: usize,
    pub dataset: String,
}

impl ScalingRow {
    fn key(&self) -> (&str, Method, &str, &str) {
        (&self.project, self.method, &self.variant, &self.dataset)
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.project.clone(),
            self.method.as_str().into(),
            self.variant.clone(),
            fmt_opt(self.coefficient),
            self.classification.as_str().into(),
            self.n_points.to_string(),
            self.dataset.clone(),
        ]
    }
}

pub fn scaling_rows(scalings: &[DatasetScaling]) -> Vec<ScalingRow> {
    let mut rows: Vec<ScalingRow> = scalings
        .iter()
        .map(|d| ScalingRow {
            project: d.scaling.project.clone(),
            method: d.scaling.spec.method,
            variant: d.scaling.spec.variant_label(),
            coefficient: d.scaling.estimate.coefficient,
            classification: d.scaling.estimate.classification,
            n_points: d.scaling.estimate.n_points,
            dataset: d.dataset.clone(),
        })
        .collect();
    rows.sort_by(|a, b| a.key().cmp(&b.key()));
    rows.dedup_by(|a, b| a.key() == b.key());
    rows
}

/// `scaling.csv`: one summary row per project and analysis, sorted by
/// project, method, variant and dataset.
pub fn write_scaling_csv(path: &Path, scalings: &[DatasetScaling]) -> Result<()> {
    write_csv(path, &SCALING_HEADER, scaling_rows(scalings).iter().map(ScalingRow::cells))
}

pub fn read_scaling_csv(path: &Path) -> Result<Vec<ScalingRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    check_header(path, reader.headers()?, &SCALING_HEADER)?;
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

fn check_header(path: &Path, found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().eq(expected.iter().copied()) {
        Ok(())
    } else {
        Err(Error::Schema {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header `{}`", expected.join(",")),
        })
    }
}

/// `periods.csv`: per-period slopes of every period-based analysis, sorted
/// by project, period index, variant and dataset.
pub fn write_periods_csv(path: &Path, scalings: &[DatasetScaling]) -> Result<()> {
    let mut rows: Vec<(&str, usize, String, &str, Vec<String>)> = Vec::new();
    for d in scalings {
        let variant = d.scaling.spec.variant_label();
        for p in &d.scaling.estimate.period_betas {
            let cells = vec![
                d.scaling.project.clone(),
                p.period_index.to_string(),
                fmt_opt(p.beta),
                fmt_opt(p.p_value),
                p.n_windows.to_string(),
                variant.clone(),
                d.dataset.clone(),
            ];
            rows.push((&d.scaling.project, p.period_index, variant.clone(), &d.dataset, cells));
        }
    }
    rows.sort_by(|a, b| (a.0, a.1, &a.2, a.3).cmp(&(b.0, b.1, &b.2, b.3)));
    rows.dedup_by(|a, b| (a.0, a.1, &a.2, a.3) == (b.0, b.1, &b.2, b.3));
    write_csv(
        path,
        &["project", "period_index", "beta", "p_value", "n_windows", "variant", "dataset"],
        rows.into_iter().map(|r| r.4),
    )
}

pub const CROSSTABLE_HEADER: [&str; 7] =
    ["method", "variant", "dataset", "sublinear", "superlinear", "undetermined", "total"];

/// `crosstable.csv`, in table order.
pub fn write_crosstable_csv(path: &Path, table: &CrossTable) -> Result<()> {
    write_csv(
        path,
        &CROSSTABLE_HEADER,
        table.rows.iter().map(|r| {
            vec![
                r.method.as_str().into(),
                r.variant.clone(),
                r.dataset.clone(),
                r.sublinear.to_string(),
                r.superlinear.to_string(),
                r.undetermined.to_string(),
                r.total.to_string(),
            ]
        }),
    )
}

pub fn read_crosstable_csv(path: &Path) -> Result<CrossTable> {
    let mut reader = csv::Reader::from_path(path)?;
    check_header(path, reader.headers()?, &CROSSTABLE_HEADER)?;
    let mut rows = Vec::new();
    for (i, rec) in reader.deserialize().enumerate() {
        let (method, variant, dataset, sublinear, superlinear, undetermined, total): (
            Method,
            String,
            String,
            usize,
            usize,
            usize,
            usize,
        ) = rec?;
        if sublinear + superlinear + undetermined != total {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                line: i + 2,
                message: "counts do not add up to total".into(),
            });
        }
        rows.push(CrossRow { method, variant, dataset, sublinear, superlinear, undetermined, total });
    }
    Ok(CrossTable { rows })
}

/// `sweep.csv` (one row per project and grid value) and
/// `sweep_summary.csv` (one row per grid value).
pub fn write_sweep_csvs(sweep_path: &Path, summary_path: &Path, sweep: &SweepResult) -> Result<()> {
    let mut projects: Vec<_> = sweep.projects.iter().collect();
    projects.sort_by(|a, b| a.project.cmp(&b.project));
    let rows = projects.iter().flat_map(|p| {
        sweep.grid.iter().zip(&p.alpha3).map(move |(days, a)| {
            vec![p.project.clone(), days.to_string(), fmt_opt(*a), a.is_some().to_string()]
        })
    });
    write_csv(sweep_path, &["project", "front_load_days", "alpha3", "determined"], rows)?;
    let summary = (0..sweep.grid.len()).map(|i| {
        vec![
            sweep.grid[i].to_string(),
            fmt_opt(sweep.mean_alpha3[i]),
            sweep.determined[i].to_string(),
            sweep.total.to_string(),
        ]
    });
    write_csv(summary_path, &["front_load_days", "mean_alpha3", "determined", "total"], summary)
}

/// One experiment line of `compare.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub experiment: &'static str,
    pub outcome: TestOutcome,
    pub mean_relative_change: f64,
}

pub fn compare_rows(p_filter: &PFilterComparison, drop_first: &PeriodDropComparison) -> Vec<CompareRow> {
    vec![
        CompareRow {
            experiment: "drop_first_period",
            outcome: drop_first.wilcoxon,
            mean_relative_change: drop_first.mean_relative_change,
        },
        CompareRow {
            experiment: "p_filter",
            outcome: p_filter.wilcoxon,
            mean_relative_change: -p_filter.mean_relative_reduction,
        },
        CompareRow {
            experiment: "p_filter_ks",
            outcome: p_filter.ks,
            mean_relative_change: -p_filter.mean_relative_reduction,
        },
    ]
}

/// `compare.csv`, sorted by experiment name. `n_pairs` counts the pairs
/// entering the test (after dropping zero differences for Wilcoxon).
pub fn write_compare_csv(path: &Path, rows: &[CompareRow]) -> Result<()> {
    let mut rows: Vec<_> = rows.iter().collect();
    rows.sort_by_key(|r| r.experiment);
    write_csv(
        path,
        &["experiment", "statistic", "p_value", "n_pairs", "mean_relative_change"],
        rows.iter().map(|r| {
            vec![
                r.experiment.into(),
                fmt_num(r.outcome.statistic),
                fmt_num(r.outcome.p_value),
                r.outcome.n_effective.to_string(),
                fmt_num(r.mean_relative_change),
            ]
        }),
    )
}

/// `compare_pairs.csv`: the paired per-project values behind each test.
pub fn write_pairs_csv(path: &Path, experiments: &[(&str, &[ProjectPair])]) -> Result<()> {
    let mut rows: Vec<(&str, &str, Vec<String>)> = Vec::new();
    for (name, pairs) in experiments {
        for p in pairs.iter() {
            rows.push((&p.project, name, vec![name.to_string(), p.project.clone(), fmt_num(p.first), fmt_num(p.second)]));
        }
    }
    rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    write_csv(path, &["experiment", "project", "first", "second"], rows.into_iter().map(|r| r.2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub method: Method,
    pub variant: String,
    /// Count per bin; bin `i` covers `[edge(i), edge(i + 1))`.
    pub counts: [usize; HISTOGRAM_BINS],
}

pub fn bin_edge(i: usize) -> f64 {
    (i as f64 - 15.0) / BINS_PER_UNIT
}

/// Bin index of `x`; values outside the range land in the edge bins.
pub fn bin_index(x: f64) -> usize {
    let i = (x * BINS_PER_UNIT).floor() + 15.0;
    i.clamp(0.0, (HISTOGRAM_BINS - 1) as f64) as usize
}

/// Histograms of determined coefficients, one per (method, variant) and
/// pooled over datasets.
pub fn histograms(rows: &[ScalingRow]) -> Vec<Histogram> {
    let mut out: Vec<Histogram> = Vec::new();
    let mut rows: Vec<_> = rows.iter().collect();
    rows.sort_by(|a, b| (a.method, &a.variant).cmp(&(b.method, &b.variant)));
    for r in rows {
        if out.last().is_none_or(|h| h.method != r.method || h.variant != r.variant) {
            out.push(Histogram { method: r.method, variant: r.variant.clone(), counts: [0; HISTOGRAM_BINS] });
        }
        if let Some(c) = r.coefficient.filter(|c| c.is_finite()) {
            out.last_mut().unwrap().counts[bin_index(c)] += 1;
        }
    }
    out
}

pub fn write_histogram_csv(path: &Path, hists: &[Histogram]) -> Result<()> {
    let rows = hists.iter().flat_map(|h| {
        (0..HISTOGRAM_BINS).map(move |i| {
            vec![
                h.method.as_str().into(),
                h.variant.clone(),
                fmt_num(bin_edge(i)),
                fmt_num(bin_edge(i + 1)),
                h.counts[i].to_string(),
            ]
        })
    });
    write_csv(path, &["method", "variant", "bin_start", "bin_end", "count"], rows)
}

/// File-name-safe form of a variant label.
pub fn slug(text: &str) -> String {
    text.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn svg_open(width: u32, height: u32, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#, width / 2, escape(title));
    s
}

pub fn histogram_svg(h: &Histogram) -> String {
    let (w, ht) = (640u32, 320u32);
    let (left, right, top, bottom) = (40.0, 620.0, 40.0, 280.0);
    let max = h.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let bar_w = (right - left) / HISTOGRAM_BINS as f64;
    let label = match h.method {
        Method::Sornette => "average beta",
        Method::Scholtes => "alpha3",
    };
    let mut s = svg_open(w, ht, &format!("{} {} ({label})", h.method.as_str(), h.variant));
    for (i, &count) in h.counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let x = left + i as f64 * bar_w;
        let bh = (bottom - top) * count as f64 / max;
        let _ = writeln!(
            s,
            r##"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{bh:.2}" fill="#4c72b0"/>"##,
            bottom - bh,
            bar_w - 1.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{count}</text>"#,
            x + bar_w / 2.0,
            bottom - bh - 3.0
        );
    }
    let _ = writeln!(s, r#"<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>"#);
    for i in (0..=HISTOGRAM_BINS).step_by(5) {
        let x = left + i as f64 * bar_w;
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{bottom}" x2="{x:.2}" y2="{}" stroke="black"/>"#, bottom + 4.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, bottom + 16.0, fmt_num(bin_edge(i)));
    }
    s.push_str("</svg>\n");
    s
}

/// Mean alpha3 against front-load days. Point values are exposed only as
/// tooltips and come from `sweep_summary.csv`.
pub fn sweep_svg(sweep: &SweepResult) -> String {
    let (w, ht) = (640u32, 320u32);
    let (left, right, top, bottom) = (40.0, 620.0, 40.0, 280.0);
    let mut s = svg_open(w, ht, "mean alpha3 by front-load days");
    let points: Vec<(u32, f64)> = sweep
        .grid
        .iter()
        .zip(&sweep.mean_alpha3)
        .filter_map(|(d, m)| m.map(|m| (*d, m)))
        .collect();
    let (gmin, gmax) = (*sweep.grid.first().unwrap_or(&0) as f64, *sweep.grid.last().unwrap_or(&1) as f64);
    let (mut ymin, mut ymax) = points.iter().fold((0.0f64, 0.0f64), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    if ymax - ymin < 1e-12 {
        ymin -= 1.0;
        ymax += 1.0;
    }
    let sx = |d: f64| if gmax > gmin { left + (right - left) * (d - gmin) / (gmax - gmin) } else { (left + right) / 2.0 };
    let sy = |v: f64| bottom - (bottom - top) * (v - ymin) / (ymax - ymin);
    let zero = sy(0.0);
    let _ = writeln!(s, r##"<line x1="{left}" y1="{zero:.2}" x2="{right}" y2="{zero:.2}" stroke="#999" stroke-dasharray="4 3"/>"##);
    if !points.is_empty() {
        let path: Vec<String> = points.iter().map(|(d, m)| format!("{:.2},{:.2}", sx(*d as f64), sy(*m))).collect();
        let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#c44e52" stroke-width="2"/>"##, path.join(" "));
        for (d, m) in &points {
            let _ = writeln!(
                s,
                r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#c44e52"><title>{d}: {}</title></circle>"##,
                sx(*d as f64),
                sy(*m),
                fmt_num(*m)
            );
        }
    }
    let _ = writeln!(s, r#"<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>"#);
    let step = sweep.grid.len().div_ceil(8).max(1);
    for d in sweep.grid.iter().step_by(step) {
        let x = sx(*d as f64);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{d}</text>"#, bottom + 16.0);
    }
    s.push_str("</svg>\n");
    s
}

/// `superlinearity.csv` and `headlines.csv`. Percent columns appear both at
/// full precision and rounded to two decimals as printed in the chart.
pub fn write_summary_csvs(shares_path: &Path, headlines_path: &Path, summary: &SuperlinearitySummary) -> Result<()> {
    let mut shares: Vec<_> = summary.shares.iter().collect();
    shares.sort_by(|a, b| (a.method, &a.variant, &a.dataset).cmp(&(b.method, &b.variant, &b.dataset)));
    write_csv(
        shares_path,
        &["method", "variant", "dataset", "superlinear", "determined", "percent", "percent_2dp"],
        shares.iter().map(|r| {
            vec![
                r.method.as_str().into(),
                r.variant.clone(),
                r.dataset.clone(),
                r.superlinear.to_string(),
                r.determined.to_string(),
                fmt_opt(r.percent),
                r.percent.map(fmt_percent).unwrap_or_default(),
            ]
        }),
    )?;
    write_csv(
        headlines_path,
        &[
            "headline",
            "sornette_percent",
            "scholtes_percent",
            "difference",
            "sornette_percent_2dp",
            "scholtes_percent_2dp",
            "difference_2dp",
        ],
        summary.headlines.iter().map(|h| {
            vec![
                h.name.into(),
                fmt_num(h.sornette_percent),
                fmt_num(h.scholtes_percent),
                fmt_num(h.difference),
                fmt_percent(h.sornette_percent),
                fmt_percent(h.scholtes_percent),
                fmt_percent(h.difference),
            ]
        }),
    )
}

/// Grouped bars: superlinear percentage under each method per headline.
pub fn summary_svg(summary: &SuperlinearitySummary) -> String {
    let (w, ht) = (640u32, 340u32);
    let (left, right, top, bottom) = (40.0, 620.0, 50.0, 280.0);
    let mut s = svg_open(w, ht, "superlinear projects (% of determined)");
    let groups = summary.headlines.len().max(1) as f64;
    let group_w = (right - left) / groups;
    let bar_w = group_w * 0.35;
    for (i, h) in summary.headlines.iter().enumerate() {
        let gx = left + i as f64 * group_w + group_w * 0.15;
        for (j, (value, colour)) in [(h.sornette_percent, "#4c72b0"), (h.scholtes_percent, "#dd8452")].iter().enumerate() {
            let x = gx + j as f64 * bar_w;
            let bh = (bottom - top) * value.clamp(0.0, 100.0) / 100.0;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{bh:.2}" fill="{colour}"/>"#,
                bottom - bh,
                bar_w - 2.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                x + bar_w / 2.0,
                bottom - bh - 4.0,
                fmt_percent(*value)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            gx + bar_w,
            bottom + 16.0,
            escape(h.name)
        );
    }
    let _ = writeln!(s, r#"<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>"#);
    let _ = writeln!(s, r##"<rect x="{left}" y="{}" width="10" height="10" fill="#4c72b0"/>"##, bottom + 30.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}">sornette</text>"#, left + 14.0, bottom + 39.0);
    let _ = writeln!(s, r##"<rect x="{}" y="{}" width="10" height="10" fill="#dd8452"/>"##, left + 90.0, bottom + 30.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}">scholtes</text>"#, left + 104.0, bottom + 39.0);
    s.push_str("</svg>\n");
    s
}
