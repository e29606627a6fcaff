use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use teamscale_core::bias::{superlinearity_summary, CrossApplication};
use teamscale_core::fixture::write_demo_repo;
use teamscale_core::report::{self, fmt_percent};
use teamscale_core::{extract_commits, CrossRow, CrossTable, HeadlineSpec, MethodSpec};

fn teamscale(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teamscale"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn toy(name: &str) -> String {
    root().join("data/toy").join(name).display().to_string()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn mine_writes_records_and_report_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let repo = dir.path().join("demo");
    write_demo_repo(&repo).unwrap();
    let first = dir.path().join("a/demo.jsonl");
    let second = dir.path().join("b/demo.jsonl");
    for out in [&first, &second] {
        assert_ok(&teamscale(&["mine", s(&repo), "--cutoff", "2015-12-31", "--output", s(out)]));
    }
    let (records, _) = extract_commits(s(&repo), "2015-12-31".parse().unwrap()).unwrap();
    assert_eq!(read(&first).lines().count(), records.len());
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    let report = read(&dir.path().join("a/demo.report.json"));
    assert!(report.contains("\"merges_excluded\": 1"), "{report}");
    assert_eq!(report, read(&dir.path().join("b/demo.report.json")));
}

#[test]
fn mine_defaults_to_out_directory() {
    let dir = tempfile::tempdir().unwrap();
    let repo = dir.path().join("demo");
    write_demo_repo(&repo).unwrap();
    let out = dir.path().join("out");
    assert_ok(&teamscale(&["--out", s(&out), "mine", s(&repo), "--cutoff", "2015-12-31"]));
    assert!(out.join("demo.jsonl").exists());
}

#[test]
fn mine_invalid_path_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let out = teamscale(&["mine", s(&missing), "--cutoff", "2015-01-01", "--output", s(&dir.path().join("x.jsonl"))]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("cannot open repository"), "{stderr}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(teamscale(&["mine", "--cutoff", "not-a-date", "x"]).status.code(), Some(2));
    assert_eq!(teamscale(&["analyze", "--bogus"]).status.code(), Some(2));
    assert_eq!(teamscale(&["--jobs", "0", "report"]).status.code(), Some(2));
    assert_eq!(teamscale(&["analyze", "--method", "sornette:loglin"]).status.code(), Some(2));
}

#[test]
fn analyze_without_inputs_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = teamscale(&["--out", s(dir.path()), "analyze"]);
    assert_eq!(out.status.code(), Some(2));
    let out = teamscale(&["--out", s(dir.path()), "analyze", "--manifest", &toy("sornette.json"), "--records", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no record files"));
    let out = teamscale(&["--out", s(dir.path()), "report"]);
    assert_eq!(out.status.code(), Some(2));
}

/// Verdicts worked out by hand from the toy records:
/// grow (n authors each editing n files, n = 1..6): beta 2, alpha3 1;
/// flat (12 files per week whatever the team): beta 0 with p = 1, alpha3 -1;
/// mixed (n^2 files but constant edit distance per author): beta 2, alpha3 0;
/// steady (always two authors): undetermined everywhere.
/// The toy history spans five weeks, so a 330-day front load leaves nothing.
const TOY_CROSSTABLE: &str = "\
method,variant,dataset,sublinear,superlinear,undetermined,total
sornette,loglog/all/p<0.01,sornette,0,1,1,2
sornette,loglog/all/p<0.01,scholtes,0,1,1,2
sornette,loglog/all/unfiltered,sornette,1,1,0,2
sornette,loglog/all/unfiltered,scholtes,0,1,1,2
scholtes,loglog/all/unfiltered,sornette,1,1,0,2
scholtes,loglog/all/unfiltered,scholtes,1,0,1,2
scholtes,loglin/all/unfiltered,sornette,1,1,0,2
scholtes,loglin/all/unfiltered,scholtes,1,0,1,2
scholtes,loglog/all/unfiltered/fl330,sornette,0,0,2,2
scholtes,loglog/all/unfiltered/fl330,scholtes,0,0,2,2
";

#[test]
fn analyze_toy_manifests_matches_hand_counts() {
    let dir = tempfile::tempdir().unwrap();
    let records = toy("records");
    let out = teamscale(&[
        "--out",
        s(dir.path()),
        "analyze",
        "--manifest",
        &toy("sornette.json"),
        "--manifest",
        &toy("scholtes.json"),
        "--records",
        &records,
    ]);
    assert_ok(&out);
    assert_eq!(read(&dir.path().join("crosstable.csv")), TOY_CROSSTABLE);
    let scaling = read(&dir.path().join("scaling.csv"));
    assert!(scaling.contains("grow,scholtes,loglog/all/unfiltered,1,superlinear,6,sornette\n"));
    assert!(scaling.contains("flat,scholtes,loglog/all/unfiltered,-1,sublinear,5,sornette\n"));
    assert!(scaling.contains("mixed,scholtes,loglog/all/unfiltered,0,sublinear,6,scholtes\n"));
    assert!(scaling.contains("flat,sornette,loglog/all/p<0.01,,undetermined,0,sornette\n"));
}

#[test]
fn analyze_one_project_sornette_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = teamscale(&[
        "--out",
        s(dir.path()),
        "analyze",
        "--manifest",
        &toy("sornette.json"),
        "--records",
        &toy("records"),
        "--method",
        "sornette",
    ]);
    assert_ok(&out);
    let periods = read(&dir.path().join("periods.csv"));
    let grow: Vec<_> = periods.lines().filter(|l| l.starts_with("grow,")).collect();
    assert_eq!(grow, ["grow,0,2,0,6,loglog/all/p<0.01,sornette"]);
    let scaling = read(&dir.path().join("scaling.csv"));
    assert_eq!(scaling.lines().filter(|l| l.starts_with("grow,")).count(), 1);
    assert_eq!(scaling.lines().count(), 3);
}

#[test]
fn config_file_drives_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "manifests = [{:?}]\nrecords_dir = {:?}\nout_dir = {:?}\nmethods = [\"scholtes:loglin\"]\n",
            toy("scholtes.json"),
            toy("records"),
            s(&dir.path().join("out"))
        ),
    )
    .unwrap();
    assert_ok(&teamscale(&["--config", s(&config), "analyze"]));
    let table = read(&dir.path().join("out/crosstable.csv"));
    assert_eq!(table.lines().count(), 2);
    assert!(table.contains("scholtes,loglin/all/unfiltered,scholtes,1,0,1,2"));
    std::fs::write(&config, "jobs = 0\n").unwrap();
    assert_eq!(teamscale(&["--config", s(&config), "analyze"]).status.code(), Some(2));
}

#[test]
fn sweep_two_grid_values_gives_two_rows_per_project() {
    let dir = tempfile::tempdir().unwrap();
    let out = teamscale(&[
        "--out",
        s(dir.path()),
        "sweep",
        "--manifest",
        &toy("sornette.json"),
        "--records",
        &toy("records"),
        "--grid",
        "0,30",
    ]);
    assert_ok(&out);
    let sweep = read(&dir.path().join("sweep.csv"));
    assert_eq!(
        sweep,
        "project,front_load_days,alpha3,determined\nflat,0,-1,true\nflat,30,,false\ngrow,0,1,true\ngrow,30,,false\n"
    );
    let summary = read(&dir.path().join("sweep_summary.csv"));
    assert_eq!(summary, "front_load_days,mean_alpha3,determined,total\n0,0,2,2\n30,,0,2\n");
    assert!(dir.path().join("sweep.svg").exists());
}

#[test]
fn compare_identical_inputs_exits_3() {
    // grow's only period has p = 0, so the filter changes nothing.
    let dir = tempfile::tempdir().unwrap();
    let out = teamscale(&[
        "--out",
        s(dir.path()),
        "compare",
        "--manifest",
        &toy("sornette.json"),
        "--records",
        &toy("records"),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("every paired difference is zero"), "{stderr}");
}

fn row(spec: &MethodSpec, dataset: &str, sub: usize, sup: usize, total: usize) -> CrossRow {
    CrossRow {
        method: spec.method,
        variant: spec.variant_label(),
        dataset: dataset.into(),
        sublinear: sub,
        superlinear: sup,
        undetermined: total - sub - sup,
        total,
    }
}

#[test]
fn report_bars_match_summary() {
    let h = HeadlineSpec::default();
    let table = CrossTable {
        rows: vec![
            row(&h.original_sornette, "sornette", 1, 147, 159),
            row(&h.original_sornette, "scholtes", 3, 55, 58),
            row(&h.original_scholtes, "sornette", 130, 29, 159),
            row(&h.original_scholtes, "scholtes", 58, 0, 58),
            row(&h.adjusted_sornette, "sornette", 14, 134, 159),
            row(&h.adjusted_sornette, "scholtes", 16, 42, 58),
            row(&h.adjusted_scholtes, "sornette", 85, 65, 159),
            row(&h.adjusted_scholtes, "scholtes", 46, 11, 58),
        ],
    };
    let dir = tempfile::tempdir().unwrap();
    let app = CrossApplication { scalings: Vec::new(), table: table.clone() };
    report::write_crosstable_csv(&dir.path().join("crosstable.csv"), &app.table).unwrap();
    report::write_scaling_csv(&dir.path().join("scaling.csv"), &app.scalings).unwrap();
    assert_ok(&teamscale(&["--out", s(dir.path()), "report"]));

    let expected = superlinearity_summary(&table, &h);
    assert_eq!(expected.headlines.len(), 4);
    let headlines = read(&dir.path().join("headlines.csv"));
    let svg = read(&dir.path().join("summary.svg"));
    assert_eq!(svg.matches("<rect x=").count(), 8 + 2, "eight bars plus two legend swatches");
    for (line, h) in headlines.lines().skip(1).zip(&expected.headlines) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0], h.name);
        assert_eq!(cells[1].parse::<f64>().unwrap(), h.sornette_percent);
        assert_eq!(cells[2].parse::<f64>().unwrap(), h.scholtes_percent);
        assert_eq!(cells[4], fmt_percent(h.sornette_percent));
        assert_eq!(cells[5], fmt_percent(h.scholtes_percent));
        for shown in [&cells[4], &cells[5]] {
            assert!(svg.contains(&format!(">{shown}</text>")), "{shown} missing from chart");
        }
    }
    assert!(headlines.lines().any(|l| l.starts_with("selection_adjusted,") && l.ends_with(",84.69")));
}

#[test]
fn report_svg_numbers_come_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&teamscale(&[
        "--out",
        s(dir.path()),
        "analyze",
        "--manifest",
        &toy("sornette.json"),
        "--manifest",
        &toy("scholtes.json"),
        "--records",
        &toy("records"),
    ]));
    assert_ok(&teamscale(&["--out", s(dir.path()), "report"]));
    let hist_csv = read(&dir.path().join("histogram.csv"));
    let cells: std::collections::HashSet<String> =
        hist_csv.lines().skip(1).flat_map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>()).collect();
    let svg = read(&dir.path().join("histogram_scholtes_loglog_all_unfiltered.svg"));
    let mut texts = 0;
    for piece in svg.split("<text").skip(1) {
        let body = &piece[piece.find('>').unwrap() + 1..piece.find("</text>").unwrap()];
        if body.parse::<f64>().is_ok() {
            texts += 1;
            assert!(cells.contains(body), "{body} not in histogram.csv");
        }
    }
    assert!(texts > 9);
    // alpha3 values -1, 1 and 0 each land in their own bin.
    for bin in ["scholtes,loglog/all/unfiltered,-1,-0.9,1", "scholtes,loglog/all/unfiltered,0,0.1,1", "scholtes,loglog/all/unfiltered,1,1.1,1"] {
        assert!(hist_csv.contains(bin), "{bin}");
    }
}
