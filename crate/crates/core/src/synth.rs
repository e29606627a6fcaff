//! Synthetic commit streams with known scaling behaviour.

use chrono::{TimeZone, Utc};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::record::{sort_records, CommitRecord, FileEdit};
use crate::window::{DAY_SECONDS, SORNETTE_WINDOW_DAYS, WINDOWS_PER_PERIOD};

/// 2014-01-01T00:00:00Z, the default origin of synthetic projects.
pub const SYNTH_ORIGIN: i64 = 1_388_534_400;

/// One synthetic commit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution {
    pub author: usize,
    /// Seconds after the project origin.
    pub offset: i64,
    pub files: u32,
    pub lev: u64,
}

pub fn author_email(author: usize) -> String {
    format!("dev{author:04}@synthetic.test")
}

/// Materializes contributions as sorted records with ids `<project>-<n>`.
pub fn records_from(project: &str, origin: i64, contributions: &[Contribution]) -> Vec<CommitRecord> {
    let mut records: Vec<CommitRecord> = contributions
        .iter()
        .enumerate()
        .map(|(i, c)| CommitRecord {
            commit_id: format!("{project}-{i:08}"),
            author_email: author_email(c.author),
            timestamp: Utc.timestamp_opt(origin + c.offset, 0).unwrap(),
            is_merge: false,
            file_edits: (0..c.files)
                .map(|f| FileEdit {
                    path: format!("src/f{f}.txt"),
                    is_binary: false,
                    levenshtein_distance: if f == 0 { c.lev } else { 0 },
                })
                .collect(),
        })
        .collect();
    sort_records(&mut records);
    records
}

/// Splits `total` into `parts` near-equal non-negative integers.
fn split(total: u64, parts: usize) -> impl Iterator<Item = u64> {
    let base = total / parts as u64;
    let extra = (total % parts as u64) as usize;
    (0..parts).map(move |i| base + u64::from(i < extra))
}

/// Commits making a window of `team` authors (drawn from `first_author`
/// upward) with `output` units split across them. Each unit is one modified
/// file and one character of edit distance, so both measures agree.
pub fn window_contributions(start: i64, first_author: usize, team: usize, output: u64) -> Vec<Contribution> {
    split(output, team)
        .enumerate()
        .map(|(i, units)| Contribution {
            author: first_author + i,
            offset: start + 600 * (i as i64 + 1),
            files: units as u32,
            lev: units,
        })
        .collect()
}

/// Shape of one 250-day period in a generated project.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodPlan {
    /// Exponent of output on team size.
    pub beta: f64,
    /// Standard deviation of the log-output noise.
    pub noise: f64,
    pub scale: f64,
    pub max_team: usize,
}

impl PeriodPlan {
    pub fn new(beta: f64, noise: f64) -> Self {
        PeriodPlan {
            beta,
            noise,
            scale: 20.0,
            max_team: 12,
        }
    }
}

/// A project whose 5-day windows follow `output = scale * team^beta * e^noise`
/// period by period.
pub fn power_law_project<R: Rng>(project: &str, rng: &mut R, periods: &[PeriodPlan]) -> Vec<CommitRecord> {
    let width = SORNETTE_WINDOW_DAYS * DAY_SECONDS;
    let mut contributions = Vec::new();
    for (p, plan) in periods.iter().enumerate() {
        let noise = Normal::new(0.0, plan.noise.max(1e-12)).unwrap();
        for w in 0..WINDOWS_PER_PERIOD {
            let team = rng.gen_range(1..=plan.max_team);
            let eps = if plan.noise > 0.0 { noise.sample(rng) } else { 0.0 };
            let output = (plan.scale * (team as f64).powf(plan.beta) * eps.exp()).round().max(1.0) as u64;
            let start = (p * WINDOWS_PER_PERIOD + w) as i64 * width;
            let first = rng.gen_range(0..50);
            contributions.extend(window_contributions(start, first, team, output));
        }
    }
    records_from(project, SYNTH_ORIGIN, &contributions)
}

/// Weekly activity where the active team grows by one author every
/// `growth_weeks` and weekly output is `10 * team^(1 + alpha)` units,
/// preceded by a single-author bulk import of `import_lev` characters on
/// day 0. All commits of a week land on the same day.
pub fn front_load_project(project: &str, weeks: usize, growth_weeks: usize, alpha: f64, import_lev: u64) -> Vec<CommitRecord> {
    let week = 7 * DAY_SECONDS;
    let mut contributions = vec![Contribution {
        author: 0,
        offset: 0,
        files: 1,
        lev: import_lev,
    }];
    for w in 1..=weeks {
        let team = 1 + w / growth_weeks.max(1);
        let output = (10.0 * (team as f64).powf(1.0 + alpha)).round() as u64;
        for (i, units) in split(output, team).enumerate() {
            contributions.push(Contribution {
                author: i,
                offset: w as i64 * week + 600 * (i as i64 + 1),
                files: units as u32,
                lev: units,
            });
        }
    }
    records_from(project, SYNTH_ORIGIN, &contributions)
}
