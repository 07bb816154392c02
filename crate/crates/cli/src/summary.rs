//! Per-arm aggregation of campaign results into the crash, coverage and
//! averaged-path tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Duration;

use anyhow::Context as _;

use seedtrim::fuzzer::{CampaignStats, PathEvent};
use seedtrim::oracle::{parse_coverage_report, serialize_coverage_report};
use seedtrim::CoverageSet;

use crate::error::CliError;

pub const PATHS_FILE: &str = "paths.csv";
pub const CRASHES_FILE: &str = "crashes.csv";
pub const COVERAGE_FILE: &str = "coverage.txt";
pub const RUN_SUMMARY_FILE: &str = "summary.csv";

/// What the summaries need from one campaign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRecord {
    pub path_events: Vec<PathEvent>,
    pub unique_crashes: usize,
    pub coverage: CoverageSet,
}

impl From<&CampaignStats> for RunRecord {
    fn from(stats: &CampaignStats) -> Self {
        Self {
            path_events: stats.path_events.clone(),
            unique_crashes: stats.unique_crashes(),
            coverage: stats.cumulative.clone(),
        }
    }
}

impl RunRecord {
    pub fn final_paths(&self) -> usize {
        self.path_events.last().map_or(0, |e| e.total_paths)
    }

    /// Paths found by `t`, carrying the last observed value forward.
    pub fn paths_at(&self, t: Duration) -> usize {
        self.path_events.iter().take_while(|e| e.elapsed <= t).last().map_or(0, |e| e.total_paths)
    }

    /// Writes the per-run CSVs and coverage report into `dir`.
    pub fn write_run_files(stats: &CampaignStats, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(PATHS_FILE), stats.paths_csv())?;
        fs::write(dir.join(CRASHES_FILE), stats.crashes_csv())?;
        fs::write(dir.join(COVERAGE_FILE), serialize_coverage_report(&stats.cumulative))?;
        fs::write(dir.join(RUN_SUMMARY_FILE), stats.summary_csv())?;
        Ok(())
    }

    /// Reads back what [`RunRecord::write_run_files`] wrote.
    pub fn read_run_files(dir: &Path) -> Result<Self, CliError> {
        let read = |name: &str| {
            fs::read_to_string(dir.join(name)).with_context(|| format!("reading {}", dir.join(name).display()))
        };
        let paths = read(PATHS_FILE)?;
        let mut path_events = Vec::new();
        for (i, line) in paths.lines().enumerate().skip(1) {
            let parsed = line.split_once(',').and_then(|(ms, total)| Some((ms.parse::<u64>().ok()?, total.parse().ok()?)));
            let (ms, total_paths) = parsed
                .with_context(|| format!("{} line {}: malformed", dir.join(PATHS_FILE).display(), i + 1))?;
            path_events.push(PathEvent { elapsed: Duration::from_millis(ms), total_paths });
        }
        let unique_crashes = read(CRASHES_FILE)?.lines().skip(1).filter(|l| !l.is_empty()).count();
        let coverage = parse_coverage_report(&read(COVERAGE_FILE)?)
            .with_context(|| format!("parsing {}", dir.join(COVERAGE_FILE).display()))?;
        Ok(Self { path_events, unique_crashes, coverage })
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub target: String,
    pub original: Vec<RunRecord>,
    pub reduced: Vec<RunRecord>,
    pub duration: Duration,
    pub bucket: Duration,
}

fn mean(values: impl Iterator<Item = usize>) -> f64 {
    let (sum, n) = values.fold((0usize, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum as f64 / n as f64
    }
}

fn union(runs: &[RunRecord]) -> CoverageSet {
    let mut all = CoverageSet::new();
    for r in runs {
        all.merge(&r.coverage);
    }
    all
}

/// Left-aligned text table.
fn render_table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().zip(&widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

impl Comparison {
    /// Bucket end times from one bucket width up to the campaign duration.
    pub fn bucket_ends(&self) -> Vec<Duration> {
        let mut ends = Vec::new();
        let mut t = self.bucket;
        while t < self.duration {
            ends.push(t);
            t += self.bucket;
        }
        ends.push(self.duration);
        ends
    }

    pub fn mean_paths_at(runs: &[RunRecord], t: Duration) -> f64 {
        mean(runs.iter().map(|r| r.paths_at(t)))
    }

    pub fn mean_final_paths(runs: &[RunRecord]) -> f64 {
        mean(runs.iter().map(RunRecord::final_paths))
    }

    /// `elapsed_ms,original_avg_paths,reduced_avg_paths`. The last row holds
    /// the end-of-campaign values, which include a final execution that may
    /// finish just past the duration.
    pub fn paths_avg_csv(&self) -> String {
        let mut out = String::from("elapsed_ms,original_avg_paths,reduced_avg_paths\n");
        let ends = self.bucket_ends();
        for (i, &t) in ends.iter().enumerate() {
            let (o, r) = if i + 1 == ends.len() {
                (Self::mean_final_paths(&self.original), Self::mean_final_paths(&self.reduced))
            } else {
                (Self::mean_paths_at(&self.original, t), Self::mean_paths_at(&self.reduced, t))
            };
            let _ = writeln!(out, "{},{o:.3},{r:.3}", t.as_millis());
        }
        out
    }

    fn crash_header(&self) -> Vec<String> {
        let mut header = vec!["target".to_string()];
        for arm in ["original", "reduced"] {
            let n = if arm == "original" { self.original.len() } else { self.reduced.len() };
            header.extend((1..=n).map(|j| format!("{arm}_job_{j}")));
        }
        header
    }

    /// Unique crashes per campaign, one column per job and arm.
    pub fn crash_summary_csv(&self) -> String {
        let mut row = vec![self.target.clone()];
        row.extend(self.original.iter().chain(&self.reduced).map(|r| r.unique_crashes.to_string()));
        format!("{}\n{}\n", self.crash_header().join(","), row.join(","))
    }

    /// Lines (L) and branches (B) covered over all inputs of each arm.
    pub fn coverage_summary_csv(&self) -> String {
        let (o, r) = (union(&self.original), union(&self.reduced));
        format!(
            "target,original_lines,original_branches,reduced_lines,reduced_branches\n{},{},{},{},{}\n",
            self.target,
            o.statements.len(),
            o.branches.len(),
            r.statements.len(),
            r.branches.len()
        )
    }

    /// Mean final path count per arm.
    pub fn final_paths_csv(&self) -> String {
        format!(
            "target,original_avg_final_paths,reduced_avg_final_paths\n{},{:.3},{:.3}\n",
            self.target,
            Self::mean_final_paths(&self.original),
            Self::mean_final_paths(&self.reduced)
        )
    }

    /// Human-readable versions of the crash, coverage and path tables.
    pub fn text(&self) -> String {
        let mut out = String::new();
        let jobs = |n: usize| (1..=n).map(|j| format!("job-{j}")).collect::<Vec<_>>();

        out.push_str("Unique crashes per fuzzing campaign\n");
        let mut arms = vec![String::new(), "Original seed".to_string()];
        arms.extend(std::iter::repeat_n(String::new(), self.original.len().saturating_sub(1)));
        arms.push("Reduced seed".into());
        let mut sub = vec!["Target".to_string()];
        sub.extend(jobs(self.original.len()));
        sub.extend(jobs(self.reduced.len()));
        let mut row = vec![self.target.clone()];
        row.extend(self.original.iter().chain(&self.reduced).map(|r| r.unique_crashes.to_string()));
        out.push_str(&render_table(&[arms, sub, row]));

        let (o, r) = (union(&self.original), union(&self.reduced));
        out.push_str("\nLines (L) and branches (B) covered by all generated inputs\n");
        out.push_str(&render_table(&[
            vec!["".into(), "Original seed".into(), "".into(), "Reduced seed".into(), "".into()],
            vec!["Target".into(), "L".into(), "B".into(), "L".into(), "B".into()],
            vec![
                self.target.clone(),
                o.statements.len().to_string(),
                o.branches.len().to_string(),
                r.statements.len().to_string(),
                r.branches.len().to_string(),
            ],
        ]));

        out.push_str("\nMean paths found\n");
        out.push_str(&render_table(&[
            vec!["Target".into(), "Original seed".into(), "Reduced seed".into()],
            vec![
                self.target.clone(),
                format!("{:.3}", Self::mean_final_paths(&self.original)),
                format!("{:.3}", Self::mean_final_paths(&self.reduced)),
            ],
        ]));
        out
    }
}
