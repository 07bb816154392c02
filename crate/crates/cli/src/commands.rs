//! Subcommand implementations. Each takes a fully layered plan and writes
//! its human-readable output to `out`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context as _;

use seedtrim::byteviz::{render_dump, DumpWriter, FlushPolicy, ImageLayout, VizError};
use seedtrim::fuzzer::{run_campaign_with, CampaignConfig, CampaignStats};
use seedtrim::oracle::sim::synthetic_binary_seed;
use seedtrim::{reduce, ReductionReport, Seed, Target, TargetSpec};

use crate::error::CliError;
use crate::plan::ExperimentPlan;
use crate::summary::{Comparison, RunRecord};

pub const REDUCTION_FILE: &str = "reduction.csv";
pub const DUMP_FILE: &str = "tests_generated";
pub const PLAN_FILE: &str = "plan.json";
pub const REDUCED_SEED_FILE: &str = "seed.reduced";
pub const PATHS_AVG_FILE: &str = "paths_avg.csv";
pub const CRASH_SUMMARY_FILE: &str = "crash_summary.csv";
pub const COVERAGE_SUMMARY_FILE: &str = "coverage_summary.csv";
pub const FINAL_PATHS_FILE: &str = "final_paths.csv";
pub const SUMMARY_TEXT_FILE: &str = "summary.txt";
pub const FAILED_MARKER: &str = "FAILED";
pub const ARMS: [&str; 2] = ["original", "reduced"];

pub const DEFAULT_FUZZ_DIR: &str = "fuzz-out";
pub const DEFAULT_COMPARE_DIR: &str = "compare-out";

fn read_seed(path: &Path) -> Result<Seed, CliError> {
    fs::read(path)
        .map(Seed::bytes)
        .map_err(|e| CliError::Usage(format!("cannot read seed {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(())
}

fn reduction_csv(report: &ReductionReport) -> String {
    format!("{}\n{}\n", ReductionReport::csv_header(), report.csv_row())
}

/// `<seed>.reduced` next to the seed file.
pub fn reduced_seed_path(seed: &Path) -> PathBuf {
    let mut name = seed.as_os_str().to_owned();
    name.push(".reduced");
    PathBuf::from(name)
}

/// Reduces the plan's seed. Writes `<seed>.reduced` and `reduction.csv`
/// (into the output dir, or next to the seed when none is set).
pub fn cmd_reduce(plan: &ExperimentPlan, out: &mut dyn Write) -> Result<ReductionReport, CliError> {
    let seed_path = plan.seed_path()?;
    let config = plan.reduction_config()?;
    let target = plan.target_spec()?;
    let seed = read_seed(seed_path)?;
    let report = reduce(&target, &seed, &config)?;

    write_file(&reduced_seed_path(seed_path), &report.reduced_bytes)?;
    let dir = match &plan.output_dir {
        Some(dir) => dir.clone(),
        None => seed_path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    if !dir.as_os_str().is_empty() {
        create_dir(&dir)?;
    }
    write_file(&dir.join(REDUCTION_FILE), reduction_csv(&report))?;
    out.write_all(report.table_block().as_bytes())?;
    Ok(report)
}

/// One campaign, with its per-run files written into `dir`. When `emit_dump`
/// is set, every executed input is appended to `dir/tests_generated`.
fn campaign_into(
    target: &TargetSpec,
    seed: &Seed,
    config: &CampaignConfig,
    emit_dump: bool,
    dir: &Path,
) -> Result<CampaignStats, CliError> {
    create_dir(dir)?;
    let stats = if emit_dump {
        let dump_path = dir.join(DUMP_FILE);
        if dump_path.exists() {
            fs::remove_file(&dump_path)?;
        }
        let mut dump = DumpWriter::append_to(&dump_path, FlushPolicy::EveryN(256))?;
        let mut observer = |input: &[u8]| {
            dump.append_dump(input).map(|_| ()).map_err(|e| std::io::Error::other(e.to_string()))
        };
        let run = run_campaign_with(target, seed, config, &mut observer);
        dump.finish().map_err(|e| anyhow::anyhow!(e))?;
        run?.stats
    } else {
        run_campaign_with(target, seed, config, &mut |_| Ok(()))?.stats
    };
    RunRecord::write_run_files(&stats, dir).with_context(|| format!("writing results into {}", dir.display()))?;
    Ok(stats)
}

fn fuzz_dir(plan: &ExperimentPlan) -> PathBuf {
    plan.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_FUZZ_DIR))
}

/// Runs a single campaign from the plan's seed.
pub fn cmd_fuzz(plan: &ExperimentPlan, out: &mut dyn Write) -> Result<CampaignStats, CliError> {
    let target = plan.target_spec()?;
    let config = plan.campaign_config(0)?;
    let seed = read_seed(plan.seed_path()?)?;
    let dir = fuzz_dir(plan);
    let stats = campaign_into(&target, &seed, &config, plan.campaign.emit_dump.unwrap_or(false), &dir)?;
    writeln!(
        out,
        "target: {}\nexecutions: {}\npaths: {}\nunique crashes: {}\nlines: {}\nbranches: {}\nelapsed: {:.3}s\noutput: {}",
        target.name(),
        stats.executions,
        stats.total_paths(),
        stats.unique_crashes(),
        stats.cumulative_statements(),
        stats.cumulative_branches(),
        stats.elapsed.as_secs_f64(),
        dir.display()
    )?;
    Ok(stats)
}

pub fn run_dir(root: &Path, arm: &str, rep: usize) -> PathBuf {
    root.join(arm).join(format!("run_{rep}"))
}

/// Reduces the seed, then runs `repetitions` campaigns from each of the
/// original and reduced seeds and writes the per-run and summary files.
pub fn cmd_compare(plan: &ExperimentPlan, out: &mut dyn Write) -> Result<Comparison, CliError> {
    let target = plan.target_spec()?;
    let reduction_config = plan.reduction_config()?;
    let reps = plan.repetitions()?;
    let bucket = plan.bucket()?;
    let configs = (0..reps as u64).map(|r| plan.campaign_config(r)).collect::<Result<Vec<_>, _>>()?;
    let original = read_seed(plan.seed_path()?)?;
    let root = plan.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_COMPARE_DIR));
    create_dir(&root)?;
    write_file(&root.join(PLAN_FILE), plan.to_json() + "\n")?;

    let report = reduce(&target, &original, &reduction_config)?;
    write_file(&root.join(REDUCTION_FILE), reduction_csv(&report))?;
    write_file(&root.join(REDUCED_SEED_FILE), &report.reduced_bytes)?;
    out.write_all(report.table_block().as_bytes())?;
    let reduced = Seed::bytes(report.reduced_bytes.clone());

    let emit_dump = plan.campaign.emit_dump.unwrap_or(false);
    let jobs: Vec<(usize, usize)> = (0..ARMS.len()).flat_map(|a| (0..reps).map(move |r| (a, r))).collect();
    let results: Vec<Result<CampaignStats, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(arm, rep)| {
                let (target, configs, root) = (&target, &configs, &root);
                let seed = if arm == 0 { &original } else { &reduced };
                scope.spawn(move || {
                    let dir = run_dir(root, ARMS[arm], rep + 1);
                    let result = campaign_into(target, seed, &configs[rep], emit_dump, &dir);
                    if let Err(e) = &result {
                        let _ = fs::create_dir_all(&dir);
                        let _ = fs::write(dir.join(FAILED_MARKER), format!("{e}\n"));
                    }
                    result
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("campaign thread panicked")).collect()
    });

    let mut runs: [Vec<RunRecord>; 2] = [Vec::new(), Vec::new()];
    let mut failures = Vec::new();
    for (&(arm, rep), result) in jobs.iter().zip(results) {
        match result {
            Ok(stats) => runs[arm].push(RunRecord::from(&stats)),
            Err(e) => failures.push((format!("{}/run_{}", ARMS[arm], rep + 1), e)),
        }
    }
    if !failures.is_empty() {
        let listing: String = failures.iter().map(|(run, e)| format!("{run}: {e}\n")).collect();
        write_file(&root.join(FAILED_MARKER), &listing)?;
        let (run, first) = failures.swap_remove(0);
        return Err(match first {
            CliError::Usage(m) => CliError::Usage(m),
            CliError::Target(m) => CliError::Target(format!("{run}: {m}")),
            CliError::Other(e) => CliError::Other(e.context(run)),
        });
    }
    let [original_runs, reduced_runs] = runs;
    let comparison = Comparison {
        target: target.name(),
        original: original_runs,
        reduced: reduced_runs,
        duration: configs[0].duration,
        bucket,
    };
    write_summaries(&comparison, &root)?;
    out.write_all(b"\n")?;
    out.write_all(comparison.text().as_bytes())?;
    Ok(comparison)
}

fn write_summaries(comparison: &Comparison, root: &Path) -> Result<(), CliError> {
    write_file(&root.join(PATHS_AVG_FILE), comparison.paths_avg_csv())?;
    write_file(&root.join(CRASH_SUMMARY_FILE), comparison.crash_summary_csv())?;
    write_file(&root.join(COVERAGE_SUMMARY_FILE), comparison.coverage_summary_csv())?;
    write_file(&root.join(FINAL_PATHS_FILE), comparison.final_paths_csv())?;
    write_file(&root.join(SUMMARY_TEXT_FILE), comparison.text())?;
    Ok(())
}

/// Rebuilds the summary files of a finished `compare` output directory.
pub fn cmd_report(root: &Path, out: &mut dyn Write) -> Result<Comparison, CliError> {
    let plan = ExperimentPlan::load(&root.join(PLAN_FILE))?;
    let reps = plan.repetitions()?;
    let target = plan.target_spec()?;
    let load_arm = |arm: &str| {
        (1..=reps)
            .map(|rep| {
                let dir = run_dir(root, arm, rep);
                if dir.join(FAILED_MARKER).exists() {
                    return Err(CliError::Usage(format!("{} is marked as failed", dir.display())));
                }
                RunRecord::read_run_files(&dir)
            })
            .collect::<Result<Vec<_>, _>>()
    };
    let comparison = Comparison {
        target: target.name(),
        original: load_arm(ARMS[0])?,
        reduced: load_arm(ARMS[1])?,
        duration: plan.campaign_config(0)?.duration,
        bucket: plan.bucket()?,
    };
    write_summaries(&comparison, root)?;
    out.write_all(comparison.text().as_bytes())?;
    Ok(comparison)
}

fn viz_error(e: VizError) -> CliError {
    match e {
        VizError::Parse { .. } | VizError::Layout(_) => CliError::Usage(e.to_string()),
        other => CliError::Other(other.into()),
    }
}

/// Renders one frame per dump line.
pub fn cmd_viz(dump: &Path, out_dir: &Path, layout: &ImageLayout, out: &mut dyn Write) -> Result<usize, CliError> {
    if !dump.is_file() {
        return Err(CliError::Usage(format!("dump {} does not exist", dump.display())));
    }
    let frames = render_dump(dump, out_dir, layout).map_err(viz_error)?;
    writeln!(out, "{} frames written to {}", frames.len(), out_dir.display())?;
    Ok(frames.len())
}

/// Writes a header-plus-payload seed for the `header-payload` simulated target.
pub fn cmd_gen_seed(payload_len: usize, path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let bytes = synthetic_binary_seed(payload_len);
    write_file(path, &bytes)?;
    writeln!(out, "{} bytes written to {}", bytes.len(), path.display())?;
    Ok(())
}

