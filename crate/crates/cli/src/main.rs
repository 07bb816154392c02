use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use seedtrim::byteviz::ImageLayout;
use seedtrim_cli::commands;
use seedtrim_cli::plan::{CampaignPlan, ExperimentPlan, ReductionPlan, TargetPlan};
use seedtrim_cli::CliError;

#[derive(Parser)]
#[command(name = "seedtrim", version, about = "Seed reduction, fuzzing campaigns and input visualization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a seed under coverage, size and exit-status constraints.
    Reduce {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        reduction: ReductionArgs,
        /// Directory for reduction.csv (defaults to the seed's directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one fuzzing campaign.
    Fuzz {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        campaign: CampaignArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce a seed, then run repeated campaigns from the original and the reduced seed.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        reduction: ReductionArgs,
        #[command(flatten)]
        campaign: CampaignArgs,
        #[arg(long)]
        repetitions: Option<usize>,
        /// Width of the time buckets in paths_avg.csv.
        #[arg(long)]
        bucket: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a dump of generated inputs as PNG frames.
    Viz {
        #[arg(long)]
        dump: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        box_px: u32,
        /// Boxes per image row.
        #[arg(long, default_value_t = 32)]
        row: u32,
        /// Render at most this many bytes of each input.
        #[arg(long)]
        max_bytes: Option<usize>,
    },
    /// Rebuild the summary tables of a compare output directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic header-payload seed.
    GenSeed {
        #[arg(long, default_value_t = 131_072)]
        payload_len: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// JSON plan file; flags override its fields.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
    /// auto, wall or virtual.
    #[arg(long)]
    clock: Option<String>,
    #[arg(long)]
    seed: Option<PathBuf>,
}

#[derive(Args)]
struct TargetArgs {
    /// `sim:<name>` or `cmd:<command with @@>`.
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    coverage_report: Option<String>,
    #[arg(long)]
    workdir: Option<PathBuf>,
    #[arg(long)]
    run_timeout: Option<String>,
    /// Environment variable to pass to external targets (repeatable).
    #[arg(long)]
    pass_env: Vec<String>,
}

fn percent(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=100.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside 0..=100"))
    }
}

#[derive(Args)]
struct ReductionArgs {
    /// Minimum coverage similarity, percent.
    #[arg(long = "c", value_parser = percent)]
    c_percent: Option<f64>,
    /// Minimum size reduction, percent.
    #[arg(long = "r", value_parser = percent)]
    r_percent: Option<f64>,
    #[arg(long)]
    budget: Option<String>,
    /// text or binary.
    #[arg(long)]
    seed_type: Option<String>,
    #[arg(long)]
    unit_size: Option<usize>,
}

#[derive(Args)]
struct CampaignArgs {
    #[arg(long)]
    duration: Option<String>,
    #[arg(long)]
    rng_seed: Option<u64>,
    #[arg(long)]
    max_input_size: Option<usize>,
    /// Maximum number of stacked mutations per input.
    #[arg(long)]
    stack: Option<usize>,
    #[arg(long)]
    max_execs: Option<u64>,
    /// Append every executed input to tests_generated.
    #[arg(long)]
    emit_dump: bool,
}

impl CommonArgs {
    fn apply(&self, flags: &mut ExperimentPlan) {
        flags.clock.clone_from(&self.clock);
        flags.seed_path.clone_from(&self.seed);
    }
}

impl TargetArgs {
    fn plan(&self) -> TargetPlan {
        TargetPlan {
            spec: self.target.clone(),
            coverage_report: self.coverage_report.clone(),
            workdir: self.workdir.clone(),
            run_timeout: self.run_timeout.clone(),
            pass_env: (!self.pass_env.is_empty()).then(|| self.pass_env.clone()),
        }
    }
}

impl ReductionArgs {
    fn plan(&self) -> ReductionPlan {
        ReductionPlan {
            c_percent: self.c_percent,
            r_percent: self.r_percent,
            time_budget: self.budget.clone(),
            seed_type: self.seed_type.clone(),
            unit_size: self.unit_size,
        }
    }
}

impl CampaignArgs {
    fn plan(&self) -> CampaignPlan {
        CampaignPlan {
            duration: self.duration.clone(),
            rng_seed: self.rng_seed,
            max_input_size: self.max_input_size,
            mutation_stack_max: self.stack,
            max_executions: self.max_execs,
            emit_dump: self.emit_dump.then_some(true),
        }
    }
}

enum Kind {
    Reduce,
    Fuzz,
    Compare,
}

/// Loads the plan file (if any), layers the flags on top and fills defaults.
fn resolve(common: &CommonArgs, flags: ExperimentPlan) -> Result<ExperimentPlan, CliError> {
    let base = match &common.plan {
        Some(path) => ExperimentPlan::load(path)?,
        None => ExperimentPlan::default(),
    };
    Ok(base.overridden_by(&flags).with_defaults())
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let (kind, common, flags) = match cli.command {
        Command::Reduce { common, target, reduction, out: dir } => {
            let mut flags = ExperimentPlan {
                target: target.plan(),
                reduction: reduction.plan(),
                output_dir: dir,
                ..Default::default()
            };
            common.apply(&mut flags);
            (Kind::Reduce, common, flags)
        }
        Command::Fuzz { common, target, campaign, out: dir } => {
            let mut flags = ExperimentPlan {
                target: target.plan(),
                campaign: campaign.plan(),
                output_dir: dir,
                ..Default::default()
            };
            common.apply(&mut flags);
            (Kind::Fuzz, common, flags)
        }
        Command::Compare { common, target, reduction, campaign, repetitions, bucket, out: dir } => {
            let mut flags = ExperimentPlan {
                target: target.plan(),
                reduction: reduction.plan(),
                campaign: campaign.plan(),
                repetitions,
                bucket,
                output_dir: dir,
                ..Default::default()
            };
            common.apply(&mut flags);
            (Kind::Compare, common, flags)
        }
        Command::Viz { dump, out: dir, box_px, row, max_bytes } => {
            let layout = ImageLayout::new(box_px, row, max_bytes).map_err(|e| CliError::Usage(e.to_string()))?;
            return commands::cmd_viz(&dump, &dir, &layout, out).map(drop);
        }
        Command::Report { out: dir } => return commands::cmd_report(&dir, out).map(drop),
        Command::GenSeed { payload_len, out: path } => return commands::cmd_gen_seed(payload_len, &path, out),
    };
    let plan = resolve(&common, flags)?;
    if common.print_config {
        writeln!(out, "{}", plan.to_json())?;
        return Ok(());
    }
    match kind {
        Kind::Reduce => commands::cmd_reduce(&plan, out).map(drop),
        Kind::Fuzz => commands::cmd_fuzz(&plan, out).map(drop),
        Kind::Compare => commands::cmd_compare(&plan, out).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e:#}");
            e.exit_code()
        }
    }
}
