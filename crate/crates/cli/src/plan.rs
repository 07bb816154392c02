//! Experiment configuration: an optional JSON plan file, overridden field by
//! field by command-line flags, then filled with defaults.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use seedtrim::fuzzer::CampaignConfig;
use seedtrim::{ClockMode, ExternalTarget, ReductionConfig, SeedType, TargetSpec};

use crate::error::CliError;

pub const DEFAULT_C: f64 = 75.0;
pub const DEFAULT_R: f64 = 40.0;
pub const DEFAULT_BUDGET: &str = "5m";
pub const DEFAULT_DURATION: &str = "60s";
pub const DEFAULT_RUN_TIMEOUT: &str = "1s";
pub const DEFAULT_BUCKET: &str = "1s";
pub const DEFAULT_REPETITIONS: usize = 3;

/// Every field optional so plan files and flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetPlan {
    /// `sim:<name>` or `cmd:<command template with @@>`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage_report: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workdir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run_timeout: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass_env: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionPlan {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_budget: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_type: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit_size: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignPlan {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_input_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutation_stack_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_executions: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emit_dump: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    #[serde(default)]
    pub target: TargetPlan,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_path: Option<PathBuf>,
    #[serde(default)]
    pub reduction: ReductionPlan,
    #[serde(default)]
    pub campaign: CampaignPlan,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Time bucket for averaged path curves.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bucket: Option<String>,
    /// `auto`, `wall` or `virtual`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clock: Option<String>,
}

macro_rules! layer {
    ($over:expr, $base:expr, [$($field:ident),*]) => {
        $( if $over.$field.is_some() { $base.$field = $over.$field.clone(); } )*
    };
}

impl ExperimentPlan {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read plan {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid plan {}: {e}", path.display())))
    }

    /// Fields set in `flags` replace those in `self`.
    pub fn overridden_by(mut self, flags: &ExperimentPlan) -> Self {
        layer!(flags.target, self.target, [spec, coverage_report, workdir, run_timeout, pass_env]);
        layer!(flags.reduction, self.reduction, [c_percent, r_percent, time_budget, seed_type, unit_size]);
        layer!(
            flags.campaign,
            self.campaign,
            [duration, rng_seed, max_input_size, mutation_stack_max, max_executions, emit_dump]
        );
        layer!(flags, self, [seed_path, repetitions, output_dir, bucket, clock]);
        self
    }

    /// Fills every unset field with its default.
    pub fn with_defaults(mut self) -> Self {
        let seed_type = self.reduction.seed_type.get_or_insert_with(|| "binary".into()).clone();
        let default_unit = seed_type.parse::<SeedType>().map(SeedType::default_unit_size).unwrap_or(1);
        self.reduction.c_percent.get_or_insert(DEFAULT_C);
        self.reduction.r_percent.get_or_insert(DEFAULT_R);
        self.reduction.time_budget.get_or_insert_with(|| DEFAULT_BUDGET.into());
        self.reduction.unit_size.get_or_insert(default_unit);
        let defaults = CampaignConfig::default();
        self.campaign.duration.get_or_insert_with(|| DEFAULT_DURATION.into());
        self.campaign.rng_seed.get_or_insert(defaults.rng_seed);
        self.campaign.max_input_size.get_or_insert(defaults.max_input_size);
        self.campaign.mutation_stack_max.get_or_insert(defaults.mutation_stack_max);
        self.campaign.emit_dump.get_or_insert(false);
        self.target.run_timeout.get_or_insert_with(|| DEFAULT_RUN_TIMEOUT.into());
        self.target.workdir.get_or_insert_with(|| PathBuf::from("."));
        self.repetitions.get_or_insert(DEFAULT_REPETITIONS);
        self.bucket.get_or_insert_with(|| DEFAULT_BUCKET.into());
        self.clock.get_or_insert_with(|| "auto".into());
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn clock_mode(&self) -> Result<ClockMode, CliError> {
        self.clock.as_deref().unwrap_or("auto").parse().map_err(CliError::Usage)
    }

    pub fn target_spec(&self) -> Result<TargetSpec, CliError> {
        let spec = self.target.spec.as_deref().ok_or_else(|| CliError::Usage("no target given".into()))?;
        if spec.starts_with("sim:") {
            return TargetSpec::parse_simulated(spec).map_err(|e| CliError::Usage(e.to_string()));
        }
        let command = spec.strip_prefix("cmd:").ok_or_else(|| {
            CliError::Usage(format!("target `{spec}` must start with `sim:` or `cmd:`"))
        })?;
        let report = self
            .target
            .coverage_report
            .clone()
            .ok_or_else(|| CliError::Usage("external targets need --coverage-report".into()))?;
        let timeout = parse_duration("run timeout", self.target.run_timeout.as_deref().unwrap_or(DEFAULT_RUN_TIMEOUT))?;
        let workdir = self.target.workdir.clone().unwrap_or_else(|| PathBuf::from("."));
        let mut target = ExternalTarget::new(command, report, workdir, timeout).map_err(|e| CliError::Usage(e.to_string()))?;
        if let Some(names) = &self.target.pass_env {
            target = target.with_pass_env(names.clone());
        }
        Ok(TargetSpec::External(target))
    }

    pub fn seed_type(&self) -> Result<SeedType, CliError> {
        self.reduction.seed_type.as_deref().unwrap_or("binary").parse().map_err(CliError::Usage)
    }

    pub fn reduction_config(&self) -> Result<ReductionConfig, CliError> {
        let seed_type = self.seed_type()?;
        let budget = parse_duration("time budget", self.reduction.time_budget.as_deref().unwrap_or(DEFAULT_BUDGET))?;
        let unit_size = self.reduction.unit_size.unwrap_or_else(|| seed_type.default_unit_size());
        ReductionConfig::new(
            self.reduction.c_percent.unwrap_or(DEFAULT_C),
            self.reduction.r_percent.unwrap_or(DEFAULT_R),
            budget,
            seed_type.unit(),
            unit_size,
        )
        .map(|c| c.with_clock(self.clock_mode().unwrap_or_default()))
        .map_err(|e| CliError::Usage(e.to_string()))
    }

    /// Campaign config for repetition `rep` (0-based): the rng seed is offset by `rep`.
    pub fn campaign_config(&self, rep: u64) -> Result<CampaignConfig, CliError> {
        let defaults = CampaignConfig::default();
        let c = &self.campaign;
        let config = CampaignConfig {
            duration: parse_duration("duration", c.duration.as_deref().unwrap_or(DEFAULT_DURATION))?,
            rng_seed: c.rng_seed.unwrap_or(defaults.rng_seed).wrapping_add(rep),
            max_input_size: c.max_input_size.unwrap_or(defaults.max_input_size),
            mutation_stack_max: c.mutation_stack_max.unwrap_or(defaults.mutation_stack_max),
            max_executions: c.max_executions,
            clock: self.clock_mode()?,
        };
        config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }

    pub fn repetitions(&self) -> Result<usize, CliError> {
        match self.repetitions.unwrap_or(DEFAULT_REPETITIONS) {
            0 => Err(CliError::Usage("repetitions must be at least 1".into())),
            n => Ok(n),
        }
    }

    pub fn bucket(&self) -> Result<Duration, CliError> {
        let bucket = parse_duration("bucket", self.bucket.as_deref().unwrap_or(DEFAULT_BUCKET))?;
        if bucket.is_zero() {
            return Err(CliError::Usage("bucket must be positive".into()));
        }
        Ok(bucket)
    }

    pub fn seed_path(&self) -> Result<&Path, CliError> {
        self.seed_path.as_deref().ok_or_else(|| CliError::Usage("no seed file given".into()))
    }
}

pub fn parse_duration(what: &str, text: &str) -> Result<Duration, CliError> {
    humantime::parse_duration(text).map_err(|e| CliError::Usage(format!("invalid {what} `{text}`: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_plan_fields() {
        let plan: ExperimentPlan = serde_json::from_str(
            r#"{"target":{"spec":"sim:xml-like"},"reduction":{"c_percent":50,"r_percent":10},"repetitions":5}"#,
        )
        .unwrap();
        let flags = ExperimentPlan {
            reduction: ReductionPlan { c_percent: Some(90.0), ..Default::default() },
            ..Default::default()
        };
        let merged = plan.overridden_by(&flags).with_defaults();
        assert_eq!(merged.reduction.c_percent, Some(90.0));
        assert_eq!(merged.reduction.r_percent, Some(10.0));
        assert_eq!(merged.repetitions, Some(5));
        assert_eq!(merged.target.spec.as_deref(), Some("sim:xml-like"));
        assert_eq!(merged.reduction.unit_size, Some(1024));
    }

    #[test]
    fn text_seed_defaults_to_single_char_units() {
        let plan = ExperimentPlan {
            reduction: ReductionPlan { seed_type: Some("text".into()), ..Default::default() },
            ..Default::default()
        }
        .with_defaults();
        assert_eq!(plan.reduction.unit_size, Some(1));
        assert_eq!(plan.reduction_config().unwrap().unit_size(), 1);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<ExperimentPlan>(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let plan = ExperimentPlan {
            reduction: ReductionPlan { c_percent: Some(101.0), ..Default::default() },
            ..Default::default()
        };
        assert!(matches!(plan.reduction_config(), Err(CliError::Usage(_))));
        let plan = ExperimentPlan { repetitions: Some(0), ..Default::default() };
        assert!(matches!(plan.repetitions(), Err(CliError::Usage(_))));
        let plan = ExperimentPlan {
            target: TargetPlan { spec: Some("cmd:prog @@".into()), ..Default::default() },
            ..Default::default()
        };
        assert!(matches!(plan.target_spec(), Err(CliError::Usage(_))));
    }

    #[test]
    fn rng_seed_offsets_per_repetition() {
        let plan = ExperimentPlan {
            campaign: CampaignPlan { rng_seed: Some(10), ..Default::default() },
            ..Default::default()
        };
        assert_eq!(plan.campaign_config(0).unwrap().rng_seed, 10);
        assert_eq!(plan.campaign_config(2).unwrap().rng_seed, 12);
    }

    #[test]
    fn defaults_round_trip_through_json() {
        let plan = ExperimentPlan::default().with_defaults();
        let back: ExperimentPlan = serde_json::from_str(&plan.to_json()).unwrap();
        assert_eq!(back, plan);
    }
}
