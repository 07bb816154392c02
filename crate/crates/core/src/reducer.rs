//! Delta-debugging seed reduction under coverage-similarity, size-reduction
//! and exit-status constraints.
//!
//! Every candidate is judged against the outcome and size of the ORIGINAL
//! seed, never against the current intermediate, so an accepted candidate
//! always carries the final guarantee.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::clock::Clock;
use crate::model::{
    chunk_ranges, cov_similarity, format_percent, meets_reduction, meets_similarity, percent_reduction,
    ExecutionOutcome, ExitStatus, ReductionConfig, Seed, Unit,
};
use crate::oracle::{OracleError, Target};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error("cannot reduce an empty seed")]
    EmptySeed,
    #[error("original seed times out")]
    OriginalTimeout,
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeedType {
    Text,
    Binary,
}

impl SeedType {
    pub fn unit(self) -> Unit {
        match self {
            SeedType::Text => Unit::Char,
            SeedType::Binary => Unit::Byte,
        }
    }

    pub fn from_unit(unit: Unit) -> Self {
        match unit {
            Unit::Char => SeedType::Text,
            Unit::Byte => SeedType::Binary,
        }
    }

    /// One character for text, one KiB for binary.
    pub fn default_unit_size(self) -> usize {
        match self {
            SeedType::Text => 1,
            SeedType::Binary => 1024,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SeedType::Text => "text",
            SeedType::Binary => "binary",
        }
    }
}

impl FromStr for SeedType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(SeedType::Text),
            "binary" => Ok(SeedType::Binary),
            other => Err(format!("unknown seed type `{other}` (expected text or binary)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    ExitStatus,
    Coverage,
    Reduction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintCheck {
    Pass,
    Fail(Violation),
}

impl ConstraintCheck {
    pub fn passed(self) -> bool {
        self == ConstraintCheck::Pass
    }
}

/// Checks exit status, then coverage similarity, then size reduction, and
/// reports the first constraint violated.
pub fn check_constraints<T: Scalar>(
    original: &ExecutionOutcome,
    original_size: usize,
    candidate: &ExecutionOutcome,
    candidate_size: usize,
    config: &ReductionConfig<T>,
) -> ConstraintCheck {
    if candidate.status != original.status {
        return ConstraintCheck::Fail(Violation::ExitStatus);
    }
    if !meets_similarity(&original.coverage, &candidate.coverage, config.c_percent()) {
        return ConstraintCheck::Fail(Violation::Coverage);
    }
    match meets_reduction(original_size, candidate_size, config.r_percent()) {
        Ok(true) => ConstraintCheck::Pass,
        _ => ConstraintCheck::Fail(Violation::Reduction),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReductionStatus {
    Reduced,
    Rejected(String),
    OriginalRetained,
}

impl fmt::Display for ReductionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReductionStatus::Reduced => f.write_str("reduced"),
            ReductionStatus::Rejected(reason) => write!(f, "rejected ({reason})"),
            ReductionStatus::OriginalRetained => f.write_str("original retained"),
        }
    }
}

pub const REJECT_BUDGET: &str = "time budget exceeded";
pub const REJECT_NO_CANDIDATE: &str = "no candidate meets R%";

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport<T: Scalar = f64> {
    pub target_name: String,
    pub seed_type: SeedType,
    pub original_size: usize,
    pub reduced_size: usize,
    pub size_reduction: T,
    pub coverage_similarity: T,
    pub elapsed: Duration,
    pub status: ReductionStatus,
    /// Set when the budget ran out after at least one accepted candidate.
    pub budget_expired: bool,
    pub executions: usize,
    pub reduced_bytes: Vec<u8>,
}

/// Columns of `reduction.csv`, one per column of the reduction results table.
pub const REDUCTION_CSV_COLUMNS: [&str; 7] = [
    "seed_type",
    "target",
    "original_size_bytes",
    "reduced_size_bytes",
    "size_reduction_pct",
    "coverage_similarity_pct",
    "reduction_time_s",
];

impl<T: Scalar> ReductionReport<T> {
    fn csv_fields(&self) -> [String; 7] {
        [
            self.seed_type.as_str().to_string(),
            self.target_name.clone(),
            self.original_size.to_string(),
            self.reduced_size.to_string(),
            format_percent(self.size_reduction.to_f64_lossy()),
            format_percent(100.0 * self.coverage_similarity.to_f64_lossy()),
            format!("{:.3}", self.elapsed.as_secs_f64()),
        ]
    }

    /// One CSV record (no header, no trailing newline).
    pub fn csv_row(&self) -> String {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(self.csv_fields()).expect("write to memory");
        let mut bytes = w.into_inner().expect("flush to memory");
        if bytes.last() == Some(&b'\n') {
            bytes.pop();
        }
        String::from_utf8(bytes).expect("fields are utf-8")
    }

    pub fn csv_header() -> String {
        REDUCTION_CSV_COLUMNS.join(",")
    }

    /// Human-readable block with the same columns as the CSV.
    pub fn table_block(&self) -> String {
        let f = self.csv_fields();
        let headers = ["Seed type", "Test target", "t_o size (bytes)", "t_r size (bytes)", "Size reduction", "Coverage similarity", "Reduction time"];
        let values = [
            f[0].clone(),
            f[1].clone(),
            f[2].clone(),
            f[3].clone(),
            format!("{}%", f[4]),
            format!("{}%", f[5]),
            format!("{}s", f[6]),
        ];
        let widths: Vec<usize> = headers.iter().zip(&values).map(|(h, v)| h.len().max(v.len())).collect();
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let header_cells: Vec<String> = headers.iter().map(|h| h.to_string()).collect();
        let mut out = String::new();
        out.push_str(&line(&header_cells));
        out.push('\n');
        out.push_str(&line(&values));
        out.push('\n');
        out.push_str(&format!("status: {}", self.status));
        if self.budget_expired {
            out.push_str(" (budget expired)");
        }
        out.push_str(&format!("; executions: {}\n", self.executions));
        out
    }
}

fn digest(bytes: &[u8]) -> [u8; 32] {
    Sha256::digest(bytes).into()
}

enum Verdict {
    Accept,
    Reject,
    OutOfTime,
}

struct Search<'a, T: Scalar, G: Target + ?Sized> {
    target: &'a G,
    config: &'a ReductionConfig<T>,
    original: ExecutionOutcome,
    original_size: usize,
    cache: HashMap<[u8; 32], ExecutionOutcome>,
    clock: Clock,
    executions: usize,
}

impl<T: Scalar, G: Target + ?Sized> Search<'_, T, G> {
    fn outcome(&mut self, candidate: &[u8]) -> Result<Option<&ExecutionOutcome>, OracleError> {
        let key = digest(candidate);
        if !self.cache.contains_key(&key) {
            if self.clock.expired(self.config.time_budget()) {
                return Ok(None);
            }
            let outcome = self.target.execute(candidate)?;
            self.clock.charge(outcome.wall_time);
            self.executions += 1;
            self.cache.insert(key, outcome);
        }
        Ok(self.cache.get(&key))
    }

    fn judge(&mut self, candidate: &[u8]) -> Result<Verdict, OracleError> {
        let config = self.config;
        let original_size = self.original_size;
        let original = self.original.clone();
        Ok(match self.outcome(candidate)? {
            None => Verdict::OutOfTime,
            Some(outcome) => {
                if check_constraints(&original, original_size, outcome, candidate.len(), config).passed() {
                    Verdict::Accept
                } else {
                    Verdict::Reject
                }
            }
        })
    }
}

/// Reduces `seed` to a 1-minimal candidate (at the configured unit
/// granularity) that satisfies all three constraints.
///
/// The config's unit and unit size take precedence over the seed's. The
/// time budget covers the baseline run of the original seed.
pub fn reduce<T: Scalar, G: Target + ?Sized>(
    target: &G,
    seed: &Seed,
    config: &ReductionConfig<T>,
) -> Result<ReductionReport<T>, ReduceError> {
    if seed.is_empty() {
        return Err(ReduceError::EmptySeed);
    }
    let unit_size = config.unit_size();
    let mut clock = Clock::start(config.clock.resolve(target.is_simulated()));
    let original = target.execute(seed.as_bytes())?;
    clock.charge(original.wall_time);
    if original.status == ExitStatus::Timeout {
        return Err(ReduceError::OriginalTimeout);
    }

    let mut search = Search {
        target,
        config,
        original_size: seed.len(),
        cache: HashMap::from([(digest(seed.as_bytes()), original.clone())]),
        original,
        clock,
        executions: 1,
    };

    let mut current = seed.as_bytes().to_vec();
    let mut n = 2usize;
    let mut accepted = false;
    let mut out_of_time = false;

    'search: loop {
        let units = current.len().div_ceil(unit_size);
        if units == 0 {
            break;
        }
        let granularity = n.min(units);
        let ranges = chunk_ranges(current.len(), unit_size, granularity).expect("granularity within unit count");

        // a lone chunk is the whole input, so subsets only make sense from 2 up
        if granularity >= 2 {
            for range in &ranges {
                let candidate = current[range.clone()].to_vec();
                match search.judge(&candidate)? {
                    Verdict::Accept => {
                        current = candidate;
                        n = 2;
                        accepted = true;
                        continue 'search;
                    }
                    Verdict::OutOfTime => {
                        out_of_time = true;
                        break 'search;
                    }
                    Verdict::Reject => {}
                }
            }
        }

        for range in &ranges {
            let mut candidate = Vec::with_capacity(current.len() - range.len());
            candidate.extend_from_slice(&current[..range.start]);
            candidate.extend_from_slice(&current[range.end..]);
            match search.judge(&candidate)? {
                Verdict::Accept => {
                    current = candidate;
                    n = (granularity - 1).max(2);
                    accepted = true;
                    continue 'search;
                }
                Verdict::OutOfTime => {
                    out_of_time = true;
                    break 'search;
                }
                Verdict::Reject => {}
            }
        }

        if granularity < units {
            n = (2 * granularity).min(units);
            continue;
        }
        break;
    }

    let status = if accepted {
        ReductionStatus::Reduced
    } else if out_of_time {
        ReductionStatus::Rejected(REJECT_BUDGET.to_string())
    } else if config.r_percent() > T::zero() {
        ReductionStatus::Rejected(REJECT_NO_CANDIDATE.to_string())
    } else {
        ReductionStatus::OriginalRetained
    };
    let reduced_bytes = if accepted { current } else { seed.as_bytes().to_vec() };
    let final_outcome = &search.cache[&digest(&reduced_bytes)];

    Ok(ReductionReport {
        target_name: target.name(),
        seed_type: SeedType::from_unit(config.unit),
        original_size: seed.len(),
        reduced_size: reduced_bytes.len(),
        size_reduction: percent_reduction(seed.len(), reduced_bytes.len()).expect("candidates never grow"),
        coverage_similarity: cov_similarity(&search.original.coverage, &final_outcome.coverage),
        elapsed: search.clock.elapsed(),
        status,
        budget_expired: accepted && out_of_time,
        executions: search.executions,
        reduced_bytes,
    })
}
