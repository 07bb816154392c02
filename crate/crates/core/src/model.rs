//! Value types shared by every stage, plus the pure arithmetic behind the
//! three reduction constraints.

use std::collections::BTreeSet;
use std::fmt;
use std::num::NonZeroI32;
use std::ops::Range;
use std::time::Duration;

use thiserror::Error;

use crate::clock::ClockMode;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("empty original seed")]
    EmptyOriginal,
    #[error("reduced size {reduced} exceeds original size {original}")]
    ReducedLarger { original: usize, reduced: usize },
    #[error("granularity exceeds seed size ({n} chunks requested, {units} units available)")]
    GranularityExceedsSeed { n: usize, units: usize },
    #[error("chunk index {index} out of range for {n} chunks")]
    ChunkIndexOutOfRange { index: usize, n: usize },
    #[error("unit size must be at least 1")]
    ZeroUnitSize,
    #[error("{name} must lie in [0, 100], got {value}")]
    PercentOutOfRange { name: &'static str, value: String },
    #[error("time budget must be positive")]
    ZeroBudget,
}

/// Atomic chunk kind. `Char` assumes a single-byte encoding, so a character
/// unit is byte-for-byte identical to a byte unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Unit {
    #[default]
    Byte,
    Char,
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Byte => "byte",
            Unit::Char => "char",
        }
    }
}

impl std::str::FromStr for Unit {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "byte" | "bytes" => Ok(Unit::Byte),
            "char" | "chars" | "character" => Ok(Unit::Char),
            other => Err(format!("unknown unit `{other}` (expected byte or char)")),
        }
    }
}

/// Input bytes together with the granularity used to cut them.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Seed {
    bytes: Vec<u8>,
    unit: Unit,
    unit_size: usize,
}

impl fmt::Debug for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Seed")
            .field("len", &self.bytes.len())
            .field("unit", &self.unit)
            .field("unit_size", &self.unit_size)
            .finish()
    }
}

impl Seed {
    pub fn new(bytes: impl Into<Vec<u8>>, unit: Unit, unit_size: usize) -> Result<Self, ModelError> {
        if unit_size == 0 {
            return Err(ModelError::ZeroUnitSize);
        }
        Ok(Self { bytes: bytes.into(), unit, unit_size })
    }

    /// Byte-granular seed.
    pub fn bytes(bytes: impl Into<Vec<u8>>) -> Self {
        Self { bytes: bytes.into(), unit: Unit::Byte, unit_size: 1 }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn unit_size(&self) -> usize {
        self.unit_size
    }

    /// Number of atomic units; a trailing partial unit counts as one.
    pub fn unit_count(&self) -> usize {
        self.bytes.len().div_ceil(self.unit_size)
    }

    /// Same granularity, different content.
    pub fn with_bytes(&self, bytes: Vec<u8>) -> Self {
        Self { bytes, unit: self.unit, unit_size: self.unit_size }
    }
}

/// Opaque statement identifier, conventionally `file:line`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StatementId(String);

/// Opaque branch identifier, conventionally `file:line:index`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BranchId(String);

impl StatementId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl BranchId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StatementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for BranchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Statements and branches exercised by one execution.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoverageSet {
    pub statements: BTreeSet<StatementId>,
    pub branches: BTreeSet<BranchId>,
}

impl CoverageSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_statement(&mut self, id: impl Into<String>) -> bool {
        self.statements.insert(StatementId::new(id))
    }

    pub fn insert_branch(&mut self, id: impl Into<String>) -> bool {
        self.branches.insert(BranchId::new(id))
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty() && self.branches.is_empty()
    }

    /// Number of statements and branches together.
    pub fn len(&self) -> usize {
        self.statements.len() + self.branches.len()
    }

    /// True if `self` holds any element absent from `seen`.
    pub fn has_new_elements(&self, seen: &CoverageSet) -> bool {
        self.statements.iter().any(|s| !seen.statements.contains(s))
            || self.branches.iter().any(|b| !seen.branches.contains(b))
    }

    /// Adds all elements of `other`; returns how many were new.
    pub fn merge(&mut self, other: &CoverageSet) -> usize {
        let mut added = 0;
        for s in &other.statements {
            if !self.statements.contains(s) {
                self.statements.insert(s.clone());
                added += 1;
            }
        }
        for b in &other.branches {
            if !self.branches.contains(b) {
                self.branches.insert(b.clone());
                added += 1;
            }
        }
        added
    }
}

/// How an execution ended.
///
/// A process exit code of 0 is always [`ExitStatus::Ok`]; `Error` cannot
/// carry 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExitStatus {
    Ok,
    Error(NonZeroI32),
    Crash(String),
    Timeout,
}

impl ExitStatus {
    pub fn from_exit_code(code: i32) -> Self {
        match NonZeroI32::new(code) {
            None => ExitStatus::Ok,
            Some(code) => ExitStatus::Error(code),
        }
    }

    /// Shorthand for tests and simulated targets; `error(0)` is `Ok`.
    pub fn error(code: i32) -> Self {
        Self::from_exit_code(code)
    }

    pub fn crash(kind: impl Into<String>) -> Self {
        ExitStatus::Crash(kind.into())
    }

    pub fn is_crash(&self) -> bool {
        matches!(self, ExitStatus::Crash(_))
    }
}

impl fmt::Display for ExitStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExitStatus::Ok => f.write_str("ok"),
            ExitStatus::Error(code) => write!(f, "error({code})"),
            ExitStatus::Crash(kind) => write!(f, "crash({kind})"),
            ExitStatus::Timeout => f.write_str("timeout"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionOutcome {
    pub status: ExitStatus,
    pub coverage: CoverageSet,
    pub wall_time: Duration,
}

impl ExecutionOutcome {
    pub fn new(status: ExitStatus, coverage: CoverageSet, wall_time: Duration) -> Self {
        // timed-out runs are discarded wholesale
        let coverage = if status == ExitStatus::Timeout { CoverageSet::new() } else { coverage };
        Self { status, coverage, wall_time }
    }

    pub fn timeout(wall_time: Duration) -> Self {
        Self::new(ExitStatus::Timeout, CoverageSet::new(), wall_time)
    }
}

/// Reduction thresholds and granularity.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionConfig<T: Scalar = f64> {
    c_percent: T,
    r_percent: T,
    time_budget: Duration,
    pub unit: Unit,
    unit_size: usize,
    pub clock: ClockMode,
}

impl<T: Scalar> ReductionConfig<T> {
    pub fn new(
        c_percent: T,
        r_percent: T,
        time_budget: Duration,
        unit: Unit,
        unit_size: usize,
    ) -> Result<Self, ModelError> {
        check_percent("coverage similarity C%", c_percent)?;
        check_percent("reduction R%", r_percent)?;
        if time_budget.is_zero() {
            return Err(ModelError::ZeroBudget);
        }
        if unit_size == 0 {
            return Err(ModelError::ZeroUnitSize);
        }
        Ok(Self { c_percent, r_percent, time_budget, unit, unit_size, clock: ClockMode::Auto })
    }

    pub fn with_clock(mut self, clock: ClockMode) -> Self {
        self.clock = clock;
        self
    }

    pub fn c_percent(&self) -> T {
        self.c_percent
    }
    pub fn r_percent(&self) -> T {
        self.r_percent
    }
    pub fn time_budget(&self) -> Duration {
        self.time_budget
    }
    pub fn unit_size(&self) -> usize {
        self.unit_size
    }
}

fn check_percent<T: Scalar>(name: &'static str, value: T) -> Result<(), ModelError> {
    // NaN fails both comparisons
    if value >= T::zero() && value <= T::hundred() {
        Ok(())
    } else {
        Err(ModelError::PercentOutOfRange { name, value: format!("{value:?}") })
    }
}

fn shared_statements(original: &CoverageSet, reduced: &CoverageSet) -> usize {
    original.statements.intersection(&reduced.statements).count()
}

/// Fraction of the original's statements that the reduced run still covers.
///
/// Branches are not considered. An original with no statements yields 1.
pub fn cov_similarity<T: Scalar>(original: &CoverageSet, reduced: &CoverageSet) -> T {
    let total = original.statements.len();
    if total == 0 {
        return T::one();
    }
    T::from_count(shared_statements(original, reduced)) / T::from_count(total)
}

/// `similarity >= c_percent / 100`, evaluated by cross-multiplication so the
/// comparison is exact whenever `T` represents the operands exactly.
pub fn meets_similarity<T: Scalar>(original: &CoverageSet, reduced: &CoverageSet, c_percent: T) -> bool {
    let total = original.statements.len();
    if total == 0 {
        return true;
    }
    T::from_count(shared_statements(original, reduced)) * T::hundred() >= c_percent * T::from_count(total)
}

fn check_sizes(original_size: usize, reduced_size: usize) -> Result<(), ModelError> {
    if original_size == 0 {
        return Err(ModelError::EmptyOriginal);
    }
    if reduced_size > original_size {
        return Err(ModelError::ReducedLarger { original: original_size, reduced: reduced_size });
    }
    Ok(())
}

/// `100 * (original - reduced) / original`, sizes in bytes.
pub fn percent_reduction<T: Scalar>(original_size: usize, reduced_size: usize) -> Result<T, ModelError> {
    check_sizes(original_size, reduced_size)?;
    Ok(T::hundred() * T::from_count(original_size - reduced_size) / T::from_count(original_size))
}

/// `percent_reduction >= r_percent` without dividing.
pub fn meets_reduction<T: Scalar>(
    original_size: usize,
    reduced_size: usize,
    r_percent: T,
) -> Result<bool, ModelError> {
    check_sizes(original_size, reduced_size)?;
    Ok(T::hundred() * T::from_count(original_size - reduced_size) >= r_percent * T::from_count(original_size))
}

/// Byte ranges of `n` contiguous chunks over `len` bytes cut in units of
/// `unit_size`. Chunk unit counts differ by at most one, larger chunks first.
pub fn chunk_ranges(len: usize, unit_size: usize, n: usize) -> Result<Vec<Range<usize>>, ModelError> {
    if unit_size == 0 {
        return Err(ModelError::ZeroUnitSize);
    }
    let units = len.div_ceil(unit_size);
    if n == 0 || n > units {
        return Err(ModelError::GranularityExceedsSeed { n, units });
    }
    let base = units / n;
    let extra = units % n;
    let mut ranges = Vec::with_capacity(n);
    let mut unit_start = 0;
    for i in 0..n {
        let size = base + usize::from(i < extra);
        let unit_end = unit_start + size;
        ranges.push((unit_start * unit_size).min(len)..(unit_end * unit_size).min(len));
        unit_start = unit_end;
    }
    Ok(ranges)
}

/// Splits the seed into `n` contiguous chunks (see [`chunk_ranges`]).
pub fn partition(seed: &Seed, n: usize) -> Result<Vec<&[u8]>, ModelError> {
    let ranges = chunk_ranges(seed.len(), seed.unit_size(), n)?;
    Ok(ranges.into_iter().map(|r| &seed.as_bytes()[r]).collect())
}

/// The seed with chunk `index` of an `n`-way partition deleted.
pub fn remove_chunk(seed: &Seed, index: usize, n: usize) -> Result<Seed, ModelError> {
    let ranges = chunk_ranges(seed.len(), seed.unit_size(), n)?;
    let cut = ranges.get(index).ok_or(ModelError::ChunkIndexOutOfRange { index, n })?;
    let bytes = seed.as_bytes();
    let mut out = Vec::with_capacity(bytes.len() - cut.len());
    out.extend_from_slice(&bytes[..cut.start]);
    out.extend_from_slice(&bytes[cut.end..]);
    Ok(seed.with_bytes(out))
}

/// Two-decimal rendering used in every report.
pub fn format_percent(value: f64) -> String {
    format!("{value:.2}")
}
