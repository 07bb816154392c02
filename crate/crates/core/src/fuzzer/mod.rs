//! A small coverage-guided mutational fuzzer for comparing starting seeds.
//!
//! A "path" here is any input whose coverage contains a statement or branch
//! not seen before in the campaign. This is coarser than an edge-hit-count
//! bitmap, so absolute path counts are only comparable between campaigns run
//! by this fuzzer. The queue is scheduled strictly round-robin.

mod mutate;

use std::collections::BTreeSet;
use std::fmt;
use std::io;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use mutate::{mutate, mutate_traced, Mutation};

use crate::clock::{Clock, ClockMode};
use crate::model::{CoverageSet, ExecutionOutcome, ExitStatus, Seed};
use crate::oracle::{OracleError, Target};

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("initial seed times out")]
    InitialTimeout,
    #[error("invalid campaign config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("input observer failed after {executions} executions: {source}")]
    Observer {
        executions: u64,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("crash signature requested for a non-crash outcome ({0})")]
pub struct NotACrash(pub ExitStatus);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CampaignConfig {
    pub duration: Duration,
    pub rng_seed: u64,
    pub max_input_size: usize,
    pub mutation_stack_max: usize,
    /// Optional execution-count cap, applied in addition to `duration`.
    pub max_executions: Option<u64>,
    pub clock: ClockMode,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            duration: Duration::from_secs(60),
            rng_seed: 0,
            max_input_size: 1 << 20,
            mutation_stack_max: 8,
            max_executions: None,
            clock: ClockMode::Auto,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), CampaignError> {
        if self.duration.is_zero() {
            return Err(CampaignError::InvalidConfig("duration must be positive".into()));
        }
        if self.max_input_size == 0 {
            return Err(CampaignError::InvalidConfig("max input size must be positive".into()));
        }
        if self.mutation_stack_max == 0 {
            return Err(CampaignError::InvalidConfig("mutation stack must allow at least one operator".into()));
        }
        Ok(())
    }
}

/// Stable hex digest identifying a crash site.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CrashSignature(String);

impl CrashSignature {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CrashSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Hash of the crash kind and the sorted statement identifiers.
pub fn crash_signature(outcome: &ExecutionOutcome) -> Result<CrashSignature, NotACrash> {
    let ExitStatus::Crash(kind) = &outcome.status else {
        return Err(NotACrash(outcome.status.clone()));
    };
    let mut hasher = Sha256::new();
    hasher.update(kind.as_bytes());
    hasher.update(b"\n");
    // BTreeSet iteration is already sorted
    for s in &outcome.coverage.statements {
        hasher.update(s.as_str().as_bytes());
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    Ok(CrashSignature(hex::encode(&digest[..8])))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathEvent {
    pub elapsed: Duration,
    pub total_paths: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrashRecord {
    pub elapsed: Duration,
    pub signature: CrashSignature,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CampaignStats {
    pub path_events: Vec<PathEvent>,
    /// First occurrence of each unique crash, in discovery order.
    pub crashes: Vec<CrashRecord>,
    pub cumulative: CoverageSet,
    pub executions: u64,
    pub elapsed: Duration,
}

impl CampaignStats {
    pub fn total_paths(&self) -> usize {
        self.path_events.last().map_or(0, |e| e.total_paths)
    }

    pub fn unique_crashes(&self) -> usize {
        self.crashes.len()
    }

    pub fn cumulative_statements(&self) -> usize {
        self.cumulative.statements.len()
    }

    pub fn cumulative_branches(&self) -> usize {
        self.cumulative.branches.len()
    }

    /// `elapsed_ms,total_paths`
    pub fn paths_csv(&self) -> String {
        let mut out = String::from("elapsed_ms,total_paths\n");
        for e in &self.path_events {
            out.push_str(&format!("{},{}\n", e.elapsed.as_millis(), e.total_paths));
        }
        out
    }

    /// `elapsed_ms,signature`
    pub fn crashes_csv(&self) -> String {
        let mut out = String::from("elapsed_ms,signature\n");
        for c in &self.crashes {
            out.push_str(&format!("{},{}\n", c.elapsed.as_millis(), c.signature));
        }
        out
    }

    /// One-row summary: executions, paths, unique crashes, lines (L), branches (B).
    pub fn summary_csv(&self) -> String {
        format!(
            "executions,total_paths,unique_crashes,lines,branches\n{},{},{},{},{}\n",
            self.executions,
            self.total_paths(),
            self.unique_crashes(),
            self.cumulative_statements(),
            self.cumulative_branches()
        )
    }
}

#[derive(Debug, Clone)]
pub struct CampaignRun {
    pub stats: CampaignStats,
    /// The initial seed followed by every input that produced a path event.
    pub queue: Vec<Vec<u8>>,
}

/// Path and crash bookkeeping shared by live campaigns and replays.
#[derive(Default)]
struct Tracker {
    stats: CampaignStats,
    seen_crashes: BTreeSet<CrashSignature>,
}

impl Tracker {
    /// Returns true when the outcome is a new path.
    fn observe(&mut self, outcome: &ExecutionOutcome, elapsed: Duration) -> bool {
        self.stats.executions += 1;
        if outcome.status == ExitStatus::Timeout {
            return false;
        }
        if let Ok(signature) = crash_signature(outcome) {
            if self.seen_crashes.insert(signature.clone()) {
                self.stats.crashes.push(CrashRecord { elapsed, signature });
            }
        }
        let first = self.stats.path_events.is_empty();
        if first || outcome.coverage.has_new_elements(&self.stats.cumulative) {
            self.stats.cumulative.merge(&outcome.coverage);
            let total_paths = self.stats.total_paths() + 1;
            self.stats.path_events.push(PathEvent { elapsed, total_paths });
            true
        } else {
            false
        }
    }
}

/// Runs a campaign, returning only its statistics.
pub fn run_campaign<G: Target + ?Sized>(
    target: &G,
    initial_seed: &Seed,
    config: &CampaignConfig,
) -> Result<CampaignStats, CampaignError> {
    run_campaign_with(target, initial_seed, config, &mut |_| Ok(())).map(|run| run.stats)
}

/// Runs a campaign, passing every executed input (the initial seed first) to
/// `observer` in execution order.
pub fn run_campaign_with<G: Target + ?Sized>(
    target: &G,
    initial_seed: &Seed,
    config: &CampaignConfig,
    observer: &mut dyn FnMut(&[u8]) -> io::Result<()>,
) -> Result<CampaignRun, CampaignError> {
    config.validate()?;
    let mut clock = Clock::start(config.clock.resolve(target.is_simulated()));
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut tracker = Tracker::default();

    let initial = initial_seed.as_bytes().to_vec();
    let outcome = target.execute(&initial)?;
    if outcome.status == ExitStatus::Timeout {
        return Err(CampaignError::InitialTimeout);
    }
    clock.charge(outcome.wall_time);
    notify(observer, &initial, 0)?;
    tracker.observe(&outcome, clock.elapsed());
    let mut queue = vec![initial];

    let mut cursor = 0usize;
    loop {
        if clock.expired(config.duration) {
            break;
        }
        if config.max_executions.is_some_and(|cap| tracker.stats.executions >= cap) {
            break;
        }
        let parent = &queue[cursor];
        cursor = (cursor + 1) % queue.len();
        let child = mutate(parent, &mut rng, config.mutation_stack_max, config.max_input_size);
        let outcome = target.execute(&child)?;
        clock.charge(outcome.wall_time);
        notify(observer, &child, tracker.stats.executions)?;
        if tracker.observe(&outcome, clock.elapsed()) {
            queue.push(child);
        }
    }
    tracker.stats.elapsed = clock.elapsed();
    Ok(CampaignRun { stats: tracker.stats, queue })
}

fn notify(
    observer: &mut dyn FnMut(&[u8]) -> io::Result<()>,
    input: &[u8],
    executions: u64,
) -> Result<(), CampaignError> {
    observer(input).map_err(|source| CampaignError::Observer { executions, source })
}

/// Recomputes path events and crashes from a recorded input sequence (the
/// initial seed first), as a campaign would have observed them.
pub fn replay<G, I, B>(target: &G, inputs: I, clock: ClockMode) -> Result<CampaignStats, OracleError>
where
    G: Target + ?Sized,
    I: IntoIterator<Item = B>,
    B: AsRef<[u8]>,
{
    let mut clock = Clock::start(clock.resolve(target.is_simulated()));
    let mut tracker = Tracker::default();
    for input in inputs {
        let outcome = target.execute(input.as_ref())?;
        clock.charge(outcome.wall_time);
        tracker.observe(&outcome, clock.elapsed());
    }
    tracker.stats.elapsed = clock.elapsed();
    Ok(tracker.stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{parse_coverage_report, serialize_coverage_report, SimulatedTarget};

    fn cfg(secs: u64, rng_seed: u64) -> CampaignConfig {
        CampaignConfig { duration: Duration::from_secs(secs), rng_seed, ..CampaignConfig::default() }
    }

    #[test]
    fn constant_target_finds_only_initial_path() {
        let stats = run_campaign(&SimulatedTarget::ConstantCoverage, &Seed::bytes(b"seed".to_vec()), &cfg(5, 1)).unwrap();
        assert_eq!(stats.total_paths(), 1);
        assert_eq!(stats.unique_crashes(), 0);
        assert!(stats.executions > 1000);
    }

    #[test]
    fn distinct_bytes_is_reproducible_and_bounded() {
        let seed = Seed::bytes(vec![0x41]);
        let a = run_campaign(&SimulatedTarget::DistinctBytes, &seed, &cfg(5, 99)).unwrap();
        let b = run_campaign(&SimulatedTarget::DistinctBytes, &seed, &cfg(5, 99)).unwrap();
        assert_eq!(a, b);
        assert!((2..=256).contains(&a.total_paths()), "{}", a.total_paths());
        assert!(a.path_events.windows(2).all(|w| w[0].elapsed <= w[1].elapsed && w[0].total_paths < w[1].total_paths));
    }

    #[test]
    fn execution_cap_stops_early() {
        let c = CampaignConfig { max_executions: Some(100), ..cfg(3600, 3) };
        let stats = run_campaign(&SimulatedTarget::DistinctBytes, &Seed::bytes(vec![1, 2]), &c).unwrap();
        assert_eq!(stats.executions, 100);
    }

    #[test]
    fn queue_holds_exactly_the_path_inputs() {
        let seed = Seed::bytes(b"<a>x</a>".to_vec());
        let mut inputs = Vec::new();
        let run = run_campaign_with(&SimulatedTarget::XmlLike, &seed, &cfg(2, 5), &mut |i| {
            inputs.push(i.to_vec());
            Ok(())
        })
        .unwrap();
        assert_eq!(run.queue.len(), run.stats.total_paths());
        assert_eq!(inputs.len() as u64, run.stats.executions);
        assert_eq!(inputs[0], seed.as_bytes());

        let replayed = replay(&SimulatedTarget::XmlLike, &inputs, ClockMode::Auto).unwrap();
        assert_eq!(replayed, run.stats);

        // queue = inputs whose replay adds coverage
        let mut seen = CoverageSet::new();
        let expected: Vec<Vec<u8>> = inputs
            .iter()
            .enumerate()
            .filter(|(i, input)| {
                let o = SimulatedTarget::XmlLike.run(input);
                let new = *i == 0 || o.coverage.has_new_elements(&seen);
                seen.merge(&o.coverage);
                new
            })
            .map(|(_, input)| input.clone())
            .collect();
        assert_eq!(run.queue, expected);
    }

    #[test]
    fn invariants_on_counts() {
        let seed = Seed::bytes(b"abc".to_vec());
        let first = SimulatedTarget::DistinctBytes.run(seed.as_bytes());
        let stats = run_campaign(&SimulatedTarget::DistinctBytes, &seed, &cfg(1, 11)).unwrap();
        assert!(stats.total_paths() as u64 <= stats.executions + 1);
        assert!(stats.cumulative_statements() >= first.coverage.statements.len());
    }

    #[test]
    fn initial_timeout_rejected() {
        struct Hangs;
        impl Target for Hangs {
            fn execute(&self, _: &[u8]) -> Result<ExecutionOutcome, OracleError> {
                Ok(ExecutionOutcome::timeout(Duration::from_secs(1)))
            }
            fn name(&self) -> String {
                "hangs".into()
            }
        }
        assert!(matches!(
            run_campaign(&Hangs, &Seed::bytes(vec![1]), &cfg(1, 0)),
            Err(CampaignError::InitialTimeout)
        ));
    }

    #[test]
    fn invalid_config() {
        let c = CampaignConfig { mutation_stack_max: 0, ..cfg(1, 0) };
        assert!(matches!(
            run_campaign(&SimulatedTarget::DistinctBytes, &Seed::bytes(vec![1]), &c),
            Err(CampaignError::InvalidConfig(_))
        ));
    }

    fn crash(kind: &str, stmts: &[&str]) -> ExecutionOutcome {
        let mut c = CoverageSet::new();
        stmts.iter().for_each(|s| {
            c.insert_statement(*s);
        });
        ExecutionOutcome::new(ExitStatus::crash(kind), c, Duration::ZERO)
    }

    #[test]
    fn signatures() {
        let a = crash("SIGSEGV", &["a.c:1", "a.c:2"]);
        assert_eq!(crash_signature(&a), crash_signature(&a.clone()));
        let b = crash("SIGSEGV", &["a.c:1"]);
        assert_ne!(crash_signature(&a), crash_signature(&b));
        let c = crash("SIGABRT", &["a.c:1", "a.c:2"]);
        assert_ne!(crash_signature(&a), crash_signature(&c));
        let ok = ExecutionOutcome::new(ExitStatus::Ok, CoverageSet::new(), Duration::ZERO);
        assert_eq!(crash_signature(&ok), Err(NotACrash(ExitStatus::Ok)));
    }

    #[test]
    fn signature_survives_report_round_trip() {
        let a = crash("hdr-overflow", &["magic.c:1", "header.c:3", "payload.c:1"]);
        let reparsed = parse_coverage_report(&serialize_coverage_report(&a.coverage)).unwrap();
        let b = ExecutionOutcome::new(a.status.clone(), reparsed, Duration::ZERO);
        assert_eq!(crash_signature(&a), crash_signature(&b));
        // frozen: sha256("hdr-overflow\n" + sorted statements, each + "\n"), first 8 bytes
        assert_eq!(crash_signature(&a).unwrap().as_str(), "f7b9caa4b063a70f");
    }

    #[test]
    fn csv_shapes() {
        let stats = run_campaign(&SimulatedTarget::ConstantCoverage, &Seed::bytes(vec![0]), &cfg(1, 0)).unwrap();
        assert!(stats.paths_csv().starts_with("elapsed_ms,total_paths\n0,1\n"));
        assert_eq!(stats.crashes_csv(), "elapsed_ms,signature\n");
        let summary = stats.summary_csv();
        assert!(summary.starts_with("executions,total_paths,unique_crashes,lines,branches\n"));
        assert!(summary.ends_with(",1,0,1,0\n"));
    }
}
