//! Runs a real program on an input file and collects its coverage report.

use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use wait_timeout::ChildExt;

use super::report::parse_coverage_report;
use super::OracleError;
use crate::model::{CoverageSet, ExecutionOutcome, ExitStatus};

/// Placeholder replaced by the input file path.
pub const INPUT_PLACEHOLDER: &str = "@@";
/// Placeholder replaced by a per-execution identifier in the report path
/// (and in the command, so wrappers can find the path).
pub const RUN_PLACEHOLDER: &str = "{run}";
/// Environment variable carrying the resolved report path.
pub const REPORT_ENV: &str = "SEEDTRIM_COVERAGE_REPORT";

static RUN_COUNTER: AtomicU64 = AtomicU64::new(0);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalTarget {
    command_template: String,
    argv: Vec<String>,
    coverage_report: String,
    workdir: PathBuf,
    per_run_timeout: Duration,
    /// `None` inherits the whole environment; `Some` passes only these names.
    pass_env: Option<Vec<String>>,
}

impl ExternalTarget {
    pub fn new(
        command_template: impl Into<String>,
        coverage_report: impl Into<String>,
        workdir: impl Into<PathBuf>,
        per_run_timeout: Duration,
    ) -> Result<Self, OracleError> {
        let command_template = command_template.into();
        let placeholders = command_template.matches(INPUT_PLACEHOLDER).count();
        if placeholders != 1 {
            return Err(OracleError::InvalidTarget(format!(
                "command template must contain exactly one `@@`, found {placeholders}"
            )));
        }
        if per_run_timeout.is_zero() {
            return Err(OracleError::InvalidTarget("per-run timeout must be positive".into()));
        }
        let argv = shlex::split(&command_template)
            .filter(|argv| !argv.is_empty())
            .ok_or_else(|| OracleError::InvalidTarget(format!("cannot parse command `{command_template}`")))?;
        if argv[0].contains(INPUT_PLACEHOLDER) {
            return Err(OracleError::InvalidTarget("`@@` cannot be the program itself".into()));
        }
        let coverage_report = coverage_report.into();
        if coverage_report.is_empty() {
            return Err(OracleError::InvalidTarget("coverage report path is empty".into()));
        }
        Ok(Self {
            command_template,
            argv,
            coverage_report,
            workdir: workdir.into(),
            per_run_timeout,
            pass_env: None,
        })
    }

    pub fn with_pass_env(mut self, names: Vec<String>) -> Self {
        self.pass_env = Some(names);
        self
    }

    pub fn command_template(&self) -> &str {
        &self.command_template
    }

    pub fn coverage_report(&self) -> &str {
        &self.coverage_report
    }

    pub fn workdir(&self) -> &Path {
        &self.workdir
    }

    pub fn per_run_timeout(&self) -> Duration {
        self.per_run_timeout
    }

    pub fn pass_env(&self) -> Option<&[String]> {
        self.pass_env.as_deref()
    }

    /// Basename of the program, used as the target label in reports.
    pub fn program_name(&self) -> String {
        Path::new(&self.argv[0])
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.argv[0].clone())
    }

    fn report_path(&self, run_id: &str) -> PathBuf {
        let path = PathBuf::from(self.coverage_report.replace(RUN_PLACEHOLDER, run_id));
        if path.is_absolute() {
            path
        } else {
            self.workdir.join(path)
        }
    }

    pub fn execute(&self, input: &[u8]) -> Result<ExecutionOutcome, OracleError> {
        let run_id = format!("{}-{}", std::process::id(), RUN_COUNTER.fetch_add(1, Ordering::Relaxed));
        let mut input_file = tempfile::Builder::new().prefix("seedtrim-input-").tempfile()?;
        input_file.write_all(input)?;
        input_file.flush()?;
        let input_path = input_file.path().to_string_lossy().into_owned();

        let report = self.report_path(&run_id);
        remove_if_present(&report)?;

        let substitute = |arg: &str| arg.replace(INPUT_PLACEHOLDER, &input_path).replace(RUN_PLACEHOLDER, &run_id);
        let mut cmd = Command::new(&self.argv[0]);
        cmd.args(self.argv[1..].iter().map(|a| substitute(a)))
            .current_dir(&self.workdir)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null());
        if let Some(names) = &self.pass_env {
            cmd.env_clear();
            for name in names {
                if let Some(value) = std::env::var_os(name) {
                    cmd.env(name, value);
                }
            }
        }
        cmd.env(REPORT_ENV, &report);

        let started = Instant::now();
        let mut child = cmd.spawn().map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => OracleError::CommandNotFound(self.argv[0].clone()),
            _ => OracleError::Spawn { program: self.argv[0].clone(), source: e },
        })?;
        let status = match child.wait_timeout(self.per_run_timeout)? {
            Some(status) => status,
            None => {
                // already-exited races surface as InvalidInput; either way reap it
                let _ = child.kill();
                child.wait()?;
                remove_if_present(&report)?;
                return Ok(ExecutionOutcome::timeout(started.elapsed()));
            }
        };
        let wall_time = started.elapsed();
        let exit = map_exit_status(status);

        let coverage = match fs::read_to_string(&report) {
            Ok(text) => parse_coverage_report(&text).map_err(|e| OracleError::ReportParse {
                path: report.clone(),
                source: e,
            })?,
            // a crashed process may never reach its coverage dump
            Err(e) if e.kind() == io::ErrorKind::NotFound && exit.is_crash() => CoverageSet::new(),
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(OracleError::ReportMissing(report)),
            Err(e) => return Err(e.into()),
        };
        remove_if_present(&report)?;
        Ok(ExecutionOutcome::new(exit, coverage, wall_time))
    }
}

fn remove_if_present(path: &Path) -> io::Result<()> {
    match fs::remove_file(path) {
        Err(e) if e.kind() != io::ErrorKind::NotFound => Err(e),
        _ => Ok(()),
    }
}

#[cfg(unix)]
fn map_exit_status(status: std::process::ExitStatus) -> ExitStatus {
    use std::os::unix::process::ExitStatusExt;
    match (status.code(), status.signal()) {
        (Some(code), _) => ExitStatus::from_exit_code(code),
        (None, Some(sig)) => ExitStatus::Crash(signal_name(sig)),
        (None, None) => ExitStatus::crash("abnormal"),
    }
}

#[cfg(not(unix))]
fn map_exit_status(status: std::process::ExitStatus) -> ExitStatus {
    match status.code() {
        Some(code) => ExitStatus::from_exit_code(code),
        None => ExitStatus::crash("abnormal"),
    }
}

#[cfg(unix)]
fn signal_name(sig: i32) -> String {
    let name = match sig {
        4 => "SIGILL",
        5 => "SIGTRAP",
        6 => "SIGABRT",
        7 => "SIGBUS",
        8 => "SIGFPE",
        9 => "SIGKILL",
        11 => "SIGSEGV",
        13 => "SIGPIPE",
        15 => "SIGTERM",
        _ => return format!("signal-{sig}"),
    };
    name.to_string()
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;

    fn sh(script: &str, timeout_ms: u64) -> ExternalTarget {
        let dir = std::env::temp_dir();
        ExternalTarget::new(
            format!("sh -c '{script}' target @@"),
            "seedtrim-test-{run}.cov",
            dir,
            Duration::from_millis(timeout_ms),
        )
        .unwrap()
    }

    #[test]
    fn template_validation() {
        let dir = std::env::temp_dir();
        let t = Duration::from_secs(1);
        assert!(ExternalTarget::new("prog", "r", &dir, t).is_err());
        assert!(ExternalTarget::new("prog @@ @@", "r", &dir, t).is_err());
        assert!(ExternalTarget::new("prog @@", "r", &dir, Duration::ZERO).is_err());
        assert!(ExternalTarget::new("@@ x", "r", &dir, t).is_err());
        let ok = ExternalTarget::new("/usr/bin/readelf -a @@", "r", &dir, t).unwrap();
        assert_eq!(ok.program_name(), "readelf");
    }

    #[test]
    fn runs_and_reads_report() {
        let t = sh("printf \"stmt a.c:1\\nbranch a.c:1:0\\n\" > \"$SEEDTRIM_COVERAGE_REPORT\"; test -s \"$1\"", 5000);
        let o = t.execute(b"data").unwrap();
        assert_eq!(o.status, ExitStatus::Ok);
        assert_eq!(o.coverage.statements.len(), 1);
        assert_eq!(o.coverage.branches.len(), 1);
        // empty input file makes `test -s` fail with code 1
        let o = t.execute(b"").unwrap();
        assert_eq!(o.status, ExitStatus::error(1));
    }

    #[test]
    fn input_file_holds_seed_bytes() {
        let t = sh("grep -q needle \"$1\" && echo \"stmt hit.c:1\" > \"$SEEDTRIM_COVERAGE_REPORT\" || echo \"stmt miss.c:1\" > \"$SEEDTRIM_COVERAGE_REPORT\"", 5000);
        let hit = t.execute(b"haystack needle").unwrap();
        assert_eq!(hit.coverage.statements.iter().next().unwrap().as_str(), "hit.c:1");
        let miss = t.execute(b"haystack").unwrap();
        assert_eq!(miss.coverage.statements.iter().next().unwrap().as_str(), "miss.c:1");
    }

    #[test]
    fn missing_report_is_an_oracle_error() {
        let t = sh("true", 5000);
        assert!(matches!(t.execute(b"x"), Err(OracleError::ReportMissing(_))));
    }

    #[test]
    fn malformed_report_is_an_oracle_error() {
        let t = sh("echo \"bogus a.c:1\" > \"$SEEDTRIM_COVERAGE_REPORT\"", 5000);
        match t.execute(b"x") {
            Err(OracleError::ReportParse { source, .. }) => assert_eq!(source.line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn signal_maps_to_crash() {
        let t = sh("kill -SEGV $$", 5000);
        let o = t.execute(b"x").unwrap();
        assert_eq!(o.status, ExitStatus::crash("SIGSEGV"));
        assert!(o.coverage.is_empty());
    }

    #[test]
    fn slow_run_times_out() {
        let t = sh("echo \"stmt a.c:1\" > \"$SEEDTRIM_COVERAGE_REPORT\"; sleep 5", 100);
        let o = t.execute(b"x").unwrap();
        assert_eq!(o.status, ExitStatus::Timeout);
        assert!(o.coverage.is_empty());
    }

    #[test]
    fn unknown_program() {
        let t = ExternalTarget::new(
            "/nonexistent/seedtrim-prog @@",
            "r.cov",
            std::env::temp_dir(),
            Duration::from_secs(1),
        )
        .unwrap();
        assert!(matches!(t.execute(b"x"), Err(OracleError::CommandNotFound(_))));
    }

    #[test]
    fn pass_env_restricts_environment() {
        let t = sh(
            "if [ -z \"$HOME\" ]; then echo \"stmt clean.c:1\"; else echo \"stmt dirty.c:1\"; fi > \"$SEEDTRIM_COVERAGE_REPORT\"",
            5000,
        )
        .with_pass_env(vec!["PATH".into()]);
        let o = t.execute(b"x").unwrap();
        assert_eq!(o.coverage.statements.iter().next().unwrap().as_str(), "clean.c:1");
    }
}
