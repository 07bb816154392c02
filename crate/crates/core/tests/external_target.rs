#![cfg(unix)]

use std::fs;
use std::time::Duration;

use seedtrim::fuzzer::{run_campaign, CampaignConfig};
use seedtrim::{reduce, ClockMode, ExitStatus, ExternalTarget, ReductionConfig, ReductionStatus, Seed, Unit};

/// A shell target that covers `k.c:<byte>` for each distinct byte value of
/// its input and exits 0.
fn byte_coverage_target(dir: &std::path::Path) -> ExternalTarget {
    let script = dir.join("target.sh");
    fs::write(
        &script,
        "od -An -v -tu1 \"$1\" | tr -s ' ' '\\n' | grep -v '^$' | sort -u | sed 's/^/stmt k.c:/' > \"$SEEDTRIM_COVERAGE_REPORT\"\n",
    )
    .unwrap();
    ExternalTarget::new(format!("sh {} @@", script.display()), "cov-{run}.txt", dir, Duration::from_secs(10)).unwrap()
}

#[test]
fn external_reduction_keeps_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let target = byte_coverage_target(dir.path());
    let seed = Seed::bytes(b"aabbccaabbcc".to_vec());
    let original = target.execute(seed.as_bytes()).unwrap();
    assert_eq!(original.status, ExitStatus::Ok);
    assert_eq!(original.coverage.statements.len(), 3);

    let cfg = ReductionConfig::new(100.0, 40.0, Duration::from_secs(60), Unit::Byte, 1).unwrap();
    let report = reduce(&target, &seed, &cfg).unwrap();
    assert_eq!(report.status, ReductionStatus::Reduced);
    assert_eq!(report.reduced_size, 3);
    let mut kept = report.reduced_bytes.clone();
    kept.sort();
    assert_eq!(kept, b"abc");
    assert_eq!(report.target_name, "sh");
}

#[test]
fn reports_are_cleaned_up() {
    let dir = tempfile::tempdir().unwrap();
    let target = byte_coverage_target(dir.path());
    for _ in 0..5 {
        target.execute(b"xyz").unwrap();
    }
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("cov-"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn external_campaign_runs() {
    let dir = tempfile::tempdir().unwrap();
    let target = byte_coverage_target(dir.path());
    let cfg = CampaignConfig {
        duration: Duration::from_secs(30),
        max_executions: Some(20),
        clock: ClockMode::Wall,
        ..Default::default()
    };
    let stats = run_campaign(&target, &Seed::bytes(b"ab".to_vec()), &cfg).unwrap();
    assert_eq!(stats.executions, 20);
    assert!(stats.total_paths() >= 1);
}
