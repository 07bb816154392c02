//! Plain-text coverage report: one `stmt <file>:<line>` or
//! `branch <file>:<line>:<index>` record per line. Blank lines and lines
//! starting with `#` are skipped.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::CoverageSet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("coverage report line {line}: {message}")]
pub struct ReportError {
    pub line: usize,
    pub message: String,
}

fn valid_statement(id: &str) -> bool {
    match id.rsplit_once(':') {
        Some((file, line)) => !file.is_empty() && line.parse::<u64>().is_ok(),
        None => false,
    }
}

fn valid_branch(id: &str) -> bool {
    match id.rsplit_once(':') {
        Some((stmt, index)) => valid_statement(stmt) && index.parse::<u64>().is_ok(),
        None => false,
    }
}

pub fn parse_coverage_report(text: &str) -> Result<CoverageSet, ReportError> {
    let mut coverage = CoverageSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let record = raw.trim();
        if record.is_empty() || record.starts_with('#') {
            continue;
        }
        let err = |message: String| ReportError { line, message };
        let (kind, id) = record
            .split_once(char::is_whitespace)
            .map(|(k, rest)| (k, rest.trim()))
            .ok_or_else(|| err(format!("missing identifier in `{record}`")))?;
        if id.contains(char::is_whitespace) {
            return Err(err(format!("identifier `{id}` contains whitespace")));
        }
        match kind {
            "stmt" if valid_statement(id) => {
                coverage.insert_statement(id);
            }
            "branch" if valid_branch(id) => {
                coverage.insert_branch(id);
            }
            "stmt" => return Err(err(format!("expected <file>:<line>, got `{id}`"))),
            "branch" => return Err(err(format!("expected <file>:<line>:<index>, got `{id}`"))),
            other => return Err(err(format!("unknown record kind `{other}`"))),
        }
    }
    Ok(coverage)
}

/// Inverse of [`parse_coverage_report`]; records come out sorted.
pub fn serialize_coverage_report(coverage: &CoverageSet) -> String {
    let mut out = String::new();
    for s in &coverage.statements {
        let _ = writeln!(out, "stmt {s}");
    }
    for b in &coverage.branches {
        let _ = writeln!(out, "branch {b}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn duplicates_collapse() {
        let c = parse_coverage_report("stmt a.c:10\nstmt a.c:10").unwrap();
        assert_eq!(c.statements.len(), 1);
        assert!(c.branches.is_empty());
    }

    #[test]
    fn mixed_records() {
        let c = parse_coverage_report("stmt a.c:10\nbranch a.c:10:1").unwrap();
        let mut expected = CoverageSet::new();
        expected.insert_statement("a.c:10");
        expected.insert_branch("a.c:10:1");
        assert_eq!(c, expected);
    }

    #[test]
    fn unknown_kind_reports_line() {
        let e = parse_coverage_report("foo a.c:10").unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse_coverage_report("# header\n\nstmt a.c:1\nstmt a.c\n").unwrap_err();
        assert_eq!(e.line, 4);
        assert!(parse_coverage_report("branch a.c:1").is_err());
        assert!(parse_coverage_report("stmt").is_err());
        assert!(parse_coverage_report("stmt :3").is_err());
    }

    #[test]
    fn comments_and_blanks_skipped() {
        let c = parse_coverage_report("# x\n\n   \nstmt dir/f.c:3\n").unwrap();
        assert_eq!(c.statements.len(), 1);
    }

    fn coverage_strategy() -> impl Strategy<Value = CoverageSet> {
        let stmt = ("[a-z_/]{1,8}\\.c", 0u32..5000).prop_map(|(f, l)| format!("{f}:{l}"));
        let branch = ("[a-z_]{1,8}\\.c", 0u32..5000, 0u8..4).prop_map(|(f, l, i)| format!("{f}:{l}:{i}"));
        (
            proptest::collection::vec(stmt, 0..30),
            proptest::collection::vec(branch, 0..30),
        )
            .prop_map(|(s, b)| {
                let mut c = CoverageSet::new();
                s.into_iter().for_each(|x| {
                    c.insert_statement(x);
                });
                b.into_iter().for_each(|x| {
                    c.insert_branch(x);
                });
                c
            })
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(c in coverage_strategy()) {
            prop_assert_eq!(parse_coverage_report(&serialize_coverage_report(&c)).unwrap(), c);
        }
    }
}
