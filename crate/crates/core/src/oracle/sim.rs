//! Built-in deterministic targets.
//!
//! Each target is a pure function of the input bytes. Coverage identifiers
//! use the `file:line` convention of the report format:
//!
//! | element            | identifier            |
//! |--------------------|-----------------------|
//! | distinct byte `v`  | `distinct.c:<v>`      |
//! | constant           | `constant.c:0`        |
//! | bad magic          | `magic.c:0`           |
//! | good magic         | `magic.c:1`           |
//! | header field `i`   | `header.c:<i>`        |
//! | field `i` nonzero  | branch `header.c:<i>:1` |
//! | payload loop       | `payload.c:1`         |
//! | `<` seen           | `xml.c:1`             |
//! | `=` inside a tag   | `xml.c:2`             |
//! | text outside tags  | `xml.c:3`             |
//! | nesting depth `k`  | `xml_depth.c:<k>`     |

use std::hint::black_box;
use std::str::FromStr;
use std::time::Duration;

use crate::model::{CoverageSet, ExecutionOutcome, ExitStatus};

pub const HEADER_MAGIC: [u8; 4] = [0xDE, 0xAD, 0xBE, 0xEF];
pub const HEADER_LEN: usize = 64;
pub const HEADER_FIELDS: usize = 15;
pub const MAX_XML_DEPTH: usize = 8;

/// Fixed per-execution cost charged to the virtual clock.
pub const EXEC_BASE_COST: Duration = Duration::from_micros(50);
/// Additional virtual cost per input byte.
pub const EXEC_BYTE_COST: Duration = Duration::from_nanos(100);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimulatedTarget {
    /// Binary format with a magic number, fixed header and opaque payload.
    HeaderPayload,
    /// Angle-bracket markup checker.
    XmlLike,
    ConstantCoverage,
    DistinctBytes,
}

impl SimulatedTarget {
    pub const ALL: [SimulatedTarget; 4] = [
        SimulatedTarget::HeaderPayload,
        SimulatedTarget::XmlLike,
        SimulatedTarget::ConstantCoverage,
        SimulatedTarget::DistinctBytes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SimulatedTarget::HeaderPayload => "header-payload",
            SimulatedTarget::XmlLike => "xml-like",
            SimulatedTarget::ConstantCoverage => "constant-coverage",
            SimulatedTarget::DistinctBytes => "distinct-bytes",
        }
    }

    /// Modeled running time for an input of `len` bytes.
    pub fn modeled_cost(len: usize) -> Duration {
        EXEC_BASE_COST + EXEC_BYTE_COST * u32::try_from(len).unwrap_or(u32::MAX)
    }

    pub fn run(self, input: &[u8]) -> ExecutionOutcome {
        let (status, coverage) = match self {
            SimulatedTarget::HeaderPayload => header_payload(input),
            SimulatedTarget::XmlLike => xml_like(input),
            SimulatedTarget::ConstantCoverage => {
                let mut c = CoverageSet::new();
                c.insert_statement("constant.c:0");
                (ExitStatus::Ok, c)
            }
            SimulatedTarget::DistinctBytes => distinct_bytes(input),
        };
        ExecutionOutcome::new(status, coverage, Self::modeled_cost(input.len()))
    }
}

impl FromStr for SimulatedTarget {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|t| t.name() == key || t.name().replace('-', "") == key)
            .ok_or_else(|| {
                format!(
                    "unknown simulated target `{s}` (expected one of: {})",
                    Self::ALL.map(|t| t.name()).join(", ")
                )
            })
    }
}

fn distinct_bytes(input: &[u8]) -> (ExitStatus, CoverageSet) {
    let mut seen = [false; 256];
    for &b in input {
        seen[b as usize] = true;
    }
    let mut c = CoverageSet::new();
    for (v, _) in seen.iter().enumerate().filter(|(_, s)| **s) {
        c.insert_statement(format!("distinct.c:{v}"));
    }
    (ExitStatus::Ok, c)
}

fn header_field(input: &[u8], index: usize) -> Option<u32> {
    let start = HEADER_MAGIC.len() + 4 * index;
    input.get(start..start + 4).map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
}

fn header_payload(input: &[u8]) -> (ExitStatus, CoverageSet) {
    let mut c = CoverageSet::new();
    if input.len() < HEADER_MAGIC.len() || input[..4] != HEADER_MAGIC {
        c.insert_statement("magic.c:0");
        return (ExitStatus::error(1), c);
    }
    c.insert_statement("magic.c:1");
    let mut fields = [0u32; HEADER_FIELDS];
    for (i, slot) in fields.iter_mut().enumerate() {
        let Some(value) = header_field(input, i) else { break };
        *slot = value;
        c.insert_statement(format!("header.c:{i}"));
        if value != 0 {
            c.insert_branch(format!("header.c:{i}:1"));
        }
    }
    if input.len() < HEADER_LEN {
        return (ExitStatus::error(2), c);
    }
    let payload = &input[HEADER_LEN..];
    if !payload.is_empty() {
        c.insert_statement("payload.c:1");
        // the loop body does real work per byte so cost scales with length
        let sum = payload.iter().fold(0u32, |acc, &b| acc.rotate_left(1) ^ u32::from(b));
        black_box(sum);
    }
    let declared_end = HEADER_LEN as u64 + u64::from(fields[7]);
    if fields[3] == u32::MAX && (input.len() as u64) < declared_end {
        return (ExitStatus::crash("hdr-overflow"), c);
    }
    (ExitStatus::Ok, c)
}

fn xml_like(input: &[u8]) -> (ExitStatus, CoverageSet) {
    let mut c = CoverageSet::new();
    let mut balanced = true;
    let mut depth = 0usize;
    let mut max_depth = 0usize;
    let mut tag: Option<Vec<u8>> = None;
    for &b in input {
        match (&mut tag, b) {
            (Some(_), b'<') => {
                c.insert_statement("xml.c:1");
                balanced = false;
            }
            (Some(body), b'>') => {
                let body = std::mem::take(body);
                tag = None;
                match body.first() {
                    Some(b'/') => {
                        if depth == 0 {
                            balanced = false;
                        } else {
                            depth -= 1;
                        }
                    }
                    Some(b'?') | Some(b'!') => {}
                    _ if body.last() == Some(&b'/') => max_depth = max_depth.max(depth + 1),
                    _ => {
                        depth += 1;
                        max_depth = max_depth.max(depth);
                    }
                }
            }
            (Some(body), other) => {
                if other == b'=' {
                    c.insert_statement("xml.c:2");
                }
                body.push(other);
            }
            (None, b'<') => {
                c.insert_statement("xml.c:1");
                tag = Some(Vec::new());
            }
            (None, b'>') => balanced = false,
            (None, other) if !other.is_ascii_whitespace() => {
                c.insert_statement("xml.c:3");
            }
            (None, _) => {}
        }
    }
    if tag.is_some() || depth != 0 {
        balanced = false;
    }
    for k in 1..=max_depth.min(MAX_XML_DEPTH) {
        c.insert_statement(format!("xml_depth.c:{k}"));
    }
    let status = if balanced { ExitStatus::Ok } else { ExitStatus::error(1) };
    (status, c)
}

/// Builds a valid header-payload input: magic, 15 header fields (all zero
/// except the given ones), then `payload_len` patterned payload bytes.
pub fn header_payload_input(fields: &[(usize, u32)], payload_len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + payload_len);
    out.extend_from_slice(&HEADER_MAGIC);
    let mut values = [0u32; HEADER_FIELDS];
    for &(i, v) in fields {
        values[i] = v;
    }
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    debug_assert_eq!(out.len(), HEADER_LEN);
    out.extend((0..payload_len).map(|i| (i.wrapping_mul(7).wrapping_add(3) % 251) as u8));
    out
}

/// The synthetic binary seed used for the reduction and campaign
/// experiments: field 3 one byte away from the overflow trigger and field 7
/// declaring a 64 KiB section, which the full-size seed satisfies.
pub fn synthetic_binary_seed(payload_len: usize) -> Vec<u8> {
    header_payload_input(&[(3, 0xFFFF_FF00), (7, 0x0001_0000)], payload_len)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn statements(o: &ExecutionOutcome) -> Vec<&str> {
        o.coverage.statements.iter().map(|s| s.as_str()).collect()
    }

    #[test]
    fn distinct_bytes_one_statement_per_value() {
        let o = SimulatedTarget::DistinctBytes.run(b"aab");
        assert_eq!(o.status, ExitStatus::Ok);
        assert_eq!(statements(&o), vec!["distinct.c:97", "distinct.c:98"]);
    }

    #[test]
    fn constant_coverage_ignores_input() {
        for input in [&b""[..], b"x", b"\x00\x01\x02"] {
            let o = SimulatedTarget::ConstantCoverage.run(input);
            assert_eq!(o.status, ExitStatus::Ok);
            assert_eq!(statements(&o), vec!["constant.c:0"]);
        }
    }

    #[test]
    fn header_payload_seventy_bytes() {
        // hand enumeration: magic ok, 15 fields, 6 payload bytes -> P_loop;
        // field 2 = 5 nonzero -> one branch
        let input = header_payload_input(&[(2, 5)], 6);
        assert_eq!(input.len(), 70);
        let o = SimulatedTarget::HeaderPayload.run(&input);
        assert_eq!(o.status, ExitStatus::Ok);
        let mut expected: Vec<String> = (0..15).map(|i| format!("header.c:{i}")).collect();
        expected.push("magic.c:1".into());
        expected.push("payload.c:1".into());
        expected.sort();
        assert_eq!(statements(&o), expected.iter().map(String::as_str).collect::<Vec<_>>());
        let branches: Vec<&str> = o.coverage.branches.iter().map(|b| b.as_str()).collect();
        assert_eq!(branches, vec!["header.c:2:1"]);
    }

    #[test]
    fn header_payload_bad_magic() {
        let o = SimulatedTarget::HeaderPayload.run(b"\xDE\xAD\xBE");
        assert_eq!(o.status, ExitStatus::error(1));
        assert_eq!(statements(&o), vec!["magic.c:0"]);
        let o = SimulatedTarget::HeaderPayload.run(&[0u8; 100]);
        assert_eq!(o.status, ExitStatus::error(1));
    }

    #[test]
    fn header_payload_truncated_header() {
        // magic + 2 full fields + 3 stray bytes
        let mut input = header_payload_input(&[(1, 9)], 0);
        input.truncate(4 + 8 + 3);
        let o = SimulatedTarget::HeaderPayload.run(&input);
        assert_eq!(o.status, ExitStatus::error(2));
        assert_eq!(statements(&o), vec!["header.c:0", "header.c:1", "magic.c:1"]);
        assert_eq!(o.coverage.branches.len(), 1);
    }

    #[test]
    fn header_payload_overflow_crash() {
        let input = header_payload_input(&[(3, u32::MAX), (7, 100)], 10);
        let o = SimulatedTarget::HeaderPayload.run(&input);
        assert_eq!(o.status, ExitStatus::crash("hdr-overflow"));
        // long enough for the declared section: no crash
        let input = header_payload_input(&[(3, u32::MAX), (7, 100)], 100);
        assert_eq!(SimulatedTarget::HeaderPayload.run(&input).status, ExitStatus::Ok);
        // exactly the header: no payload statement
        let input = header_payload_input(&[(3, u32::MAX), (7, 100)], 0);
        let o = SimulatedTarget::HeaderPayload.run(&input);
        assert!(o.status.is_crash());
        assert!(!statements(&o).contains(&"payload.c:1"));
    }

    #[test]
    fn synthetic_seed_runs_ok_at_full_and_reduced_size() {
        let full = synthetic_binary_seed(131_072);
        assert_eq!(full.len(), 131_136);
        assert_eq!(SimulatedTarget::HeaderPayload.run(&full).status, ExitStatus::Ok);
        assert_eq!(SimulatedTarget::HeaderPayload.run(&full[..1024]).status, ExitStatus::Ok);
        let mut tripped = full[..1024].to_vec();
        tripped[4 + 12] = 0xFF;
        assert!(SimulatedTarget::HeaderPayload.run(&tripped).status.is_crash());
        let mut tripped_full = full.clone();
        tripped_full[4 + 12] = 0xFF;
        assert_eq!(SimulatedTarget::HeaderPayload.run(&tripped_full).status, ExitStatus::Ok);
    }

    #[test]
    fn xml_like_statements() {
        let o = SimulatedTarget::XmlLike.run(b"<a x=\"1\"><b>hi</b></a>");
        assert_eq!(o.status, ExitStatus::Ok);
        assert_eq!(
            statements(&o),
            vec!["xml.c:1", "xml.c:2", "xml.c:3", "xml_depth.c:1", "xml_depth.c:2"]
        );
    }

    #[test]
    fn xml_like_unbalanced() {
        for bad in [&b"<a>"[..], b"<a", b"</a>", b"a>", b"<a<b>>"] {
            assert_eq!(SimulatedTarget::XmlLike.run(bad).status, ExitStatus::error(1), "{bad:?}");
        }
        assert_eq!(SimulatedTarget::XmlLike.run(b"").status, ExitStatus::Ok);
        assert_eq!(SimulatedTarget::XmlLike.run(b"<?xml?><r/>").status, ExitStatus::Ok);
    }

    #[test]
    fn xml_like_depth_capped() {
        let mut doc = String::new();
        for _ in 0..12 {
            doc.push_str("<n>");
        }
        for _ in 0..12 {
            doc.push_str("</n>");
        }
        let o = SimulatedTarget::XmlLike.run(doc.as_bytes());
        assert_eq!(o.status, ExitStatus::Ok);
        assert!(statements(&o).contains(&"xml_depth.c:8"));
        assert!(!statements(&o).contains(&"xml_depth.c:9"));
    }

    #[test]
    fn names_parse() {
        for t in SimulatedTarget::ALL {
            assert_eq!(t.name().parse::<SimulatedTarget>(), Ok(t));
        }
        assert_eq!("HeaderPayload".parse::<SimulatedTarget>(), Ok(SimulatedTarget::HeaderPayload));
        assert!("nope".parse::<SimulatedTarget>().is_err());
    }

    #[test]
    fn modeled_cost_scales_with_length() {
        assert_eq!(SimulatedTarget::modeled_cost(0), Duration::from_micros(50));
        assert_eq!(SimulatedTarget::modeled_cost(1000), Duration::from_micros(150));
    }
}
