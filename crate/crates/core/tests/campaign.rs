use std::time::Duration;

use seedtrim::byteviz::{parse_dump, DumpWriter, FlushPolicy};
use seedtrim::fuzzer::{replay, run_campaign, run_campaign_with, CampaignConfig};
use seedtrim::oracle::sim::synthetic_binary_seed;
use seedtrim::{ClockMode, Seed, SimulatedTarget};

fn config(rng_seed: u64, secs: u64) -> CampaignConfig {
    CampaignConfig { duration: Duration::from_secs(secs), rng_seed, clock: ClockMode::Virtual, ..Default::default() }
}

#[test]
fn same_rng_seed_same_campaign() {
    let seed = Seed::bytes(b"<a x=\"1\">t</a>".to_vec());
    let a = run_campaign(&SimulatedTarget::XmlLike, &seed, &config(3, 2)).unwrap();
    let b = run_campaign(&SimulatedTarget::XmlLike, &seed, &config(3, 2)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.paths_csv(), b.paths_csv());
    let c = run_campaign(&SimulatedTarget::XmlLike, &seed, &config(4, 2)).unwrap();
    assert_ne!(a.path_events, c.path_events);
}

#[test]
fn dump_replays_to_the_same_statistics() {
    let seed = Seed::bytes(synthetic_binary_seed(1024)[..1088].to_vec());
    let mut dump = DumpWriter::new(Vec::new(), FlushPolicy::EveryN(1000));
    let run = run_campaign_with(&SimulatedTarget::HeaderPayload, &seed, &config(9, 3), &mut |input| {
        dump.append_dump(input).map(|_| ()).map_err(|e| std::io::Error::other(e.to_string()))
    })
    .unwrap();
    let text = String::from_utf8(dump.finish().unwrap()).unwrap();
    let inputs = parse_dump(&text).unwrap();
    assert_eq!(inputs.len() as u64, run.stats.executions);
    assert_eq!(inputs[0], seed.as_bytes());

    let replayed = replay(&SimulatedTarget::HeaderPayload, &inputs, ClockMode::Virtual).unwrap();
    assert_eq!(replayed.path_events, run.stats.path_events);
    assert_eq!(replayed.crashes, run.stats.crashes);
    assert_eq!(replayed.cumulative, run.stats.cumulative);
}

#[test]
fn small_seed_outpaces_large_seed() {
    let big = Seed::bytes(synthetic_binary_seed(131_072));
    let small = Seed::bytes(big.as_bytes()[..1024].to_vec());
    let target = SimulatedTarget::HeaderPayload;
    let a = run_campaign(&target, &big, &config(1, 20)).unwrap();
    let b = run_campaign(&target, &small, &config(1, 20)).unwrap();
    assert!(b.executions > 10 * a.executions);
    assert!(b.total_paths() >= a.total_paths());
}

#[test]
fn execution_cap_stops_campaign() {
    let seed = Seed::bytes(b"abc".to_vec());
    let cfg = CampaignConfig { max_executions: Some(25), ..config(0, 3600) };
    let stats = run_campaign(&SimulatedTarget::DistinctBytes, &seed, &cfg).unwrap();
    assert_eq!(stats.executions, 25);
}
