use lehmer_core::arith::{nu2, repunit, Nat};
use lehmer_core::lehmer::LehmerStatus;
use lehmer_core::repunit::{is_enumerated, nu2_quotient_verified, Level};
use lehmer_core::{search_a, search_b, search_union, SearchConfig, SearchReport};
use proptest::prelude::*;

fn level(s: &str) -> Level {
    s.parse().unwrap()
}

fn config(budget: u64, n_max: u64, span: usize) -> SearchConfig {
    SearchConfig {
        max_evaluations: budget,
        n_max,
        unit_span: span,
        ..SearchConfig::default()
    }
}

/// Every pair in the space is covered exactly once, nothing outside it is.
fn assert_tiles(report: &SearchReport, gs: impl IntoIterator<Item = u64>, ns: &[u64]) {
    assert!(report.recheck_certificates(), "certificate fails recheck");
    for g in gs {
        let g = Nat::from(g);
        for &n in ns {
            let want = usize::from(report.space.contains(&g, n));
            assert_eq!(report.coverage(&g, n), want, "g={g} n={n}");
        }
    }
}

#[test]
fn even_l14_tiles() {
    let r = search_a(&level("14"), &config(100, 10, 8)).unwrap();
    assert!(r.complete);
    let ns: Vec<u64> = (1..=12).collect();
    let gs = (2..3000)
        .chain((1..6).map(|k| k << 14))
        .chain((1..4).map(|k| k << 15));
    assert_tiles(&r, gs, &ns);
}

#[test]
fn even_l15_partial_tiles() {
    let r = search_a(&level("15"), &config(30, 10, 8)).unwrap();
    assert!(!r.complete);
    assert_eq!(r.counters.evaluations, 30);
    assert!(r
        .candidates
        .iter()
        .all(|c| c.status != LehmerStatus::Lehmer));
    let ns: Vec<u64> = (1..=60).collect();
    let gs = (2..200)
        .chain((1..5).map(|k| k << 15))
        .chain([1 << 16, 3 << 16]);
    assert_tiles(&r, gs, &ns);
}

#[test]
fn odd_l2_tiles_and_is_empty() {
    let r = search_b(&level("2"), &config(10, 10_000, 8)).unwrap();
    assert!(r.complete && r.candidates.is_empty());
    assert_eq!(r.conditional_on_n_max, Some(10_000));
    let ns: Vec<u64> = (1..=10_002).step_by(7).chain([10_000, 10_001]).collect();
    assert_tiles(&r, 2..40, &ns);
}

#[test]
fn odd_l5_tiles_with_budget() {
    let r = search_b(&level("5"), &config(4, 5000, 2)).unwrap();
    assert!(!r.complete);
    let ns: Vec<u64> = (1..=5001).collect();
    let gs = (3..130u64).step_by(2).chain([65_535, 65_537]);
    assert_tiles(&r, gs, &ns);
}

#[test]
fn union_l14_tiles() {
    let r = search_union(&level("14"), &config(6, 40, 2)).unwrap();
    let ns: Vec<u64> = (1..=42).collect();
    let gs = (2..64).chain([4095, 8191, 12287, 16383, 16384, 20479, 24575, 1 << 15]);
    assert_tiles(&r, gs, &ns);
}

#[test]
fn fractional_level_tiles() {
    let r = search_b(&level("13/2"), &config(3, 3000, 2)).unwrap();
    assert!(r.notes.iter().any(|n| n.contains("not an integer")));
    let ns: Vec<u64> = (1..=3001).collect();
    assert_tiles(&r, (3..100).step_by(2).chain([127, 255, 1023]), &ns);
}

#[test]
fn odd_base_even_length_is_odd_minus_one() {
    for g in (3..=99u64).step_by(2) {
        for n in (2..=40u64).step_by(2) {
            let r = repunit(&Nat::from(g), n).unwrap() - 1u32;
            assert!(r.bit(0), "g={g} n={n}");
        }
    }
}

#[test]
fn worker_count_does_not_change_reports() {
    let one = search_union(&level("14"), &config(8, 40, 2)).unwrap();
    let four = search_union(
        &level("14"),
        &SearchConfig {
            workers: 4,
            ..config(8, 40, 2)
        },
    )
    .unwrap();
    let strip = |r: &SearchReport| {
        let mut v = serde_json::to_value(r).unwrap();
        v.as_object_mut().unwrap().remove("timing");
        v
    };
    assert_eq!(strip(&one), strip(&four));
}

#[test]
fn checkpoint_resume_replays_units() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("odd.jsonl");
    let with = |budget| SearchConfig {
        checkpoint: Some(path.clone()),
        ..config(budget, 40, 2)
    };
    let first = search_b(&level("14"), &with(6)).unwrap();
    assert_eq!(first.checkpoints.emitted, first.counters.units);
    assert_eq!(first.checkpoints.consumed, 0);

    let second = search_b(&level("14"), &with(12)).unwrap();
    assert_eq!(second.checkpoints.consumed, first.counters.units);
    assert_eq!(
        second.candidates[..first.candidates.len()],
        first.candidates[..]
    );
    assert!(second.candidates.len() > first.candidates.len());

    // Budget counts fresh work only, so a rerun picks up where the last stopped.
    let third = search_b(&level("14"), &with(12)).unwrap();
    assert_eq!(third.checkpoints.consumed, second.counters.units);
    assert_eq!(
        third.candidates[..second.candidates.len()],
        second.candidates[..]
    );
    assert!(third.counters.evaluations <= 12);

    let lines = std::fs::read_to_string(&path).unwrap();
    let first_line: serde_json::Value =
        serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    for key in ["unit_id", "g_lo", "g_hi", "n_lo", "n_hi", "status"] {
        assert!(first_line.get(key).is_some(), "{key}");
    }
    assert!(first_line["g_lo"].is_string());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn even_base_repunit_minus_one_keeps_valuation(half in 1u64..500_000, n in 2u64..60) {
        let g = Nat::from(2 * half);
        let r = repunit(&g, n).unwrap() - 1u32;
        prop_assert_eq!(nu2(&r).unwrap(), nu2(&g).unwrap());
    }

    #[test]
    fn quotient_paths_agree(half in 1u64..5000, s in 1u32..=10, m in 0u64..=5) {
        let g = Nat::from(2 * half + 1);
        let n = 1 + (1u64 << s) * (2 * m + 1);
        let q = nu2_quotient_verified(&g, n, 1 << 22).unwrap();
        prop_assert!(!q.fell_back);
        prop_assert!(q.agrees());
    }

    #[test]
    fn enumeration_grows_with_level(
        pick in 0usize..4,
        g in prop_oneof![2u64..70_000, (1u64..8).prop_map(|k| (k << 12) - 1), (1u64..8).prop_map(|k| k << 15)],
        n in 1u64..80,
    ) {
        let pairs = [("2", "3"), ("14", "15"), ("15", "31/2"), ("31/2", "16")];
        let (lo, hi) = pairs[pick];
        let g = Nat::from(g);
        if is_enumerated(&g, n, &level(lo), 60) {
            prop_assert!(is_enumerated(&g, n, &level(hi), 60));
        }
    }
}
