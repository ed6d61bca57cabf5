use lehmer_core::arith::{is_prime_u64, totient_sieve, Nat};
use lehmer_core::lehmer::{
    check_lehmer, check_lehmer_u64, exhaustive_search, prefilter, sieve_says_lehmer, Condition,
    LehmerStatus,
};
use lehmer_core::Effort;
use rayon::prelude::*;

#[test]
fn prefilter_rules_are_sound_to_1e5() {
    let effort = Effort::default();
    (2..=100_000u64).into_par_iter().for_each(|n| {
        let report = prefilter(&Nat::from(n)).unwrap();
        assert!(report.recheck(), "{n}");
        if !report.rules_fired.is_empty() {
            let v = check_lehmer_u64(n, &effort).unwrap();
            assert_ne!(v.status, LehmerStatus::Lehmer, "{n}");
        }
    });
}

#[test]
fn check_agrees_with_sieve_to_1e6() {
    let limit = 1_000_000u64;
    let table = totient_sieve(limit).unwrap();
    let effort = Effort::default();
    let bad: Vec<u64> = (2..=limit)
        .into_par_iter()
        .filter(|&n| {
            let v = check_lehmer_u64(n, &effort).unwrap();
            match sieve_says_lehmer(&table, n) {
                None => v.status != LehmerStatus::Prime,
                Some(lehmer) => {
                    (v.status == LehmerStatus::Lehmer) != lehmer
                        || v.status == LehmerStatus::Unresolved
                }
            }
        })
        .collect();
    assert!(
        bad.is_empty(),
        "disagreements at {:?}",
        &bad[..bad.len().min(10)]
    );
}

#[test]
fn primes_are_never_lehmer() {
    for p in (2..20_000u64).filter(|&p| is_prime_u64(p)) {
        let v = check_lehmer_u64(p, &Effort::default()).unwrap();
        assert_eq!(v.status, LehmerStatus::Prime);
        assert_eq!(v.failed_condition, None);
    }
}

#[test]
fn prefilter_examples() {
    let r = prefilter(&Nat::from(12u32)).unwrap();
    assert!(r.fired(Condition::IsEven));
    assert!(prefilter(&Nat::from(45u32))
        .unwrap()
        .fired(Condition::NotSquarefree));
    let r = prefilter(&Nat::from(3u64 * 5 * 7 * 11 * 13)).unwrap();
    assert!(r.fired(Condition::TooFewPrimeFactors));
    assert!(r.fired(Condition::ThreeDividesRule));
}

#[test]
fn fifteen_is_not_lehmer() {
    let v = check_lehmer(&Nat::from(15u32), &Effort::default()).unwrap();
    assert_eq!(v.status, LehmerStatus::NotLehmer);
    assert_eq!(v.phi, Some(Nat::from(8u32)));
}

#[test]
fn small_exhaustive_searches_are_empty() {
    for limit in [2, 10, 10_000] {
        let r = exhaustive_search(limit, 2).unwrap();
        assert!(r.candidates.is_empty(), "{limit}");
        assert!(r.complete);
    }
}
