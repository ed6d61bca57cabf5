//! Deciding the Lehmer property `phi(n) | n - 1` for composite `n`.
//!
//! Cheap necessary conditions run first: parity, square factors among the
//! primes found by trial division, `p - 1 | n - 1` for every found prime,
//! the 2-adic count `sum nu2(p - 1) <= nu2(n - 1)`, the rule for multiples
//! of three, and a base-2 Fermat test (a Lehmer number satisfies
//! `a^(n-1) = 1 mod n` for every unit `a`). Only then is the cofactor
//! handed to Pollard's rho.

use std::time::Instant;

use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{
    euler_phi, factorize, is_prime_with_rounds, nu2, split_cofactor, totient_sieve, trial_divide,
    Certainty, Factorization, Nat, PrimalityStatus,
};
use crate::config::Effort;
use crate::error::{Error, Result};
use crate::report::{CandidateRecord, SearchReport, SearchSpace};

/// Thresholds taken from the literature rather than derived here.
pub mod constants {
    /// A Lehmer number has at least this many distinct prime factors (Renze).
    pub const MIN_PRIME_FACTORS: usize = 15;

    /// A Lehmer number divisible by 3 has at least this many distinct prime
    /// factors, and exceeds `10^(36 * 10^7)`.
    pub const MIN_PRIME_FACTORS_IF_THREE_DIVIDES: u64 = 40_000_000;

    /// Any `n < 2^63_000_000` is below `3^40_000_000` (as
    /// `63 * 10^6 < 40 * 10^6 * log2(3)`), so it has fewer than
    /// [`MIN_PRIME_FACTORS_IF_THREE_DIVIDES`] distinct prime factors.
    pub const THREE_RULE_MAX_BITS: u64 = 63_000_000;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LehmerStatus {
    Prime,
    Lehmer,
    NotLehmer,
    Unresolved,
}

/// Tag of the condition that rules out the Lehmer property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// n = 1 is neither prime nor composite.
    Unit,
    IsPrime,
    IsEven,
    NotSquarefree,
    DivisibilityFails,
    TooFewPrimeFactors,
    ThreeDividesRule,
}

/// Evidence for a fired condition, re-checkable from the subject alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Unit,
    Primality {
        status: PrimalityStatus,
    },
    /// 2 divides n.
    Even,
    /// `p^2` divides n.
    SquareDivisor {
        #[serde(with = "crate::json::nat")]
        p: Nat,
    },
    /// `phi(n)` from a complete factorization, and `(n-1) mod phi(n)`.
    Totient {
        #[serde(with = "crate::json::nat")]
        phi: Nat,
        #[serde(with = "crate::json::nat")]
        remainder: Nat,
    },
    /// Prime `p | n` with `p - 1` not dividing `n - 1`; `p - 1 | phi(n)`.
    PrimeMinusOne {
        #[serde(with = "crate::json::nat")]
        p: Nat,
    },
    /// Known primes force `2^required | phi(n)` but `nu2(n-1) = available`.
    TwoAdic {
        #[serde(with = "crate::json::vec_nat")]
        primes: Vec<Nat>,
        required: u64,
        available: u64,
    },
    /// `base^(n-1) mod n != 1`.
    Fermat {
        base: u32,
    },
    /// Complete factorization has `count` distinct primes.
    Omega {
        count: usize,
    },
    /// n has `bits` bits, too few for the required number of prime factors.
    BitLength {
        bits: u64,
    },
}

impl Witness {
    /// Re-derive the evidence from `n` only.
    pub fn recheck(&self, n: &Nat, condition: Condition) -> bool {
        let n1 = || n - 1u32;
        match (condition, self) {
            (Condition::Unit, Witness::Unit) => n.is_one(),
            (Condition::IsPrime, Witness::Primality { .. }) => is_prime_with_rounds(n, 16).passes(),
            (Condition::IsEven, Witness::Even) => n.is_even(),
            (Condition::NotSquarefree, Witness::SquareDivisor { p }) => {
                *p > Nat::one() && (n % (p * p)).is_zero()
            }
            (Condition::DivisibilityFails, Witness::Totient { phi, remainder }) => {
                let f = factorize(n, &Effort::default());
                f.complete
                    && euler_phi(&f).ok().as_ref() == Some(phi)
                    && !remainder.is_zero()
                    && (n1() % phi) == *remainder
            }
            (Condition::DivisibilityFails, Witness::PrimeMinusOne { p }) => {
                *p > Nat::one()
                    && (n % p).is_zero()
                    && is_prime_with_rounds(p, 16).passes()
                    && !(n1() % (p - 1u32)).is_zero()
            }
            (
                Condition::DivisibilityFails,
                Witness::TwoAdic {
                    primes,
                    required,
                    available,
                },
            ) => {
                let distinct = primes.windows(2).all(|w| w[0] < w[1]);
                let all_divide = primes.iter().all(|p| {
                    p.is_odd() && (n % p).is_zero() && is_prime_with_rounds(p, 16).passes()
                });
                let sum: u64 = primes.iter().map(|p| nu2(&(p - 1u32)).unwrap_or(0)).sum();
                distinct
                    && all_divide
                    && sum == *required
                    && nu2(&n1()).ok() == Some(*available)
                    && required > available
            }
            (Condition::DivisibilityFails, Witness::Fermat { base }) => {
                n > &Nat::from(*base) && !Nat::from(*base).modpow(&n1(), n).is_one()
            }
            (Condition::TooFewPrimeFactors, Witness::Omega { count }) => {
                let f = factorize(n, &Effort::default());
                f.omega() == Some(*count) && *count < constants::MIN_PRIME_FACTORS
            }
            (Condition::ThreeDividesRule, Witness::Omega { count }) => {
                let f = factorize(n, &Effort::default());
                (n % 3u32).is_zero()
                    && f.omega() == Some(*count)
                    && (*count as u64) < constants::MIN_PRIME_FACTORS_IF_THREE_DIVIDES
            }
            (Condition::ThreeDividesRule, Witness::BitLength { bits }) => {
                (n % 3u32).is_zero() && n.bits() == *bits && *bits <= constants::THREE_RULE_MAX_BITS
            }
            _ => false,
        }
    }
}

/// Outcome of [`check_lehmer`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LehmerVerdict {
    #[serde(with = "crate::json::nat")]
    pub subject: Nat,
    pub status: LehmerStatus,
    pub failed_condition: Option<Condition>,
    pub witness: Option<Witness>,
    #[serde(with = "crate::json::opt_nat")]
    pub phi: Option<Nat>,
    pub omega: Option<usize>,
    /// Set when a prime verdict or a factor relies on a probabilistic test.
    pub probable: bool,
    /// Partial factorization, kept on unresolved verdicts for retrying with
    /// more effort.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub factorization: Option<Factorization>,
}

impl LehmerVerdict {
    fn new(subject: &Nat, status: LehmerStatus) -> Self {
        LehmerVerdict {
            subject: subject.clone(),
            status,
            failed_condition: None,
            witness: None,
            phi: None,
            omega: None,
            probable: false,
            factorization: None,
        }
    }

    fn fails(subject: &Nat, condition: Condition, witness: Witness) -> Self {
        LehmerVerdict {
            failed_condition: Some(condition),
            witness: Some(witness),
            ..Self::new(subject, LehmerStatus::NotLehmer)
        }
    }

    fn prime(subject: &Nat, certainty: Certainty) -> Self {
        LehmerVerdict {
            probable: certainty == Certainty::Probable,
            ..Self::new(subject, LehmerStatus::Prime)
        }
    }

    pub fn is_decided(&self) -> bool {
        self.status != LehmerStatus::Unresolved
    }
}

/// Decide whether `n` has the Lehmer property.
///
/// `Unresolved` is returned only when the necessary conditions all pass and
/// the factorization could not be completed within `effort`.
pub fn check_lehmer(n: &Nat, effort: &Effort) -> Result<LehmerVerdict> {
    if n.is_zero() {
        return Err(Error::domain("check_lehmer needs n >= 1"));
    }
    if n.is_one() {
        return Ok(LehmerVerdict::fails(n, Condition::Unit, Witness::Unit));
    }
    if n.is_even() {
        if *n == Nat::from(2u32) {
            return Ok(LehmerVerdict::prime(n, Certainty::Proven));
        }
        return Ok(LehmerVerdict::fails(n, Condition::IsEven, Witness::Even));
    }
    let n1 = n - 1u32;
    let td = trial_divide(n, effort.trial_limit);
    let mut found: Vec<(Nat, Certainty)> = td
        .primes
        .into_iter()
        .map(|p| (p, Certainty::Proven))
        .collect();
    if td.cofactor.is_one() || td.cofactor_prime {
        if td.cofactor_prime {
            if found.is_empty() {
                return Ok(LehmerVerdict::prime(n, Certainty::Proven));
            }
            found.push((td.cofactor, Certainty::Proven));
        }
        return Ok(decide_complete(n, &n1, found));
    }
    if let Some(v) = partial_rules(n, &n1, &found) {
        return Ok(v);
    }
    if (n % 3u32).is_zero() && n.bits() <= constants::THREE_RULE_MAX_BITS {
        return Ok(LehmerVerdict::fails(
            n,
            Condition::ThreeDividesRule,
            Witness::BitLength { bits: n.bits() },
        ));
    }
    if !Nat::from(2u32).modpow(&n1, n).is_one() {
        return Ok(LehmerVerdict::fails(
            n,
            Condition::DivisibilityFails,
            Witness::Fermat { base: 2 },
        ));
    }
    let mut budget = effort.rho_iterations;
    let split = split_cofactor(&td.cofactor, effort, &mut budget);
    if found.is_empty() && split.remaining.is_empty() && split.primes.len() == 1 {
        return Ok(LehmerVerdict::prime(n, split.primes[0].1));
    }
    found.extend(split.primes);
    if split.remaining.is_empty() {
        return Ok(decide_complete(n, &n1, found));
    }
    if let Some(v) = partial_rules(n, &n1, &found) {
        return Ok(v);
    }
    let cofactor = split.remaining.iter().fold(Nat::one(), |acc, r| acc * r);
    let f = Factorization::assemble(n.clone(), found, cofactor);
    Ok(LehmerVerdict {
        probable: f.certainty == Certainty::Probable,
        factorization: Some(f),
        ..LehmerVerdict::new(n, LehmerStatus::Unresolved)
    })
}

fn decide_complete(n: &Nat, n1: &Nat, primes: Vec<(Nat, Certainty)>) -> LehmerVerdict {
    let f = Factorization::assemble(n.clone(), primes, Nat::one());
    let probable = f.certainty == Certainty::Probable;
    if let Some(pp) = f.factors.iter().find(|pp| pp.exponent >= 2) {
        return LehmerVerdict {
            probable,
            ..LehmerVerdict::fails(
                n,
                Condition::NotSquarefree,
                Witness::SquareDivisor {
                    p: pp.prime.clone(),
                },
            )
        };
    }
    let phi = euler_phi(&f).expect("factorization is complete");
    let remainder = n1 % &phi;
    let omega = Some(f.factors.len());
    if remainder.is_zero() {
        return LehmerVerdict {
            phi: Some(phi),
            omega,
            probable,
            ..LehmerVerdict::new(n, LehmerStatus::Lehmer)
        };
    }
    LehmerVerdict {
        phi: Some(phi.clone()),
        omega,
        probable,
        ..LehmerVerdict::fails(
            n,
            Condition::DivisibilityFails,
            Witness::Totient { phi, remainder },
        )
    }
}

/// Necessary conditions that only need some of the prime factors.
fn partial_rules(n: &Nat, n1: &Nat, found: &[(Nat, Certainty)]) -> Option<LehmerVerdict> {
    let mut primes: Vec<&Nat> = found.iter().map(|(p, _)| p).collect();
    primes.sort();
    if let Some(w) = primes.windows(2).find(|w| w[0] == w[1]) {
        return Some(LehmerVerdict::fails(
            n,
            Condition::NotSquarefree,
            Witness::SquareDivisor { p: w[0].clone() },
        ));
    }
    if let Some(p) = primes.iter().find(|p| !(n1 % (**p - 1u32)).is_zero()) {
        return Some(LehmerVerdict::fails(
            n,
            Condition::DivisibilityFails,
            Witness::PrimeMinusOne { p: (*p).clone() },
        ));
    }
    let required: u64 = primes.iter().map(|p| nu2(&(*p - 1u32)).unwrap_or(0)).sum();
    let available = nu2(n1).unwrap_or(0);
    if required > available {
        return Some(LehmerVerdict::fails(
            n,
            Condition::DivisibilityFails,
            Witness::TwoAdic {
                primes: primes.into_iter().cloned().collect(),
                required,
                available,
            },
        ));
    }
    None
}

/// One fired necessary condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiredRule {
    pub rule: Condition,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefilterReport {
    #[serde(with = "crate::json::nat")]
    pub subject: Nat,
    pub rules_fired: Vec<FiredRule>,
}

impl PrefilterReport {
    pub fn fired(&self, rule: Condition) -> bool {
        self.rules_fired.iter().any(|r| r.rule == rule)
    }

    /// Every fired rule re-checks from the subject alone.
    pub fn recheck(&self) -> bool {
        self.rules_fired
            .iter()
            .all(|r| r.witness.recheck(&self.subject, r.rule))
    }
}

/// All the literature's necessary conditions that rule `n` out, each with
/// its witness. Uses the default factoring effort.
pub fn prefilter(n: &Nat) -> Result<PrefilterReport> {
    prefilter_with(n, &Effort::default())
}

pub fn prefilter_with(n: &Nat, effort: &Effort) -> Result<PrefilterReport> {
    if *n < Nat::from(2u32) {
        return Err(Error::domain("prefilter needs n >= 2"));
    }
    let mut rules = Vec::new();
    let primality = is_prime_with_rounds(n, effort.primality_rounds);
    if primality.passes() {
        rules.push(FiredRule {
            rule: Condition::IsPrime,
            witness: Witness::Primality {
                status: primality.status,
            },
        });
    }
    if n.is_even() {
        rules.push(FiredRule {
            rule: Condition::IsEven,
            witness: Witness::Even,
        });
    }
    let f = factorize(n, effort);
    if let Some(pp) = f.factors.iter().find(|pp| pp.exponent >= 2) {
        rules.push(FiredRule {
            rule: Condition::NotSquarefree,
            witness: Witness::SquareDivisor {
                p: pp.prime.clone(),
            },
        });
    }
    if let Some(count) = f.omega() {
        if count < constants::MIN_PRIME_FACTORS {
            rules.push(FiredRule {
                rule: Condition::TooFewPrimeFactors,
                witness: Witness::Omega { count },
            });
        }
    }
    if (n % 3u32).is_zero() {
        let witness = match f.omega() {
            Some(count) if (count as u64) < constants::MIN_PRIME_FACTORS_IF_THREE_DIVIDES => {
                Some(Witness::Omega { count })
            }
            _ if n.bits() <= constants::THREE_RULE_MAX_BITS => {
                Some(Witness::BitLength { bits: n.bits() })
            }
            _ => None,
        };
        if let Some(witness) = witness {
            rules.push(FiredRule {
                rule: Condition::ThreeDividesRule,
                witness,
            });
        }
    }
    Ok(PrefilterReport {
        subject: n.clone(),
        rules_fired: rules,
    })
}

pub(crate) fn run_in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Resource {
            what: "worker pool",
            requested: format!("{workers} threads"),
            cap: e.to_string(),
        })?;
    Ok(pool.install(f))
}

/// All composite `n <= limit` with `phi(n) | n - 1`, from the totient sieve.
///
/// `[2, limit]` is cut into contiguous chunks scanned in parallel; the
/// merged candidate list is sorted, so the result is independent of the
/// worker count.
pub fn exhaustive_search(limit: u64, workers: usize) -> Result<SearchReport> {
    let started = Instant::now();
    let table = totient_sieve(limit)?;
    let chunk = (limit / (workers.max(1) as u64 * 8)).max(4096);
    let ranges: Vec<(u64, u64)> = (2..=limit.max(1))
        .step_by(chunk as usize)
        .map(|lo| (lo, (lo + chunk - 1).min(limit)))
        .filter(|(lo, hi)| lo <= hi)
        .collect();
    let results: Vec<(u64, Vec<u64>)> = run_in_pool(workers, || {
        ranges
            .par_iter()
            .map(|&(lo, hi)| {
                let mut composites = 0u64;
                let mut hits = Vec::new();
                for n in lo..=hi {
                    let phi = u64::from(table[n as usize]);
                    if phi == n - 1 {
                        continue;
                    }
                    composites += 1;
                    if (n - 1) % phi == 0 {
                        hits.push(n);
                    }
                }
                (composites, hits)
            })
            .collect()
    })?;
    let mut report = SearchReport::new(SearchSpace::Exhaustive { limit });
    let mut hits: Vec<u64> = Vec::new();
    for (composites, h) in results {
        report.counters.scanned += composites;
        hits.extend(h);
    }
    hits.sort_unstable();
    report.counters.units = ranges.len() as u64;
    for n in hits {
        report.counters.lehmer_found += 1;
        report.candidates.push(CandidateRecord {
            g: None,
            n: Nat::from(n),
            status: LehmerStatus::Lehmer,
            failed_condition: None,
            witness: None,
        });
    }
    report.complete = true;
    report.finish(started);
    Ok(report)
}

/// Composite check against a precomputed totient table.
pub fn sieve_says_lehmer(table: &[u32], n: u64) -> Option<bool> {
    let phi = u64::from(*table.get(n as usize)?);
    (n >= 2 && phi != n - 1).then(|| (n - 1).is_multiple_of(phi))
}

/// Convenience for callers holding machine integers.
pub fn check_lehmer_u64(n: u64, effort: &Effort) -> Result<LehmerVerdict> {
    check_lehmer(&Nat::from(n), effort)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Pow;

    fn nat(x: u64) -> Nat {
        Nat::from(x)
    }

    fn check(n: u64) -> LehmerVerdict {
        check_lehmer(&nat(n), &Effort::default()).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(check(7).status, LehmerStatus::Prime);
        let v = check(561);
        assert_eq!(v.status, LehmerStatus::NotLehmer);
        assert_eq!(v.failed_condition, Some(Condition::DivisibilityFails));
        assert_eq!(v.phi, Some(nat(320)));
        assert_eq!(
            v.witness,
            Some(Witness::Totient {
                phi: nat(320),
                remainder: nat(240)
            })
        );
        let v = check(15);
        assert_eq!(v.status, LehmerStatus::NotLehmer);
        assert_eq!(v.phi, Some(nat(8)));
        assert_eq!(v.omega, Some(2));
    }

    #[test]
    fn small_special_cases() {
        assert_eq!(check(1).failed_condition, Some(Condition::Unit));
        assert_eq!(check(2).status, LehmerStatus::Prime);
        assert_eq!(check(12).failed_condition, Some(Condition::IsEven));
        assert_eq!(check(45).failed_condition, Some(Condition::NotSquarefree));
        assert!(check_lehmer(&nat(0), &Effort::default()).is_err());
    }

    #[test]
    fn prefilter_examples() {
        let r = prefilter(&nat(12)).unwrap();
        assert!(r.fired(Condition::IsEven) && r.fired(Condition::NotSquarefree));
        let r = prefilter(&nat(45)).unwrap();
        assert!(r.fired(Condition::NotSquarefree));
        assert!(!r.fired(Condition::IsEven));
        let r = prefilter(&nat(3 * 5 * 7 * 11 * 13)).unwrap();
        assert!(r.rules_fired.contains(&FiredRule {
            rule: Condition::TooFewPrimeFactors,
            witness: Witness::Omega { count: 5 }
        }));
        assert!(r.recheck());
        assert!(prefilter(&nat(1)).is_err());
        assert!(prefilter(&nat(13)).unwrap().fired(Condition::IsPrime));
    }

    #[test]
    fn large_subjects_use_partial_rules() {
        let effort = Effort {
            trial_limit: 1000,
            rho_iterations: 10,
            primality_rounds: 4,
        };
        // 5 * M61 * M89: 5 - 1 = 4 must divide n - 1
        let m61 = Pow::pow(&nat(2), 61u32) - 1u32;
        let m89 = Pow::pow(&nat(2), 89u32) - 1u32;
        let n = nat(5) * &m61 * &m89;
        let v = check_lehmer(&n, &effort).unwrap();
        assert_eq!(v.status, LehmerStatus::NotLehmer);
        assert!(v.witness.unwrap().recheck(&n, v.failed_condition.unwrap()));

        // no small factor: Fermat base 2 settles it
        let n = &m61 * &m89;
        let v = check_lehmer(&n, &effort).unwrap();
        assert_eq!(v.status, LehmerStatus::NotLehmer);
        assert_eq!(v.witness, Some(Witness::Fermat { base: 2 }));
    }

    #[test]
    fn probable_prime_subject() {
        let m127 = Pow::pow(&nat(2), 127u32) - 1u32;
        let v = check_lehmer(&m127, &Effort::default()).unwrap();
        assert_eq!(v.status, LehmerStatus::Prime);
        assert!(v.probable);
    }

    #[test]
    fn unresolved_carries_partial_factorization() {
        // Chernick form (6k+1)(12k+1)(18k+1): each p - 1 divides n - 1 and
        // 2^(n-1) = 1 mod n, so only factoring can settle it.
        let mut found = None;
        for k in (200_000u64..).step_by(1).take(200_000) {
            let (a, b, c) = (6 * k + 1, 12 * k + 1, 18 * k + 1);
            if crate::arith::is_prime_u64(a)
                && crate::arith::is_prime_u64(b)
                && crate::arith::is_prime_u64(c)
            {
                found = Some((a, b, c));
                break;
            }
        }
        let (a, b, c) = found.expect("Chernick triple");
        let n = nat(a) * nat(b) * nat(c);
        let effort = Effort {
            trial_limit: 1000,
            rho_iterations: 1,
            primality_rounds: 4,
        };
        let v = check_lehmer(&n, &effort).unwrap();
        assert_eq!(v.status, LehmerStatus::Unresolved);
        let f = v.factorization.unwrap();
        assert!(!f.complete);
        assert_eq!(f.cofactor, n);
        // with a real budget it resolves
        let v = check_lehmer(&n, &Effort::default()).unwrap();
        assert_eq!(v.status, LehmerStatus::NotLehmer);
        assert_eq!(v.omega, Some(3));
    }

    #[test]
    fn verdict_json_uses_decimal_strings() {
        let v = check(561);
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["subject"], "561");
        assert_eq!(json["status"], "not_lehmer");
        assert_eq!(json["failed_condition"], "divisibility_fails");
        assert_eq!(json["phi"], "320");
    }

    #[test]
    fn exhaustive_small_limits() {
        for limit in [2u64, 10, 10_000] {
            let r = exhaustive_search(limit, 2).unwrap();
            assert!(r.candidates.is_empty());
        }
        let r = exhaustive_search(10, 1).unwrap();
        // composites 4, 6, 8, 9, 10
        assert_eq!(r.counters.scanned, 5);
    }
}
