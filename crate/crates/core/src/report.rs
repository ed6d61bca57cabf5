//! Machine-readable search reports.

use std::collections::BTreeMap;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::arith::{nu2, Nat};
use crate::lehmer::{Condition, LehmerStatus, Witness};
use crate::repunit::{Certificate, CertificateKind, Family, Level, Region};

/// The set of pairs `(g, n)` (or integers `n`) a search claims to cover.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SearchSpace {
    /// Every integer in `[1, limit]`.
    Exhaustive {
        #[serde(with = "crate::json::u64_str")]
        limit: u64,
    },
    /// Even `g` with `1 <= nu2(g) <= floor(L)`, any `n >= 1`.
    Even { level: Level },
    /// Odd `g >= 3` with `1 <= nu2(g + 1) <= floor(L)`, `1 <= n <= n_max`.
    Odd {
        level: Level,
        #[serde(with = "crate::json::u64_str")]
        n_max: u64,
    },
    /// Both of the above.
    Union {
        level: Level,
        #[serde(with = "crate::json::u64_str")]
        n_max: u64,
    },
}

impl SearchSpace {
    pub fn level(&self) -> Option<&Level> {
        match self {
            SearchSpace::Exhaustive { .. } => None,
            SearchSpace::Even { level }
            | SearchSpace::Odd { level, .. }
            | SearchSpace::Union { level, .. } => Some(level),
        }
    }

    pub fn contains(&self, g: &Nat, n: u64) -> bool {
        let in_even = |level: &Level| {
            n >= 1
                && g.bits() > 1
                && !g.bit(0)
                && nu2(g).is_ok_and(|v| v <= u64::from(level.floor()))
        };
        let in_odd = |level: &Level, n_max: u64| {
            (1..=n_max).contains(&n)
                && g.bit(0)
                && *g >= Nat::from(3u32)
                && nu2(&(g + 1u32)).is_ok_and(|v| v <= u64::from(level.floor()))
        };
        match self {
            SearchSpace::Exhaustive { .. } => false,
            SearchSpace::Even { level } => in_even(level),
            SearchSpace::Odd { level, n_max } => in_odd(level, *n_max),
            SearchSpace::Union { level, n_max } => in_even(level) || in_odd(level, *n_max),
        }
    }

    /// Largest `n` of odd bases, when the space has them.
    pub fn n_max(&self) -> Option<u64> {
        match self {
            SearchSpace::Odd { n_max, .. } | SearchSpace::Union { n_max, .. } => Some(*n_max),
            _ => None,
        }
    }
}

/// One integer (or repunit) that reached the Lehmer check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRecord {
    #[serde(
        with = "crate::json::opt_nat",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub g: Option<Nat>,
    #[serde(with = "crate::json::nat")]
    pub n: Nat,
    pub status: LehmerStatus,
    pub failed_condition: Option<Condition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl CandidateRecord {
    /// The repunit pair, for records of repunit searches.
    pub fn pair(&self) -> Option<(&Nat, u64)> {
        let n = u64::try_from(&self.n).ok()?;
        self.g.as_ref().map(|g| (g, n))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointStats {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// Units whose results were taken from the checkpoint.
    pub consumed: u64,
    /// Units written to the checkpoint by this run.
    pub emitted: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub units: u64,
    /// Repunits constructed and checked in this run.
    pub evaluations: u64,
    /// Integers or pairs looked at, including those restored from a checkpoint.
    pub scanned: u64,
    pub certificates: BTreeMap<CertificateKind, u64>,
    pub conditions: BTreeMap<Condition, u64>,
    pub primes: u64,
    pub lehmer_found: u64,
    pub unresolved: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_ms: u64,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchReport {
    pub space: SearchSpace,
    /// Set when certificates and candidates cover the whole space.
    pub complete: bool,
    /// Odd-base results only speak for lengths up to this value.
    #[serde(
        with = "crate::json::opt_u64_str",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub conditional_on_n_max: Option<u64>,
    pub certificates: Vec<Certificate>,
    pub candidates: Vec<CandidateRecord>,
    /// Parts of the space left unexamined when the budget ran out.
    pub frontier: Vec<Region>,
    pub checkpoints: CheckpointStats,
    pub counters: Counters,
    pub notes: Vec<String>,
    pub timing: Timing,
}

impl SearchReport {
    pub fn new(space: SearchSpace) -> Self {
        SearchReport {
            conditional_on_n_max: space.n_max(),
            space,
            complete: false,
            certificates: Vec::new(),
            candidates: Vec::new(),
            frontier: Vec::new(),
            checkpoints: CheckpointStats::default(),
            counters: Counters::default(),
            notes: Vec::new(),
            timing: Timing::default(),
        }
    }

    pub(crate) fn certify(&mut self, certificate: Certificate) {
        *self
            .counters
            .certificates
            .entry(certificate.kind)
            .or_default() += 1;
        self.certificates.push(certificate);
    }

    pub(crate) fn record(&mut self, candidate: CandidateRecord) {
        match candidate.status {
            LehmerStatus::Prime => self.counters.primes += 1,
            LehmerStatus::Lehmer => self.counters.lehmer_found += 1,
            LehmerStatus::Unresolved => self.counters.unresolved += 1,
            LehmerStatus::NotLehmer => {}
        }
        if let Some(c) = candidate.failed_condition {
            *self.counters.conditions.entry(c).or_default() += 1;
        }
        if candidate.status == LehmerStatus::Unresolved {
            if let Some((g, n)) = candidate.pair() {
                let family = Family::of(g);
                let v = family.valuation(g).unwrap_or(0) as u32;
                self.certify(Certificate::new(
                    CertificateKind::CandidateUnresolved,
                    Region::point(family, v, g, n),
                ));
            }
        }
        self.candidates.push(candidate);
    }

    pub fn finish(&mut self, started: Instant) {
        let elapsed = started.elapsed();
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        self.timing = Timing {
            started_unix_ms: now.saturating_sub(elapsed.as_millis() as u64),
            elapsed_ms: elapsed.as_millis() as u64,
        };
    }

    /// Fold `other` into `self`; the space of `self` is kept.
    pub fn merge(&mut self, other: SearchReport) {
        self.complete &= other.complete;
        self.certificates.extend(other.certificates);
        self.candidates.extend(other.candidates);
        self.frontier.extend(other.frontier);
        self.checkpoints.consumed += other.checkpoints.consumed;
        self.checkpoints.emitted += other.checkpoints.emitted;
        if self.checkpoints.path.is_none() {
            self.checkpoints.path = other.checkpoints.path;
        }
        let c = &mut self.counters;
        let o = other.counters;
        c.units += o.units;
        c.evaluations += o.evaluations;
        c.scanned += o.scanned;
        for (k, v) in o.certificates {
            *c.certificates.entry(k).or_default() += v;
        }
        for (k, v) in o.conditions {
            *c.conditions.entry(k).or_default() += v;
        }
        c.primes += o.primes;
        c.lehmer_found += o.lehmer_found;
        c.unresolved += o.unresolved;
        self.notes.extend(other.notes);
    }

    /// How many covering pieces (certificates, candidates, frontier regions)
    /// contain `(g, n)`. Within the space every pair should be covered once.
    pub fn coverage(&self, g: &Nat, n: u64) -> usize {
        let certs = self
            .certificates
            .iter()
            .filter(|c| c.covers() && c.region.contains(g, n))
            .count();
        let cands = self
            .candidates
            .iter()
            .filter(|c| c.pair() == Some((g, n)))
            .count();
        let open = self.frontier.iter().filter(|r| r.contains(g, n)).count();
        certs + cands + open
    }

    /// Re-run every certificate's rule and check cap exponents against the
    /// space's `L`.
    pub fn recheck_certificates(&self) -> bool {
        let level = self.space.level();
        self.certificates.iter().all(|c| {
            let cap_ok = match (c.kind, level, c.cap_exponent) {
                (CertificateKind::EmptyByGCap | CertificateKind::EmptyByNCap, Some(l), Some(m)) => {
                    m == match c.region.family {
                        Family::Even => l.even_cap_exponent(),
                        Family::Odd => l.odd_cap_exponent(),
                    }
                }
                (CertificateKind::EmptyByGCap | CertificateKind::EmptyByNCap, _, _) => false,
                _ => true,
            };
            cap_ok && c.recheck()
        })
    }

    pub fn is_empty(&self) -> bool {
        self.candidates
            .iter()
            .all(|c| c.status != LehmerStatus::Lehmer)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_membership() {
        let level: Level = "3".parse().unwrap();
        let even = SearchSpace::Even {
            level: level.clone(),
        };
        assert!(even.contains(&Nat::from(8u32), 100));
        assert!(!even.contains(&Nat::from(16u32), 1));
        assert!(!even.contains(&Nat::from(7u32), 1));
        let odd = SearchSpace::Odd { level, n_max: 10 };
        assert!(odd.contains(&Nat::from(7u32), 10));
        assert!(!odd.contains(&Nat::from(7u32), 11));
        assert!(!odd.contains(&Nat::from(15u32), 3));
        assert!(!odd.contains(&Nat::from(1u32), 3));
    }

    #[test]
    fn report_json_round_trip() {
        let mut r = SearchReport::new(SearchSpace::Exhaustive { limit: 10 });
        r.record(CandidateRecord {
            g: None,
            n: Nat::from(561u32),
            status: LehmerStatus::NotLehmer,
            failed_condition: Some(Condition::DivisibilityFails),
            witness: None,
        });
        let json = r.to_json().unwrap();
        let back: SearchReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.counters.conditions[&Condition::DivisibilityFails], 1);
    }
}
