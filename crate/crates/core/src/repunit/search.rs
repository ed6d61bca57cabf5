//! Budgeted searches over the even-base and odd-base repunit families.
//!
//! Planning walks the bases in increasing order and is sequential, so the
//! set of work units depends only on `L`, the budgets and the checkpoint.
//! Units are then evaluated in parallel and merged in plan order.

use std::time::Instant;

use rayon::prelude::*;

use super::checkpoint::{Checkpoint, UnitRecord, UnitStatus};
use super::region::{Certificate, CertificateKind, Family, GBound, NClass, Region};
use super::{Level, K_MIN};
use crate::arith::{pow_less_than_pow2, repunit, repunit_bits_upper, Nat};
use crate::config::SearchConfig;
use crate::error::Result;
use crate::lehmer::{check_lehmer, run_in_pool, LehmerStatus};
use crate::report::{CandidateRecord, SearchReport, SearchSpace};

/// Search the even bases `g` with `nu2(g) <= floor(L)`.
///
/// For `L < 15` the whole family is empty by a single certificate.
/// Otherwise every `g = 2^15 k` below the cap is walked with lengths
/// `n >= 2` while `g^(n-1) < 2^(2^ceil(L))`, within the evaluation budget.
pub fn search_a(level: &Level, config: &SearchConfig) -> Result<SearchReport> {
    let started = Instant::now();
    let config = config.clone().validated()?;
    let mut checkpoint = open_checkpoint(&config)?;
    let mut report = SearchReport::new(SearchSpace::Even {
        level: level.clone(),
    });
    let mut planner = Planner::new(&config, checkpoint.as_ref());
    planner.plan_even(level, &mut report);
    let plan = planner.plan;
    execute(plan, &config, checkpoint.as_mut(), &mut report)?;
    annotate(level, &mut report);
    report.finish(started);
    Ok(report)
}

/// Search the odd bases `g >= 3` with `nu2(g + 1) <= floor(L)` and lengths
/// `n <= config.n_max`. The report is conditional on that length bound.
pub fn search_b(level: &Level, config: &SearchConfig) -> Result<SearchReport> {
    let started = Instant::now();
    let config = config.clone().validated()?;
    let mut checkpoint = open_checkpoint(&config)?;
    let mut report = SearchReport::new(SearchSpace::Odd {
        level: level.clone(),
        n_max: config.n_max,
    });
    let mut planner = Planner::new(&config, checkpoint.as_ref());
    planner.plan_odd(level, &mut report);
    let plan = planner.plan;
    execute(plan, &config, checkpoint.as_mut(), &mut report)?;
    annotate(level, &mut report);
    report.finish(started);
    Ok(report)
}

/// Both families: each base goes to exactly one side by parity. Each side
/// gets the full evaluation budget.
pub fn search_union(level: &Level, config: &SearchConfig) -> Result<SearchReport> {
    let started = Instant::now();
    let config = config.clone().validated()?;
    let mut checkpoint = open_checkpoint(&config)?;
    let mut report = SearchReport::new(SearchSpace::Union {
        level: level.clone(),
        n_max: config.n_max,
    });
    let mut even = SearchReport::new(SearchSpace::Even {
        level: level.clone(),
    });
    let mut planner = Planner::new(&config, checkpoint.as_ref());
    planner.plan_even(level, &mut even);
    let plan = planner.plan;
    execute(plan, &config, checkpoint.as_mut(), &mut even)?;

    let mut odd = SearchReport::new(SearchSpace::Odd {
        level: level.clone(),
        n_max: config.n_max,
    });
    let mut planner = Planner::new(&config, checkpoint.as_ref());
    planner.plan_odd(level, &mut odd);
    let plan = planner.plan;
    execute(plan, &config, checkpoint.as_mut(), &mut odd)?;

    report.complete = true;
    report.merge(even);
    report.merge(odd);
    annotate(level, &mut report);
    report.finish(started);
    Ok(report)
}

fn open_checkpoint(config: &SearchConfig) -> Result<Option<Checkpoint>> {
    config.checkpoint.as_ref().map(Checkpoint::open).transpose()
}

fn annotate(level: &Level, report: &mut SearchReport) {
    if !level.is_integer() {
        report.notes.push(format!(
            "L = {level} is not an integer: valuations are bounded by {} and caps use {}",
            level.floor(),
            level.ceil()
        ));
    }
    if let Some(n_max) = report.conditional_on_n_max {
        report
            .notes
            .push(format!("odd-base results cover lengths n <= {n_max} only"));
    }
}

/// A base and a batch of lengths to evaluate.
#[derive(Debug, Clone)]
struct Unit {
    id: String,
    g: Nat,
    points: Vec<u64>,
}

enum Planned {
    Fresh(Unit),
    Resumed(Box<UnitRecord>),
}

/// Why feeding a base stopped early.
enum Halt {
    Budget,
    Size { n: u64, bits: u128 },
}

struct Planner<'a> {
    span: usize,
    max_bits: u64,
    budget_left: u64,
    checkpoint: Option<&'a Checkpoint>,
    plan: Vec<Planned>,
}

impl<'a> Planner<'a> {
    fn new(config: &SearchConfig, checkpoint: Option<&'a Checkpoint>) -> Self {
        Planner {
            span: config.unit_span,
            max_bits: config.limits.max_bits,
            budget_left: config.max_evaluations,
            checkpoint,
            plan: Vec::new(),
        }
    }

    fn resumed(&self, id: &str) -> Option<UnitRecord> {
        self.checkpoint.and_then(|cp| cp.get(id)).cloned()
    }

    /// Queue the lengths of one base in chunks. On a halt, returns the
    /// first length not queued.
    fn feed(
        &mut self,
        prefix: &str,
        g: &Nat,
        points: impl Iterator<Item = u64>,
    ) -> Option<(u64, Halt)> {
        let mut points = points.peekable();
        while points.peek().is_some() {
            let mut chunk = Vec::with_capacity(self.span);
            let mut halt = None;
            while chunk.len() < self.span {
                let Some(&n) = points.peek() else { break };
                let bits = repunit_bits_upper(g, n);
                if bits > u128::from(self.max_bits) {
                    halt = Some((n, Halt::Size { n, bits }));
                    break;
                }
                chunk.push(n);
                points.next();
            }
            if !chunk.is_empty() {
                let id = unit_id(prefix, g, &chunk);
                if let Some(rec) = self.resumed(&id) {
                    self.plan.push(Planned::Resumed(Box::new(rec)));
                } else {
                    let take = chunk.len().min(self.budget_left as usize);
                    if take == 0 {
                        return Some((chunk[0], Halt::Budget));
                    }
                    let truncated = take < chunk.len();
                    let next = chunk.get(take).copied();
                    chunk.truncate(take);
                    let id = unit_id(prefix, g, &chunk);
                    match self.resumed(&id) {
                        Some(rec) => self.plan.push(Planned::Resumed(Box::new(rec))),
                        None => {
                            self.budget_left -= take as u64;
                            self.plan.push(Planned::Fresh(Unit {
                                id,
                                g: g.clone(),
                                points: chunk,
                            }));
                        }
                    }
                    if truncated {
                        return next.map(|n| (n, Halt::Budget));
                    }
                }
            }
            if halt.is_some() {
                return halt;
            }
        }
        None
    }

    fn plan_even(&mut self, level: &Level, report: &mut SearchReport) {
        let lf = level.floor();
        let band = |lo: u32,
                    hi: u32,
                    g_lo: GBound,
                    g_end: Option<GBound>,
                    n_lo: u64,
                    n_hi: Option<u64>| Region {
            family: Family::Even,
            nu2_lo: lo,
            nu2_hi: hi,
            g_lo,
            g_end,
            n_lo,
            n_hi,
            n_class: NClass::All,
        };
        let k15 = K_MIN as u32;
        if lf < k15 {
            let all = band(1, lf, GBound::int(2), None, 1, None);
            report.certify(Certificate::new(CertificateKind::EmptyByK15, all));
            report.complete = true;
            return;
        }
        let m = level.even_cap_exponent();
        report.certify(Certificate::new(
            CertificateKind::EmptyByK15,
            band(1, k15 - 1, GBound::int(2), None, 1, None),
        ));
        report.certify(
            Certificate::new(
                CertificateKind::EmptyByGCap,
                band(k15, lf, GBound::Pow2(m), None, 1, None),
            )
            .with_cap(m),
        );
        report.certify(Certificate::new(
            CertificateKind::RejectedUnitN,
            band(k15, lf, GBound::int(2), Some(GBound::Pow2(m)), 1, Some(1)),
        ));

        let max_bits = self.max_bits;
        let mut k: u64 = 1;
        loop {
            let g = Nat::from(k) << K_MIN;
            if g.bits() > m {
                report.complete = true;
                return;
            }
            let v = k15 + k.trailing_zeros();
            if v > lf {
                k += 1;
                continue;
            }
            // lengths n >= 2 with g^(n-1) < 2^m; past max_bits the size
            // check halts first, so the power is never built
            let gg = g.clone();
            let points = (2u64..).take_while(move |&n| {
                (m > max_bits && repunit_bits_upper(&gg, n) > u128::from(max_bits))
                    || pow_less_than_pow2(&gg, n - 1, m)
            });
            let mut last = 1;
            let halted = self.feed("A", &g, points.inspect(|&n| last = n));
            if let Some((n_next, halt)) = halted {
                report
                    .frontier
                    .push(Region::base(Family::Even, v, &g, n_next, None, NClass::All));
                report.frontier.push(band(
                    k15,
                    lf,
                    GBound::Int(Nat::from(k + 1) << K_MIN),
                    Some(GBound::Pow2(m)),
                    2,
                    None,
                ));
                note_halt(report, &g, halt);
                return;
            }
            let n_fail = last + 1;
            report.certify(
                Certificate::new(
                    CertificateKind::EmptyByNCap,
                    Region::base(Family::Even, v, &g, n_fail, None, NClass::All),
                )
                .with_cap(m),
            );
            k += 1;
        }
    }

    fn plan_odd(&mut self, level: &Level, report: &mut SearchReport) {
        let lf = level.floor();
        let m = level.odd_cap_exponent();
        let n_max = match report.space.n_max() {
            Some(n) => n,
            None => return,
        };
        let band =
            |lo: u32, hi: u32, g_lo: GBound, g_end: Option<GBound>, n_lo: u64, class: NClass| {
                Region {
                    family: Family::Odd,
                    nu2_lo: lo,
                    nu2_hi: hi,
                    g_lo,
                    g_end,
                    n_lo,
                    n_hi: Some(n_max),
                    n_class: class,
                }
            };
        let g_cap = if m >= 2 {
            GBound::Pow2(m)
        } else {
            GBound::int(3)
        };
        report.certify(
            Certificate::new(
                CertificateKind::EmptyByGCap,
                band(1, lf, g_cap, None, 1, NClass::All),
            )
            .with_cap(m),
        );
        if m < 2 {
            report.complete = true;
            return;
        }
        let three = || GBound::int(3);
        let below_cap = || Some(GBound::Pow2(m));
        let mut unit = band(1, lf, three(), below_cap(), 1, NClass::All);
        unit.n_hi = Some(1);
        report.certify(Certificate::new(CertificateKind::RejectedUnitN, unit));
        report.certify(Certificate::new(
            CertificateKind::RejectedEvenN,
            band(1, lf, three(), below_cap(), 2, NClass::Even),
        ));

        let s_min = |v: u32| 16u32.saturating_sub(v).max(1);
        let reachable = |v: u32| s_min(v) < 63 && (1u64 << s_min(v)) < n_max;
        let Some(v_min) = (1..=lf).find(|&v| reachable(v)) else {
            report.certify(Certificate::new(
                CertificateKind::EmptyByK15,
                band(1, lf, three(), below_cap(), 3, NClass::odd_s(1, None)),
            ));
            report.complete = true;
            return;
        };
        if v_min > 1 {
            report.certify(Certificate::new(
                CertificateKind::EmptyByK15,
                band(
                    1,
                    v_min - 1,
                    three(),
                    below_cap(),
                    3,
                    NClass::odd_s(1, None),
                ),
            ));
        }
        for v in v_min..=lf {
            if s_min(v) > 1 {
                report.certify(Certificate::new(
                    CertificateKind::EmptyByK15,
                    band(
                        v,
                        v,
                        three(),
                        below_cap(),
                        3,
                        NClass::odd_s(1, Some(s_min(v) - 1)),
                    ),
                ));
            }
        }

        let mut t: u64 = 1;
        loop {
            let g = (Nat::from(t) << v_min) - 1u32;
            if g < Nat::from(3u32) {
                t += 1;
                continue;
            }
            if g.bits() > m {
                report.complete = true;
                return;
            }
            let v = v_min + t.trailing_zeros();
            if v > lf {
                t += 1;
                continue;
            }
            let s0 = s_min(v);
            let j_max = (n_max - 1) >> s0;
            // smallest odd part o with g^o >= 2^m, found only while powers stay small
            let o_fail = if m > self.max_bits || pow_less_than_pow2(&g, j_max, m) {
                None
            } else {
                let (mut lo, mut hi) = (1u64, j_max);
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if pow_less_than_pow2(&g, mid, m) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Some(hi | 1)
            };
            if let Some(o) = o_fail {
                if o <= j_max {
                    report.certify(
                        Certificate::new(
                            CertificateKind::EmptyByNCap,
                            Region::base(
                                Family::Odd,
                                v,
                                &g,
                                3,
                                Some(n_max),
                                NClass::Odd {
                                    s_lo: s0,
                                    s_hi: None,
                                    o_lo: o,
                                    o_hi: None,
                                },
                            ),
                        )
                        .with_cap(m),
                    );
                }
            }
            let points = (1..=j_max)
                .filter(move |&j| o_fail.is_none_or(|o| (j >> j.trailing_zeros()) < o))
                .map(move |j| 1 + (j << s0));
            if let Some((n_next, halt)) = self.feed("B", &g, points) {
                let rest = NClass::Odd {
                    s_lo: s0,
                    s_hi: None,
                    o_lo: 1,
                    o_hi: o_fail.map(|o| o - 2),
                };
                report
                    .frontier
                    .push(Region::base(Family::Odd, v, &g, n_next, Some(n_max), rest));
                let g_next = (Nat::from(t + 1) << v_min) - 1u32;
                for w in v_min..=lf {
                    report.frontier.push(band(
                        w,
                        w,
                        GBound::Int(g_next.clone()),
                        below_cap(),
                        3,
                        NClass::odd_s(s_min(w), None),
                    ));
                }
                note_halt(report, &g, halt);
                return;
            }
            t += 1;
        }
    }
}

/// Evaluate the fresh units in parallel, write the checkpoint after each
/// batch, and add all results to `report` in plan order.
fn execute(
    plan: Vec<Planned>,
    config: &SearchConfig,
    mut checkpoint: Option<&mut Checkpoint>,
    report: &mut SearchReport,
) -> Result<()> {
    if let Some(cp) = checkpoint.as_deref() {
        report.checkpoints.path = Some(cp.path().display().to_string());
    }
    let fresh: Vec<&Unit> = plan
        .iter()
        .filter_map(|p| match p {
            Planned::Fresh(u) => Some(u),
            Planned::Resumed(_) => None,
        })
        .collect();
    let batch = (config.workers * 4).max(1);
    let evaluated: Vec<UnitRecord> =
        run_in_pool(config.workers, || -> Result<Vec<UnitRecord>> {
            let mut out = Vec::with_capacity(fresh.len());
            for chunk in fresh.chunks(batch) {
                let records: Vec<UnitRecord> = chunk
                    .par_iter()
                    .map(|u| evaluate(u, config))
                    .collect::<Result<_>>()?;
                if let Some(cp) = checkpoint.as_deref_mut() {
                    for rec in &records {
                        cp.insert(rec.clone());
                    }
                    cp.flush()?;
                }
                out.extend(records);
            }
            Ok(out)
        })??;

    let mut evaluated = evaluated.into_iter();
    for item in plan {
        let (rec, fresh) = match item {
            Planned::Fresh(_) => (evaluated.next().expect("one record per fresh unit"), true),
            Planned::Resumed(rec) => (*rec, false),
        };
        report.counters.units += 1;
        report.counters.scanned += rec.candidates.len() as u64;
        if fresh {
            report.counters.evaluations += rec.candidates.len() as u64;
            if checkpoint.is_some() {
                report.checkpoints.emitted += 1;
            }
        } else {
            report.checkpoints.consumed += 1;
        }
        for c in rec.candidates {
            report.record(c);
        }
    }
    Ok(())
}

fn unit_id(prefix: &str, g: &Nat, points: &[u64]) -> String {
    let lo = points.first().copied().unwrap_or(0);
    let hi = points.last().copied().unwrap_or(0);
    format!("{prefix}/g={g}/n={lo}-{hi}")
}

fn note_halt(report: &mut SearchReport, g: &Nat, halt: Halt) {
    report.complete = false;
    match halt {
        Halt::Budget => report
            .notes
            .push(format!("evaluation budget exhausted at g = {g}")),
        Halt::Size { n, bits } => report.notes.push(format!(
            "stopped at g = {g}, n = {n}: the repunit needs up to {bits} bits, above the size limit"
        )),
    }
}

fn evaluate(unit: &Unit, config: &SearchConfig) -> Result<UnitRecord> {
    let mut candidates = Vec::with_capacity(unit.points.len());
    let mut status = UnitStatus::Cleared;
    for &n in &unit.points {
        let value = repunit(&unit.g, n)?;
        let verdict = check_lehmer(&value, &config.effort)?;
        match verdict.status {
            LehmerStatus::Lehmer => status = UnitStatus::LehmerFound,
            LehmerStatus::Unresolved if status == UnitStatus::Cleared => {
                status = UnitStatus::Unresolved
            }
            _ => {}
        }
        candidates.push(CandidateRecord {
            g: Some(unit.g.clone()),
            n: Nat::from(n),
            status: verdict.status,
            failed_condition: verdict.failed_condition,
            witness: verdict.witness,
        });
    }
    Ok(UnitRecord {
        unit_id: unit.id.clone(),
        g_lo: unit.g.clone(),
        g_hi: unit.g.clone(),
        n_lo: unit.points.first().copied().unwrap_or(0),
        n_hi: unit.points.last().copied().unwrap_or(0),
        status,
        certificate: None,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(budget: u64, n_max: u64) -> SearchConfig {
        SearchConfig {
            max_evaluations: budget,
            n_max,
            unit_span: 8,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn even_below_fifteen_is_one_certificate() {
        let r = search_a(&"14".parse().unwrap(), &config(10, 10)).unwrap();
        assert!(r.complete);
        assert_eq!(r.certificates.len(), 1);
        assert_eq!(r.certificates[0].kind, CertificateKind::EmptyByK15);
        assert_eq!(r.counters.evaluations, 0);
        assert!(r.recheck_certificates());
    }

    #[test]
    fn odd_small_levels_are_empty() {
        let r = search_b(&"1".parse().unwrap(), &config(10, 1000)).unwrap();
        assert!(r.complete && r.candidates.is_empty());
        let r = search_b(&"2".parse().unwrap(), &config(10, 1000)).unwrap();
        assert!(r.complete && r.candidates.is_empty());
        assert!(r.recheck_certificates());
        assert_eq!(r.conditional_on_n_max, Some(1000));
    }

    #[test]
    fn even_fifteen_stops_at_budget() {
        let r = search_a(&"15".parse().unwrap(), &config(20, 10)).unwrap();
        assert!(!r.complete);
        assert_eq!(r.counters.evaluations, 20);
        assert_eq!(r.candidates.len(), 20);
        assert!(r
            .candidates
            .iter()
            .all(|c| c.status != LehmerStatus::Lehmer));
        assert_eq!(r.frontier.len(), 2);
        assert!(r.recheck_certificates());
        let g = Nat::from(1u32 << 15);
        for n in 1..40 {
            assert_eq!(r.coverage(&g, n), 1, "n={n}");
        }
    }

    #[test]
    fn union_at_fourteen_reaches_odd_candidates() {
        let r = search_union(&"14".parse().unwrap(), &config(5, 20)).unwrap();
        let g = Nat::from((1u32 << 14) - 1);
        assert!(r.candidates.iter().any(|c| c.pair() == Some((&g, 5))));
        assert!(r.recheck_certificates());
        for n in 1..=20 {
            assert_eq!(r.coverage(&g, n), 1, "n={n}");
            assert_eq!(r.coverage(&Nat::from(6u32), n), 1);
        }
    }
}
