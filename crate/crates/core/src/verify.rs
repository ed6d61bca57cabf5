//! Seeded property suites with JSON summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_integer::Integer;
use num_traits::{One, Pow, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::arith::{factorize, nu2, Factorization, Nat};
use crate::bounds::{
    bound_holds, compare_bounds, new_bound, nielsen_check, theorem_chain_check, NielsenInstance,
    Relation,
};
use crate::config::{Effort, Limits};
use crate::error::{Error, Result};
use crate::lehmer::run_in_pool;
use crate::repunit::nu2_quotient_verified;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Nielsen,
    Chain,
    Valuation,
    Bounds,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Nielsen,
        Suite::Chain,
        Suite::Valuation,
        Suite::Bounds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Nielsen => "nielsen",
            Suite::Chain => "chain",
            Suite::Valuation => "valuation",
            Suite::Bounds => "bounds",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub suite: Suite,
    #[serde(with = "crate::json::u64_str")]
    pub seed: u64,
    pub trials: u64,
    /// Instances on which the property was actually evaluated.
    pub checked: u64,
    pub violations: u64,
    /// Failing inputs, verbatim.
    pub counterexamples: Vec<Value>,
    pub stats: BTreeMap<String, u64>,
    pub timing: SuiteTiming,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteTiming {
    pub elapsed_ms: u64,
}

impl VerifySummary {
    fn new(suite: Suite, seed: u64, trials: u64) -> Self {
        VerifySummary {
            suite,
            seed,
            trials,
            checked: 0,
            violations: 0,
            counterexamples: Vec::new(),
            stats: BTreeMap::new(),
            timing: SuiteTiming::default(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn bump(&mut self, key: &str) {
        *self.stats.entry(key.to_string()).or_default() += 1;
    }

    fn violation(&mut self, example: Value) {
        self.violations += 1;
        // keep the report bounded
        if self.counterexamples.len() < 100 {
            self.counterexamples.push(example);
        }
    }

    /// The summary without its timing, for reproducibility comparisons.
    pub fn without_timing(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("summary serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        v
    }
}

/// Run `suite` for `trials` instances from `seed`.
pub fn run_suite(suite: Suite, trials: u64, seed: u64, limits: &Limits) -> Result<VerifySummary> {
    if trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = VerifySummary::new(suite, seed, trials);
    match suite {
        Suite::Nielsen => nielsen_suite(&mut rng, &mut summary, limits)?,
        Suite::Chain => chain_suite(&mut rng, &mut summary)?,
        Suite::Valuation => valuation_suite(&mut rng, &mut summary, limits)?,
        Suite::Bounds => bounds_suite(&mut rng, &mut summary, limits)?,
    }
    summary.timing.elapsed_ms = started.elapsed().as_millis() as u64;
    Ok(summary)
}

fn nats(xs: &[u64]) -> Vec<Nat> {
    xs.iter().map(|&x| Nat::from(x)).collect()
}

/// Integer in `[2, hi]`, roughly uniform in bit length.
fn log_uniform(rng: &mut ChaCha8Rng, hi: u64) -> u64 {
    let top = 64 - hi.leading_zeros();
    let bits = rng.random_range(2..=top);
    let lo = 1u64 << (bits - 1);
    let end = ((1u64 << bits) - 1).min(hi);
    rng.random_range(lo.max(2)..=end)
}

/// `a/b` inside `[prod_{j<=r}(1 - 1/x_j), prod_{j<r}(1 - 1/x_j))` by
/// cross-multiplication over machine-independent integers.
fn membership_oracle(xs: &[u64], a: u64, b: u64) -> bool {
    let prod = |it: &[u64], f: fn(u64) -> u64| it.iter().fold(Nat::one(), |acc, &x| acc * f(x));
    let r = xs.len();
    let (a, b) = (Nat::from(a), Nat::from(b));
    let increasing = xs.windows(2).all(|w| w[0] < w[1]) && xs.first().is_some_and(|&x| x > 1);
    let lower_ok = &a * prod(xs, |x| x) >= &b * prod(xs, |x| x - 1);
    let upper_ok = &a * prod(&xs[..r - 1], |x| x) < &b * prod(&xs[..r - 1], |x| x - 1);
    increasing && !a.is_zero() && !b.is_zero() && lower_ok && upper_ok
}

fn nielsen_suite(rng: &mut ChaCha8Rng, summary: &mut VerifySummary, limits: &Limits) -> Result<()> {
    let max_attempts = summary.trials.saturating_mul(1000);
    let mut attempts = 0u64;
    while summary.checked < summary.trials {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Resource {
                what: "Nielsen instance sampling",
                requested: format!("{} valid instances", summary.trials),
                cap: format!("{max_attempts} attempts"),
            });
        }
        let r = rng.random_range(1..=10usize);
        let mut set = BTreeSet::new();
        while set.len() < r {
            set.insert(log_uniform(rng, 1_000_000));
        }
        let xs: Vec<u64> = set.into_iter().collect();
        let b = rng.random_range(1..=1_000_000u64);
        // a near ceil(lower * b)
        let num: Nat = xs.iter().fold(Nat::one(), |acc, &x| acc * (x - 1));
        let den: Nat = xs.iter().fold(Nat::one(), |acc, &x| acc * x);
        let ceil = (num * b).div_ceil(&den);
        let ceil = u64::try_from(&ceil).unwrap_or(u64::MAX);
        let a = (ceil + rng.random_range(0..=3u64)).saturating_sub(1);

        let expected = membership_oracle(&xs, a, b);
        let built = NielsenInstance::from_integers(nats(&xs), Nat::from(a), Nat::from(b));
        let instance = json!({
            "xs": xs.iter().map(u64::to_string).collect::<Vec<_>>(),
            "a": a.to_string(),
            "b": b.to_string(),
        });
        match (expected, built) {
            (true, Ok(inst)) => {
                summary.checked += 1;
                let check = nielsen_check(&inst, limits)?;
                if check.is_violation() {
                    summary.violation(json!({ "kind": "bound_fails", "instance": instance }));
                } else {
                    summary.bump("holds");
                }
            }
            (false, Err(Error::InvalidInstance(_))) => summary.bump("rejected"),
            (true, Err(e)) => summary.violation(json!({
                "kind": "valid_instance_rejected",
                "instance": instance,
                "error": e.to_string(),
            })),
            (false, Ok(_)) => summary.violation(json!({
                "kind": "invalid_instance_accepted",
                "instance": instance,
            })),
            (false, Err(e)) => return Err(e),
        }
    }
    Ok(())
}

fn chain_suite(rng: &mut ChaCha8Rng, summary: &mut VerifySummary) -> Result<()> {
    let effort = Effort::default();
    while summary.checked < summary.trials {
        let n = rng.random_range(7..=1_000_000_000_000u64) | 1;
        let f = factorize(&Nat::from(n), &effort);
        if !f.complete || f.factors.len() < 2 || f.has_square_factor() {
            summary.bump("skipped");
            continue;
        }
        summary.checked += 1;
        let cert = theorem_chain_check(&f)?;
        let integral = cert.instance.as_ref().is_some_and(|i| i.lemma_applies());
        if integral {
            summary.bump("integral_instance");
        }
        if !chain_holds(&f)? {
            summary.violation(json!({
                "n": n.to_string(),
                "chain": cert.holds(),
                "integral": integral,
            }));
        }
    }
    Ok(())
}

/// The chain holds, and when `(n-1)/phi(n)` is an integer the lemma's
/// inequality (hence the size bound) holds as well.
fn chain_holds(f: &Factorization) -> Result<bool> {
    let cert = theorem_chain_check(f)?;
    if !cert.holds() {
        return Ok(false);
    }
    match &cert.instance {
        Some(inst) if inst.lemma_applies() => {
            Ok(nielsen_check(inst, &Limits::default())?.holds && bound_holds(&f.subject, f)?)
        }
        _ => Ok(true),
    }
}

/// Odd subjects `n <= limit` that are squarefree composites, each checked
/// with the totient chain.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub limit: u64,
    pub subjects: u64,
    pub failures: Vec<String>,
}

pub fn chain_sweep(limit: u64, workers: usize) -> Result<SweepSummary> {
    let effort = Effort::default();
    let results: Vec<(u64, Vec<String>)> = run_in_pool(workers, || {
        (0..=limit / 2)
            .into_par_iter()
            .map(|i| 2 * i + 1)
            .filter(|&n| n >= 15 && n <= limit)
            .fold(
                || (0u64, Vec::new()),
                |(mut count, mut fails), n| {
                    let f = factorize(&Nat::from(n), &effort);
                    if f.factors.len() >= 2 && !f.has_square_factor() {
                        count += 1;
                        if !chain_holds(&f).unwrap_or(false) {
                            fails.push(n.to_string());
                        }
                    }
                    (count, fails)
                },
            )
            .collect()
    })?;
    let mut summary = SweepSummary {
        limit,
        ..SweepSummary::default()
    };
    for (count, fails) in results {
        summary.subjects += count;
        summary.failures.extend(fails);
    }
    summary
        .failures
        .sort_by_key(|s| s.parse::<u64>().unwrap_or(0));
    Ok(summary)
}

/// `nu2((g^(n-1) - 1)/(g^(2m+1) - 1))` by exact division.
fn quotient_by_division(g: &Nat, n: u64) -> Result<u64> {
    let s = (n - 1).trailing_zeros();
    let odd = (n - 1) >> s;
    let num = Pow::pow(g, n - 1) - 1u32;
    let den = Pow::pow(g, odd) - 1u32;
    let (q, r) = num.div_rem(&den);
    if !r.is_zero() {
        return Err(Error::precondition(
            "g^(2m+1) - 1 does not divide g^(n-1) - 1",
        ));
    }
    nu2(&q)
}

fn valuation_suite(
    rng: &mut ChaCha8Rng,
    summary: &mut VerifySummary,
    limits: &Limits,
) -> Result<()> {
    for (g, n, want) in [(3u64, 5u64, 3u64), (7, 3, 3)] {
        let got = nu2_quotient_verified(&Nat::from(g), n, limits.max_bits)?;
        if got.closed_form != want || got.direct != Some(want) {
            summary.violation(json!({ "anchor": [g.to_string(), n.to_string()], "got": got }));
        }
    }
    for _ in 0..summary.trials {
        let g = rng.random_range(1..=4_999u64) * 2 + 1;
        let s = rng.random_range(1..=10u32);
        let m = rng.random_range(0..=5u64);
        let n = 1 + (1u64 << s) * (2 * m + 1);
        let gn = Nat::from(g);
        let q = nu2_quotient_verified(&gn, n, limits.max_bits)?;
        let Some(direct) = q.direct else {
            summary.bump("size_fallback");
            continue;
        };
        summary.checked += 1;
        let division = quotient_by_division(&gn, n)?;
        if q.closed_form != direct || direct != division {
            summary.violation(json!({
                "g": g.to_string(),
                "n": n.to_string(),
                "closed_form": q.closed_form,
                "product": direct,
                "division": division,
            }));
        }
    }
    Ok(())
}

fn bounds_suite(rng: &mut ChaCha8Rng, summary: &mut VerifySummary, limits: &Limits) -> Result<()> {
    for (k, want) in [(1u32, 2u64), (2, 12), (4, 65280)] {
        let got = new_bound(k, limits)?;
        if got != Nat::from(want) {
            summary.violation(
                json!({ "k": k, "new_bound": got.to_string(), "expected": want.to_string() }),
            );
        }
    }
    let one = compare_bounds(1, 1 << 22, false)?;
    if one.relation != Relation::Greater {
        summary.violation(json!({ "k": 1, "relation": one.relation }));
    }
    for k in 2..=30 {
        let c = compare_bounds(k, 1 << 22, false)?;
        if c.relation != Relation::Less {
            summary.violation(json!({ "k": k, "relation": c.relation }));
        }
    }
    // bound_holds against the materialized bound on random factored subjects
    let effort = Effort::default();
    for _ in 0..summary.trials {
        let n = rng.random_range(2..=1_000_000_000_000u64);
        let f = factorize(&Nat::from(n), &effort);
        let k = f.factors.len() as u32;
        summary.checked += 1;
        let fast = bound_holds(&f.subject, &f)?;
        let exact = f.subject <= new_bound(k, limits)?;
        if fast != exact {
            summary.violation(json!({ "n": n.to_string(), "fast": fast, "exact": exact }));
        }
        summary.bump(if exact { "within_bound" } else { "above_bound" });
    }
    Ok(())
}
