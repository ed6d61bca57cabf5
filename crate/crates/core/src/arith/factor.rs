//! Factorization: trial division up to 10^6, then Pollard's rho with
//! Brent's cycle detection under an iteration budget.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::primality::{gcd_u64, is_prime_with_rounds, mul_mod, PrimalityStatus};
use super::Nat;
use crate::config::Effort;
use crate::error::{Error, Result};

/// Upper end of trial division.
pub const TRIAL_DIVISION_LIMIT: u64 = 1_000_000;

/// All primes up to [`TRIAL_DIVISION_LIMIT`].
pub fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let limit = TRIAL_DIVISION_LIMIT as usize;
        let mut composite = vec![false; limit + 1];
        let mut primes = Vec::with_capacity(78_498);
        for i in 2..=limit {
            if !composite[i] {
                primes.push(i as u32);
                let mut j = i * i;
                while j <= limit {
                    composite[j] = true;
                    j += i;
                }
            }
        }
        primes
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimePower {
    #[serde(with = "crate::json::nat")]
    pub prime: Nat,
    pub exponent: u32,
}

/// Whether every reported prime is proven, or some only pass the
/// probabilistic test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certainty {
    Proven,
    Probable,
}

/// Prime factorization, possibly partial.
///
/// When `complete` is false, `cofactor` is the unfactored remainder
/// (greater than one) and the listed prime powers multiply to
/// `subject / cofactor`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    #[serde(with = "crate::json::nat")]
    pub subject: Nat,
    pub factors: Vec<PrimePower>,
    pub complete: bool,
    #[serde(with = "crate::json::nat")]
    pub cofactor: Nat,
    pub certainty: Certainty,
}

impl Factorization {
    pub(crate) fn assemble(subject: Nat, primes: Vec<(Nat, Certainty)>, cofactor: Nat) -> Self {
        let mut counts: BTreeMap<Nat, u32> = BTreeMap::new();
        let mut certainty = Certainty::Proven;
        for (p, c) in primes {
            if c == Certainty::Probable {
                certainty = Certainty::Probable;
            }
            *counts.entry(p).or_default() += 1;
        }
        let factors = counts
            .into_iter()
            .map(|(prime, exponent)| PrimePower { prime, exponent })
            .collect();
        Factorization {
            complete: cofactor.is_one(),
            subject,
            factors,
            cofactor,
            certainty,
        }
    }

    /// Number of distinct prime divisors, known only when complete.
    pub fn omega(&self) -> Option<usize> {
        self.complete.then_some(self.factors.len())
    }

    pub fn primes(&self) -> impl Iterator<Item = &Nat> {
        self.factors.iter().map(|f| &f.prime)
    }

    /// Some found prime occurs with exponent at least two.
    pub fn has_square_factor(&self) -> bool {
        self.factors.iter().any(|f| f.exponent >= 2)
    }

    /// Product of the listed prime powers.
    pub fn product(&self) -> Nat {
        self.factors.iter().fold(Nat::one(), |acc, f| {
            acc * num_traits::pow(f.prime.clone(), f.exponent as usize)
        })
    }

    /// Re-check the structural invariants: strictly increasing primes, each
    /// passing the primality test, and the product relation with the subject.
    pub fn is_consistent(&self) -> bool {
        let increasing = self.factors.windows(2).all(|w| w[0].prime < w[1].prime);
        let primes_ok = self
            .factors
            .iter()
            .all(|f| f.exponent >= 1 && is_prime_with_rounds(&f.prime, 8).passes());
        let product = self.product();
        let product_ok = if self.complete {
            product == self.subject
        } else {
            !self.cofactor.is_one() && product * &self.cofactor == self.subject
        };
        increasing && primes_ok && product_ok
    }
}

/// Result of trial division by the primes up to a bound.
#[derive(Debug, Clone)]
pub struct TrialDivision {
    pub primes: Vec<Nat>,
    pub cofactor: Nat,
    /// The cofactor exceeds one and is smaller than the square of the
    /// smallest untried prime, so it is prime.
    pub cofactor_prime: bool,
}

/// Trial division by every prime `p <= min(limit, 10^6)` while `p^2 <= cofactor`.
pub fn trial_divide(n: &Nat, limit: u64) -> TrialDivision {
    let limit = limit.min(TRIAL_DIVISION_LIMIT);
    let mut primes = Vec::new();
    if n.is_zero() {
        return TrialDivision {
            primes,
            cofactor: Nat::zero(),
            cofactor_prime: false,
        };
    }
    if let Some(mut m) = n.to_u64() {
        let mut exhausted_to = 1u64;
        for &p in small_primes() {
            let p = u64::from(p);
            if p > limit || p.saturating_mul(p) > m {
                break;
            }
            while m % p == 0 {
                m /= p;
                primes.push(Nat::from(p));
            }
            exhausted_to = p;
        }
        let cofactor_prime = m > 1 && proven_prime_after_trial(m, exhausted_to);
        return TrialDivision {
            primes,
            cofactor: Nat::from(m),
            cofactor_prime,
        };
    }
    let mut m = n.clone();
    let mut digits = m.to_u32_digits();
    let mut exhausted_to = 1u64;
    for &p in small_primes() {
        if u64::from(p) > limit {
            break;
        }
        if m.bits() < 64 && u64::from(p) * u64::from(p) > m.to_u64().unwrap_or(u64::MAX) {
            break;
        }
        if rem_u32(&digits, p) == 0 {
            while rem_u32(&digits, p) == 0 {
                m /= p;
                digits = m.to_u32_digits();
                primes.push(Nat::from(p));
            }
        }
        exhausted_to = u64::from(p);
    }
    let cofactor_prime = m
        .to_u64()
        .is_some_and(|v| v > 1 && proven_prime_after_trial(v, exhausted_to));
    TrialDivision {
        primes,
        cofactor: m,
        cofactor_prime,
    }
}

fn proven_prime_after_trial(m: u64, exhausted_to: u64) -> bool {
    // Every prime up to `exhausted_to` was tried, so the smallest possible
    // prime factor of m is the next prime.
    let q = next_prime_after(exhausted_to).unwrap_or(exhausted_to.saturating_add(1));
    q.saturating_mul(q) > m
}

fn next_prime_after(p: u64) -> Option<u64> {
    let primes = small_primes();
    let idx = primes.partition_point(|&q| u64::from(q) <= p);
    primes.get(idx).map(|&q| u64::from(q))
}

fn rem_u32(digits: &[u32], p: u32) -> u32 {
    let p = u64::from(p);
    digits
        .iter()
        .rev()
        .fold(0u64, |r, &d| ((r << 32) | u64::from(d)) % p) as u32
}

/// Full or partial factorization within `effort`.
pub fn factorize(n: &Nat, effort: &Effort) -> Factorization {
    if n.is_zero() {
        return Factorization {
            subject: Nat::zero(),
            factors: Vec::new(),
            complete: false,
            cofactor: Nat::zero(),
            certainty: Certainty::Proven,
        };
    }
    let td = trial_divide(n, effort.trial_limit);
    let mut primes: Vec<(Nat, Certainty)> = td
        .primes
        .into_iter()
        .map(|p| (p, Certainty::Proven))
        .collect();
    let mut cofactor = Nat::one();
    if td.cofactor_prime {
        primes.push((td.cofactor, Certainty::Proven));
    } else if !td.cofactor.is_one() {
        let mut budget = effort.rho_iterations;
        let split = split_cofactor(&td.cofactor, effort, &mut budget);
        primes.extend(split.primes);
        for r in split.remaining {
            cofactor *= r;
        }
    }
    Factorization::assemble(n.clone(), primes, cofactor)
}

pub(crate) struct Split {
    pub primes: Vec<(Nat, Certainty)>,
    /// Composite pieces left unsplit when the budget ran out.
    pub remaining: Vec<Nat>,
}

/// Split `c` (with no small factors) into primes using rho within `budget`.
pub(crate) fn split_cofactor(c: &Nat, effort: &Effort, budget: &mut u64) -> Split {
    let mut primes = Vec::new();
    let mut remaining = Vec::new();
    let mut stack = vec![c.clone()];
    while let Some(x) = stack.pop() {
        if x.is_one() {
            continue;
        }
        let verdict = is_prime_with_rounds(&x, effort.primality_rounds);
        match verdict.status {
            PrimalityStatus::Prime => {
                primes.push((x, Certainty::Proven));
                continue;
            }
            PrimalityStatus::ProbablePrime => {
                primes.push((x, Certainty::Probable));
                continue;
            }
            PrimalityStatus::Composite => {}
        }
        if let Some(w) = verdict
            .witness
            .filter(|w| !w.is_one() && *w != x && (&x % w).is_zero())
        {
            let rest = &x / &w;
            stack.push(w);
            stack.push(rest);
            continue;
        }
        if let Some(r) = exact_sqrt(&x) {
            stack.push(r.clone());
            stack.push(r);
            continue;
        }
        match find_factor(&x, budget) {
            Some(d) => {
                let rest = &x / &d;
                stack.push(d);
                stack.push(rest);
            }
            None => {
                remaining.push(x);
                remaining.append(&mut stack);
                break;
            }
        }
    }
    Split { primes, remaining }
}

fn exact_sqrt(x: &Nat) -> Option<Nat> {
    let r = x.sqrt();
    (&r * &r == *x).then_some(r)
}

/// A proper divisor of composite `n`, or `None` once the budget is spent.
fn find_factor(n: &Nat, budget: &mut u64) -> Option<Nat> {
    if n.is_even() {
        return Some(Nat::from(2u32));
    }
    let small = n.to_u64();
    let mut c = 1u64;
    while *budget > 0 {
        let found = match small {
            Some(m) => brent_u64(m, c, budget).map(Nat::from),
            None => brent_big(n, &Nat::from(c), budget),
        };
        if found.is_some() {
            return found;
        }
        c += 1;
    }
    None
}

const BATCH: u64 = 128;

fn brent_u64(n: u64, c: u64, budget: &mut u64) -> Option<u64> {
    let f = |y: u64| (mul_mod(y, y, n) + c) % n;
    let (mut y, mut r, mut q, mut g) = (2u64, 1u64, 1u64, 1u64);
    let (mut x, mut ys) = (y, y);
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0;
        while k < r && g == 1 {
            ys = y;
            let steps = BATCH.min(r - k);
            if *budget < steps {
                *budget = 0;
                return None;
            }
            *budget -= steps;
            for _ in 0..steps {
                y = f(y);
                q = mul_mod(q, x.abs_diff(y), n);
            }
            g = gcd_u64(q, n);
            k += steps;
        }
        r *= 2;
    }
    if g == n {
        loop {
            ys = f(ys);
            g = gcd_u64(x.abs_diff(ys), n);
            if g > 1 {
                break;
            }
        }
    }
    (g != n).then_some(g)
}

fn brent_big(n: &Nat, c: &Nat, budget: &mut u64) -> Option<Nat> {
    let f = |y: &Nat| (y * y + c) % n;
    let diff = |a: &Nat, b: &Nat| if a > b { a - b } else { b - a };
    let mut y = Nat::from(2u32);
    let (mut r, mut q, mut g) = (1u64, Nat::one(), Nat::one());
    let (mut x, mut ys) = (y.clone(), y.clone());
    while g.is_one() {
        x = y.clone();
        for _ in 0..r {
            y = f(&y);
        }
        let mut k = 0;
        while k < r && g.is_one() {
            ys = y.clone();
            let steps = BATCH.min(r - k);
            if *budget < steps {
                *budget = 0;
                return None;
            }
            *budget -= steps;
            for _ in 0..steps {
                y = f(&y);
                q = (q * diff(&x, &y)) % n;
            }
            g = q.gcd(n);
            k += steps;
        }
        r *= 2;
    }
    if g == *n {
        loop {
            ys = f(&ys);
            g = diff(&x, &ys).gcd(n);
            if !g.is_one() {
                break;
            }
        }
    }
    (g != *n).then_some(g)
}

/// Euler's totient from a complete factorization.
pub fn euler_phi(f: &Factorization) -> Result<Nat> {
    if !f.complete {
        return Err(Error::IncompleteFactorization(f.subject.to_str_radix(10)));
    }
    Ok(f.factors.iter().fold(Nat::one(), |acc, pp| {
        acc * num_traits::pow(pp.prime.clone(), pp.exponent as usize - 1) * (&pp.prime - 1u32)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Pow;

    fn nat(x: u64) -> Nat {
        Nat::from(x)
    }

    fn pairs(f: &Factorization) -> Vec<(u64, u32)> {
        f.factors
            .iter()
            .map(|p| (p.prime.to_u64().unwrap(), p.exponent))
            .collect()
    }

    #[test]
    fn examples() {
        let effort = Effort::default();
        let f = factorize(&nat(561), &effort);
        assert!(f.complete);
        assert_eq!(pairs(&f), vec![(3, 1), (11, 1), (17, 1)]);
        assert_eq!(euler_phi(&f).unwrap(), nat(320));

        let one = factorize(&nat(1), &effort);
        assert!(one.complete && one.factors.is_empty());
        assert_eq!(euler_phi(&one).unwrap(), nat(1));

        let m61 = (nat(1) << 61usize) - 1u32;
        let f = factorize(&m61, &effort);
        assert!(f.complete);
        assert_eq!(f.factors.len(), 1);
        assert_eq!(f.factors[0].prime, m61);
        assert_eq!(f.certainty, Certainty::Proven);

        assert_eq!(euler_phi(&factorize(&nat(7), &effort)).unwrap(), nat(6));
    }

    #[test]
    fn prime_powers_and_big_semiprimes() {
        let effort = Effort::default();
        let f = factorize(&nat(1 << 40), &effort);
        assert_eq!(pairs(&f), vec![(2, 40)]);

        let p = nat(1_000_000_007);
        let q = nat(998_244_353);
        let n = &p * &p * &q;
        let f = factorize(&n, &effort);
        assert!(f.complete);
        assert_eq!(pairs(&f), vec![(998_244_353, 1), (1_000_000_007, 2)]);
        assert!(f.is_consistent());

        // product of two ~40-bit primes beyond u64 after multiplying by a third
        let r = nat(1_099_511_627_791); // prime
        let n = &p * &q * &r;
        let f = factorize(&n, &effort);
        assert!(f.complete, "{f:?}");
        assert_eq!(f.factors.len(), 3);
        assert!(f.is_consistent());
    }

    #[test]
    fn exhausted_budget_is_partial_and_honest() {
        let effort = Effort {
            trial_limit: 1000,
            rho_iterations: 1,
            primality_rounds: 4,
        };
        let p = Pow::pow(&nat(2), 61u32) - 1u32;
        let q = Pow::pow(&nat(2), 31u32) - 1u32;
        let n = &p * &q * nat(3 * 3 * 7);
        let f = factorize(&n, &effort);
        assert!(!f.complete);
        assert_eq!(pairs(&f), vec![(3, 2), (7, 1)]);
        assert_eq!(f.cofactor, &p * &q);
        assert!(f.is_consistent());
        assert_eq!(f.omega(), None);
        assert!(euler_phi(&f).is_err());
    }

    #[test]
    fn trial_division_marks_prime_cofactor() {
        let td = trial_divide(&nat(2 * 999_983), 1_000_000);
        assert_eq!(td.primes, vec![nat(2)]);
        assert!(td.cofactor_prime);
        // limit too small to prove 999_983 prime
        let td = trial_divide(&nat(999_983), 100);
        assert!(!td.cofactor_prime);
        // but a cofactor below limit^2 is proven
        let td = trial_divide(&nat(9973), 100);
        assert!(td.cofactor_prime);
    }

    #[test]
    fn rem_u32_matches_bigint() {
        let n = Pow::pow(&nat(12345), 37u32) + 17u32;
        let digits = n.to_u32_digits();
        for p in [2u32, 3, 5, 7, 999_983] {
            assert_eq!(rem_u32(&digits, p), (&n % p).to_u32().unwrap());
        }
    }

    #[test]
    fn reconstruction_over_random_subjects() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let effort = Effort::default();
        for _ in 0..10_000 {
            let n = nat(rng.random_range(1..=1_000_000_000_000u64));
            let f = factorize(&n, &effort);
            assert!(f.complete, "n={n}");
            assert_eq!(f.product(), n);
            assert!(f.factors.windows(2).all(|w| w[0].prime < w[1].prime));
        }
    }
}
