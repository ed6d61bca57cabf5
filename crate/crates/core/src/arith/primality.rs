//! Miller-Rabin primality.
//!
//! Bases 2, 3, ..., 41 (the first 13 primes) decide primality exactly below
//! [`DETERMINISTIC_LIMIT`], which covers all of `u64`. Above it those bases
//! are followed by seeded random rounds and a pass is reported as
//! `ProbablePrime`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Nat;

/// Miller-Rabin with the first 13 prime bases is exact below this value.
pub const DETERMINISTIC_LIMIT: u128 = 3_317_044_064_679_887_385_961_981;

const BASES: [u32; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimalityStatus {
    Prime,
    Composite,
    ProbablePrime,
}

/// Verdict of [`is_prime`]. 0 and 1 are reported `Composite` with no
/// witness: they are not prime.
///
/// A composite verdict carries either a proper divisor of the subject or a
/// Miller-Rabin base that proves compositeness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimalityResult {
    pub status: PrimalityStatus,
    #[serde(with = "crate::json::opt_nat")]
    pub witness: Option<Nat>,
}

impl PrimalityResult {
    /// Prime or probable prime.
    pub fn passes(&self) -> bool {
        self.status != PrimalityStatus::Composite
    }

    fn prime() -> Self {
        PrimalityResult {
            status: PrimalityStatus::Prime,
            witness: None,
        }
    }

    fn composite(witness: Option<Nat>) -> Self {
        PrimalityResult {
            status: PrimalityStatus::Composite,
            witness,
        }
    }
}

pub fn is_prime(n: &Nat) -> PrimalityResult {
    is_prime_with_rounds(n, 16)
}

/// Primality with `rounds` extra random bases above the deterministic limit.
pub fn is_prime_with_rounds(n: &Nat, rounds: u32) -> PrimalityResult {
    if let Some(small) = n.to_u64() {
        return match small {
            0 | 1 => PrimalityResult::composite(None),
            _ => match u64_compositeness_witness(small) {
                None => PrimalityResult::prime(),
                Some(w) => PrimalityResult::composite(Some(Nat::from(w))),
            },
        };
    }
    for &p in &BASES {
        if (n % p).is_zero() {
            return PrimalityResult::composite(Some(Nat::from(p)));
        }
    }
    let mr = MillerRabin::new(n);
    for &a in &BASES {
        let a = Nat::from(a);
        if !mr.passes(&a) {
            return PrimalityResult::composite(Some(a));
        }
    }
    if n.to_u128().is_some_and(|v| v < DETERMINISTIC_LIMIT) {
        return PrimalityResult::prime();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(n));
    let span = n - 3u32;
    for _ in 0..rounds {
        // base in [2, n-2]
        let a = random_below(&mut rng, &span) + 2u32;
        if !mr.passes(&a) {
            return PrimalityResult::composite(Some(a));
        }
    }
    PrimalityResult {
        status: PrimalityStatus::ProbablePrime,
        witness: None,
    }
}

fn seed_for(n: &Nat) -> u64 {
    n.iter_u64_digits().fold(0x9e37_79b9_7f4a_7c15u64, |h, d| {
        (h ^ d).wrapping_mul(0x0100_0000_01b3).rotate_left(17)
    })
}

fn random_below(rng: &mut ChaCha8Rng, bound: &Nat) -> Nat {
    let bytes = (bound.bits() / 8 + 9) as usize;
    let raw: Vec<u8> = (0..bytes).map(|_| rng.random()).collect();
    BigUint::from_bytes_le(&raw) % bound
}

struct MillerRabin<'a> {
    n: &'a Nat,
    n_minus_1: Nat,
    d: Nat,
    r: u64,
}

impl<'a> MillerRabin<'a> {
    fn new(n: &'a Nat) -> Self {
        let n_minus_1 = n - 1u32;
        let r = n_minus_1.trailing_zeros().unwrap_or(0);
        let d = &n_minus_1 >> r;
        MillerRabin { n, n_minus_1, d, r }
    }

    fn passes(&self, a: &Nat) -> bool {
        let mut x = a.modpow(&self.d, self.n);
        if x.is_one() || x == self.n_minus_1 {
            return true;
        }
        for _ in 1..self.r {
            x = (&x * &x) % self.n;
            if x == self.n_minus_1 {
                return true;
            }
            if x.is_one() {
                return false;
            }
        }
        false
    }
}

pub fn is_prime_u64(n: u64) -> bool {
    n >= 2 && u64_compositeness_witness(n).is_none()
}

/// `None` if `n >= 2` is prime, otherwise a divisor or Miller-Rabin base.
fn u64_compositeness_witness(n: u64) -> Option<u64> {
    for &p in &BASES {
        let p = u64::from(p);
        if n == p {
            return None;
        }
        if n.is_multiple_of(p) {
            return Some(p);
        }
    }
    if n < 43 * 43 {
        return None;
    }
    let r = (n - 1).trailing_zeros();
    let d = (n - 1) >> r;
    'bases: for &a in &BASES {
        let a = u64::from(a);
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return Some(a);
    }
    None
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    (u128::from(a) * u128::from(b) % u128::from(m)) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Trivial gcd wrapper kept next to the modular helpers.
pub(crate) fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Pow;

    fn nat(x: u64) -> Nat {
        Nat::from(x)
    }

    fn sieve_primes(limit: usize) -> Vec<bool> {
        let mut is = vec![true; limit + 1];
        is[0] = false;
        is[1] = false;
        let mut i = 2;
        while i * i <= limit {
            if is[i] {
                let mut j = i * i;
                while j <= limit {
                    is[j] = false;
                    j += i;
                }
            }
            i += 1;
        }
        is
    }

    #[test]
    fn examples() {
        assert_eq!(is_prime(&nat(1)).status, PrimalityStatus::Composite);
        assert_eq!(is_prime(&nat(0)).status, PrimalityStatus::Composite);
        let r = is_prime(&nat(561));
        assert_eq!(r.status, PrimalityStatus::Composite);
        assert_eq!(r.witness, Some(nat(3)));
        let m61 = (nat(1) << 61usize) - 1u32;
        assert_eq!(is_prime(&m61).status, PrimalityStatus::Prime);
    }

    #[test]
    fn agrees_with_sieve() {
        let table = sieve_primes(100_000);
        for n in 0..=100_000u64 {
            assert_eq!(is_prime_u64(n), table[n as usize], "n={n}");
        }
    }

    #[test]
    fn strong_pseudoprimes_to_small_bases() {
        // strong pseudoprime to bases 2..=37 (Jiang-Deng)
        let spsp: u128 = 318_665_857_834_031_151_167_461;
        let r = is_prime(&Nat::from(spsp));
        assert_eq!(r.status, PrimalityStatus::Composite);
        // 3215031751 = 151*751*28351 fools bases 2,3,5,7
        assert!(!is_prime_u64(3_215_031_751));
        // Carmichael numbers
        for c in [1105u64, 1729, 2465, 2821, 6601, 8911, 41041, 825265] {
            assert!(!is_prime_u64(c));
        }
    }

    #[test]
    fn big_primes_and_products() {
        let m127 = Pow::pow(&nat(2), 127u32) - 1u32;
        assert_eq!(is_prime(&m127).status, PrimalityStatus::ProbablePrime);
        let m89 = Pow::pow(&nat(2), 89u32) - 1u32;
        // 2^89-1 < DETERMINISTIC_LIMIT? no: it is larger, so probable
        assert!(is_prime(&m89).passes());
        let p = nat(1_000_000_007);
        let q = nat(998_244_353);
        let pq = &p * &q * &p;
        let r = is_prime(&pq);
        assert_eq!(r.status, PrimalityStatus::Composite);
        let w = r.witness.unwrap();
        // reproducible: either a divisor or a base that fails again
        assert!((&pq % &w).is_zero() || !MillerRabin::new(&pq).passes(&w));
    }

    #[test]
    fn deterministic_below_limit() {
        let p: u128 = 18_446_744_073_709_551_629; // first prime above 2^64
        assert_eq!(is_prime(&Nat::from(p)).status, PrimalityStatus::Prime);
    }

    #[test]
    fn pow_mod_basics() {
        assert_eq!(pow_mod(2, 10, 1000), 24);
        assert_eq!(pow_mod(5, 0, 1), 0);
        assert_eq!(gcd_u64(12, 18), 6);
    }
}
