//! Exact arithmetic primitives: 2-adic valuation, repunits, exact power
//! comparison, primality, factorization and the totient sieve.

mod factor;
mod primality;
mod sieve;

pub(crate) use factor::split_cofactor;
pub use factor::{
    euler_phi, factorize, small_primes, trial_divide, Certainty, Factorization, PrimePower,
    TrialDivision, TRIAL_DIVISION_LIMIT,
};
pub use primality::{
    is_prime, is_prime_u64, is_prime_with_rounds, PrimalityResult, PrimalityStatus,
    DETERMINISTIC_LIMIT,
};
pub use sieve::{totient_sieve, SIEVE_CAP};

use num_bigint::BigUint;
use num_traits::{One, Pow, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision non-negative integer.
pub type Nat = BigUint;

/// Exponent of the largest power of two dividing `n`.
pub fn nu2(n: &Nat) -> Result<u64> {
    n.trailing_zeros().ok_or(Error::UndefinedValuation)
}

pub fn nu2_u64(n: u64) -> Result<u32> {
    if n == 0 {
        return Err(Error::UndefinedValuation);
    }
    Ok(n.trailing_zeros())
}

/// The base-`g` repunit `(g^n - 1)/(g - 1) = 1 + g + ... + g^(n-1)`.
pub fn repunit(g: &Nat, n: u64) -> Result<Nat> {
    if *g < Nat::from(2u32) {
        return Err(Error::domain("repunit base must be at least 2"));
    }
    if n == 0 {
        return Err(Error::domain("repunit length must be at least 1"));
    }
    let numerator = Pow::pow(g, n) - 1u32;
    let denominator = g - 1u32;
    let (q, r) = num_integer::Integer::div_rem(&numerator, &denominator);
    assert!(r.is_zero(), "g - 1 must divide g^n - 1");
    Ok(q)
}

/// Bits needed to hold `repunit(g, n)`, rounded up.
pub fn repunit_bits_upper(g: &Nat, n: u64) -> u128 {
    u128::from(n) * u128::from(g.bits())
}

/// Whether `g^e < cap_base^cap_exp`, decided with integers only.
///
/// Bit lengths bracket both sides first; the powers are only materialized
/// when the brackets overlap, in which case both sides have comparable size.
pub fn pow_check_less(g: &Nat, e: u64, cap_base: &Nat, cap_exp: u64) -> bool {
    if e == 0 || g.is_one() || g.is_zero() {
        let lhs = if e == 0 || g.is_one() { 1u32 } else { 0u32 };
        let rhs = if cap_exp == 0 || cap_base.is_one() {
            Nat::one()
        } else if cap_base.is_zero() {
            Nat::zero()
        } else {
            // cap_base >= 2 and cap_exp >= 1
            return true;
        };
        return Nat::from(lhs) < rhs;
    }
    // g >= 2, e >= 1: lhs >= 2.
    if cap_exp == 0 || cap_base.is_zero() || cap_base.is_one() {
        return false;
    }
    let (bg, bc) = (u128::from(g.bits()), u128::from(cap_base.bits()));
    let (e, c) = (u128::from(e), u128::from(cap_exp));
    // 2^(b-1) <= x < 2^b
    let lhs_hi = e * bg;
    let lhs_lo = e * (bg - 1);
    let rhs_hi = c * bc;
    let rhs_lo = c * (bc - 1);
    if lhs_hi <= rhs_lo {
        return true;
    }
    if lhs_lo >= rhs_hi {
        return false;
    }
    let lhs = Pow::pow(g, e as u64);
    if is_power_of_two(cap_base) {
        // cap = 2^(cap_exp * (bc - 1)) exactly
        return lhs.bits() as u128 <= rhs_lo;
    }
    lhs < Pow::pow(cap_base, c as u64)
}

/// Whether `g^e < 2^m`.
pub fn pow_less_than_pow2(g: &Nat, e: u64, m: u64) -> bool {
    pow_check_less(g, e, &Nat::from(2u32), m)
}

pub(crate) fn is_power_of_two(x: &Nat) -> bool {
    !x.is_zero() && x.trailing_zeros() == Some(x.bits() - 1)
}
