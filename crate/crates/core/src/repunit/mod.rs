//! Lehmer numbers among repunits `(g^n - 1)/(g - 1)` with bounded 2-adic
//! valuation of the base.
//!
//! Even bases with `nu2(g) <= L` and odd bases with `nu2(g + 1) <= L` are
//! searched separately; the filters here decide single pairs and the
//! searches in [`search`] tile whole families with certificates.

mod checkpoint;
mod region;
mod search;

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_traits::{One, Pow, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{nu2, pow_less_than_pow2, Nat};
use crate::bounds::{ratio_str, ExactRational};
use crate::error::{Error, Result};

pub use checkpoint::{Checkpoint, UnitRecord, UnitStatus};
pub use region::{Certificate, CertificateKind, Family, GBound, NClass, Region};
pub use search::{search_a, search_b, search_union};

/// Smallest number of distinct prime factors of a Lehmer number.
pub const K_MIN: u64 = 15;

/// Largest accepted `L`; keeps the cap exponents `2^ceil(L)` in a `u64`.
pub const L_MAX: u32 = 63;

/// The valuation bound `L`, an exact rational in `[1, 63]`.
///
/// Valuations are compared against `floor(L)`. The caps `2^(2^L)` and
/// `2^(2^(L-1))` are replaced by `2^(2^ceil(L))` and `2^(2^(ceil(L)-1))`,
/// which contain the exact caps for non-integer `L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    value: ExactRational,
    floor: u32,
    ceil: u32,
}

impl Level {
    pub fn new(value: ExactRational) -> Result<Self> {
        let floor = value.floor().to_integer().to_u32();
        let ceil = value.ceil().to_integer().to_u32();
        match (floor, ceil) {
            (Some(f), Some(c)) if f >= 1 && c <= L_MAX => Ok(Level {
                value,
                floor: f,
                ceil: c,
            }),
            _ => Err(Error::domain(format!(
                "L must lie in [1, {L_MAX}], got {}",
                ratio_str::format(&value)
            ))),
        }
    }

    pub fn integer(l: u32) -> Result<Self> {
        Level::new(ExactRational::from_integer(Nat::from(l)))
    }

    pub fn value(&self) -> &ExactRational {
        &self.value
    }

    pub fn floor(&self) -> u32 {
        self.floor
    }

    pub fn ceil(&self) -> u32 {
        self.ceil
    }

    pub fn is_integer(&self) -> bool {
        self.floor == self.ceil
    }

    /// `m` with even bases capped by `g < 2^m`.
    pub fn even_cap_exponent(&self) -> u64 {
        1u64 << self.ceil
    }

    /// `m` with odd bases (and `g^(2m+1)`) capped by `2^m`.
    pub fn odd_cap_exponent(&self) -> u64 {
        1u64 << (self.ceil - 1)
    }
}

impl FromStr for Level {
    type Err = Error;

    /// Accepts `14`, `15.5` or `31/2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::domain(format!("cannot parse L from {s:?}"));
        let value = if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let int: Nat = if int.is_empty() {
                Nat::zero()
            } else {
                int.parse().map_err(|_| bad())?
            };
            let scale = Pow::pow(Nat::from(10u32), frac.len());
            let frac: Nat = frac.parse().map_err(|_| bad())?;
            ExactRational::new(int * &scale + frac, scale)
        } else {
            ratio_str::parse(s).ok_or_else(bad)?
        };
        Level::new(value)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&ratio_str::format(&self.value))
    }
}

#[derive(Serialize, Deserialize)]
struct LevelRepr {
    value: String,
    floor: u32,
    ceil: u32,
}

impl Serialize for Level {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        LevelRepr {
            value: self.to_string(),
            floor: self.floor,
            ceil: self.ceil,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Level {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = LevelRepr::deserialize(d)?;
        repr.value.parse().map_err(de::Error::custom)
    }
}

/// A pair `(g, n)` with odd `g >= 3` and odd `n >= 3`, with
/// `n - 1 = 2^s (2m + 1)` and `k_cap = nu2(g + 1) + s - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OddCandidate {
    #[serde(with = "crate::json::nat")]
    pub g: Nat,
    #[serde(with = "crate::json::u64_str")]
    pub n: u64,
    pub s: u32,
    #[serde(with = "crate::json::u64_str")]
    pub m: u64,
    pub v: u32,
    pub k_cap: u64,
}

impl OddCandidate {
    pub fn new(g: &Nat, n: u64) -> Result<Self> {
        if g.is_even() || *g < Nat::from(3u32) {
            return Err(Error::domain("odd-base candidate needs odd g >= 3"));
        }
        if n.is_multiple_of(2) || n < 3 {
            return Err(Error::domain("odd-base candidate needs odd n >= 3"));
        }
        let s = (n - 1).trailing_zeros();
        let m = ((n - 1) >> s) / 2;
        let v = nu2(&(g + 1u32))? as u32;
        Ok(OddCandidate {
            g: g.clone(),
            n,
            s,
            m,
            v,
            k_cap: u64::from(v) + u64::from(s) - 1,
        })
    }

    /// `2m + 1`, the odd part of `n - 1`.
    pub fn odd_part(&self) -> u64 {
        2 * self.m + 1
    }
}

/// Both evaluations of `nu2((g^(n-1) - 1)/(g^(2m+1) - 1))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotientValuation {
    pub closed_form: u64,
    /// From the product `prod_{i<s} (1 + h^(2^i))`, `h = g^(2m+1)`; `None`
    /// when it would exceed the size budget.
    pub direct: Option<u64>,
    pub fell_back: bool,
}

impl QuotientValuation {
    pub fn agrees(&self) -> bool {
        self.direct.is_none_or(|d| d == self.closed_form)
    }
}

/// `nu2(g + 1) + s - 1` for odd `g >= 3`, odd `n >= 3`, `s = nu2(n - 1)`.
pub fn nu2_quotient(g: &Nat, n: u64) -> Result<u64> {
    Ok(OddCandidate::new(g, n)?.k_cap)
}

/// [`nu2_quotient`] together with the direct product, computed only if it
/// stays under `max_bits`.
pub fn nu2_quotient_verified(g: &Nat, n: u64, max_bits: u64) -> Result<QuotientValuation> {
    let c = OddCandidate::new(g, n)?;
    // the product has about (n - 1) * log2(g) bits
    let size = u128::from(n - 1) * u128::from(g.bits());
    if size > u128::from(max_bits) {
        return Ok(QuotientValuation {
            closed_form: c.k_cap,
            direct: None,
            fell_back: true,
        });
    }
    let mut square = Pow::pow(g, c.odd_part());
    let mut product = Nat::one();
    for _ in 0..c.s {
        product *= &square + 1u32;
        square = &square * &square;
    }
    Ok(QuotientValuation {
        closed_form: c.k_cap,
        direct: Some(nu2(&product)?),
        fell_back: false,
    })
}

/// Result of a single-pair filter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum FilterOutcome {
    Pass,
    Pruned { certificate: Certificate },
}

impl FilterOutcome {
    pub fn passes(&self) -> bool {
        matches!(self, FilterOutcome::Pass)
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            FilterOutcome::Pass => None,
            FilterOutcome::Pruned { certificate } => Some(certificate),
        }
    }

    fn pruned(certificate: Certificate) -> Self {
        FilterOutcome::Pruned { certificate }
    }
}

/// Base-only test for even `g` in the even family of `level`.
pub fn even_case_filter(g: &Nat, level: &Level) -> Result<FilterOutcome> {
    if g.is_odd() || g.is_zero() {
        return Err(Error::domain("even-case filter needs even g >= 2"));
    }
    let v = nu2(g)? as u32;
    if v > level.floor() {
        return Err(Error::domain(format!("nu2(g) = {v} exceeds L = {level}")));
    }
    let all_n = Region::base(Family::Even, v, g, 1, None, NClass::All);
    if u64::from(v) < K_MIN {
        return Ok(FilterOutcome::pruned(Certificate::new(
            CertificateKind::EmptyByK15,
            all_n,
        )));
    }
    let m = level.even_cap_exponent();
    if !pow_less_than_pow2(g, 1, m) {
        return Ok(FilterOutcome::pruned(
            Certificate::new(CertificateKind::EmptyByGCap, all_n).with_cap(m),
        ));
    }
    Ok(FilterOutcome::Pass)
}

/// Full test of the pair `(g, n)` with even `g`.
pub fn even_pair_filter(g: &Nat, n: u64, level: &Level) -> Result<FilterOutcome> {
    let base = even_case_filter(g, level)?;
    if !base.passes() {
        return Ok(base);
    }
    let v = nu2(g)? as u32;
    match n {
        0 => Err(Error::domain("repunit length must be at least 1")),
        1 => Ok(FilterOutcome::pruned(Certificate::new(
            CertificateKind::RejectedUnitN,
            Region::point(Family::Even, v, g, 1),
        ))),
        _ => {
            let m = level.even_cap_exponent();
            if pow_less_than_pow2(g, n - 1, m) {
                Ok(FilterOutcome::Pass)
            } else {
                let r = Region::base(Family::Even, v, g, n, Some(n), NClass::All);
                Ok(FilterOutcome::pruned(
                    Certificate::new(CertificateKind::EmptyByNCap, r).with_cap(m),
                ))
            }
        }
    }
}

/// Test of a well-formed odd-base candidate: base cap, `k_cap >= 15`, then
/// `g^(2m+1) < 2^(2^(L-1))`.
pub fn odd_case_filter(c: &OddCandidate, level: &Level) -> Result<FilterOutcome> {
    if c.v > level.floor() {
        return Err(Error::domain(format!(
            "nu2(g+1) = {} exceeds L = {level}",
            c.v
        )));
    }
    let m = level.odd_cap_exponent();
    let o = c.odd_part();
    let point_class = NClass::Odd {
        s_lo: c.s,
        s_hi: Some(c.s),
        o_lo: o,
        o_hi: Some(o),
    };
    let point = Region::base(Family::Odd, c.v, &c.g, c.n, Some(c.n), point_class);
    if !pow_less_than_pow2(&c.g, 1, m) {
        return Ok(FilterOutcome::pruned(
            Certificate::new(CertificateKind::EmptyByGCap, point).with_cap(m),
        ));
    }
    if c.k_cap < K_MIN {
        return Ok(FilterOutcome::pruned(Certificate::new(
            CertificateKind::EmptyByK15,
            point,
        )));
    }
    if !pow_less_than_pow2(&c.g, o, m) {
        return Ok(FilterOutcome::pruned(
            Certificate::new(CertificateKind::EmptyByNCap, point).with_cap(m),
        ));
    }
    Ok(FilterOutcome::Pass)
}

/// Full test of the pair `(g, n)` with odd `g >= 3`, any `n >= 1`.
pub fn odd_pair_filter(g: &Nat, n: u64, level: &Level) -> Result<FilterOutcome> {
    if g.is_even() || *g < Nat::from(3u32) {
        return Err(Error::domain("odd-case filter needs odd g >= 3"));
    }
    let v = nu2(&(g + 1u32))? as u32;
    if v > level.floor() {
        return Err(Error::domain(format!("nu2(g+1) = {v} exceeds L = {level}")));
    }
    let m = level.odd_cap_exponent();
    if !pow_less_than_pow2(g, 1, m) {
        let r = Region::point(Family::Odd, v, g, n);
        return Ok(FilterOutcome::pruned(
            Certificate::new(CertificateKind::EmptyByGCap, r).with_cap(m),
        ));
    }
    match n {
        0 => Err(Error::domain("repunit length must be at least 1")),
        1 => Ok(FilterOutcome::pruned(Certificate::new(
            CertificateKind::RejectedUnitN,
            Region::point(Family::Odd, v, g, 1),
        ))),
        _ if n.is_multiple_of(2) => Ok(FilterOutcome::pruned(Certificate::new(
            CertificateKind::RejectedEvenN,
            Region::base(Family::Odd, v, g, n, Some(n), NClass::Even),
        ))),
        _ => odd_case_filter(&OddCandidate::new(g, n)?, level),
    }
}

/// Whether the searches for `level` would evaluate the repunit at `(g, n)`.
/// Odd bases additionally need `n <= n_max`.
pub fn is_enumerated(g: &Nat, n: u64, level: &Level, n_max: u64) -> bool {
    if *g < Nat::from(2u32) || n == 0 {
        return false;
    }
    let outcome = match Family::of(g) {
        Family::Even => {
            if nu2(g).map_or(true, |v| v > u64::from(level.floor())) {
                return false;
            }
            even_pair_filter(g, n, level)
        }
        Family::Odd => {
            if n > n_max || *g < Nat::from(3u32) {
                return false;
            }
            if nu2(&(g + 1u32)).map_or(true, |v| v > u64::from(level.floor())) {
                return false;
            }
            odd_pair_filter(g, n, level)
        }
    };
    outcome.is_ok_and(|o| o.passes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nat(x: u64) -> Nat {
        Nat::from(x)
    }

    fn level(s: &str) -> Level {
        s.parse().unwrap()
    }

    #[test]
    fn level_parsing() {
        let l = level("15.5");
        assert_eq!((l.floor(), l.ceil()), (15, 16));
        assert_eq!(l.to_string(), "31/2");
        assert_eq!(level("31/2"), l);
        let i = level("14");
        assert_eq!((i.floor(), i.ceil()), (14, 14));
        assert!(i.is_integer());
        assert_eq!(i.even_cap_exponent(), 1 << 14);
        assert_eq!(i.odd_cap_exponent(), 1 << 13);
        assert!("0.5".parse::<Level>().is_err());
        assert!("64".parse::<Level>().is_err());
        assert!("63.5".parse::<Level>().is_err());
        assert!("abc".parse::<Level>().is_err());
        assert!("1.".parse::<Level>().is_err());
        let json = serde_json::to_value(&l).unwrap();
        assert_eq!(json["value"], "31/2");
        assert_eq!(serde_json::from_value::<Level>(json).unwrap(), l);
    }

    #[test]
    fn quotient_examples() {
        assert_eq!(nu2_quotient(&nat(3), 5).unwrap(), 3);
        assert_eq!(nu2_quotient(&nat(7), 3).unwrap(), 3);
        assert!(nu2_quotient(&nat(5), 2).is_err());
        assert!(nu2_quotient(&nat(4), 5).is_err());
        let q = nu2_quotient_verified(&nat(3), 5, 1 << 20).unwrap();
        assert_eq!(q.direct, Some(3));
        assert!(q.agrees() && !q.fell_back);
        let big = nu2_quotient_verified(&nat(3), 1001, 64).unwrap();
        assert!(big.fell_back);
        assert_eq!(big.direct, None);
        assert_eq!(big.closed_form, 2 + 3 - 1);
    }

    #[test]
    fn even_filter_examples() {
        let l = level("15");
        let c = even_case_filter(&nat(6), &l).unwrap();
        assert_eq!(c.certificate().unwrap().kind, CertificateKind::EmptyByK15);
        assert!(c.certificate().unwrap().recheck());
        assert!(even_case_filter(&nat(1 << 15), &l).unwrap().passes());
        assert!(even_case_filter(&nat(1 << 16), &l).is_err());
        assert!(even_case_filter(&nat(7), &l).is_err());
        // n cap: 15 (n - 1) < 2^15
        assert!(even_pair_filter(&nat(1 << 15), 2185, &l).unwrap().passes());
        let out = even_pair_filter(&nat(1 << 15), 2186, &l).unwrap();
        let cert = out.certificate().unwrap();
        assert_eq!(cert.kind, CertificateKind::EmptyByNCap);
        assert!(cert.recheck());
    }

    #[test]
    fn odd_filter_examples() {
        let l = level("16");
        let c = OddCandidate::new(&nat(3), 9).unwrap();
        assert_eq!((c.s, c.m, c.k_cap), (3, 0, 4));
        let out = odd_case_filter(&c, &l).unwrap();
        assert_eq!(out.certificate().unwrap().kind, CertificateKind::EmptyByK15);
        assert!(out.certificate().unwrap().recheck());

        let even_n = odd_pair_filter(&nat(3), 4, &l).unwrap();
        assert_eq!(
            even_n.certificate().unwrap().kind,
            CertificateKind::RejectedEvenN
        );
        assert!(even_n.certificate().unwrap().recheck());

        let small = level("2");
        let capped = odd_pair_filter(&nat(5), 3, &small).unwrap();
        assert_eq!(
            capped.certificate().unwrap().kind,
            CertificateKind::EmptyByGCap
        );
        assert!(capped.certificate().unwrap().recheck());

        // g = 2^14 - 1: nu2(g + 1) = 14, n = 5 gives k_cap = 15
        let g = nat((1 << 14) - 1);
        assert!(odd_pair_filter(&g, 5, &level("14")).unwrap().passes());
        // g^(2m+1) with 2m+1 = 1001 exceeds 2^(2^13)
        let out = odd_pair_filter(&g, 1 + 4 * 1001, &level("14")).unwrap();
        assert_eq!(
            out.certificate().unwrap().kind,
            CertificateKind::EmptyByNCap
        );
        assert!(out.certificate().unwrap().recheck());
    }

    #[test]
    fn enumeration_predicate() {
        let l = level("14");
        assert!(!is_enumerated(&nat(1 << 14), 3, &l, 100));
        assert!(is_enumerated(&nat((1 << 14) - 1), 5, &l, 100));
        assert!(!is_enumerated(&nat((1 << 14) - 1), 5, &l, 4));
        assert!(!is_enumerated(&nat(3), 5, &l, 100));
    }
}
