//! Nielsen's product inequality, the upper bound `2^(2^K) - 2^(2^(K-1))`
//! for numbers with the Lehmer property, Pomerance's older `K^(2^K)`, and
//! the exact rational chain that places `phi(n)/(n-1)` between consecutive
//! partial products of `1 - 1/p`.
//!
//! Everything here is integer or exact-rational arithmetic.

use std::cmp::Ordering;
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{euler_phi, Factorization, Nat};
use crate::config::Limits;
use crate::error::{Error, Result};

/// Non-negative rational in lowest terms.
pub type ExactRational = Ratio<Nat>;

pub mod ratio_str {
    //! `"p/q"` strings for [`ExactRational`](super::ExactRational).
    use super::*;
    use serde::{de, Deserializer, Serializer};

    pub fn format(r: &ExactRational) -> String {
        format!("{}/{}", r.numer(), r.denom())
    }

    pub fn parse(s: &str) -> Option<ExactRational> {
        let (p, q) = s.split_once('/').unwrap_or((s, "1"));
        let p = Nat::parse_bytes(p.trim().as_bytes(), 10)?;
        let q = Nat::parse_bytes(q.trim().as_bytes(), 10)?;
        (!q.is_zero()).then(|| Ratio::new(p, q))
    }

    pub fn serialize<S: Serializer>(r: &ExactRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ExactRational, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).ok_or_else(|| de::Error::custom(format!("bad rational `{s}`")))
    }
}

/// `(prod_{j<=r} (1 - 1/x_j), prod_{j<r} (1 - 1/x_j))`; the empty product is 1.
pub fn partial_products(xs: &[Nat]) -> (ExactRational, ExactRational) {
    let mut upper = ExactRational::one();
    let mut lower = ExactRational::one();
    for (j, x) in xs.iter().enumerate() {
        lower *= Ratio::new(x - 1u32, x.clone());
        if j + 1 < xs.len() {
            upper = lower.clone();
        }
    }
    (lower, upper)
}

/// Why a tuple is not an instance of the lemma.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MembershipFailure {
    Empty,
    NotAboveOne {
        index: usize,
    },
    NotIncreasing {
        index: usize,
    },
    ZeroNumerator,
    ZeroDenominator,
    /// `a/b < prod_{j<=r}(1 - 1/x_j)`
    BelowLower {
        ratio: String,
        lower: String,
    },
    /// `a/b >= prod_{j<r}(1 - 1/x_j)`
    NotBelowUpper {
        ratio: String,
        upper: String,
    },
}

impl fmt::Display for MembershipFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MembershipFailure::Empty => write!(f, "xs is empty"),
            MembershipFailure::NotAboveOne { index } => write!(f, "x[{index}] is not > 1"),
            MembershipFailure::NotIncreasing { index } => {
                write!(f, "x[{index}] is not greater than x[{}]", index - 1)
            }
            MembershipFailure::ZeroNumerator => write!(f, "a must be positive"),
            MembershipFailure::ZeroDenominator => write!(f, "b must be positive"),
            MembershipFailure::BelowLower { ratio, lower } => {
                write!(f, "lower inequality fails: a/b = {ratio} < {lower}")
            }
            MembershipFailure::NotBelowUpper { ratio, upper } => {
                write!(f, "upper inequality fails: a/b = {ratio} >= {upper}")
            }
        }
    }
}

fn check_membership(xs: &[Nat], a: &Nat, b: &ExactRational) -> Result<(), MembershipFailure> {
    if xs.is_empty() {
        return Err(MembershipFailure::Empty);
    }
    if xs[0] <= Nat::one() {
        return Err(MembershipFailure::NotAboveOne { index: 0 });
    }
    if let Some(i) = (1..xs.len()).find(|&i| xs[i] <= xs[i - 1]) {
        return Err(MembershipFailure::NotIncreasing { index: i });
    }
    if a.is_zero() {
        return Err(MembershipFailure::ZeroNumerator);
    }
    if b.is_zero() {
        return Err(MembershipFailure::ZeroDenominator);
    }
    let ratio = Ratio::from_integer(a.clone()) / b;
    let (lower, upper) = partial_products(xs);
    if ratio < lower {
        return Err(MembershipFailure::BelowLower {
            ratio: ratio_str::format(&ratio),
            lower: ratio_str::format(&lower),
        });
    }
    if ratio >= upper {
        return Err(MembershipFailure::NotBelowUpper {
            ratio: ratio_str::format(&ratio),
            upper: ratio_str::format(&upper),
        });
    }
    Ok(())
}

/// `x_1 < ... < x_r` (all > 1) with `a/b` in `[prod_{j<=r}(1-1/x_j), prod_{j<r}(1-1/x_j))`.
///
/// `a` is a positive integer. `b` may be any positive rational so that the
/// instance built from `phi(n)/(n-1)` can be represented; the lemma's own
/// hypotheses additionally need `b` integral ([`Self::lemma_applies`]).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NielsenInstance {
    #[serde(with = "crate::json::vec_nat")]
    xs: Vec<Nat>,
    #[serde(with = "crate::json::nat")]
    a: Nat,
    #[serde(with = "ratio_str")]
    b: ExactRational,
}

impl NielsenInstance {
    pub fn new(xs: Vec<Nat>, a: Nat, b: ExactRational) -> Result<Self> {
        check_membership(&xs, &a, &b).map_err(Error::InvalidInstance)?;
        Ok(NielsenInstance { xs, a, b })
    }

    pub fn from_integers(xs: Vec<Nat>, a: Nat, b: Nat) -> Result<Self> {
        Self::new(xs, a, Ratio::from_integer(b))
    }

    pub fn xs(&self) -> &[Nat] {
        &self.xs
    }

    pub fn a(&self) -> &Nat {
        &self.a
    }

    pub fn b(&self) -> &ExactRational {
        &self.b
    }

    pub fn r(&self) -> usize {
        self.xs.len()
    }

    pub fn ratio(&self) -> ExactRational {
        Ratio::from_integer(self.a.clone()) / &self.b
    }

    /// Both `a` and `b` are natural numbers.
    pub fn lemma_applies(&self) -> bool {
        self.b.is_integer()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = "<=")]
    LessOrEqual,
    #[serde(rename = "=")]
    Equal,
    #[serde(rename = ">")]
    Greater,
}

impl Relation {
    pub fn of(ord: Ordering) -> Self {
        match ord {
            Ordering::Less => Relation::Less,
            Ordering::Equal => Relation::Equal,
            Ordering::Greater => Relation::Greater,
        }
    }
}

/// `{lhs, rhs, relation, inputs}` with every integer as a decimal string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    #[serde(with = "crate::json::nat")]
    pub lhs: Nat,
    #[serde(with = "crate::json::nat")]
    pub rhs: Nat,
    pub relation: Relation,
    pub inputs: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NielsenCheck {
    /// `a * prod x_j <= (a+1)^(2^r) - (a+1)^(2^(r-1))`
    pub holds: bool,
    /// The instance meets the lemma's integrality hypotheses, so `holds`
    /// must be true.
    pub lemma_applies: bool,
    pub certificate: BoundCertificate,
}

impl NielsenCheck {
    /// A counterexample to the lemma.
    pub fn is_violation(&self) -> bool {
        self.lemma_applies && !self.holds
    }
}

/// Evaluate both sides of the lemma's conclusion exactly.
pub fn nielsen_check(inst: &NielsenInstance, limits: &Limits) -> Result<NielsenCheck> {
    check_membership(&inst.xs, &inst.a, &inst.b).map_err(Error::InvalidInstance)?;
    let r = inst.r() as u32;
    let a1 = &inst.a + 1u32;
    if r >= 64 {
        return Err(Error::Resource {
            what: "Nielsen right-hand side",
            requested: format!("2^{r} exponent"),
            cap: "r < 64".into(),
        });
    }
    limits.check_bits("Nielsen right-hand side", u128::from(a1.bits()) << r)?;
    // (a+1)^(2^(r-1)) by r-1 squarings
    let mut half = a1;
    for _ in 1..r {
        half = &half * &half;
    }
    let full = &half * &half;
    let rhs = full - half;
    let lhs = inst.xs.iter().fold(inst.a.clone(), |acc, x| acc * x);
    let holds = lhs <= rhs;
    let inputs = serde_json::json!({
        "xs": inst.xs.iter().map(|x| x.to_str_radix(10)).collect::<Vec<_>>(),
        "a": inst.a.to_str_radix(10),
        "b": ratio_str::format(&inst.b),
    });
    Ok(NielsenCheck {
        holds,
        lemma_applies: inst.lemma_applies(),
        certificate: BoundCertificate {
            relation: if holds {
                Relation::LessOrEqual
            } else {
                Relation::Greater
            },
            lhs,
            rhs,
            inputs,
        },
    })
}

fn check_k(k: u32, limits: &Limits) -> Result<()> {
    if k == 0 {
        return Err(Error::domain("K must be at least 1"));
    }
    if k > limits.k_cap || k >= 64 {
        return Err(Error::Resource {
            what: "bound evaluation",
            requested: format!("K = {k}"),
            cap: format!("K <= {}", limits.k_cap.min(63)),
        });
    }
    Ok(())
}

/// `2^(2^K) - 2^(2^(K-1))`.
pub fn new_bound(k: u32, limits: &Limits) -> Result<Nat> {
    check_k(k, limits)?;
    let m = 1u64 << k;
    limits.check_bits("new bound", u128::from(m) + 1)?;
    Ok((Nat::one() << m) - (Nat::one() << (m / 2)))
}

/// `K^(2^K)`.
pub fn pomerance_bound(k: u32, limits: &Limits) -> Result<Nat> {
    check_k(k, limits)?;
    let base = Nat::from(k);
    limits.check_bits("Pomerance bound", u128::from(base.bits()) << k)?;
    let mut acc = base;
    for _ in 0..k {
        acc = &acc * &acc;
    }
    Ok(acc)
}

/// How a [`BoundComparison`] was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonMethod {
    /// Both integers were computed and compared.
    Materialized,
    /// `new < 2^(2^K) <= 2^((bits(K)-1) * 2^K) <= K^(2^K)`.
    BitBracket,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundComparison {
    pub k: u32,
    /// Relation of the new bound to Pomerance's.
    pub relation: Relation,
    pub method: ComparisonMethod,
    /// Bit length of the new bound, which is exactly `2^K`.
    #[serde(with = "crate::json::u64_str")]
    pub new_bound_bits: u64,
    #[serde(
        with = "crate::json::opt_nat",
        skip_serializing_if = "Option::is_none",
        default
    )]
    pub new_bound: Option<Nat>,
    #[serde(
        with = "crate::json::opt_nat",
        skip_serializing_if = "Option::is_none",
        default
    )]
    pub pomerance_bound: Option<Nat>,
}

/// Compare `new_bound(K)` with `pomerance_bound(K)` exactly.
///
/// Values are computed when `K^(2^K)` fits in `materialize_bits`; larger K
/// fall back to the bit-length bracket, which is exact for every `K >= 2`.
/// `keep_values` stores the computed integers on the result.
pub fn compare_bounds(k: u32, materialize_bits: u64, keep_values: bool) -> Result<BoundComparison> {
    if k == 0 || k >= 64 {
        return Err(Error::domain("K must lie in 1..=63"));
    }
    let new_bound_bits = 1u64 << k;
    let pom_bits = u128::from(Nat::from(k).bits()) << k;
    if pom_bits <= u128::from(materialize_bits) {
        let limits = Limits {
            max_bits: materialize_bits.max(new_bound_bits + 1),
            k_cap: 63,
        };
        let new = new_bound(k, &limits)?;
        let pom = pomerance_bound(k, &limits)?;
        debug_assert_eq!(new.bits(), new_bound_bits);
        let relation = Relation::of(new.cmp(&pom));
        return Ok(BoundComparison {
            k,
            relation,
            method: ComparisonMethod::Materialized,
            new_bound_bits,
            new_bound: keep_values.then_some(new),
            pomerance_bound: keep_values.then_some(pom),
        });
    }
    if k < 2 {
        return Err(Error::precondition("bit bracket needs K >= 2"));
    }
    Ok(BoundComparison {
        k,
        relation: Relation::Less,
        method: ComparisonMethod::BitBracket,
        new_bound_bits,
        new_bound: None,
        pomerance_bound: None,
    })
}

/// Certificate of the strict chain
/// `prod_{j<=K}(1-1/p_j) < phi(n)/(n-1) < prod_{j<K}(1-1/p_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainCertificate {
    #[serde(with = "crate::json::nat")]
    pub n: Nat,
    pub k: usize,
    #[serde(with = "ratio_str")]
    pub lower: ExactRational,
    #[serde(with = "ratio_str")]
    pub middle: ExactRational,
    #[serde(with = "ratio_str")]
    pub upper: ExactRational,
    pub lower_below_middle: bool,
    pub middle_below_upper: bool,
    /// The lemma instance `x_j = p_j`, `a = 1`, `b = (n-1)/phi(n)`, present
    /// whenever the chain holds.
    pub instance: Option<NielsenInstance>,
}

impl ChainCertificate {
    pub fn holds(&self) -> bool {
        self.lower_below_middle && self.middle_below_upper
    }
}

/// Verify the chain for an odd squarefree composite with a complete factorization.
pub fn theorem_chain_check(f: &Factorization) -> Result<ChainCertificate> {
    if !f.complete {
        return Err(Error::IncompleteFactorization(f.subject.to_str_radix(10)));
    }
    let n = &f.subject;
    if n.is_even() {
        return Err(Error::precondition(format!("{n} is even")));
    }
    if f.has_square_factor() {
        return Err(Error::precondition(format!("{n} is not squarefree")));
    }
    let k = f.factors.len();
    if k < 2 {
        return Err(Error::precondition(format!(
            "{n} has fewer than two prime factors"
        )));
    }
    let xs: Vec<Nat> = f.primes().cloned().collect();
    let (lower, upper) = partial_products(&xs);
    let phi = euler_phi(f)?;
    let middle = Ratio::new(phi.clone(), n - 1u32);
    let lower_below_middle = lower < middle;
    let middle_below_upper = middle < upper;
    let instance = if lower_below_middle && middle_below_upper {
        Some(NielsenInstance::new(
            xs,
            Nat::one(),
            Ratio::new(n - 1u32, phi),
        )?)
    } else {
        None
    };
    Ok(ChainCertificate {
        n: n.clone(),
        k,
        lower,
        middle,
        upper,
        lower_below_middle,
        middle_below_upper,
        instance,
    })
}

/// `n <= 2^(2^K) - 2^(2^(K-1))` where `K` is the number of distinct primes of `n`.
pub fn bound_holds(n: &Nat, f: &Factorization) -> Result<bool> {
    if !f.complete {
        return Err(Error::IncompleteFactorization(f.subject.to_str_radix(10)));
    }
    if f.subject != *n {
        return Err(Error::precondition(
            "factorization is for a different integer",
        ));
    }
    let k = f.factors.len();
    if k == 0 {
        return Err(Error::domain("n = 1 has no prime divisors"));
    }
    if k >= 64 {
        // bits(n) < 2^64 <= 2^K - 1
        return Ok(true);
    }
    // The bound has exactly m = 2^K bits and is at least 2^(m-1).
    let m = 1u64 << k;
    match n.bits().cmp(&m) {
        Ordering::Less => Ok(true),
        Ordering::Greater => Ok(false),
        Ordering::Equal => Ok(*n <= (Nat::one() << m) - (Nat::one() << (m / 2))),
    }
}
