//! Regions of the `(g, n)` plane and the certificates that empty them.

use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{nu2, pow_less_than_pow2, Nat};

/// Which valuation a region's band constrains: `nu2(g)` for even bases,
/// `nu2(g + 1)` for odd bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Even,
    Odd,
}

impl Family {
    /// The pipeline a base belongs to. For `g >= 1` exactly one of
    /// `nu2(g)`, `nu2(g + 1)` is nonzero.
    pub fn of(g: &Nat) -> Family {
        if g.bit(0) {
            Family::Odd
        } else {
            Family::Even
        }
    }

    /// `nu2(g)` or `nu2(g + 1)`; `None` when `g` has the other parity or is 0.
    pub fn valuation(self, g: &Nat) -> Option<u64> {
        match self {
            Family::Even if !g.bit(0) => nu2(g).ok(),
            Family::Odd if g.bit(0) => nu2(&(g + 1u32)).ok(),
            _ => None,
        }
    }
}

/// A bound on the base, either an explicit integer or `2^m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GBound {
    Int(Nat),
    Pow2(u64),
}

impl GBound {
    pub fn int(x: u64) -> Self {
        GBound::Int(Nat::from(x))
    }

    /// `g < self`
    pub fn exceeds(&self, g: &Nat) -> bool {
        match self {
            GBound::Int(b) => g < b,
            GBound::Pow2(m) => g.bits() <= *m,
        }
    }

    /// `self <= g`
    pub fn at_most(&self, g: &Nat) -> bool {
        !self.exceeds(g)
    }
}

impl fmt::Display for GBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GBound::Int(x) => write!(f, "{x}"),
            GBound::Pow2(m) => write!(f, "2^{m}"),
        }
    }
}

impl FromStr for GBound {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(exp) = s.strip_prefix("2^") {
            return exp.parse().map(GBound::Pow2).map_err(|e| e.to_string());
        }
        crate::json::parse_decimal::<de::value::Error>(s)
            .map(GBound::Int)
            .map_err(|e| e.to_string())
    }
}

impl Serialize for GBound {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GBound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}

/// Constraint on the repunit length `n` beyond its interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum NClass {
    All,
    Even,
    /// Odd `n >= 3` with `n - 1 = 2^s * o`, `o` odd, `s` and `o` in range.
    Odd {
        s_lo: u32,
        s_hi: Option<u32>,
        o_lo: u64,
        o_hi: Option<u64>,
    },
}

impl NClass {
    pub fn odd_s(s_lo: u32, s_hi: Option<u32>) -> Self {
        NClass::Odd {
            s_lo,
            s_hi,
            o_lo: 1,
            o_hi: None,
        }
    }

    pub fn contains(&self, n: u64) -> bool {
        match self {
            NClass::All => true,
            NClass::Even => n.is_multiple_of(2),
            NClass::Odd {
                s_lo,
                s_hi,
                o_lo,
                o_hi,
            } => {
                if n < 3 || n.is_multiple_of(2) {
                    return false;
                }
                let s = (n - 1).trailing_zeros();
                let o = (n - 1) >> s;
                s >= *s_lo
                    && s_hi.is_none_or(|h| s <= h)
                    && o >= *o_lo
                    && o_hi.is_none_or(|h| o <= h)
            }
        }
    }
}

/// Pairs `(g, n)` with the family's valuation in `[nu2_lo, nu2_hi]`,
/// `g_lo <= g < g_end`, `n_lo <= n <= n_hi` and `n` in `n_class`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub family: Family,
    pub nu2_lo: u32,
    pub nu2_hi: u32,
    pub g_lo: GBound,
    pub g_end: Option<GBound>,
    #[serde(with = "crate::json::u64_str")]
    pub n_lo: u64,
    #[serde(with = "crate::json::opt_u64_str")]
    pub n_hi: Option<u64>,
    pub n_class: NClass,
}

impl Region {
    /// The single pair `(g, n)`.
    pub fn point(family: Family, v: u32, g: &Nat, n: u64) -> Self {
        Region::base(family, v, g, n, Some(n), NClass::All)
    }

    /// One base `g` (with valuation `v`), lengths in `[n_lo, n_hi]` of class `n_class`.
    pub fn base(
        family: Family,
        v: u32,
        g: &Nat,
        n_lo: u64,
        n_hi: Option<u64>,
        n_class: NClass,
    ) -> Self {
        Region {
            family,
            nu2_lo: v,
            nu2_hi: v,
            g_lo: GBound::Int(g.clone()),
            g_end: Some(GBound::Int(g + 1u32)),
            n_lo,
            n_hi,
            n_class,
        }
    }

    pub fn contains(&self, g: &Nat, n: u64) -> bool {
        let Some(v) = self.family.valuation(g) else {
            return false;
        };
        v >= u64::from(self.nu2_lo)
            && v <= u64::from(self.nu2_hi)
            && self.g_lo.at_most(g)
            && self.g_end.as_ref().is_none_or(|e| e.exceeds(g))
            && n >= self.n_lo
            && self.n_hi.is_none_or(|h| n <= h)
            && self.n_class.contains(n)
    }

    /// The base when the region holds exactly one `g`.
    pub fn single_base(&self) -> Option<&Nat> {
        match (&self.g_lo, &self.g_end) {
            (GBound::Int(lo), Some(GBound::Int(end))) if &(lo + 1u32) == end => Some(lo),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// `K >= 15` is impossible: `K <= nu2(g)` for even g, or
    /// `K <= nu2(g+1) + nu2(n-1) - 1` for odd g.
    EmptyByK15,
    /// The base is at or above the family's cap.
    EmptyByGCap,
    /// `g^(n-1)` (even g) or `g^(2m+1)` (odd g) reaches the cap.
    EmptyByNCap,
    /// Odd g and even n: the repunit minus one is odd.
    RejectedEvenN,
    /// n = 1: the repunit is 1.
    RejectedUnitN,
    /// Annotates an evaluated pair whose Lehmer check was inconclusive.
    CandidateUnresolved,
}

/// A machine-checkable claim that `region` holds no Lehmer number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub region: Region,
    pub rule: String,
    /// `m` in the cap `2^m` used by cap rules.
    #[serde(
        with = "crate::json::opt_u64_str",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub cap_exponent: Option<u64>,
}

impl Certificate {
    pub fn new(kind: CertificateKind, region: Region) -> Self {
        Certificate {
            rule: rule_text(kind, region.family).to_string(),
            kind,
            region,
            cap_exponent: None,
        }
    }

    pub fn with_cap(mut self, m: u64) -> Self {
        self.cap_exponent = Some(m);
        self
    }

    /// Whether this certificate counts toward tiling the search space.
    pub fn covers(&self) -> bool {
        self.kind != CertificateKind::CandidateUnresolved
    }

    /// Re-run the cited rule on the region.
    pub fn recheck(&self) -> bool {
        let r = &self.region;
        if r.nu2_lo > r.nu2_hi || r.nu2_lo == 0 {
            return false;
        }
        match (self.kind, r.family) {
            (CertificateKind::EmptyByK15, Family::Even) => r.nu2_hi < 15,
            (CertificateKind::EmptyByK15, Family::Odd) => {
                let NClass::Odd { s_hi, .. } = &r.n_class else {
                    return false;
                };
                // n <= n_hi bounds s by floor(log2(n_hi - 1))
                let s_from_n = r
                    .n_hi
                    .map(|h| 63 - h.saturating_sub(1).max(1).leading_zeros());
                let s_max = match (s_hi, s_from_n) {
                    (Some(a), Some(b)) => (*a).min(b),
                    (Some(a), None) => *a,
                    (None, Some(b)) => b,
                    (None, None) => return false,
                };
                u64::from(r.nu2_hi) + u64::from(s_max) < 16
            }
            (CertificateKind::EmptyByGCap, _) => match (self.cap_exponent, &r.g_lo) {
                (Some(m), GBound::Pow2(e)) => *e >= m,
                (Some(m), GBound::Int(g)) => !pow_less_than_pow2(g, 1, m),
                _ => false,
            },
            (CertificateKind::EmptyByNCap, Family::Even) => {
                let (Some(m), Some(g)) = (self.cap_exponent, r.single_base()) else {
                    return false;
                };
                // g^(n-1) is increasing in n
                r.n_lo >= 1 && !pow_less_than_pow2(g, r.n_lo - 1, m)
            }
            (CertificateKind::EmptyByNCap, Family::Odd) => {
                let (Some(m), Some(g)) = (self.cap_exponent, r.single_base()) else {
                    return false;
                };
                match &r.n_class {
                    NClass::Odd { o_lo, .. } => !pow_less_than_pow2(g, *o_lo, m),
                    _ => false,
                }
            }
            (CertificateKind::RejectedEvenN, Family::Odd) => {
                r.n_class == NClass::Even && r.n_lo >= 2
            }
            (CertificateKind::RejectedUnitN, _) => r.n_lo == 1 && r.n_hi == Some(1),
            (CertificateKind::CandidateUnresolved, _) => {
                r.single_base().is_some() && r.n_hi == Some(r.n_lo)
            }
            _ => false,
        }
    }
}

fn rule_text(kind: CertificateKind, family: Family) -> &'static str {
    match (kind, family) {
        (CertificateKind::EmptyByK15, Family::Even) => {
            "2^K | phi(a) | a - 1 = g * (odd) forces K <= nu2(g); K >= 15 needs nu2(g) >= 15"
        }
        (CertificateKind::EmptyByK15, Family::Odd) => {
            "K <= nu2(g+1) + nu2(n-1) - 1; K >= 15 needs nu2(g+1) + nu2(n-1) >= 16"
        }
        (CertificateKind::EmptyByGCap, Family::Even) => "g < 2^(2^L) for even g",
        (CertificateKind::EmptyByGCap, Family::Odd) => "g < 2^(2^(L-1)) for odd g",
        (CertificateKind::EmptyByNCap, Family::Even) => "g^(n-1) < a < 2^(2^K) <= 2^(2^L)",
        (CertificateKind::EmptyByNCap, Family::Odd) => {
            "n - 1 = 2^s (2m+1) with g^(2m+1) < 2^(2^(L-1))"
        }
        (CertificateKind::RejectedEvenN, _) => {
            "odd g, even n: b - 1 is a sum of an odd number of odd terms, so odd, while phi(b) is even"
        }
        (CertificateKind::RejectedUnitN, _) => "n = 1 gives the repunit 1, which is not composite",
        (CertificateKind::CandidateUnresolved, _) => "factorization budget exhausted",
    }
}
