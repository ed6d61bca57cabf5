//! Lehmer numbers: composite `n` with `phi(n) | n - 1`.
//!
//! The crate decides the property for individual integers, searches
//! integer ranges exhaustively, checks the size bound
//! `n <= 2^(2^K) - 2^(2^(K-1))` for `K` distinct prime factors, and searches
//! repunits with bounded 2-adic base valuation, emitting certificates for
//! every region it rules out.

pub mod arith;
pub mod bounds;
pub mod config;
pub mod error;
mod json;
pub mod lehmer;
pub mod report;
pub mod repunit;
pub mod verify;

pub use arith::{
    euler_phi, factorize, is_prime, nu2, pow_check_less, repunit as repunit_value, totient_sieve,
    Factorization, Nat, PrimalityResult, PrimalityStatus,
};
pub use bounds::{
    bound_holds, compare_bounds, new_bound, nielsen_check, pomerance_bound, theorem_chain_check,
    ExactRational, NielsenInstance,
};
pub use config::{Effort, Limits, SearchConfig};
pub use error::{Error, Result};
pub use lehmer::{
    check_lehmer, exhaustive_search, prefilter, Condition, LehmerStatus, LehmerVerdict,
};
pub use report::{CandidateRecord, SearchReport, SearchSpace};
pub use repunit::{
    even_case_filter, nu2_quotient, odd_case_filter, search_a, search_b, search_union, Certificate,
    CertificateKind, Level, OddCandidate,
};
pub use verify::{run_suite, Suite, VerifySummary};
