//! Shared inputs for the benchmarks.

use lehmer_core::{Effort, Level, Nat, SearchConfig};

/// Odd composites with a spread of factor sizes.
pub fn composites() -> Vec<Nat> {
    [
        "561",
        "1000000016000000063",
        "1296198694153288947529",
        "340282366920938463463374607431768211457",
    ]
    .iter()
    .map(|s| s.parse().expect("literal"))
    .collect()
}

pub fn level(s: &str) -> Level {
    s.parse().expect("valid level")
}

/// A small odd-base search that finishes in milliseconds.
pub fn small_search(n_max: u64, budget: u64) -> SearchConfig {
    SearchConfig {
        n_max,
        max_evaluations: budget,
        unit_span: 8,
        effort: Effort {
            trial_limit: 1000,
            rho_iterations: 5000,
            primality_rounds: 2,
        },
        ..SearchConfig::default()
    }
}
