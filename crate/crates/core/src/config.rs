//! Budgets and limits shared by the checkers and searches.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable that caps the bit size of any integer the library
/// is asked to materialize.
pub const MAX_BITS_ENV: &str = "LEHMER_HUNT_MAX_BITS";

/// Default allocation cap: 2^26 bits (8 MiB per integer).
pub const DEFAULT_MAX_BITS: u64 = 1 << 26;

/// Default largest K accepted by the bound evaluators. 2^(2^25) is a
/// 4 MiB integer.
pub const DEFAULT_K_CAP: u32 = 25;

/// Work budget for factorization and primality testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Effort {
    /// Trial division runs over primes up to this bound (at most 10^6).
    pub trial_limit: u64,
    /// Total Pollard-rho (Brent) iterations allowed across all splits.
    pub rho_iterations: u64,
    /// Extra random Miller-Rabin rounds above the deterministic threshold.
    pub primality_rounds: u32,
}

impl Default for Effort {
    fn default() -> Self {
        Effort {
            trial_limit: crate::arith::TRIAL_DIVISION_LIMIT,
            rho_iterations: 2_000_000,
            primality_rounds: 16,
        }
    }
}

impl Effort {
    /// Parse `trial=N,rho=N,rounds=N` (any subset), or a bare integer which
    /// sets the rho iteration budget.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut effort = Effort::default();
        let spec = spec.trim();
        if let Ok(rho) = spec.parse::<u64>() {
            effort.rho_iterations = rho;
            return effort.validated();
        }
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::domain(format!("bad effort component `{part}`")))?;
            let value: u64 = value
                .trim()
                .parse()
                .map_err(|_| Error::domain(format!("bad effort value `{value}`")))?;
            match key.trim() {
                "trial" => effort.trial_limit = value,
                "rho" => effort.rho_iterations = value,
                "rounds" => {
                    effort.primality_rounds = u32::try_from(value)
                        .map_err(|_| Error::domain("primality rounds out of range"))?
                }
                other => return Err(Error::domain(format!("unknown effort key `{other}`"))),
            }
        }
        effort.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.trial_limit < 2 || self.rho_iterations == 0 || self.primality_rounds == 0 {
            return Err(Error::domain(
                "all effort budgets must be positive (trial >= 2)",
            ));
        }
        if self.trial_limit > crate::arith::TRIAL_DIVISION_LIMIT {
            return Err(Error::domain(format!(
                "trial limit above {}",
                crate::arith::TRIAL_DIVISION_LIMIT
            )));
        }
        Ok(self)
    }
}

/// Caps on integer sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_bits: u64,
    pub k_cap: u32,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_bits: DEFAULT_MAX_BITS,
            k_cap: DEFAULT_K_CAP,
        }
    }
}

impl Limits {
    /// Defaults, with `max_bits` overridden by `LEHMER_HUNT_MAX_BITS` when set.
    pub fn from_env() -> Result<Self> {
        let mut limits = Limits::default();
        if let Ok(raw) = std::env::var(MAX_BITS_ENV) {
            limits.max_bits = raw.trim().parse().ok().filter(|&b| b > 0).ok_or_else(|| {
                Error::domain(format!("{MAX_BITS_ENV} must be a positive integer"))
            })?;
        }
        Ok(limits)
    }

    pub(crate) fn check_bits(&self, what: &'static str, bits: u128) -> Result<()> {
        if bits > u128::from(self.max_bits) {
            return Err(Error::Resource {
                what,
                requested: format!("{bits} bits"),
                cap: format!("{} bits", self.max_bits),
            });
        }
        Ok(())
    }
}

/// Configuration of a repunit search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchConfig {
    pub effort: Effort,
    pub limits: Limits,
    pub workers: usize,
    pub checkpoint: Option<PathBuf>,
    /// Largest repunit length examined in the odd-base family.
    pub n_max: u64,
    /// Maximum number of repunit evaluations (constructions followed by a
    /// Lehmer check) before the search stops and reports its frontier.
    pub max_evaluations: u64,
    /// Number of enumerated lengths grouped into one work unit.
    pub unit_span: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            effort: Effort {
                trial_limit: 10_000,
                rho_iterations: 20_000,
                primality_rounds: 4,
            },
            limits: Limits::default(),
            workers: 1,
            checkpoint: None,
            n_max: 1000,
            max_evaluations: 10_000,
            unit_span: 64,
        }
    }
}

impl SearchConfig {
    pub fn validated(self) -> Result<Self> {
        self.effort.validated()?;
        if self.workers == 0 {
            return Err(Error::domain("worker count must be at least 1"));
        }
        if self.n_max < 2 {
            return Err(Error::domain("n_max must be at least 2"));
        }
        if self.max_evaluations == 0 || self.unit_span == 0 {
            return Err(Error::domain("search budgets must be positive"));
        }
        if self.limits.max_bits == 0 || self.limits.k_cap == 0 {
            return Err(Error::domain("limits must be positive"));
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn effort_parsing() {
        let e = Effort::parse("trial=1000,rho=50").unwrap();
        assert_eq!(e.trial_limit, 1000);
        assert_eq!(e.rho_iterations, 50);
        assert_eq!(e.primality_rounds, Effort::default().primality_rounds);
        assert_eq!(Effort::parse("77").unwrap().rho_iterations, 77);
        assert!(Effort::parse("speed=3").is_err());
        assert!(Effort::parse("rho=0").is_err());
        assert!(Effort::parse("trial=100000000").is_err());
    }

    #[test]
    fn config_rejects_zero_workers() {
        let cfg = SearchConfig {
            workers: 0,
            ..SearchConfig::default()
        };
        assert!(cfg.validated().is_err());
    }
}
