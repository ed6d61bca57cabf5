//! `lehmer-hunt`: checks, searches and property suites for Lehmer numbers.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lehmer_core::bounds::compare_bounds;
use lehmer_core::{
    check_lehmer, exhaustive_search, run_suite, search_a, search_b, search_union, Effort, Error,
    LehmerStatus, Level, Limits, Nat, SearchConfig, SearchReport, Suite,
};

use output::{Format, Sink};

/// Exit codes shared by every subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Clean = 0,
    Failure = 1,
    Unresolved = 2,
    Found = 3,
}

#[derive(Parser)]
#[command(
    name = "lehmer-hunt",
    version,
    about = "Search for and rule out Lehmer numbers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    workers: Option<usize>,
    /// `trial=N,rho=N,rounds=N` or a bare rho iteration count.
    #[arg(long)]
    effort: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn workers(&self) -> Result<usize, Error> {
        match self.workers {
            Some(0) => Err(domain("--workers must be at least 1")),
            Some(w) => Ok(w),
            None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }

    fn effort(&self, default: Effort) -> Result<Effort, Error> {
        match &self.effort {
            Some(spec) => Effort::parse(spec),
            None => Ok(default),
        }
    }

    fn sink(&self) -> Sink {
        Sink::new(self.format, self.out.clone())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether one integer has the Lehmer property.
    Check {
        n: String,
        #[command(flatten)]
        common: Common,
    },
    /// Exhaustively search 1..=LIMIT with a totient sieve.
    Search {
        /// Decimal, or `MeE` such as `1e6`.
        limit: String,
        #[command(flatten)]
        common: Common,
    },
    /// Search repunits (g^n - 1)/(g - 1) with bounded 2-adic base valuation.
    Repunit {
        /// Valuation bound L >= 1: an integer, decimal or fraction.
        #[arg(long = "L", value_name = "L")]
        level: String,
        #[arg(long, value_enum, default_value_t = Mode::Union)]
        mode: Mode,
        /// Largest length n examined for odd bases.
        #[arg(long, default_value_t = 1000)]
        n_max: u64,
        /// Repunit evaluations allowed before reporting a frontier.
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        /// Lengths grouped into one checkpointed unit.
        #[arg(long, default_value_t = 64)]
        unit_span: usize,
        /// JSONL file of finished units, read on start and updated as units finish.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a seeded property suite.
    Verify {
        /// nielsen, chain, valuation or bounds.
        suite: String,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the new bound with Pomerance's bound for a range of K.
    Bounds {
        #[arg(long, default_value_t = 1)]
        k_min: u32,
        #[arg(long, default_value_t = 30)]
        k_max: u32,
        /// Largest bit length computed exactly; larger K use the bit bracket.
        #[arg(long, default_value_t = 1 << 20)]
        materialize_bits: u64,
        /// Include the decimal values for materialized rows.
        #[arg(long)]
        values: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Even,
    Odd,
    Union,
}

fn domain(msg: &str) -> Error {
    Error::Domain(msg.to_string())
}

fn parse_nat(s: &str) -> Result<Nat, Error> {
    let s = s.trim();
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::Domain(format!("not a decimal integer: {s:?}")));
    }
    Ok(s.parse().expect("digits parse"))
}

/// Decimal or `MeE` with integer mantissa and exponent.
fn parse_limit(s: &str) -> Result<u64, Error> {
    let value = match s.trim().split_once(['e', 'E']) {
        Some((m, e)) => {
            let e: u32 = e
                .parse()
                .map_err(|_| Error::Domain(format!("bad exponent in {s:?}")))?;
            let m = parse_nat(m)?;
            if e > 4096 {
                return Err(too_large(s));
            }
            m * num_traits::Pow::pow(Nat::from(10u32), e)
        }
        None => parse_nat(s)?,
    };
    u64::try_from(&value).map_err(|_| too_large(s))
}

fn too_large(s: &str) -> Error {
    Error::Resource {
        what: "exhaustive search",
        requested: s.to_string(),
        cap: "a 64-bit limit".into(),
    }
}

fn report_outcome(report: &SearchReport) -> Outcome {
    if report.counters.lehmer_found > 0 {
        Outcome::Found
    } else if report.counters.unresolved > 0 {
        Outcome::Unresolved
    } else {
        Outcome::Clean
    }
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    let limits = Limits::from_env()?;
    match cli.command {
        Command::Check { n, common } => {
            let n = parse_nat(&n)?;
            let verdict = check_lehmer(&n, &common.effort(Effort::default())?)?;
            common.sink().verdict(&verdict)?;
            Ok(match verdict.status {
                LehmerStatus::Lehmer => Outcome::Found,
                LehmerStatus::Unresolved => Outcome::Unresolved,
                _ => Outcome::Clean,
            })
        }
        Command::Search { limit, common } => {
            let limit = parse_limit(&limit)?;
            let report = exhaustive_search(limit, common.workers()?)?;
            common.sink().report(&report)?;
            Ok(report_outcome(&report))
        }
        Command::Repunit {
            level,
            mode,
            n_max,
            budget,
            unit_span,
            checkpoint,
            common,
        } => {
            let level: Level = level.parse()?;
            let config = SearchConfig {
                effort: common.effort(SearchConfig::default().effort)?,
                limits,
                workers: common.workers()?,
                checkpoint,
                n_max,
                max_evaluations: budget,
                unit_span,
            }
            .validated()?;
            let report = match mode {
                Mode::Even => search_a(&level, &config)?,
                Mode::Odd => search_b(&level, &config)?,
                Mode::Union => search_union(&level, &config)?,
            };
            if !report.complete {
                eprintln!("note: search stopped early; the report lists the unexamined frontier");
            }
            common.sink().report(&report)?;
            Ok(report_outcome(&report))
        }
        Command::Verify {
            suite,
            trials,
            seed,
            common,
        } => {
            let suite: Suite = suite.parse()?;
            let summary = run_suite(suite, trials, seed, &limits)?;
            common.sink().summary(&summary)?;
            Ok(if summary.passed() {
                Outcome::Clean
            } else {
                Outcome::Found
            })
        }
        Command::Bounds {
            k_min,
            k_max,
            materialize_bits,
            values,
            common,
        } => {
            if k_min == 0 || k_min > k_max || k_max > 63 {
                return Err(domain("need 1 <= --k-min <= --k-max <= 63"));
            }
            let started = Instant::now();
            let bits = materialize_bits.min(limits.max_bits);
            let rows = (k_min..=k_max)
                .map(|k| compare_bounds(k, bits, values))
                .collect::<Result<Vec<_>, _>>()?;
            common.sink().bounds(&rows)?;
            eprintln!("bounds: {} rows in {:?}", rows.len(), started.elapsed());
            Ok(Outcome::Clean)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                Outcome::Failure as u8
            } else {
                0
            });
        }
    };
    match run(cli) {
        Ok(outcome) => ExitCode::from(outcome as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Outcome::Failure as u8)
        }
    }
}
