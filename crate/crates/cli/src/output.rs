//! JSON and CSV rendering of results.

use std::io::Write;
use std::path::PathBuf;

use clap::ValueEnum;
use lehmer_core::bounds::BoundComparison;
use lehmer_core::repunit::{GBound, Region};
use lehmer_core::{Error, LehmerVerdict, SearchReport, VerifySummary};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub struct Sink {
    format: Format,
    out: Option<PathBuf>,
}

/// The JSON name of a unit-like enum value.
fn tag<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(serde_json::Value::Null) => String::new(),
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn opt<T: ToString>(value: Option<T>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn g_range(r: &Region) -> String {
    let end = r.g_end.as_ref().map(GBound::to_string).unwrap_or_default();
    format!("[{}, {end})", r.g_lo)
}

fn n_range(r: &Region) -> String {
    format!("[{}, {}]", r.n_lo, opt(r.n_hi))
}

type Rows = Vec<Vec<String>>;

impl Sink {
    pub fn new(format: Format, out: Option<PathBuf>) -> Self {
        Sink { format, out }
    }

    fn emit<T: Serialize>(
        &self,
        json: &T,
        header: &[&str],
        rows: impl FnOnce() -> Rows,
    ) -> Result<(), Error> {
        let bytes = match self.format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(json)?;
                s.push('\n');
                s.into_bytes()
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
                w.write_record(header).map_err(csv_err)?;
                for row in rows() {
                    w.write_record(&row).map_err(csv_err)?;
                }
                w.into_inner().map_err(|e| Error::Io(e.into_error()))?
            }
        };
        match &self.out {
            Some(path) => std::fs::write(path, bytes)?,
            None => std::io::stdout().lock().write_all(&bytes)?,
        }
        Ok(())
    }

    pub fn verdict(&self, v: &LehmerVerdict) -> Result<(), Error> {
        self.emit(
            v,
            &[
                "subject",
                "status",
                "failed_condition",
                "phi",
                "omega",
                "probable",
            ],
            || {
                vec![vec![
                    v.subject.to_string(),
                    tag(&v.status),
                    tag(&v.failed_condition),
                    opt(v.phi.as_ref()),
                    opt(v.omega),
                    v.probable.to_string(),
                ]]
            },
        )
    }

    pub fn report(&self, r: &SearchReport) -> Result<(), Error> {
        self.emit(r, &["record", "kind", "family", "g", "n", "detail"], || {
            let mut rows = Rows::new();
            for c in &r.certificates {
                rows.push(vec![
                    "certificate".into(),
                    tag(&c.kind),
                    tag(&c.region.family),
                    g_range(&c.region),
                    n_range(&c.region),
                    c.rule.clone(),
                ]);
            }
            for c in &r.candidates {
                rows.push(vec![
                    "candidate".into(),
                    tag(&c.status),
                    String::new(),
                    opt(c.g.as_ref()),
                    c.n.to_string(),
                    tag(&c.failed_condition),
                ]);
            }
            for f in &r.frontier {
                rows.push(vec![
                    "frontier".into(),
                    String::new(),
                    tag(&f.family),
                    g_range(f),
                    n_range(f),
                    tag(&f.n_class),
                ]);
            }
            rows
        })
    }

    pub fn summary(&self, s: &VerifySummary) -> Result<(), Error> {
        let head = vec![
            s.suite.to_string(),
            s.seed.to_string(),
            s.trials.to_string(),
            s.checked.to_string(),
            s.violations.to_string(),
        ];
        self.emit(
            s,
            &[
                "suite",
                "seed",
                "trials",
                "checked",
                "violations",
                "counterexample",
            ],
            || {
                let mut first = head.clone();
                first.push(String::new());
                let mut rows = vec![first];
                for c in &s.counterexamples {
                    let mut row = head.clone();
                    row.push(c.to_string());
                    rows.push(row);
                }
                rows
            },
        )
    }

    pub fn bounds(&self, rows: &[BoundComparison]) -> Result<(), Error> {
        self.emit(
            &rows,
            &[
                "k",
                "relation",
                "method",
                "new_bound_bits",
                "new_bound",
                "pomerance_bound",
            ],
            || {
                rows.iter()
                    .map(|c| {
                        vec![
                            c.k.to_string(),
                            tag(&c.relation),
                            tag(&c.method),
                            c.new_bound_bits.to_string(),
                            opt(c.new_bound.as_ref()),
                            opt(c.pomerance_bound.as_ref()),
                        ]
                    })
                    .collect()
            },
        )
    }
}
