//! Line-delimited JSON checkpoints of finished work units.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Certificate;
use crate::arith::Nat;
use crate::error::{Error, Result};
use crate::report::CandidateRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitStatus {
    /// Every pair in the unit was decided and none is Lehmer.
    Cleared,
    Unresolved,
    LehmerFound,
}

/// One finished unit: a base and a range of lengths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitRecord {
    pub unit_id: String,
    #[serde(with = "crate::json::nat")]
    pub g_lo: Nat,
    #[serde(with = "crate::json::nat")]
    pub g_hi: Nat,
    #[serde(with = "crate::json::u64_str")]
    pub n_lo: u64,
    #[serde(with = "crate::json::u64_str")]
    pub n_hi: u64,
    pub status: UnitStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(default)]
    pub candidates: Vec<CandidateRecord>,
}

/// Records keyed by unit id, in the order they were first written.
#[derive(Debug)]
pub struct Checkpoint {
    path: PathBuf,
    records: Vec<UnitRecord>,
    index: HashMap<String, usize>,
}

impl Checkpoint {
    /// Load `path` if it exists, else start empty.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut cp = Checkpoint {
            path,
            records: Vec::new(),
            index: HashMap::new(),
        };
        let file = match fs::File::open(&cp.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(cp),
            Err(e) => return Err(e.into()),
        };
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: UnitRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Checkpoint(format!("{}:{}: {e}", cp.path.display(), i + 1)))?;
            cp.insert(rec);
        }
        Ok(cp)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, unit_id: &str) -> Option<&UnitRecord> {
        self.index.get(unit_id).map(|&i| &self.records[i])
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[UnitRecord] {
        &self.records
    }

    pub fn insert(&mut self, rec: UnitRecord) {
        match self.index.get(&rec.unit_id) {
            Some(&i) => self.records[i] = rec,
            None => {
                self.index.insert(rec.unit_id.clone(), self.records.len());
                self.records.push(rec);
            }
        }
    }

    /// Rewrite the file through a temporary sibling and a rename.
    pub fn flush(&self) -> Result<()> {
        let mut tmp = self.path.clone().into_os_string();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        {
            let mut out = std::io::BufWriter::new(fs::File::create(&tmp)?);
            for rec in &self.records {
                serde_json::to_writer(&mut out, rec)?;
                out.write_all(b"\n")?;
            }
            out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        }
        fs::rename(&tmp, &self.path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str) -> UnitRecord {
        UnitRecord {
            unit_id: id.to_string(),
            g_lo: Nat::from(3u32),
            g_hi: Nat::from(3u32),
            n_lo: 5,
            n_hi: 9,
            status: UnitStatus::Cleared,
            certificate: None,
            candidates: Vec::new(),
        }
    }

    #[test]
    fn round_trip_and_replace() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cp.jsonl");
        let mut cp = Checkpoint::open(&path).unwrap();
        assert!(cp.is_empty());
        cp.insert(record("a"));
        cp.insert(record("b"));
        cp.flush().unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("\"g_lo\":\"3\""));
        assert!(text.contains("\"n_hi\":\"9\""));

        let mut again = Checkpoint::open(&path).unwrap();
        assert_eq!(again.len(), 2);
        let mut changed = record("a");
        changed.status = UnitStatus::Unresolved;
        again.insert(changed);
        assert_eq!(again.len(), 2);
        assert_eq!(again.get("a").unwrap().status, UnitStatus::Unresolved);
    }

    #[test]
    fn corrupt_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cp.jsonl");
        fs::write(&path, "{not json}\n").unwrap();
        assert!(matches!(Checkpoint::open(&path), Err(Error::Checkpoint(_))));
    }
}
