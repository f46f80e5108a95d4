//! User click logs.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}, expected train or test")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehaviorRecord {
    pub user: String,
    pub item: String,
    pub timestamp: i64,
    pub split: Split,
}

/// Click records in input order.
///
/// Ordering within a user is recovered at graph build time by sorting on
/// timestamp; equal timestamps keep input order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BehaviorLog {
    pub records: Vec<BehaviorRecord>,
}

impl BehaviorLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, user: &str, item: &str, timestamp: i64, split: Split) {
        self.records.push(BehaviorRecord {
            user: user.to_owned(),
            item: item.to_owned(),
            timestamp,
            split,
        });
    }

    /// Training records only, with one sequence per user already in click order.
    pub fn training_sequences(&self) -> Vec<Vec<&str>> {
        let mut by_user: rustc_hash::FxHashMap<&str, Vec<(i64, usize, &str)>> = Default::default();
        for (pos, rec) in self.records.iter().enumerate() {
            if rec.split == Split::Train {
                by_user.entry(rec.user.as_str()).or_default().push((
                    rec.timestamp,
                    pos,
                    rec.item.as_str(),
                ));
            }
        }
        let mut users: Vec<_> = by_user.into_iter().collect();
        users.sort_unstable_by(|a, b| a.0.cmp(b.0));
        users
            .into_iter()
            .map(|(_, mut clicks)| {
                clicks.sort_unstable_by_key(|&(ts, pos, _)| (ts, pos));
                clicks.into_iter().map(|(_, _, item)| item).collect()
            })
            .collect()
    }

    /// Parses `user\titem\ttimestamp\tsplit` lines. Blank lines are skipped.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut log = BehaviorLog::new();
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::parse(
                    lineno,
                    format!("expected 4 tab-separated fields, found {}", fields.len()),
                ));
            }
            if fields[0].is_empty() || fields[1].is_empty() {
                return Err(Error::parse(lineno, "empty user or item id"));
            }
            let timestamp = fields[2]
                .trim()
                .parse::<i64>()
                .map_err(|e| Error::parse(lineno, format!("bad timestamp {:?}: {e}", fields[2])))?;
            let split = fields[3]
                .trim()
                .parse::<Split>()
                .map_err(|e| Error::parse(lineno, e))?;
            log.records.push(BehaviorRecord {
                user: fields[0].to_owned(),
                item: fields[1].to_owned(),
                timestamp,
                split,
            });
        }
        Ok(log)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file))
    }

    /// Writes records in the format accepted by [`BehaviorLog::read`].
    pub fn write_to<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        for r in &self.records {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                r.user,
                r.item,
                r.timestamp,
                r.split.as_str()
            )?;
        }
        Ok(())
    }
}
