//! Persisted per-(item, order) triangle index.
//!
//! ```text
//! #tgin-index v1 n=<n> orders=<k,k,...>
//! item_id \t k \t rank \t node_a \t node_b \t node_c \t relevance \t padded
//! ```
//!
//! Lines are sorted by item id, order and rank. Relevances are written with
//! nine significant digits, which round-trips `f32` exactly.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{is_gzip_path, open_lines, write_atomic};

#[derive(Debug, Clone, PartialEq)]
pub struct IndexRow {
    pub nodes: [String; 3],
    pub relevance: f32,
    pub rank: u32,
    pub padded: bool,
}

impl IndexRow {
    pub fn is_pseudo(&self) -> bool {
        self.nodes[0] == self.nodes[1] && self.nodes[1] == self.nodes[2]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleIndex {
    n: usize,
    orders: Vec<u32>,
    entries: BTreeMap<(String, u32), Vec<IndexRow>>,
}

impl TriangleIndex {
    pub fn new(n: usize, mut orders: Vec<u32>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        orders.sort_unstable();
        orders.dedup();
        Ok(TriangleIndex {
            n,
            orders,
            entries: BTreeMap::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, item: &str, order: u32) -> Option<&[IndexRow]> {
        self.entries
            .get(&(item.to_owned(), order))
            .map(Vec::as_slice)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, u32, &[IndexRow])> {
        self.entries
            .iter()
            .map(|((item, k), rows)| (item.as_str(), *k, rows.as_slice()))
    }

    /// Adds or replaces an entry after checking its invariants.
    pub fn insert(&mut self, item: &str, order: u32, rows: Vec<IndexRow>) -> Result<()> {
        self.check_entry(item, order, &rows)?;
        self.entries.insert((item.to_owned(), order), rows);
        Ok(())
    }

    fn check_entry(&self, item: &str, order: u32, rows: &[IndexRow]) -> Result<()> {
        let name = || format!("entry ({item}, {order})");
        if !self.orders.contains(&order) {
            return Err(Error::Integrity(format!(
                "{}: order not in {:?}",
                name(),
                self.orders
            )));
        }
        if rows.len() != self.n {
            return Err(Error::Integrity(format!(
                "{}: {} rows, expected {}",
                name(),
                rows.len(),
                self.n
            )));
        }
        for (pos, row) in rows.iter().enumerate() {
            if row.rank as usize != pos {
                return Err(Error::Integrity(format!(
                    "{}: rank {} at position {pos}",
                    name(),
                    row.rank
                )));
            }
            if !row.relevance.is_finite() || row.relevance < 0.0 {
                return Err(Error::Integrity(format!(
                    "{}: bad relevance {}",
                    name(),
                    row.relevance
                )));
            }
            if row.is_pseudo() {
                if !row.padded || row.relevance != 0.0 {
                    return Err(Error::Integrity(format!(
                        "{}: pseudo-triangle at rank {} must be padded with relevance 0",
                        name(),
                        row.rank
                    )));
                }
            } else if !(row.nodes[0] < row.nodes[1] && row.nodes[1] < row.nodes[2]) {
                return Err(Error::Integrity(format!(
                    "{}: nodes at rank {} not in ascending order",
                    name(),
                    row.rank
                )));
            }
        }
        Ok(())
    }

    pub fn write_to<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        let orders: Vec<String> = self.orders.iter().map(u32::to_string).collect();
        writeln!(
            out,
            "#tgin-index v1 n={} orders={}",
            self.n,
            orders.join(",")
        )?;
        for ((item, k), rows) in &self.entries {
            for row in rows {
                writeln!(
                    out,
                    "{item}\t{k}\t{}\t{}\t{}\t{}\t{:.8e}\t{}",
                    row.rank,
                    row.nodes[0],
                    row.nodes[1],
                    row.nodes[2],
                    row.relevance,
                    u8::from(row.padded)
                )?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing header"))?
            .map_err(|e| Error::parse(1, e.to_string()))?;
        let (n, orders) =
            parse_header(&header).ok_or_else(|| Error::parse(1, "malformed header"))?;
        let mut index =
            TriangleIndex::new(n, orders).map_err(|e| Error::parse(1, e.to_string()))?;

        let mut grouped: BTreeMap<(String, u32), Vec<IndexRow>> = BTreeMap::new();
        for (idx, line) in lines.enumerate() {
            let lineno = idx + 2;
            let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            let (key, row) = parse_row(&line).map_err(|msg| Error::parse(lineno, msg))?;
            grouped.entry(key).or_default().push(row);
        }
        for ((item, k), mut rows) in grouped {
            rows.sort_by_key(|r| r.rank);
            if let Some(w) = rows.windows(2).find(|w| w[0].rank == w[1].rank) {
                return Err(Error::Integrity(format!(
                    "entry ({item}, {k}): duplicate rank {}",
                    w[0].rank
                )));
            }
            index.insert(&item, k, rows)?;
        }
        Ok(index)
    }
}

fn parse_header(line: &str) -> Option<(usize, Vec<u32>)> {
    let rest = line.strip_prefix("#tgin-index v1 ")?;
    let mut parts = rest.split(' ');
    let n = parts.next()?.strip_prefix("n=")?.parse().ok()?;
    let orders = parts.next()?.strip_prefix("orders=")?;
    if parts.next().is_some() {
        return None;
    }
    let orders = if orders.is_empty() {
        Vec::new()
    } else {
        orders
            .split(',')
            .map(|k| k.parse().ok())
            .collect::<Option<Vec<u32>>>()?
    };
    Some((n, orders))
}

fn parse_row(line: &str) -> std::result::Result<((String, u32), IndexRow), String> {
    let fields: Vec<&str> = line.split('\t').collect();
    let [item, k, rank, a, b, c, relevance, padded] = fields.as_slice() else {
        return Err(format!("expected 8 fields, found {}", fields.len()));
    };
    if item.is_empty() || a.is_empty() || b.is_empty() || c.is_empty() {
        return Err("empty item id".into());
    }
    let k: u32 = k.parse().map_err(|_| format!("bad order {k:?}"))?;
    let rank: u32 = rank.parse().map_err(|_| format!("bad rank {rank:?}"))?;
    let relevance: f32 = relevance
        .parse()
        .map_err(|_| format!("bad relevance {relevance:?}"))?;
    let padded = match *padded {
        "0" => false,
        "1" => true,
        other => return Err(format!("bad padded flag {other:?}")),
    };
    Ok((
        ((*item).to_owned(), k),
        IndexRow {
            nodes: [(*a).to_owned(), (*b).to_owned(), (*c).to_owned()],
            relevance,
            rank,
            padded,
        },
    ))
}

/// Writes the index atomically, gzip-compressed when the path ends in `.gz`.
/// Returns the number of bytes written.
pub fn write_index(index: &TriangleIndex, path: impl AsRef<Path>) -> Result<u64> {
    let path = path.as_ref();
    write_atomic(path, is_gzip_path(path), |w| index.write_to(w))
}

pub fn read_index(path: impl AsRef<Path>) -> Result<TriangleIndex> {
    TriangleIndex::read_from(open_lines(path.as_ref())?)
}
