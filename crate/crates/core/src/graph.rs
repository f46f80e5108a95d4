//! Item-item co-occurrence graph.
//!
//! Node ids are assigned in lexicographic order of the item ids, so comparing
//! two [`NodeId`]s compares the underlying item ids.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::behavior::BehaviorLog;
use crate::bloom::{BloomConfig, BloomFilter};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[inline]
fn edge_key(a: NodeId, b: NodeId) -> u64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    ((lo.0 as u64) << 32) | hi.0 as u64
}

/// Weighted undirected co-occurrence graph. Immutable once built.
#[derive(Debug, Clone)]
pub struct CooccurrenceGraph {
    names: Vec<String>,
    index: FxHashMap<String, NodeId>,
    adjacency: Vec<Vec<NodeId>>,
    adjacency_weights: Vec<Vec<u32>>,
    edges: FxHashMap<u64, u32>,
    filter: Option<BloomFilter>,
    window: usize,
}

/// Builds a graph from training clicks with a sliding window.
#[derive(Debug, Clone, Copy)]
pub struct GraphBuilder {
    window: usize,
    bloom: Option<BloomConfig>,
}

impl GraphBuilder {
    pub fn new(window: usize) -> Self {
        GraphBuilder {
            window,
            bloom: Some(BloomConfig::default()),
        }
    }

    /// `None` disables the membership prefilter.
    pub fn bloom(mut self, bloom: Option<BloomConfig>) -> Self {
        self.bloom = bloom;
        self
    }

    /// Each pair of distinct items at index distance `< window` within one
    /// user's sequence adds 1 to that pair's weight.
    pub fn build(&self, log: &BehaviorLog) -> Result<CooccurrenceGraph> {
        if self.window < 2 {
            return Err(Error::InvalidParameter(format!(
                "window must be at least 2, got {}",
                self.window
            )));
        }
        if log.records.is_empty() {
            return Err(Error::InvalidInput("empty behavior log".into()));
        }
        let sequences = log.training_sequences();
        if sequences.is_empty() {
            return Err(Error::InvalidInput("no training records".into()));
        }

        let mut names: Vec<&str> = sequences.iter().flatten().copied().collect();
        names.sort_unstable();
        names.dedup();
        let index: FxHashMap<&str, NodeId> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (*n, NodeId(i as u32)))
            .collect();

        let window = self.window;
        let edges = sequences
            .par_iter()
            .fold(FxHashMap::<u64, u32>::default, |mut acc, seq| {
                let ids: Vec<NodeId> = seq.iter().map(|item| index[item]).collect();
                for (i, &a) in ids.iter().enumerate() {
                    for &b in ids.iter().skip(i + 1).take(window - 1) {
                        if a != b {
                            *acc.entry(edge_key(a, b)).or_insert(0) += 1;
                        }
                    }
                }
                acc
            })
            .reduce(FxHashMap::default, |mut left, right| {
                if left.len() < right.len() {
                    return merge_counts(right, left);
                }
                for (k, w) in right {
                    *left.entry(k).or_insert(0) += w;
                }
                left
            });

        Ok(CooccurrenceGraph::assemble(
            names.into_iter().map(str::to_owned).collect(),
            edges,
            window,
            self.bloom,
        ))
    }
}

fn merge_counts(mut into: FxHashMap<u64, u32>, from: FxHashMap<u64, u32>) -> FxHashMap<u64, u32> {
    for (k, w) in from {
        *into.entry(k).or_insert(0) += w;
    }
    into
}

/// Builds the co-occurrence graph with the default membership filter.
pub fn build_graph(log: &BehaviorLog, window: usize) -> Result<CooccurrenceGraph> {
    GraphBuilder::new(window).build(log)
}

impl CooccurrenceGraph {
    /// `names` must be sorted and unique; edge keys refer to positions in it.
    fn assemble(
        names: Vec<String>,
        edges: FxHashMap<u64, u32>,
        window: usize,
        bloom: Option<BloomConfig>,
    ) -> Self {
        let n = names.len();
        let mut adjacency: Vec<Vec<(NodeId, u32)>> = vec![Vec::new(); n];
        for (&key, &w) in &edges {
            let a = NodeId((key >> 32) as u32);
            let b = NodeId(key as u32);
            adjacency[a.index()].push((b, w));
            adjacency[b.index()].push((a, w));
        }
        let mut ids = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for mut list in adjacency {
            list.sort_unstable_by_key(|&(id, _)| id);
            ids.push(list.iter().map(|&(id, _)| id).collect());
            weights.push(list.iter().map(|&(_, w)| w).collect());
        }
        let index = names
            .iter()
            .enumerate()
            .map(|(i, name)| (name.clone(), NodeId(i as u32)))
            .collect();
        let mut graph = CooccurrenceGraph {
            names,
            index,
            adjacency: ids,
            adjacency_weights: weights,
            edges,
            filter: None,
            window,
        };
        graph.set_bloom(bloom);
        graph
    }

    /// Graph from explicit nodes and weighted edges. Nodes named only by edges
    /// are added implicitly.
    pub fn from_edges<'a>(
        nodes: impl IntoIterator<Item = &'a str>,
        edges: impl IntoIterator<Item = (&'a str, &'a str, u32)>,
        window: usize,
        bloom: Option<BloomConfig>,
    ) -> Result<Self> {
        let edges: Vec<(&str, &str, u32)> = edges.into_iter().collect();
        let mut names: Vec<&str> = nodes.into_iter().collect();
        names.extend(edges.iter().flat_map(|&(a, b, _)| [a, b]));
        names.sort_unstable();
        names.dedup();
        let index: FxHashMap<&str, NodeId> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (*n, NodeId(i as u32)))
            .collect();
        let mut map = FxHashMap::default();
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::InvalidInput(format!("self-loop on {a:?}")));
            }
            if w == 0 {
                return Err(Error::InvalidInput(format!("zero weight on {a:?}-{b:?}")));
            }
            if map.insert(edge_key(index[a], index[b]), w).is_some() {
                return Err(Error::InvalidInput(format!("duplicate edge {a:?}-{b:?}")));
            }
        }
        Ok(Self::assemble(
            names.into_iter().map(str::to_owned).collect(),
            map,
            window,
            bloom,
        ))
    }

    /// Rebuilds (or drops) the membership filter over the current edge set.
    pub fn set_bloom(&mut self, bloom: Option<BloomConfig>) {
        self.filter = bloom.map(|config| {
            let mut filter = BloomFilter::new(self.edges.len(), config);
            for &key in self.edges.keys() {
                filter.insert(key);
            }
            filter
        });
    }

    pub fn bloom_filter(&self) -> Option<&BloomFilter> {
        self.filter.as_ref()
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().map(|&w| w as u64).sum()
    }

    pub fn node_id(&self, item: &str) -> Option<NodeId> {
        self.index.get(item).copied()
    }

    pub fn name(&self, node: NodeId) -> &str {
        &self.names[node.index()]
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeId> {
        (0..self.names.len() as u32).map(NodeId)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.index() < self.names.len()
    }

    /// Neighbors sorted by id.
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node.index()]
    }

    /// Edge weights parallel to [`neighbors`](Self::neighbors).
    pub fn neighbor_weights(&self, node: NodeId) -> &[u32] {
        &self.adjacency_weights[node.index()]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node.index()].len()
    }

    /// Membership test. The filter answers first; a negative skips the hash
    /// lookup.
    #[inline]
    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        if a == b {
            return false;
        }
        let key = edge_key(a, b);
        if let Some(filter) = &self.filter {
            if !filter.contains(key) {
                return false;
            }
        }
        self.edges.contains_key(&key)
    }

    pub fn has_edge_between(&self, a: &str, b: &str) -> bool {
        match (self.node_id(a), self.node_id(b)) {
            (Some(a), Some(b)) => self.has_edge(a, b),
            _ => false,
        }
    }

    #[inline]
    pub fn weight(&self, a: NodeId, b: NodeId) -> Option<u32> {
        if a == b {
            return None;
        }
        self.edges.get(&edge_key(a, b)).copied()
    }

    /// Edges as `(a, b, weight)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(NodeId, NodeId, u32)> {
        let mut out: Vec<_> = self
            .edges
            .iter()
            .map(|(&k, &w)| (NodeId((k >> 32) as u32), NodeId(k as u32), w))
            .collect();
        out.sort_unstable();
        out
    }

    /// Every node at hop distance `1..=radius` from `node`, with that distance.
    pub fn neighbors_within(&self, node: NodeId, radius: u32) -> Result<BTreeMap<NodeId, u32>> {
        if !self.contains(node) {
            return Err(Error::UnknownItem(format!("node {}", node.0)));
        }
        if radius == 0 {
            return Err(Error::InvalidParameter("radius must be at least 1".into()));
        }
        let mut dist = bfs_ball(node, radius, |v| self.neighbors(v));
        dist.remove(&node);
        Ok(dist.into_iter().collect())
    }

    /// Serializes as the sorted text edge list.
    ///
    /// Header `#nodes N #edges M window W`, then `a\tb\tweight` lines with
    /// `a < b`, then one line per isolated node.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "#nodes {} #edges {} window {}",
            self.node_count(),
            self.edge_count(),
            self.window
        )?;
        let mut line = String::new();
        for (a, b, w) in self.edges() {
            line.clear();
            let _ = writeln!(line, "{}\t{}\t{}", self.name(a), self.name(b), w);
            out.write_all(line.as_bytes())?;
        }
        for node in self.nodes().filter(|&v| self.degree(v) == 0) {
            writeln!(out, "{}", self.name(node))?;
        }
        out.flush()
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        crate::io::write_atomic(path, false, |w| self.write_to(w)).map(|_| ())
    }

    pub fn read_from<R: BufRead>(reader: R, bloom: Option<BloomConfig>) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing header"))?;
        let header = header.map_err(|e| Error::parse(1, e.to_string()))?;
        let (nodes, edges, window) =
            parse_graph_header(&header).ok_or_else(|| Error::parse(1, "malformed header"))?;

        let mut edge_rows: Vec<(String, String, u32)> = Vec::with_capacity(edges);
        let mut isolated: Vec<String> = Vec::new();
        let mut previous: Option<(String, String)> = None;
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                [single] => isolated.push((*single).to_owned()),
                [a, b, w] => {
                    if !isolated.is_empty() {
                        return Err(Error::parse(lineno, "edge after isolated-node lines"));
                    }
                    if a >= b {
                        return Err(Error::parse(
                            lineno,
                            "edge endpoints not in ascending order",
                        ));
                    }
                    let weight = w
                        .parse::<u32>()
                        .ok()
                        .filter(|&w| w > 0)
                        .ok_or_else(|| Error::parse(lineno, format!("bad weight {w:?}")))?;
                    let key = ((*a).to_owned(), (*b).to_owned());
                    if previous.as_ref().is_some_and(|p| *p >= key) {
                        return Err(Error::parse(lineno, "edges not sorted or duplicated"));
                    }
                    edge_rows.push((key.0.clone(), key.1.clone(), weight));
                    previous = Some(key);
                }
                _ => return Err(Error::parse(lineno, "expected 3 fields")),
            }
        }
        if edge_rows.len() != edges {
            return Err(Error::Integrity(format!(
                "header declares {edges} edges, found {}",
                edge_rows.len()
            )));
        }
        let graph = Self::from_edges(
            isolated.iter().map(String::as_str),
            edge_rows
                .iter()
                .map(|(a, b, w)| (a.as_str(), b.as_str(), *w)),
            window,
            bloom,
        )?;
        if graph.node_count() != nodes {
            return Err(Error::Integrity(format!(
                "header declares {nodes} nodes, found {}",
                graph.node_count()
            )));
        }
        Ok(graph)
    }

    pub fn from_path(path: impl AsRef<Path>, bloom: Option<BloomConfig>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file), bloom)
    }
}

fn parse_graph_header(line: &str) -> Option<(usize, usize, usize)> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    match parts.as_slice() {
        ["#nodes", n, "#edges", m, "window", w] => {
            Some((n.parse().ok()?, m.parse().ok()?, w.parse().ok()?))
        }
        _ => None,
    }
}

/// Breadth-first distances from `source` up to `radius`, source included at 0.
pub(crate) fn bfs_ball<'g, F>(source: NodeId, radius: u32, neighbors: F) -> FxHashMap<NodeId, u32>
where
    F: Fn(NodeId) -> &'g [NodeId],
{
    let mut dist = FxHashMap::default();
    dist.insert(source, 0);
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        if d == radius {
            continue;
        }
        for &u in neighbors(v) {
            if let std::collections::hash_map::Entry::Vacant(slot) = dist.entry(u) {
                slot.insert(d + 1);
                queue.push_back(u);
            }
        }
    }
    dist
}
