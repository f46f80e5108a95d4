//! Offline index construction: extract, score, select and collect per
//! (item, order).

use rayon::prelude::*;

use crate::catalog::ItemCatalog;
use crate::dpp::{alpha, select_triangles, weight_select, Selection};
use crate::error::{Error, Result};
use crate::graph::{CooccurrenceGraph, NodeId};
use crate::index::{IndexRow, TriangleIndex};
use crate::triangle::{NodeFeatures, TriangleExtractor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Greedy DPP MAP selection.
    #[default]
    Dpp,
    /// Relevance-proportional sampling without replacement.
    Weight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub window: usize,
    pub max_order: u32,
    pub triangles_per_item: usize,
    pub theta: f64,
    pub neighbor_cap: Option<usize>,
    /// `None` disables the edge membership filter.
    pub bloom_bits_per_edge: Option<usize>,
    pub strategy: Strategy,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            window: 3,
            max_order: 2,
            triangles_per_item: 10,
            theta: 0.5,
            neighbor_cap: Some(200),
            bloom_bits_per_edge: Some(10),
            strategy: Strategy::Dpp,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::InvalidParameter(format!(
                "window must be >= 2, got {}",
                self.window
            )));
        }
        if self.triangles_per_item == 0 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        if self.neighbor_cap == Some(0) {
            return Err(Error::InvalidParameter("neighbor cap must be >= 1".into()));
        }
        if self.bloom_bits_per_edge == Some(0) {
            return Err(Error::InvalidParameter(
                "bloom bits per edge must be >= 1".into(),
            ));
        }
        alpha(self.theta).map(|_| ())
    }

    pub fn bloom(&self) -> Option<crate::bloom::BloomConfig> {
        self.bloom_bits_per_edge
            .map(crate::bloom::BloomConfig::with_bits_per_key)
    }
}

/// Index plus the bookkeeping the driver reports.
#[derive(Debug, Clone)]
pub struct IndexBuild {
    pub index: TriangleIndex,
    /// Graph nodes without catalog features; they were given zero features.
    pub missing_features: Vec<String>,
    /// (item, order, padded rows) for every entry with padding.
    pub padded_entries: Vec<(String, u32, usize)>,
    pub triangles_seen: usize,
}

fn rows_of(graph: &CooccurrenceGraph, selection: &Selection) -> Vec<IndexRow> {
    selection
        .rows
        .iter()
        .enumerate()
        .map(|(rank, row)| IndexRow {
            nodes: row.nodes.map(|v| graph.name(v).to_owned()),
            relevance: row.relevance as f32,
            rank: rank as u32,
            padded: row.padded,
        })
        .collect()
}

/// Builds the triangle index for every graph node and every order
/// `0..=max_order`. Runs on the current rayon pool.
pub fn build_index(
    graph: &CooccurrenceGraph,
    catalog: &ItemCatalog,
    config: &PipelineConfig,
) -> Result<IndexBuild> {
    config.validate()?;
    let features = NodeFeatures::from_catalog(graph, catalog);
    let extractor = TriangleExtractor::new(graph, config.max_order, config.neighbor_cap);
    let n = config.triangles_per_item;

    type Entry = (u32, Vec<IndexRow>, usize);
    let per_node: Vec<(NodeId, Vec<Entry>, usize)> = graph
        .nodes()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|center| -> Result<_> {
            let mut sets = extractor.extract_all(center)?;
            let mut seen = 0;
            let mut entries = Vec::with_capacity(sets.len());
            for set in &mut sets {
                seen += set.len();
                set.attach_features(&features);
                let selection = match config.strategy {
                    Strategy::Dpp => select_triangles(&set.triangles, center, config.theta, n)?,
                    Strategy::Weight => {
                        let seed = config.seed ^ ((center.0 as u64) << 8 | set.order as u64);
                        weight_select(&set.triangles, center, n, seed)?
                    }
                };
                entries.push((set.order, rows_of(graph, &selection), selection.padded));
            }
            Ok((center, entries, seen))
        })
        .collect::<Result<_>>()?;

    let orders: Vec<u32> = (0..=config.max_order).collect();
    let mut index = TriangleIndex::new(n, orders)?;
    let mut padded_entries = Vec::new();
    let mut triangles_seen = 0;
    for (center, entries, seen) in per_node {
        triangles_seen += seen;
        let item = graph.name(center);
        for (order, rows, padded) in entries {
            if padded > 0 {
                padded_entries.push((item.to_owned(), order, padded));
            }
            index.insert(item, order, rows)?;
        }
    }
    let missing_features = features
        .missing()
        .iter()
        .map(|&v| graph.name(v).to_owned())
        .collect();
    Ok(IndexBuild {
        index,
        missing_features,
        padded_entries,
        triangles_seen,
    })
}
