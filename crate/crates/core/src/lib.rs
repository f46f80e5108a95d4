//! Offline triangle-interest pipeline.
//!
//! Click logs become an item co-occurrence graph ([`graph`]); each item's
//! neighborhood yields k-order triangles ([`triangle`]); a relevance-weighted
//! DPP picks a small diverse subset per item and order ([`dpp`]); the result
//! is persisted as a triangle index ([`index`]). [`analytics`] measures
//! triangle homophily, clique statistics and selection diversity.

pub mod analytics;
pub mod behavior;
pub mod bloom;
pub mod catalog;
pub mod dpp;
pub mod error;
pub mod graph;
pub mod index;
pub mod io;
pub mod oracle;
pub mod pipeline;
pub mod selfcheck;
pub mod synth;
pub mod triangle;

pub use behavior::{BehaviorLog, BehaviorRecord, Split};
pub use bloom::{BloomConfig, BloomFilter};
pub use catalog::ItemCatalog;
pub use dpp::{
    build_kernel, greedy_map, select_triangles, weight_sample, DppKernel, GreedySelection,
    Selection,
};
pub use error::{Error, Result};
pub use graph::{build_graph, CooccurrenceGraph, GraphBuilder, NodeId};
pub use index::{read_index, write_index, IndexRow, TriangleIndex};
pub use pipeline::{build_index, IndexBuild, PipelineConfig, Strategy};
pub use triangle::{
    extract_triangles, score_triangle, triangle_feature, Triangle, TriangleExtractor, TriangleSet,
};
