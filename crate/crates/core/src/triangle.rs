//! k-order triangle extraction and scoring around a center item.

use rustc_hash::{FxHashMap, FxHashSet};

use crate::catalog::ItemCatalog;
use crate::error::{Error, Result};
use crate::graph::{bfs_ball, CooccurrenceGraph, NodeId};

/// A pairwise-connected item triple scored relative to a center item.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    /// Ascending node ids.
    pub nodes: [NodeId; 3],
    pub order: u32,
    pub inner_weight: f64,
    pub outer_weight: f64,
    pub relevance: f64,
    /// Unit-norm mean of the node features; empty until features are attached.
    pub feature: Vec<f64>,
    pub zero_feature: bool,
}

/// Triangles of one order around one center, sorted by node triple.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleSet {
    pub center: NodeId,
    pub order: u32,
    pub triangles: Vec<Triangle>,
}

impl TriangleSet {
    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn node_triples(&self) -> Vec<[NodeId; 3]> {
        self.triangles.iter().map(|t| t.nodes).collect()
    }

    pub fn attach_features(&mut self, features: &NodeFeatures) {
        for t in &mut self.triangles {
            let (feature, zero) = mean_unit_feature([
                features.row(t.nodes[0]),
                features.row(t.nodes[1]),
                features.row(t.nodes[2]),
            ]);
            t.feature = feature;
            t.zero_feature = zero;
        }
    }
}

/// Enumerates triangles inside the radius-`K` neighborhood of a center.
///
/// With a neighbor cap, the breadth-first expansion follows only each node's
/// `cap` heaviest edges (ties to the lower id). Pairwise connectivity is
/// always checked against the full graph.
pub struct TriangleExtractor<'g> {
    graph: &'g CooccurrenceGraph,
    radius: u32,
    capped: Option<Vec<Vec<NodeId>>>,
}

impl<'g> TriangleExtractor<'g> {
    pub fn new(graph: &'g CooccurrenceGraph, radius: u32, neighbor_cap: Option<usize>) -> Self {
        let capped = neighbor_cap.map(|cap| {
            graph
                .nodes()
                .map(|v| {
                    let ids = graph.neighbors(v);
                    if ids.len() <= cap {
                        return ids.to_vec();
                    }
                    let weights = graph.neighbor_weights(v);
                    let mut ranked: Vec<(u32, NodeId)> =
                        weights.iter().copied().zip(ids.iter().copied()).collect();
                    ranked.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
                    let mut kept: Vec<NodeId> = ranked[..cap].iter().map(|&(_, id)| id).collect();
                    kept.sort_unstable();
                    kept
                })
                .collect()
        });
        TriangleExtractor {
            graph,
            radius,
            capped,
        }
    }

    pub fn graph(&self) -> &'g CooccurrenceGraph {
        self.graph
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    fn expansion(&self, v: NodeId) -> &[NodeId] {
        match &self.capped {
            Some(lists) => &lists[v.index()],
            None => self.graph.neighbors(v),
        }
    }

    /// Distances from `center` (center at 0) over the capped expansion.
    pub fn distances(&self, center: NodeId) -> Result<FxHashMap<NodeId, u32>> {
        if !self.graph.contains(center) {
            return Err(Error::UnknownItem(format!("node {}", center.0)));
        }
        Ok(bfs_ball(center, self.radius, |v| self.expansion(v)))
    }

    /// Triangles of every order `0..=K`, index `k` holding order `k`.
    pub fn extract_all(&self, center: NodeId) -> Result<Vec<TriangleSet>> {
        let dist = self.distances(center)?;
        let mut sets: Vec<TriangleSet> = (0..=self.radius)
            .map(|order| TriangleSet {
                center,
                order,
                triangles: Vec::new(),
            })
            .collect();
        for nodes in enumerate_in(self.graph, &dist) {
            let t = score_triangle(self.graph, nodes, center, |v| dist.get(&v).copied())?;
            sets[t.order as usize].triangles.push(t);
        }
        Ok(sets)
    }

    pub fn extract(&self, center: NodeId, order: u32) -> Result<TriangleSet> {
        if order > self.radius {
            return Err(Error::InvalidParameter(format!(
                "order {order} exceeds neighborhood radius {}",
                self.radius
            )));
        }
        let mut all = self.extract_all(center)?;
        Ok(all.swap_remove(order as usize))
    }
}

/// Triangles of order `k` around `center` within radius `K`, no neighbor cap.
pub fn extract_triangles(
    graph: &CooccurrenceGraph,
    center: NodeId,
    order: u32,
    radius: u32,
) -> Result<TriangleSet> {
    TriangleExtractor::new(graph, radius, None).extract(center, order)
}

/// Every pairwise-connected triple inside `members`, ascending and sorted.
fn enumerate_in(graph: &CooccurrenceGraph, members: &FxHashMap<NodeId, u32>) -> Vec<[NodeId; 3]> {
    let mut nodes: Vec<NodeId> = members.keys().copied().collect();
    nodes.sort_unstable();
    let mut out = Vec::new();
    let mut forward: Vec<NodeId> = Vec::new();
    for &a in &nodes {
        forward.clear();
        forward.extend(
            graph
                .neighbors(a)
                .iter()
                .copied()
                .filter(|&b| b > a && members.contains_key(&b)),
        );
        for (i, &b) in forward.iter().enumerate() {
            for &c in &forward[i + 1..] {
                if graph.has_edge(b, c) {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

/// Scores a triangle against `center`.
///
/// Inner weight is the mean of the three edge weights. Outer weight is the
/// summed weight of edges from each node to the center (zero for the center
/// itself or a missing edge) over the summed hop distances.
pub fn score_triangle<D>(
    graph: &CooccurrenceGraph,
    nodes: [NodeId; 3],
    center: NodeId,
    dist: D,
) -> Result<Triangle>
where
    D: Fn(NodeId) -> Option<u32>,
{
    let mut nodes = nodes;
    nodes.sort_unstable();
    let [a, b, c] = nodes;
    let edge = |x: NodeId, y: NodeId| {
        graph.weight(x, y).ok_or_else(|| {
            Error::InvalidInput(format!(
                "{} and {} are not connected",
                graph.name(x),
                graph.name(y)
            ))
        })
    };
    let inner = (edge(a, b)? + edge(a, c)? + edge(b, c)?) as f64 / 3.0;

    let mut reach = 0u64;
    let mut hops = 0u32;
    let mut order = u32::MAX;
    for v in nodes {
        let d = dist(v)
            .ok_or_else(|| Error::InvalidInput(format!("no distance for {}", graph.name(v))))?;
        order = order.min(d);
        hops += d;
        reach += graph.weight(v, center).unwrap_or(0) as u64;
    }
    if hops == 0 {
        return Err(Error::InternalInvariant(
            "triangle nodes all at distance 0 from the center".into(),
        ));
    }
    let outer = reach as f64 / hops as f64;
    Ok(Triangle {
        nodes,
        order,
        inner_weight: inner,
        outer_weight: outer,
        relevance: (inner * outer).sqrt(),
        feature: Vec::new(),
        zero_feature: false,
    })
}

/// Mean of three feature vectors, L2-normalized. A zero mean is returned
/// unnormalized with the flag set.
pub fn mean_unit_feature(rows: [&[f64]; 3]) -> (Vec<f64>, bool) {
    let dim = rows[0].len();
    let mut mean = vec![0.0; dim];
    for row in rows {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x / 3.0;
        }
    }
    let norm = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        mean.iter_mut().for_each(|x| *x /= norm);
        (mean, false)
    } else {
        (mean, true)
    }
}

/// Unit-normalized mean feature of three catalog items.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleFeature {
    pub vector: Vec<f64>,
    pub zero_norm: bool,
}

pub fn triangle_feature(catalog: &ItemCatalog, items: [&str; 3]) -> Result<TriangleFeature> {
    let row = |item: &str| {
        catalog
            .features(item)
            .ok_or_else(|| Error::UnknownItem(format!("no features for {item:?}")))
    };
    let (vector, zero_norm) = mean_unit_feature([row(items[0])?, row(items[1])?, row(items[2])?]);
    Ok(TriangleFeature { vector, zero_norm })
}

/// Catalog features laid out by node id. Nodes without catalog features get
/// a zero row and are listed in `missing`.
#[derive(Debug, Clone)]
pub struct NodeFeatures {
    dim: usize,
    rows: Vec<Vec<f64>>,
    missing: Vec<NodeId>,
}

impl NodeFeatures {
    pub fn from_catalog(graph: &CooccurrenceGraph, catalog: &ItemCatalog) -> Self {
        let dim = catalog.dim();
        let mut missing = Vec::new();
        let rows = graph
            .nodes()
            .map(|v| match catalog.features(graph.name(v)) {
                Some(f) => f.to_vec(),
                None => {
                    missing.push(v);
                    vec![0.0; dim]
                }
            })
            .collect();
        NodeFeatures { dim, rows, missing }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, node: NodeId) -> &[f64] {
        &self.rows[node.index()]
    }

    pub fn missing(&self) -> &[NodeId] {
        &self.missing
    }
}

/// Deduplicated union of triangle node triples, for set comparisons in tests.
pub fn triple_set(sets: &[TriangleSet]) -> FxHashSet<[NodeId; 3]> {
    sets.iter()
        .flat_map(|s| s.triangles.iter().map(|t| t.nodes))
        .collect()
}
