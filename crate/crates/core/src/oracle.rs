//! Brute-force reference computations.
//!
//! These share no code with the production paths they check: distances come
//! from a dense adjacency matrix, triangles from scanning every node triple,
//! determinants from Gaussian elimination.

use crate::graph::{CooccurrenceGraph, NodeId};

/// Dense 0/1 adjacency built from the edge list.
pub struct DenseAdjacency {
    n: usize,
    bits: Vec<bool>,
}

impl DenseAdjacency {
    pub fn from_graph(graph: &CooccurrenceGraph) -> Self {
        let n = graph.node_count();
        let mut bits = vec![false; n * n];
        for (a, b, _) in graph.edges() {
            bits[a.index() * n + b.index()] = true;
            bits[b.index() * n + a.index()] = true;
        }
        DenseAdjacency { n, bits }
    }

    pub fn connected(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.n + b]
    }

    /// Hop distances from `source` by repeated frontier scans over the matrix.
    pub fn distances(&self, source: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.n];
        dist[source] = Some(0);
        let mut level = 0;
        loop {
            let frontier: Vec<usize> = (0..self.n).filter(|&v| dist[v] == Some(level)).collect();
            if frontier.is_empty() {
                return dist;
            }
            level += 1;
            for u in frontier {
                for (w, d) in dist.iter_mut().enumerate() {
                    if d.is_none() && self.connected(u, w) {
                        *d = Some(level);
                    }
                }
            }
        }
    }
}

/// Triangles of each order `0..=radius` around `center`, found by checking
/// every node triple. Index `k` of the result holds order `k`.
pub fn brute_force_triangles(
    graph: &CooccurrenceGraph,
    center: NodeId,
    radius: u32,
) -> Vec<Vec<[NodeId; 3]>> {
    let adj = DenseAdjacency::from_graph(graph);
    let dist = adj.distances(center.index());
    let within = |v: usize| dist[v].filter(|&d| d <= radius);
    let n = graph.node_count();
    let mut out = vec![Vec::new(); radius as usize + 1];
    for a in 0..n {
        let Some(da) = within(a) else { continue };
        for b in a + 1..n {
            let Some(db) = within(b) else { continue };
            if !adj.connected(a, b) {
                continue;
            }
            for c in b + 1..n {
                let Some(dc) = within(c) else { continue };
                if adj.connected(a, c) && adj.connected(b, c) {
                    let order = da.min(db).min(dc);
                    out[order as usize].push([a, b, c].map(|i| NodeId(i as u32)));
                }
            }
        }
    }
    out
}

/// Pair counts by direct double loop over every user sequence.
pub fn brute_force_pair_counts(
    sequences: &[Vec<&str>],
    window: usize,
) -> std::collections::BTreeMap<(String, String), u32> {
    let mut counts = std::collections::BTreeMap::new();
    for seq in sequences {
        for i in 0..seq.len() {
            for j in 0..seq.len() {
                if i < j && j - i < window && seq[i] != seq[j] {
                    let (a, b) = if seq[i] < seq[j] {
                        (seq[i], seq[j])
                    } else {
                        (seq[j], seq[i])
                    };
                    *counts.entry((a.to_owned(), b.to_owned())).or_insert(0) += 1;
                }
            }
        }
    }
    counts
}

/// Determinant of a row-major square matrix by partial-pivot elimination.
pub fn determinant(matrix: &[f64], n: usize) -> f64 {
    assert_eq!(matrix.len(), n * n);
    let mut m = matrix.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a * n + col].abs().total_cmp(&m[b * n + col].abs()))
            .unwrap();
        if m[pivot * n + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            det = -det;
        }
        let p = m[col * n + col];
        det *= p;
        for row in col + 1..n {
            let factor = m[row * n + col] / p;
            for k in col..n {
                m[row * n + k] -= factor * m[col * n + k];
            }
        }
    }
    det
}

/// Principal submatrix indexed by `subset`.
pub fn principal_submatrix(matrix: &[f64], n: usize, subset: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(subset.len() * subset.len());
    for &i in subset {
        for &j in subset {
            out.push(matrix[i * n + j]);
        }
    }
    out
}

/// `log det(L_S)`, or `-inf` when the determinant is not positive.
pub fn log_det_subset(matrix: &[f64], n: usize, subset: &[usize]) -> f64 {
    if subset.is_empty() {
        return 0.0;
    }
    let det = determinant(&principal_submatrix(matrix, n, subset), subset.len());
    if det > 0.0 {
        det.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// One greedy step by direct determinant evaluation: the index outside
/// `chosen` maximizing `log det(L_{S+j}) - log det(L_S)`, lowest index on ties.
pub fn dense_greedy_step(matrix: &[f64], n: usize, chosen: &[usize]) -> Option<(usize, f64)> {
    let base = log_det_subset(matrix, n, chosen);
    let mut best: Option<(usize, f64)> = None;
    let mut subset = chosen.to_vec();
    for j in (0..n).filter(|j| !chosen.contains(j)) {
        subset.push(j);
        let gain = log_det_subset(matrix, n, &subset) - base;
        subset.pop();
        if best.is_none_or(|(_, g)| gain > g) {
            best = Some((j, gain));
        }
    }
    best
}

/// Whether `matrix + shift * I` admits a Cholesky factorization, i.e. the
/// smallest eigenvalue of `matrix` is at least `-shift`.
pub fn is_psd_with_shift(matrix: &[f64], n: usize, shift: f64) -> bool {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = matrix[i * n + j] + if i == j { shift } else { 0.0 };
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum < 0.0 {
                    return false;
                }
                l[i * n + i] = sum.sqrt();
            } else if l[j * n + j] > 0.0 {
                l[i * n + j] = sum / l[j * n + j];
            } else if sum.abs() > 1e-12 {
                return false;
            }
        }
    }
    true
}
