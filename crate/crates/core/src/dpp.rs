//! Relevance-weighted DPP kernel over triangles and greedy MAP selection.
//!
//! `L = Diag(exp(a r)) C Diag(exp(a r))` with `a = theta / (2 (1 - theta))`,
//! `C` the cosine similarity of unit triangle features and `r` the relevance
//! min-max scaled to `[0, 1]` within the candidate list.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::triangle::Triangle;

/// Squared-residual floor below which a greedy extension counts as singular.
pub const SINGULAR_FLOOR: f64 = 1e-12;

/// `theta / (2 (1 - theta))` for `theta` in `(0, 1)`.
pub fn alpha(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in (0, 1), got {theta}"
        )));
    }
    Ok(theta / (2.0 * (1.0 - theta)))
}

/// Min-max scaling to `[0, 1]`; a constant input maps to all zeros.
pub fn normalize_relevance(raw: &[f64]) -> Vec<f64> {
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return vec![0.0; raw.len()];
    }
    raw.iter().map(|r| (r - lo) / (hi - lo)).collect()
}

#[derive(Debug, Clone)]
enum Repr {
    Dense(Vec<f64>),
    Factored {
        quality: Vec<f64>,
        features: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone)]
pub struct DppKernel {
    size: usize,
    repr: Repr,
    relevance: Vec<f64>,
    theta: Option<f64>,
    zero_feature_rows: Vec<usize>,
}

impl DppKernel {
    /// Wraps an explicit symmetric row-major matrix.
    pub fn from_dense(matrix: Vec<f64>, size: usize) -> Result<Self> {
        if size == 0 || matrix.len() != size * size {
            return Err(Error::InvalidInput(format!(
                "expected a non-empty {size}x{size} matrix, got {} entries",
                matrix.len()
            )));
        }
        for i in 0..size {
            for j in 0..i {
                let (a, b) = (matrix[i * size + j], matrix[j * size + i]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::InvalidInput(format!(
                        "matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(DppKernel {
            size,
            repr: Repr::Dense(matrix),
            relevance: Vec::new(),
            theta: None,
            zero_feature_rows: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// Scaled relevances the kernel was built from; empty for dense kernels.
    pub fn relevance(&self) -> &[f64] {
        &self.relevance
    }

    pub fn theta(&self) -> Option<f64> {
        self.theta
    }

    pub fn alpha(&self) -> Option<f64> {
        self.theta.map(|t| t / (2.0 * (1.0 - t)))
    }

    /// Rows whose feature had zero norm; their similarities are 0 off the
    /// diagonal.
    pub fn zero_feature_rows(&self) -> &[usize] {
        &self.zero_feature_rows
    }

    /// `C_ij`; for dense kernels the normalized entry `L_ij / sqrt(L_ii L_jj)`.
    pub fn similarity(&self, i: usize, j: usize) -> f64 {
        match &self.repr {
            Repr::Factored { features, .. } => cosine(features, i, j),
            Repr::Dense(m) => {
                let d = (m[i * self.size + i] * m[j * self.size + j]).sqrt();
                if d > 0.0 {
                    m[i * self.size + j] / d
                } else {
                    f64::from(i == j)
                }
            }
        }
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.repr {
            Repr::Dense(m) => m[i * self.size + j],
            Repr::Factored { quality, features } => {
                let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
                quality[lo] * cosine(features, lo, hi) * quality[hi]
            }
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.size;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.entry(i, j);
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.size).map(|i| self.entry(i, i)).sum()
    }
}

#[inline]
fn cosine(features: &[Vec<f64>], i: usize, j: usize) -> f64 {
    if i == j {
        return 1.0;
    }
    features[i]
        .iter()
        .zip(&features[j])
        .map(|(a, b)| a * b)
        .sum()
}

/// Builds the kernel from triangles carrying unit (or zero) features.
pub fn build_kernel(triangles: &[Triangle], theta: f64) -> Result<DppKernel> {
    let alpha = alpha(theta)?;
    if triangles.is_empty() {
        return Err(Error::InvalidInput(
            "cannot build a kernel over zero triangles".into(),
        ));
    }
    let dim = triangles[0].feature.len();
    if let Some(t) = triangles.iter().find(|t| t.feature.len() != dim) {
        return Err(Error::InvalidInput(format!(
            "triangle {:?} has a {}-dimensional feature, expected {dim}",
            t.nodes,
            t.feature.len()
        )));
    }
    let raw: Vec<f64> = triangles.iter().map(|t| t.relevance).collect();
    let relevance = normalize_relevance(&raw);
    let quality = relevance.iter().map(|r| (alpha * r).exp()).collect();
    let zero_feature_rows: Vec<usize> = triangles
        .iter()
        .enumerate()
        .filter(|(_, t)| t.zero_feature || t.feature.iter().all(|&x| x == 0.0))
        .map(|(i, _)| i)
        .collect();
    if !zero_feature_rows.is_empty() {
        log::debug!(
            "{} triangles have zero-norm features",
            zero_feature_rows.len()
        );
    }
    Ok(DppKernel {
        size: triangles.len(),
        repr: Repr::Factored {
            quality,
            features: triangles.iter().map(|t| t.feature.clone()).collect(),
        },
        relevance,
        theta: Some(theta),
        zero_feature_rows,
    })
}

/// Greedy MAP result in selection order.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedySelection {
    pub indices: Vec<usize>,
    /// `log det(L_{S+j}) - log det(L_S)` for each pick.
    pub gains: Vec<f64>,
    /// Fewer than the requested number were selectable.
    pub truncated: bool,
}

/// Greedy log-determinant maximization with incremental Cholesky updates.
///
/// Each step picks the candidate with the largest residual `d_j^2`, which is
/// the determinant ratio `det(L_{S+j}) / det(L_S)`, then extends every
/// remaining candidate's Cholesky row by one entry. Ties go to the lowest
/// index. Stops once the best residual drops below [`SINGULAR_FLOOR`].
pub fn greedy_map(kernel: &DppKernel, n: usize) -> Result<GreedySelection> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let size = kernel.len();
    let mut residual: Vec<f64> = (0..size).map(|i| kernel.entry(i, i)).collect();
    let mut taken = vec![false; size];
    // cholesky[s][i]: entry s of candidate i's row
    let mut cholesky: Vec<Vec<f64>> = Vec::new();
    let mut indices = Vec::new();
    let mut gains = Vec::new();

    while indices.len() < n.min(size) {
        let mut best: Option<usize> = None;
        for i in 0..size {
            if !taken[i] && best.is_none_or(|b| residual[i] > residual[b]) {
                best = Some(i);
            }
        }
        let Some(j) = best else { break };
        let d2 = residual[j];
        if d2.is_nan() || d2 < SINGULAR_FLOOR {
            break;
        }
        taken[j] = true;
        indices.push(j);
        gains.push(d2.ln());
        if indices.len() == n {
            break;
        }
        let dj = d2.sqrt();
        let mut row = vec![0.0; size];
        for i in 0..size {
            if taken[i] {
                continue;
            }
            let dot: f64 = cholesky.iter().map(|c| c[j] * c[i]).sum();
            let e = (kernel.entry(j, i) - dot) / dj;
            row[i] = e;
            residual[i] -= e * e;
        }
        cholesky.push(row);
    }
    let truncated = indices.len() < n;
    Ok(GreedySelection {
        indices,
        gains,
        truncated,
    })
}

/// One selected (or padded) row.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedTriangle {
    pub nodes: [NodeId; 3],
    /// Raw relevance; 0 for pseudo-triangles.
    pub relevance: f64,
    pub padded: bool,
    /// Index into the candidate list; `None` for pseudo-triangles.
    pub source: Option<usize>,
}

impl SelectedTriangle {
    pub fn pseudo(center: NodeId) -> Self {
        SelectedTriangle {
            nodes: [center; 3],
            relevance: 0.0,
            padded: true,
            source: None,
        }
    }

    pub fn is_pseudo(&self) -> bool {
        self.source.is_none()
    }
}

/// Exactly `n` rows in rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub rows: Vec<SelectedTriangle>,
    pub padded: usize,
    pub zero_feature_rows: usize,
}

fn from_candidate(triangles: &[Triangle], i: usize, padded: bool) -> SelectedTriangle {
    SelectedTriangle {
        nodes: triangles[i].nodes,
        relevance: triangles[i].relevance,
        padded,
        source: Some(i),
    }
}

fn pad(
    rows: &mut Vec<SelectedTriangle>,
    triangles: &[Triangle],
    center: NodeId,
    n: usize,
) -> usize {
    let before = rows.len();
    if rows.len() < n {
        let mut used = vec![false; triangles.len()];
        for r in rows.iter() {
            if let Some(i) = r.source {
                used[i] = true;
            }
        }
        let mut rest: Vec<usize> = (0..triangles.len()).filter(|&i| !used[i]).collect();
        rest.sort_by(|&a, &b| {
            triangles[b]
                .relevance
                .total_cmp(&triangles[a].relevance)
                .then(a.cmp(&b))
        });
        for i in rest.into_iter().take(n - rows.len()) {
            rows.push(from_candidate(triangles, i, true));
        }
    }
    while rows.len() < n {
        rows.push(SelectedTriangle::pseudo(center));
    }
    rows.len() - before
}

/// Greedy DPP selection of `n` triangles, padded to exactly `n` rows with
/// the most relevant leftovers and then pseudo-triangles on `center`.
pub fn select_triangles(
    triangles: &[Triangle],
    center: NodeId,
    theta: f64,
    n: usize,
) -> Result<Selection> {
    alpha(theta)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(n);
    let mut zero_feature_rows = 0;
    if !triangles.is_empty() {
        let kernel = build_kernel(triangles, theta)?;
        zero_feature_rows = kernel.zero_feature_rows().len();
        let greedy = greedy_map(&kernel, n)?;
        rows.extend(
            greedy
                .indices
                .iter()
                .map(|&i| from_candidate(triangles, i, false)),
        );
    }
    let padded = pad(&mut rows, triangles, center, n);
    Ok(Selection {
        rows,
        padded,
        zero_feature_rows,
    })
}

/// Draws up to `n` distinct indices with probability proportional to
/// relevance, in draw order. Once no positive weight remains the rest are
/// drawn uniformly.
pub fn weight_sample(triangles: &[Triangle], n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights: Vec<f64> = triangles
        .iter()
        .map(|t| {
            if t.relevance.is_finite() && t.relevance > 0.0 {
                t.relevance
            } else {
                0.0
            }
        })
        .collect();
    let mut remaining: Vec<usize> = (0..triangles.len()).collect();
    let mut out = Vec::with_capacity(n.min(triangles.len()));
    while out.len() < n && !remaining.is_empty() {
        let pick = match WeightedIndex::new(&weights) {
            Ok(dist) => dist.sample(&mut rng),
            Err(_) => remaining[rng.gen_range(0..remaining.len())],
        };
        weights[pick] = 0.0;
        remaining.retain(|&i| i != pick);
        out.push(pick);
    }
    out
}

/// Relevance-proportional sampling padded to `n` rows with pseudo-triangles.
pub fn weight_select(
    triangles: &[Triangle],
    center: NodeId,
    n: usize,
    seed: u64,
) -> Result<Selection> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut rows: Vec<SelectedTriangle> = weight_sample(triangles, n, seed)
        .into_iter()
        .map(|i| from_candidate(triangles, i, false))
        .collect();
    let padded = pad(&mut rows, triangles, center, n);
    Ok(Selection {
        rows,
        padded,
        zero_feature_rows: 0,
    })
}
