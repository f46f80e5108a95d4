//! Triangle homophily, k-clique sampling and selection diversity.

use std::collections::BTreeSet;
use std::io::Write;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::catalog::ItemCatalog;
use crate::dpp::{select_triangles, weight_select, Selection};
use crate::error::{Error, Result};
use crate::graph::{CooccurrenceGraph, NodeId};
use crate::triangle::{NodeFeatures, TriangleExtractor};

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fraction of sampled triangles whose three items share an attribute value.
#[derive(Debug, Clone, PartialEq)]
pub struct HomophilyReport {
    /// Shares at least one attribute; `None` when nothing was sampled.
    pub share_rate: Option<f64>,
    pub per_attribute: Vec<(String, Option<f64>)>,
    pub sample_size: usize,
}

impl HomophilyReport {
    fn from_counts(catalog: &ItemCatalog, any: usize, per: &[usize], total: usize) -> Self {
        let rate = |c: usize| (total > 0).then(|| c as f64 / total as f64);
        HomophilyReport {
            share_rate: rate(any),
            per_attribute: catalog
                .attribute_names()
                .zip(per)
                .map(|(name, &c)| (name.to_owned(), rate(c)))
                .collect(),
            sample_size: total,
        }
    }

    pub fn attribute(&self, name: &str) -> Option<f64> {
        self.per_attribute
            .iter()
            .find(|(n, _)| n == name)
            .and_then(|(_, r)| *r)
    }

    /// `attribute\tfraction` rows; the first row (`any`) is the share rate.
    pub fn write_tsv<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "#homophily sample_size={}", self.sample_size)?;
        writeln!(out, "attribute\tfraction")?;
        writeln!(out, "any\t{}", fmt_rate(self.share_rate))?;
        for (name, rate) in &self.per_attribute {
            writeln!(out, "{name}\t{}", fmt_rate(*rate))?;
        }
        Ok(())
    }
}

fn fmt_rate(rate: Option<f64>) -> String {
    rate.map_or_else(|| "NA".to_owned(), |r| format!("{r:.6}"))
}

#[derive(Debug, Clone, Copy)]
pub struct HomophilyParams {
    pub items: usize,
    pub triangles_per_item: usize,
    pub radius: u32,
    pub neighbor_cap: Option<usize>,
    pub seed: u64,
}

impl Default for HomophilyParams {
    fn default() -> Self {
        HomophilyParams {
            items: 100_000,
            triangles_per_item: 50,
            radius: 2,
            neighbor_cap: Some(200),
            seed: 0,
        }
    }
}

fn tally(
    catalog: &ItemCatalog,
    groups: impl Iterator<Item = Vec<String>>,
) -> (usize, Vec<usize>, usize) {
    let mut any = 0;
    let mut per = vec![0; catalog.attribute_count()];
    let mut total = 0;
    for group in groups {
        let refs: Vec<&str> = group.iter().map(String::as_str).collect();
        let shared = catalog.shared_attributes(&refs);
        total += 1;
        if shared.iter().any(|&s| s) {
            any += 1;
        }
        for (count, s) in per.iter_mut().zip(shared) {
            *count += usize::from(s);
        }
    }
    (any, per, total)
}

/// Samples items uniformly, pools up to `triangles_per_item` random triangles
/// from each item's neighborhood (all orders), and measures attribute sharing.
pub fn homophily_stats(
    graph: &CooccurrenceGraph,
    catalog: &ItemCatalog,
    params: HomophilyParams,
) -> Result<HomophilyReport> {
    let n = graph.node_count();
    let mut rng = stream(params.seed, 0);
    let picked = index::sample(&mut rng, n, params.items.min(n)).into_vec();
    let extractor = TriangleExtractor::new(graph, params.radius, params.neighbor_cap);
    let triangles: Vec<Vec<[NodeId; 3]>> = picked
        .par_iter()
        .enumerate()
        .map(|(slot, &v)| -> Result<Vec<[NodeId; 3]>> {
            let sets = extractor.extract_all(NodeId(v as u32))?;
            let mut all: Vec<[NodeId; 3]> = sets
                .iter()
                .flat_map(|s| s.triangles.iter().map(|t| t.nodes))
                .collect();
            if all.len() > params.triangles_per_item {
                let mut rng = stream(params.seed, slot as u64 + 1);
                all = all
                    .choose_multiple(&mut rng, params.triangles_per_item)
                    .copied()
                    .collect();
            }
            Ok(all)
        })
        .collect::<Result<_>>()?;
    let (any, per, total) = tally(
        catalog,
        triangles
            .iter()
            .flatten()
            .map(|t| t.iter().map(|&v| graph.name(v).to_owned()).collect()),
    );
    Ok(HomophilyReport::from_counts(catalog, any, &per, total))
}

/// Sharing rates of uniformly random distinct node triples, the baseline for
/// [`homophily_stats`].
pub fn random_triple_homophily(
    graph: &CooccurrenceGraph,
    catalog: &ItemCatalog,
    trials: usize,
    seed: u64,
) -> Result<HomophilyReport> {
    let n = graph.node_count();
    if n < 3 {
        return Err(Error::InvalidInput("graph has fewer than 3 nodes".into()));
    }
    let mut rng = stream(seed, 0);
    let groups: Vec<Vec<String>> = (0..trials)
        .map(|_| {
            index::sample(&mut rng, n, 3)
                .into_iter()
                .map(|i| graph.name(NodeId(i as u32)).to_owned())
                .collect()
        })
        .collect();
    let (any, per, total) = tally(catalog, groups.into_iter());
    Ok(HomophilyReport::from_counts(catalog, any, &per, total))
}

/// Monte Carlo estimate for one clique size.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueEstimate {
    pub k: usize,
    pub trials: usize,
    pub cliques: usize,
    pub probability: f64,
    /// Among sampled cliques, the fraction whose items all share an attribute
    /// value. `None` without a catalog or without cliques.
    pub homophily: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliqueReport {
    pub trials: usize,
    pub per_k: Vec<CliqueEstimate>,
}

impl CliqueReport {
    pub fn get(&self, k: usize) -> Option<&CliqueEstimate> {
        self.per_k.iter().find(|e| e.k == k)
    }

    /// Rows `k-clique` with occurrence probability and homophily columns.
    pub fn write_tsv<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "#clique trials={}", self.trials)?;
        writeln!(out, "clique\toccurrence_probability\thomophily")?;
        for e in &self.per_k {
            writeln!(
                out,
                "{}-clique\t{:.6}\t{}",
                e.k,
                e.probability,
                fmt_rate(e.homophily)
            )?;
        }
        Ok(())
    }
}

const MAX_CLIQUE: usize = 5;
const TRIALS_PER_STREAM: usize = 1 << 14;

/// Each trial draws up to five distinct nodes one at a time (rejecting
/// repeats) and tests every prefix of size `2..=5` for being a clique. Since
/// smaller cliques are prefixes of larger ones, the estimates are monotone in
/// `k` for a fixed seed.
pub fn clique_report(
    graph: &CooccurrenceGraph,
    catalog: Option<&ItemCatalog>,
    trials: usize,
    seed: u64,
    node_cap: Option<usize>,
) -> Result<CliqueReport> {
    let n = graph.node_count();
    if n < 2 {
        return Err(Error::InvalidInput("graph has fewer than 2 nodes".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let pool: Vec<NodeId> = match node_cap {
        Some(cap) if cap < n => {
            let mut rng = stream(seed, u64::MAX);
            let mut ids: Vec<NodeId> = index::sample(&mut rng, n, cap)
                .into_iter()
                .map(|i| NodeId(i as u32))
                .collect();
            ids.sort_unstable();
            ids
        }
        _ => graph.nodes().collect(),
    };
    if pool.len() < 2 {
        return Err(Error::InvalidInput(
            "node sample has fewer than 2 nodes".into(),
        ));
    }
    let depth = MAX_CLIQUE.min(pool.len());
    let chunks = trials.div_ceil(TRIALS_PER_STREAM);
    let attr_count = catalog.map_or(0, ItemCatalog::attribute_count);

    let (cliques, homophilous) = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream(seed, chunk as u64);
            let count = TRIALS_PER_STREAM.min(trials - chunk * TRIALS_PER_STREAM);
            let mut cliques = [0usize; MAX_CLIQUE + 1];
            let mut homophilous = [0usize; MAX_CLIQUE + 1];
            let mut drawn: Vec<NodeId> = Vec::with_capacity(depth);
            let mut shared = vec![true; attr_count];
            for _ in 0..count {
                drawn.clear();
                while drawn.len() < depth {
                    let v = pool[rng.gen_range(0..pool.len())];
                    if !drawn.contains(&v) {
                        drawn.push(v);
                    }
                }
                if let Some(cat) = catalog {
                    let first = graph.name(drawn[0]);
                    for (pos, s) in shared.iter_mut().enumerate() {
                        *s = cat.value_id(first, pos).is_some();
                    }
                }
                for k in 2..=depth {
                    let new = drawn[k - 1];
                    if !drawn[..k - 1].iter().all(|&u| graph.has_edge(u, new)) {
                        break;
                    }
                    cliques[k] += 1;
                    if let Some(cat) = catalog {
                        let first = graph.name(drawn[0]);
                        let name = graph.name(new);
                        for (pos, s) in shared.iter_mut().enumerate() {
                            *s = *s && cat.value_id(name, pos) == cat.value_id(first, pos);
                        }
                        if shared.iter().any(|&s| s) {
                            homophilous[k] += 1;
                        }
                    }
                }
            }
            (cliques, homophilous)
        })
        .reduce(
            || ([0; MAX_CLIQUE + 1], [0; MAX_CLIQUE + 1]),
            |(mut a, mut b), (c, d)| {
                for k in 0..=MAX_CLIQUE {
                    a[k] += c[k];
                    b[k] += d[k];
                }
                (a, b)
            },
        );

    let per_k = (2..=depth)
        .map(|k| CliqueEstimate {
            k,
            trials,
            cliques: cliques[k],
            probability: cliques[k] as f64 / trials as f64,
            homophily: (catalog.is_some() && cliques[k] > 0)
                .then(|| homophilous[k] as f64 / cliques[k] as f64),
        })
        .collect();
    Ok(CliqueReport { trials, per_k })
}

/// Fraction of sampled `k`-node subsets that form a clique, `k` in `2..=5`.
pub fn clique_probability(
    graph: &CooccurrenceGraph,
    k: usize,
    trials: usize,
    seed: u64,
    catalog: Option<&ItemCatalog>,
) -> Result<CliqueEstimate> {
    if !(2..=MAX_CLIQUE).contains(&k) {
        return Err(Error::InvalidParameter(format!(
            "k must be in 2..=5, got {k}"
        )));
    }
    if graph.node_count() < k {
        return Err(Error::InvalidInput(format!(
            "graph has {} nodes, fewer than k = {k}",
            graph.node_count()
        )));
    }
    let report = clique_report(graph, catalog, trials, seed, None)?;
    Ok(report.get(k).cloned().expect("depth covers k"))
}

/// Distinct non-null values of `attribute` among `items`.
pub fn diversity_metric(items: &[&str], catalog: &ItemCatalog, attribute: &str) -> Result<usize> {
    let pos = catalog
        .attribute_position(attribute)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown attribute {attribute:?}")))?;
    let values: BTreeSet<u32> = items
        .iter()
        .filter_map(|item| catalog.value_id(item, pos))
        .collect();
    Ok(values.len())
}

/// Distinct-value counts of DPP and weight-sampled selections for one
/// (center, order), compared at an equal item budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiversityRun {
    pub budget: usize,
    pub dpp: usize,
    pub weight: usize,
}

/// Items of the non-pseudo rows in rank order, first occurrence only.
pub fn selection_items<'g>(graph: &'g CooccurrenceGraph, selection: &Selection) -> Vec<&'g str> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for row in selection.rows.iter().filter(|r| !r.is_pseudo()) {
        for v in row.nodes {
            if seen.insert(v) {
                out.push(graph.name(v));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct DiversityParams<'a> {
    pub attribute: &'a str,
    pub radius: u32,
    pub neighbor_cap: Option<usize>,
    pub theta: f64,
    pub n: usize,
    pub seed: u64,
}

/// Runs both selectors on one center and order.
///
/// The extractor's radius and cap take precedence over the ones in `params`.
pub fn diversity_run(
    extractor: &TriangleExtractor<'_>,
    catalog: &ItemCatalog,
    features: &NodeFeatures,
    center: NodeId,
    order: u32,
    params: &DiversityParams<'_>,
) -> Result<Option<DiversityRun>> {
    let graph = extractor.graph();
    let mut set = extractor.extract(center, order)?;
    if set.is_empty() {
        return Ok(None);
    }
    set.attach_features(features);
    let dpp = select_triangles(&set.triangles, center, params.theta, params.n)?;
    let weight = weight_select(&set.triangles, center, params.n, params.seed)?;
    let dpp_items = selection_items(graph, &dpp);
    let weight_items = selection_items(graph, &weight);
    let budget = dpp_items.len().min(weight_items.len());
    Ok(Some(DiversityRun {
        budget,
        dpp: diversity_metric(&dpp_items[..budget], catalog, params.attribute)?,
        weight: diversity_metric(&weight_items[..budget], catalog, params.attribute)?,
    }))
}

/// Aggregate of [`diversity_run`] over many centers and orders.
#[derive(Debug, Clone, PartialEq)]
pub struct DiversityComparison {
    pub attribute: String,
    pub runs: Vec<(String, u32, DiversityRun)>,
}

impl DiversityComparison {
    pub fn mean_dpp(&self) -> f64 {
        mean(self.runs.iter().map(|r| r.2.dpp))
    }

    pub fn mean_weight(&self) -> f64 {
        mean(self.runs.iter().map(|r| r.2.weight))
    }

    pub fn dpp_wins(&self) -> usize {
        self.runs.iter().filter(|r| r.2.dpp > r.2.weight).count()
    }

    pub fn weight_wins(&self) -> usize {
        self.runs.iter().filter(|r| r.2.weight > r.2.dpp).count()
    }

    pub fn write_tsv<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(
            out,
            "#diversity attribute={} runs={}",
            self.attribute,
            self.runs.len()
        )?;
        writeln!(out, "method\tmean_distinct\twins")?;
        writeln!(out, "dpp\t{:.6}\t{}", self.mean_dpp(), self.dpp_wins())?;
        writeln!(
            out,
            "weight\t{:.6}\t{}",
            self.mean_weight(),
            self.weight_wins()
        )?;
        Ok(())
    }
}

fn mean(values: impl Iterator<Item = usize>) -> f64 {
    let (sum, count) = values.fold((0usize, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum as f64 / count as f64
    }
}

/// Compares DPP and weight-based selection on `items` sampled centers (all
/// nodes when `None`) and every order up to the radius.
pub fn compare_diversity(
    graph: &CooccurrenceGraph,
    catalog: &ItemCatalog,
    items: Option<usize>,
    params: &DiversityParams<'_>,
) -> Result<DiversityComparison> {
    if catalog.attribute_position(params.attribute).is_none() {
        return Err(Error::InvalidParameter(format!(
            "unknown attribute {:?}",
            params.attribute
        )));
    }
    let features = NodeFeatures::from_catalog(graph, catalog);
    let extractor = TriangleExtractor::new(graph, params.radius, params.neighbor_cap);
    let n = graph.node_count();
    let mut centers: Vec<usize> = match items {
        Some(count) if count < n => index::sample(&mut stream(params.seed, 0), n, count).into_vec(),
        _ => (0..n).collect(),
    };
    centers.sort_unstable();
    let runs: Vec<Vec<(String, u32, DiversityRun)>> = centers
        .par_iter()
        .map(|&v| {
            let center = NodeId(v as u32);
            let mut out = Vec::new();
            for order in 0..=params.radius {
                let local = DiversityParams {
                    seed: params.seed ^ ((v as u64) << 8 | order as u64),
                    ..*params
                };
                if let Some(run) =
                    diversity_run(&extractor, catalog, &features, center, order, &local)?
                {
                    out.push((graph.name(center).to_owned(), order, run));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(DiversityComparison {
        attribute: params.attribute.to_owned(),
        runs: runs.into_iter().flatten().collect(),
    })
}
