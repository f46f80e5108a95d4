//! Seeded synthetic fixtures: random graphs, clustered catalogs and click
//! logs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::behavior::{BehaviorLog, Split};
use crate::catalog::ItemCatalog;
use crate::graph::CooccurrenceGraph;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Zero-padded item ids so lexicographic and numeric order agree.
pub fn item_name(i: usize) -> String {
    format!("i{i:06}")
}

/// Erdős–Rényi `G(n, p)` with integer weights in `1..=max_weight`.
pub fn random_graph(n: usize, p: f64, max_weight: u32, seed: u64) -> CooccurrenceGraph {
    let mut rng = rng(seed);
    let names: Vec<String> = (0..n).map(item_name).collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                edges.push((a, b, rng.gen_range(1..=max_weight.max(1))));
            }
        }
    }
    CooccurrenceGraph::from_edges(
        names.iter().map(String::as_str),
        edges
            .iter()
            .map(|&(a, b, w)| (names[a].as_str(), names[b].as_str(), w)),
        3,
        Some(Default::default()),
    )
    .expect("generated edges are valid")
}

fn unit_noise(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-scale..=scale)).collect()
}

/// Items grouped into `clusters` categories with edges only (or mostly)
/// inside a category. Brand, store and keyword are drawn uniformly from
/// small pools, independent of the category.
pub struct PlantedClusters {
    pub graph: CooccurrenceGraph,
    pub catalog: ItemCatalog,
}

pub fn planted_clusters(
    clusters: usize,
    per_cluster: usize,
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> PlantedClusters {
    let mut rng = rng(seed);
    let n = clusters * per_cluster;
    let names: Vec<String> = (0..n).map(item_name).collect();
    let mut catalog = ItemCatalog::new();
    for (i, name) in names.iter().enumerate() {
        let category = format!("cat{}", i / per_cluster);
        let brand = format!("brand{}", rng.gen_range(0..20));
        let store = format!("store{}", rng.gen_range(0..20));
        let keyword = format!("kw{}", rng.gen_range(0..30));
        catalog
            .insert(
                name,
                &[
                    ("category", &category),
                    ("brand", &brand),
                    ("store", &store),
                    ("keyword", &keyword),
                ],
                Some(unit_noise(&mut rng, 4, 1.0)),
            )
            .expect("unique names");
    }
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let p = if a / per_cluster == b / per_cluster {
                p_in
            } else {
                p_out
            };
            if rng.gen_bool(p) {
                edges.push((names[a].as_str(), names[b].as_str(), rng.gen_range(1..=5)));
            }
        }
    }
    let graph = CooccurrenceGraph::from_edges(
        names.iter().map(String::as_str),
        edges,
        3,
        Some(Default::default()),
    )
    .expect("generated edges are valid");
    PlantedClusters { graph, catalog }
}

/// One center item linked to several keyword clusters. Cluster 0 carries much
/// heavier edges than the rest, so relevance alone concentrates on it.
pub struct ClusteredStar {
    pub graph: CooccurrenceGraph,
    pub catalog: ItemCatalog,
    pub center: String,
}

pub fn clustered_star(clusters: usize, per_cluster: usize, seed: u64) -> ClusteredStar {
    let mut rng = rng(seed);
    let dim = clusters + 2;
    let center = "c".to_owned();
    let mut catalog = ItemCatalog::new();
    let mut centre_feature = vec![0.0; dim];
    centre_feature[dim - 1] = 1.0;
    catalog
        .insert(&center, &[("keyword", "center")], Some(centre_feature))
        .expect("fresh catalog");

    let mut members: Vec<Vec<String>> = Vec::new();
    for c in 0..clusters {
        let items: Vec<String> = (0..per_cluster)
            .map(|i| format!("k{c:02}_{i:02}"))
            .collect();
        for item in &items {
            let mut feature = unit_noise(&mut rng, dim, 0.15);
            feature[c] += 1.0;
            // mostly the cluster keyword, occasionally a sibling one
            let keyword = if rng.gen_bool(0.8) {
                format!("kw{c}")
            } else {
                format!("kw{c}b")
            };
            catalog
                .insert(item, &[("keyword", &keyword)], Some(feature))
                .expect("unique names");
        }
        members.push(items);
    }

    let mut edges: Vec<(String, String, u32)> = Vec::new();
    for (c, items) in members.iter().enumerate() {
        let heavy = c == 0;
        for (i, a) in items.iter().enumerate() {
            let w = if heavy {
                rng.gen_range(15..=25)
            } else {
                rng.gen_range(1..=3)
            };
            edges.push((center.clone(), a.clone(), w));
            for b in &items[i + 1..] {
                let w = if heavy {
                    rng.gen_range(15..=25)
                } else {
                    rng.gen_range(1..=3)
                };
                edges.push((a.clone(), b.clone(), w));
            }
        }
    }
    let graph = CooccurrenceGraph::from_edges(
        [],
        edges.iter().map(|(a, b, w)| (a.as_str(), b.as_str(), *w)),
        3,
        Some(Default::default()),
    )
    .expect("generated edges are valid");
    ClusteredStar {
        graph,
        catalog,
        center,
    }
}

/// Shape of a synthetic click log.
#[derive(Debug, Clone, Copy)]
pub struct LogShape {
    pub items: usize,
    pub events: usize,
    pub users: usize,
    /// Items per category; users mostly browse inside one category at a time.
    pub category_size: usize,
    /// Per-click chance of leaving the current category.
    pub switch_prob: f64,
    /// Fraction of users whose clicks are marked as test split.
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for LogShape {
    fn default() -> Self {
        LogShape {
            items: 10_000,
            events: 1_000_000,
            users: 20_000,
            category_size: 10,
            switch_prob: 0.03,
            test_fraction: 0.0,
            seed: 0,
        }
    }
}

/// Category-local random walks with occasional switches to another of the
/// user's interest categories or a random category.
pub fn click_log(shape: LogShape) -> BehaviorLog {
    let mut rng = rng(shape.seed);
    let categories = shape.items.div_ceil(shape.category_size).max(1);
    let mut log = BehaviorLog::new();
    log.records.reserve(shape.events);
    let names: Vec<String> = (0..shape.items).map(item_name).collect();
    let pick_in = |rng: &mut ChaCha8Rng, cat: usize| {
        let lo = cat * shape.category_size;
        let hi = (lo + shape.category_size).min(shape.items);
        rng.gen_range(lo..hi)
    };
    let per_user = shape.events / shape.users.max(1);
    let mut remainder = shape.events - per_user * shape.users.max(1);
    for user in 0..shape.users.max(1) {
        let user_name = format!("u{user:06}");
        let split = if rng.gen_bool(shape.test_fraction) {
            Split::Test
        } else {
            Split::Train
        };
        let interests: Vec<usize> = (0..3).map(|_| rng.gen_range(0..categories)).collect();
        let mut current = *interests.choose(&mut rng).unwrap();
        let mut len = per_user;
        if remainder > 0 {
            len += 1;
            remainder -= 1;
        }
        for t in 0..len {
            if rng.gen_bool(shape.switch_prob) {
                current = if rng.gen_bool(0.7) {
                    *interests.choose(&mut rng).unwrap()
                } else {
                    rng.gen_range(0..categories)
                };
            }
            let item = pick_in(&mut rng, current);
            log.push(&user_name, &names[item], t as i64, split);
        }
    }
    log
}

/// Catalog for [`click_log`] items: category-aligned attributes and features
/// clustered around a per-category centroid.
pub fn log_catalog(shape: &LogShape, dim: usize) -> ItemCatalog {
    let mut rng = rng(shape.seed ^ 0x5eed);
    let categories = shape.items.div_ceil(shape.category_size).max(1);
    let centroids: Vec<Vec<f64>> = (0..categories)
        .map(|_| unit_noise(&mut rng, dim, 1.0))
        .collect();
    let mut catalog = ItemCatalog::new();
    for i in 0..shape.items {
        let cat = i / shape.category_size;
        let feature: Vec<f64> = centroids[cat]
            .iter()
            .zip(unit_noise(&mut rng, dim, 0.3))
            .map(|(c, e)| c + e)
            .collect();
        let category = format!("cat{cat}");
        let brand = format!("brand{}", rng.gen_range(0..200));
        let keyword = format!("kw{}_{}", cat, rng.gen_range(0..3));
        let price = format!("{:.2}", rng.gen_range(1.0..500.0));
        catalog
            .insert(
                &item_name(i),
                &[
                    ("category", &category),
                    ("brand", &brand),
                    ("keyword", &keyword),
                    ("price", &price),
                ],
                Some(feature),
            )
            .expect("unique names");
    }
    catalog.bucket_continuous(crate::catalog::DEFAULT_CONTINUOUS);
    catalog
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_graph_is_seeded() {
        let a = random_graph(50, 0.1, 3, 9);
        let b = random_graph(50, 0.1, 3, 9);
        assert_eq!(a.edges(), b.edges());
        assert_eq!(a.node_count(), 50);
    }

    #[test]
    fn click_log_has_requested_size() {
        let shape = LogShape {
            items: 100,
            events: 1_003,
            users: 10,
            ..Default::default()
        };
        let log = click_log(shape);
        assert_eq!(log.records.len(), 1_003);
        assert!(log.records.iter().all(|r| r.item < item_name(100)));
        let catalog = log_catalog(&shape, 4);
        assert_eq!(catalog.len(), 100);
        assert!(catalog
            .attribute(&item_name(3), "price")
            .unwrap()
            .starts_with('d'));
    }

    #[test]
    fn clustered_star_shape() {
        let s = clustered_star(4, 5, 1);
        assert_eq!(s.graph.node_count(), 21);
        let c = s.graph.node_id(&s.center).unwrap();
        assert_eq!(s.graph.degree(c), 20);
    }
}
