use std::collections::{BTreeMap, VecDeque};

use proptest::prelude::*;
use tgin_core::oracle::brute_force_pair_counts;
use tgin_core::{synth, BehaviorLog, BloomConfig, CooccurrenceGraph, GraphBuilder, NodeId, Split};

fn log_strategy() -> impl Strategy<Value = Vec<(u8, u8, i64, bool)>> {
    prop::collection::vec(
        (0u8..6, 0u8..12, 0i64..40, prop::bool::weighted(0.85)),
        1..120,
    )
}

fn to_log(records: &[(u8, u8, i64, bool)]) -> BehaviorLog {
    let mut log = BehaviorLog::new();
    for &(user, item, ts, train) in records {
        let split = if train { Split::Train } else { Split::Test };
        log.push(&format!("u{user}"), &format!("x{item:02}"), ts, split);
    }
    log
}

fn naive_bfs(graph: &CooccurrenceGraph, source: NodeId, radius: u32) -> BTreeMap<NodeId, u32> {
    let mut dist = BTreeMap::new();
    let mut queue = VecDeque::from([(source, 0u32)]);
    let mut seen = vec![false; graph.node_count()];
    seen[source.index()] = true;
    while let Some((v, d)) = queue.pop_front() {
        if d > 0 {
            dist.insert(v, d);
        }
        if d == radius {
            continue;
        }
        for u in graph.nodes() {
            if !seen[u.index()] && graph.weight(v, u).is_some() {
                seen[u.index()] = true;
                queue.push_back((u, d + 1));
            }
        }
    }
    dist
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_weights_match_pair_counts(records in log_strategy(), window in 2usize..6) {
        let log = to_log(&records);
        let Ok(graph) = GraphBuilder::new(window).build(&log) else {
            // only test-split records were generated
            prop_assert!(records.iter().all(|r| !r.3));
            return Ok(());
        };
        let expected = brute_force_pair_counts(&log.training_sequences(), window);
        let got: BTreeMap<(String, String), u32> = graph
            .edges()
            .into_iter()
            .map(|(a, b, w)| ((graph.name(a).to_owned(), graph.name(b).to_owned()), w))
            .collect();
        prop_assert_eq!(&got, &expected);
        let pairs: u64 = expected.values().map(|&w| u64::from(w)).sum();
        prop_assert_eq!(graph.total_weight(), pairs);
    }

    #[test]
    fn membership_is_symmetric(records in log_strategy()) {
        let log = to_log(&records);
        let Ok(graph) = build(&log) else { return Ok(()) };
        for a in graph.nodes() {
            prop_assert!(!graph.has_edge(a, a));
            for b in graph.nodes() {
                prop_assert_eq!(graph.has_edge(a, b), graph.has_edge(b, a));
                prop_assert_eq!(graph.weight(a, b), graph.weight(b, a));
            }
        }
    }

    #[test]
    fn filter_does_not_change_answers(n in 5usize..60, p in 0.05f64..0.5, seed in 0u64..1000) {
        let with = synth::random_graph(n, p, 4, seed);
        let mut without = with.clone();
        without.set_bloom(None);
        for a in with.nodes() {
            for b in with.nodes() {
                prop_assert_eq!(with.has_edge(a, b), without.has_edge(a, b));
            }
        }
    }

    #[test]
    fn neighbors_within_matches_naive_bfs(
        n in 2usize..500,
        degree in 0.5f64..6.0,
        radius in 1u32..5,
        seed in 0u64..10_000,
    ) {
        let graph = synth::random_graph(n, (degree / n as f64).min(1.0), 3, seed);
        let source = NodeId((seed % n as u64) as u32);
        prop_assert_eq!(graph.neighbors_within(source, radius).unwrap(), naive_bfs(&graph, source, radius));
    }

    #[test]
    fn graph_file_round_trips(n in 1usize..80, p in 0.0f64..0.4, seed in 0u64..1000) {
        let graph = synth::random_graph(n, p, 9, seed);
        let mut first = Vec::new();
        graph.write_to(&mut first).unwrap();
        let back = CooccurrenceGraph::read_from(first.as_slice(), None).unwrap();
        let mut second = Vec::new();
        back.write_to(&mut second).unwrap();
        prop_assert_eq!(first, second);
        prop_assert_eq!(back.node_count(), n);
        prop_assert_eq!(back.edges(), graph.edges());
    }
}

fn build(log: &BehaviorLog) -> tgin_core::Result<CooccurrenceGraph> {
    GraphBuilder::new(3).build(log)
}

#[test]
fn bloom_replay_and_false_positive_rate() {
    for bits in [6usize, 10, 14] {
        let config = BloomConfig::with_bits_per_key(bits);
        let mut graph = synth::random_graph(1_500, 0.01, 2, bits as u64);
        graph.set_bloom(Some(config));
        let filter = graph.bloom_filter().unwrap();
        let edges = graph.edges();
        for &(a, b, _) in &edges {
            assert!(graph.has_edge(a, b) && graph.has_edge(b, a));
        }
        let (mut absent, mut hits) = (0usize, 0usize);
        let n = graph.node_count() as u32;
        'outer: for a in 0..n {
            for b in a + 1..n {
                if graph.weight(NodeId(a), NodeId(b)).is_none() {
                    absent += 1;
                    hits += usize::from(filter.contains((u64::from(a) << 32) | u64::from(b)));
                    if absent == 200_000 {
                        break 'outer;
                    }
                }
            }
        }
        let rate = hits as f64 / absent as f64;
        let design = config.design_false_positive_rate();
        assert!(
            rate <= 2.0 * design,
            "{bits} bits/key: rate {rate} vs design {design}"
        );
    }
}

#[test]
fn ten_thousand_present_pairs_all_found() {
    let graph = synth::random_graph(3_000, 0.003, 5, 11);
    let edges = graph.edges();
    assert!(edges.len() >= 10_000, "fixture too sparse: {}", edges.len());
    let found = edges
        .iter()
        .take(10_000)
        .filter(|&&(a, b, _)| graph.has_edge(a, b))
        .count();
    assert_eq!(found, 10_000);
}

#[test]
fn builder_examples() {
    let mut log = BehaviorLog::new();
    for (ts, item) in ["A", "B", "C", "D"].iter().enumerate() {
        log.push("u", item, ts as i64, Split::Train);
    }
    let graph = GraphBuilder::new(3).build(&log).unwrap();
    let edges: Vec<(&str, &str, u32)> = graph
        .edges()
        .into_iter()
        .map(|(a, b, w)| (graph.name(a), graph.name(b), w))
        .collect();
    assert_eq!(
        edges,
        [
            ("A", "B", 1),
            ("A", "C", 1),
            ("B", "C", 1),
            ("B", "D", 1),
            ("C", "D", 1)
        ]
    );

    let mut two = BehaviorLog::new();
    for user in ["u1", "u2"] {
        two.push(user, "A", 0, Split::Train);
        two.push(user, "B", 1, Split::Train);
    }
    let graph = GraphBuilder::new(3).build(&two).unwrap();
    assert_eq!(graph.edge_count(), 1);
    assert!(graph.has_edge_between("A", "B"));
    assert_eq!(graph.total_weight(), 2);
}
