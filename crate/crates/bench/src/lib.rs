//! Fixtures shared by the benchmarks.

use tgin_core::synth::{self, LogShape};
use tgin_core::{build_graph, CooccurrenceGraph, ItemCatalog};

/// Click-log graph and catalog of the given size.
pub fn log_fixture(items: usize, events: usize) -> (CooccurrenceGraph, ItemCatalog) {
    let shape = LogShape {
        items,
        events,
        users: (events / 50).max(1),
        seed: 42,
        ..Default::default()
    };
    let graph = build_graph(&synth::click_log(shape), 3).expect("synthetic log is valid");
    (graph, synth::log_catalog(&shape, 16))
}
