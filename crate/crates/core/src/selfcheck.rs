//! Oracle checks runnable outside the test harness (`tgin selftest`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dpp::{greedy_map, DppKernel};
use crate::oracle;
use crate::synth;
use crate::triangle::TriangleExtractor;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, failures: Vec<String>, ok_detail: String) -> Self {
        let passed = failures.is_empty();
        let detail = if passed {
            ok_detail
        } else {
            failures.into_iter().take(3).collect::<Vec<_>>().join("; ")
        };
        CheckOutcome {
            name,
            passed,
            detail,
        }
    }
}

/// Triangle extraction against exhaustive triple scans on `G(n, p)` graphs,
/// every node as center, orders `0..=2`.
pub fn triangle_oracle(seeds: u64, n: usize, p: f64) -> CheckOutcome {
    let mut failures = Vec::new();
    let mut compared = 0usize;
    for seed in 0..seeds {
        let graph = synth::random_graph(n, p, 5, seed);
        let extractor = TriangleExtractor::new(&graph, 2, None);
        for center in graph.nodes() {
            let expected = oracle::brute_force_triangles(&graph, center, 2);
            let got = extractor
                .extract_all(center)
                .map(|sets| sets.iter().map(|s| s.node_triples()).collect::<Vec<_>>());
            match got {
                Ok(got) if got == expected => compared += got.iter().map(Vec::len).sum::<usize>(),
                Ok(_) => failures.push(format!("seed {seed} center {}", center.0)),
                Err(e) => failures.push(format!("seed {seed} center {}: {e}", center.0)),
            }
        }
    }
    CheckOutcome::new(
        "triangle oracle",
        failures,
        format!("{seeds} graphs, {compared} triangles matched"),
    )
}

/// Edge replay must hit every stored edge; absent random pairs measure the
/// filter's false-positive rate.
pub fn edge_membership(seed: u64, absent_queries: usize, max_fp_rate: f64) -> CheckOutcome {
    let graph = synth::random_graph(2_000, 0.01, 3, seed);
    let filter = graph.bloom_filter().expect("fixtures carry a filter");
    let mut failures = Vec::new();
    let edges = graph.edges();
    let missing = edges
        .iter()
        .filter(|&&(a, b, _)| !graph.has_edge(a, b))
        .count();
    if missing > 0 {
        failures.push(format!("{missing} false negatives"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb100);
    let n = graph.node_count() as u32;
    let (mut queries, mut hits) = (0usize, 0usize);
    while queries < absent_queries {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let (a, b) = (crate::NodeId(a.min(b)), crate::NodeId(a.max(b)));
        if a == b || graph.weight(a, b).is_some() {
            continue;
        }
        queries += 1;
        let key = ((a.0 as u64) << 32) | b.0 as u64;
        hits += usize::from(filter.contains(key));
    }
    let rate = hits as f64 / queries as f64;
    if rate > max_fp_rate {
        failures.push(format!("false-positive rate {rate:.4} > {max_fp_rate}"));
    }
    CheckOutcome::new(
        "edge membership",
        failures,
        format!(
            "{} edges replayed, false-positive rate {rate:.4}",
            edges.len()
        ),
    )
}

/// Random PSD kernel `B B^T` with `B` of shape `size x rank`, row-major.
pub fn random_psd(size: usize, rank: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let b: Vec<f64> = (0..size * rank).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut m = vec![0.0; size * size];
    for i in 0..size {
        for j in 0..size {
            m[i * size + j] = (0..rank).map(|k| b[i * rank + k] * b[j * rank + k]).sum();
        }
    }
    m
}

/// Greedy steps against dense determinant ratios on random kernels.
pub fn dpp_greedy_oracle(kernels: u64, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut steps = 0;
    for case in 0..kernels {
        let size = rng.gen_range(2..=12);
        let rank = rng.gen_range(size..=size + 4);
        let n = rng.gen_range(1..=4);
        let m = random_psd(size, rank, &mut rng);
        let trace: f64 = (0..size).map(|i| m[i * size + i]).sum();
        if !oracle::is_psd_with_shift(&m, size, 1e-8 * trace / size as f64) {
            failures.push(format!("kernel {case} not PSD"));
        }
        let kernel = DppKernel::from_dense(m.clone(), size).expect("symmetric by construction");
        let greedy = greedy_map(&kernel, n).expect("n >= 1");
        for (step, (&pick, &gain)) in greedy.indices.iter().zip(&greedy.gains).enumerate() {
            steps += 1;
            let (best, dense_gain) = oracle::dense_greedy_step(&m, size, &greedy.indices[..step])
                .expect("candidates remain");
            if best != pick {
                failures.push(format!(
                    "kernel {case} step {step}: picked {pick}, dense argmax {best}"
                ));
            }
            if (gain - dense_gain).abs() > 1e-9 * dense_gain.abs().max(1.0) {
                failures.push(format!(
                    "kernel {case} step {step}: gain {gain} vs {dense_gain}"
                ));
            }
        }
    }
    CheckOutcome::new(
        "dpp greedy oracle",
        failures,
        format!("{kernels} kernels, {steps} steps matched"),
    )
}

/// With `L = I`, every subset has probability `det(L_S) / det(L + I) = 2^-N`.
pub fn identity_subset_probabilities(size: usize) -> CheckOutcome {
    let mut identity = vec![0.0; size * size];
    let mut shifted = vec![0.0; size * size];
    for i in 0..size {
        identity[i * size + i] = 1.0;
        shifted[i * size + i] = 2.0;
    }
    let normalizer = oracle::determinant(&shifted, size);
    let expected = 0.5f64.powi(size as i32);
    let mut failures = Vec::new();
    let mut total = 0.0;
    for mask in 0u32..(1 << size) {
        let subset: Vec<usize> = (0..size).filter(|i| mask >> i & 1 == 1).collect();
        let det = if subset.is_empty() {
            1.0
        } else {
            oracle::determinant(
                &oracle::principal_submatrix(&identity, size, &subset),
                subset.len(),
            )
        };
        let p = det / normalizer;
        total += p;
        if (p - expected).abs() > 1e-12 {
            failures.push(format!("subset {mask:b}: {p}"));
        }
    }
    if (total - 1.0).abs() > 1e-12 {
        failures.push(format!("probabilities sum to {total}"));
    }
    CheckOutcome::new(
        "identity subset probabilities",
        failures,
        format!("{} subsets at 2^-{size}", 1u64 << size),
    )
}

pub fn run_all(seeds: u64) -> Vec<CheckOutcome> {
    vec![
        triangle_oracle(seeds, 200, 0.05),
        edge_membership(seeds, 100_000, 0.02),
        dpp_greedy_oracle(100, seeds),
        identity_subset_probabilities(10),
    ]
}
