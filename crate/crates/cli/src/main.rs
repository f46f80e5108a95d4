use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Deserialize;
use tgin_core::analytics::{self, DiversityParams, HomophilyParams};
use tgin_core::{
    build_index, selfcheck, write_index, BehaviorLog, CooccurrenceGraph, GraphBuilder, ItemCatalog,
    PipelineConfig, Strategy,
};

#[derive(Parser)]
#[command(name = "tgin", version, about = "Offline triangle index pipeline")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// TOML file with pipeline settings; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the co-occurrence graph from a click log.
    BuildGraph {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        window: Option<usize>,
    },
    /// Extract, score and select triangles for every item.
    BuildIndex {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        selection: SelectionArgs,
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
    },
    /// Triangle and clique statistics.
    Stats {
        #[command(subcommand)]
        report: StatsCommand,
    },
    /// Run the brute-force oracle suites on generated fixtures.
    Selftest {
        #[arg(long, default_value_t = 20)]
        seeds: u64,
    },
}

#[derive(Args, Clone, Default)]
struct SelectionArgs {
    /// Triangles kept per item and order.
    #[arg(long)]
    n: Option<usize>,
    /// Relevance/diversity trade-off in (0, 1).
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    max_order: Option<u32>,
    /// Per-node neighbor cap during expansion; 0 disables it.
    #[arg(long)]
    neighbor_cap: Option<usize>,
    /// Bloom filter bits per edge; 0 disables the filter.
    #[arg(long)]
    bloom_bits: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum StatsCommand {
    /// Attribute sharing among sampled triangles.
    Homophily {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Items sampled.
        #[arg(long, default_value_t = 100_000)]
        items: usize,
        /// Triangles sampled per item.
        #[arg(long, default_value_t = 50)]
        per_item: usize,
        #[command(flatten)]
        selection: SelectionArgs,
    },
    /// k-clique occurrence probability and homophily, k = 2..5.
    Clique {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        trials: usize,
        /// Sample k-subsets from a random subset of this many nodes.
        #[arg(long)]
        node_cap: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Distinct attribute values under DPP versus weight-based selection.
    Diversity {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "keyword")]
        attribute: String,
        /// Centers sampled; all items when omitted.
        #[arg(long)]
        items: Option<usize>,
        #[command(flatten)]
        selection: SelectionArgs,
    },
}

#[derive(Clone, Copy, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum StrategyArg {
    Dpp,
    Weight,
}

/// Settings accepted from the `--config` file.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    window: Option<usize>,
    max_order: Option<u32>,
    n: Option<usize>,
    theta: Option<f64>,
    neighbor_cap: Option<usize>,
    bloom_bits: Option<usize>,
    seed: Option<u64>,
    strategy: Option<StrategyArg>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

fn nonzero(v: usize) -> Option<usize> {
    (v > 0).then_some(v)
}

fn resolve(
    file: &FileConfig,
    window: Option<usize>,
    sel: &SelectionArgs,
    strategy: Option<StrategyArg>,
) -> Result<PipelineConfig> {
    let defaults = PipelineConfig::default();
    let config = PipelineConfig {
        window: window.or(file.window).unwrap_or(defaults.window),
        max_order: sel
            .max_order
            .or(file.max_order)
            .unwrap_or(defaults.max_order),
        triangles_per_item: sel.n.or(file.n).unwrap_or(defaults.triangles_per_item),
        theta: sel.theta.or(file.theta).unwrap_or(defaults.theta),
        neighbor_cap: match sel.neighbor_cap.or(file.neighbor_cap) {
            Some(cap) => nonzero(cap),
            None => defaults.neighbor_cap,
        },
        bloom_bits_per_edge: match sel.bloom_bits.or(file.bloom_bits) {
            Some(bits) => nonzero(bits),
            None => defaults.bloom_bits_per_edge,
        },
        strategy: match strategy.or(file.strategy) {
            Some(StrategyArg::Weight) => Strategy::Weight,
            Some(StrategyArg::Dpp) | None => Strategy::Dpp,
        },
        seed: sel.seed.or(file.seed).unwrap_or(defaults.seed),
    };
    config.validate()?;
    Ok(config)
}

fn load_graph(path: &Path, config: &PipelineConfig) -> Result<CooccurrenceGraph> {
    let graph = CooccurrenceGraph::from_path(path, config.bloom())
        .with_context(|| format!("loading graph {}", path.display()))?;
    info!(
        "loaded graph: {} nodes, {} edges",
        graph.node_count(),
        graph.edge_count()
    );
    Ok(graph)
}

fn load_catalog(path: &Path) -> Result<ItemCatalog> {
    let catalog = ItemCatalog::from_path(path)
        .with_context(|| format!("loading catalog {}", path.display()))?;
    info!(
        "loaded catalog: {} items, dimension {}",
        catalog.len(),
        catalog.dim()
    );
    Ok(catalog)
}

fn write_report<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn std::io::Write) -> std::io::Result<()>,
{
    tgin_core::io::write_atomic(path, false, body)
        .with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::BuildGraph { log, out, window } => {
            let config = resolve(&file, window, &SelectionArgs::default(), None)?;
            let records = BehaviorLog::from_path(&log)
                .with_context(|| format!("reading log {}", log.display()))?;
            info!("read {} records", records.records.len());
            let graph = GraphBuilder::new(config.window)
                .bloom(config.bloom())
                .build(&records)?;
            graph.write_file(&out)?;
            eprintln!("nodes {} edges {}", graph.node_count(), graph.edge_count());
        }
        Command::BuildIndex {
            graph,
            catalog,
            out,
            selection,
            strategy,
        } => {
            let config = resolve(&file, None, &selection, strategy)?;
            let graph = load_graph(&graph, &config)?;
            let catalog = load_catalog(&catalog)?;
            let build = build_index(&graph, &catalog, &config)?;
            if !build.missing_features.is_empty() {
                warn!(
                    "{} graph items lack catalog features and were zero-featured: {}",
                    build.missing_features.len(),
                    preview(&build.missing_features)
                );
            }
            if !build.padded_entries.is_empty() {
                let items: Vec<String> = build
                    .padded_entries
                    .iter()
                    .map(|(item, k, p)| format!("{item}/{k}:{p}"))
                    .collect();
                info!("{} entries padded: {}", items.len(), preview(&items));
            }
            let bytes = write_index(&build.index, &out)?;
            // the written file must load back cleanly
            tgin_core::read_index(&out).context("validating written index")?;
            eprintln!(
                "entries {} triangles {} bytes {bytes}",
                build.index.len(),
                build.triangles_seen
            );
        }
        Command::Stats { report } => run_stats(&file, report)?,
        Command::Selftest { seeds } => {
            let mut ok = true;
            for outcome in selfcheck::run_all(seeds) {
                let tag = if outcome.passed { "PASS" } else { "FAIL" };
                println!("[{tag}] {}: {}", outcome.name, outcome.detail);
                ok &= outcome.passed;
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

fn run_stats(file: &FileConfig, report: StatsCommand) -> Result<()> {
    match report {
        StatsCommand::Homophily {
            graph,
            catalog,
            out,
            items,
            per_item,
            selection,
        } => {
            let config = resolve(file, None, &selection, None)?;
            let graph = load_graph(&graph, &config)?;
            let catalog = load_catalog(&catalog)?;
            let report = analytics::homophily_stats(
                &graph,
                &catalog,
                HomophilyParams {
                    items,
                    triangles_per_item: per_item,
                    radius: config.max_order,
                    neighbor_cap: config.neighbor_cap,
                    seed: config.seed,
                },
            )?;
            write_report(&out, |w| report.write_tsv(w))?;
        }
        StatsCommand::Clique {
            graph,
            catalog,
            out,
            trials,
            node_cap,
            seed,
        } => {
            let config = resolve(
                file,
                None,
                &SelectionArgs {
                    seed,
                    ..Default::default()
                },
                None,
            )?;
            let graph = load_graph(&graph, &config)?;
            let catalog = catalog.as_deref().map(load_catalog).transpose()?;
            let report =
                analytics::clique_report(&graph, catalog.as_ref(), trials, config.seed, node_cap)?;
            write_report(&out, |w| report.write_tsv(w))?;
        }
        StatsCommand::Diversity {
            graph,
            catalog,
            out,
            attribute,
            items,
            selection,
        } => {
            let config = resolve(file, None, &selection, None)?;
            let graph = load_graph(&graph, &config)?;
            let catalog = load_catalog(&catalog)?;
            let params = DiversityParams {
                attribute: &attribute,
                radius: config.max_order,
                neighbor_cap: config.neighbor_cap,
                theta: config.theta,
                n: config.triangles_per_item,
                seed: config.seed,
            };
            let comparison = analytics::compare_diversity(&graph, &catalog, items, &params)?;
            write_report(&out, |w| comparison.write_tsv(w))?;
        }
    }
    Ok(())
}

fn preview(items: &[String]) -> String {
    const SHOWN: usize = 10;
    let mut text = items
        .iter()
        .take(SHOWN)
        .cloned()
        .collect::<Vec<_>>()
        .join(", ");
    if items.len() > SHOWN {
        text.push_str(&format!(", ... ({} more)", items.len() - SHOWN));
    }
    text
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if workers == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::FAILURE;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
