use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use tgin_core::{read_index, synth, CooccurrenceGraph, ItemCatalog};

fn tgin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tgin"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = tgin(args);
    assert!(
        out.status.success(),
        "tgin {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> String {
        let path = self.path(name);
        std::fs::write(&path, text).unwrap();
        path.to_str().unwrap().to_owned()
    }

    fn out(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_owned()
    }
}

fn write_catalog(catalog: &ItemCatalog, path: &Path) {
    let mut out = Vec::new();
    catalog.write_to(&mut out).unwrap();
    std::fs::write(path, out).unwrap();
}

const K4: &str =
    "#nodes 4 #edges 6 window 3\na\tb\t1\na\tc\t2\na\td\t1\nb\tc\t3\nb\td\t1\nc\td\t1\n";
const K4_CATALOG: &str = "a\tcategory=x;brand=p\t1,0,0\nb\tcategory=x;brand=q\t0,1,0\n\
                          c\tcategory=x;brand=r\t0,0,1\nd\tcategory=x;brand=s\t1,1,0\n";

#[test]
fn build_graph_on_tiny_log() {
    let ws = Workspace::new();
    let log = ws.write(
        "log.tsv",
        "u1\tD\t40\ttrain\nu1\tA\t10\ttrain\nu1\tC\t30\ttrain\nu1\tB\t20\ttrain\n",
    );
    let out = ws.out("graph.tsv");
    let run = ok(&["build-graph", "--log", &log, "--out", &out]);
    assert_eq!(
        String::from_utf8_lossy(&run.stderr).trim(),
        "nodes 4 edges 5"
    );
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        "#nodes 4 #edges 5 window 3\nA\tB\t1\nA\tC\t1\nB\tC\t1\nB\tD\t1\nC\tD\t1\n"
    );
    ok(&["build-graph", "--log", &log, "--out", &out, "--window", "2"]);
    assert_eq!(
        CooccurrenceGraph::from_path(&out, None)
            .unwrap()
            .edge_count(),
        3
    );
}

#[test]
fn build_graph_rejects_bad_input() {
    let ws = Workspace::new();
    let out = ws.out("graph.tsv");
    let test_only = ws.write("log.tsv", "u1\tA\t1\ttest\nu1\tB\t2\ttest\n");
    let run = tgin(&["build-graph", "--log", &test_only, "--out", &out]);
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("no training records"));
    assert!(!Path::new(&out).exists());

    let malformed = ws.write("bad.tsv", "u1\tA\t1\ttrain\nu1\tB\tnoon\ttrain\n");
    let run = tgin(&["build-graph", "--log", &malformed, "--out", &out]);
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("line 2"));

    let run = tgin(&[
        "build-graph",
        "--log",
        &test_only,
        "--out",
        &out,
        "--window",
        "1",
    ]);
    assert!(!run.status.success());
}

#[test]
fn build_index_on_complete_graph() {
    let ws = Workspace::new();
    let graph = ws.write("graph.tsv", K4);
    let catalog = ws.write("catalog.tsv", K4_CATALOG);
    let out = ws.out("index.tsv");
    ok(&[
        "build-index",
        "--graph",
        &graph,
        "--catalog",
        &catalog,
        "--out",
        &out,
        "--n",
        "2",
        "--max-order",
        "1",
    ]);
    let index = read_index(&out).unwrap();
    assert_eq!(index.n(), 2);
    assert_eq!(index.orders(), [0, 1]);
    assert_eq!(index.len(), 8);
    for (item, order, rows) in index.entries() {
        assert_eq!(rows.len(), 2);
        let real = rows.iter().filter(|r| !r.is_pseudo()).count();
        // three triangles touch each node, one avoids it
        let expected = if order == 0 { 2 } else { 1 };
        assert_eq!(real, expected, "{item}/{order}");
        if order == 0 {
            assert!(rows.iter().all(|r| r.nodes.iter().any(|n| n == item)));
        }
    }
}

#[test]
fn isolated_node_is_fully_padded() {
    let ws = Workspace::new();
    let graph = ws.write(
        "graph.tsv",
        &K4.replace("#nodes 4", "#nodes 5")
            .replace("c\td\t1\n", "c\td\t1\nz\n"),
    );
    let catalog = ws.write("catalog.tsv", K4_CATALOG);
    let out = ws.out("index.tsv");
    let run = tgin(&[
        "build-index",
        "--graph",
        &graph,
        "--catalog",
        &catalog,
        "--out",
        &out,
        "--n",
        "4",
    ]);
    assert!(run.status.success());
    let stderr = String::from_utf8_lossy(&run.stderr);
    assert!(stderr.contains("lack catalog features"), "{stderr}");
    let index = read_index(&out).unwrap();
    for order in 0..=2 {
        let rows = index.get("z", order).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows
            .iter()
            .all(|r| r.is_pseudo() && r.padded && r.relevance == 0.0));
    }
    // more rows than triangles: leftovers and pseudo rows are flagged
    let rows = index.get("a", 0).unwrap();
    assert_eq!(rows.iter().filter(|r| !r.is_pseudo()).count(), 3);
    assert!(rows[3].is_pseudo() && rows[3].padded);
}

#[test]
fn config_file_and_flags() {
    let ws = Workspace::new();
    let graph = ws.write("graph.tsv", K4);
    let catalog = ws.write("catalog.tsv", K4_CATALOG);
    let config = ws.write(
        "tgin.toml",
        "n = 3\nmax_order = 1\nstrategy = \"weight\"\nseed = 4\n",
    );
    let out = ws.out("index.tsv");
    ok(&[
        "--config",
        &config,
        "build-index",
        "--graph",
        &graph,
        "--catalog",
        &catalog,
        "--out",
        &out,
    ]);
    let index = read_index(&out).unwrap();
    assert_eq!((index.n(), index.orders().len()), (3, 2));
    ok(&[
        "--config",
        &config,
        "--workers",
        "1",
        "build-index",
        "--graph",
        &graph,
        "--catalog",
        &catalog,
        "--out",
        &out,
        "--n",
        "1",
    ]);
    assert_eq!(read_index(&out).unwrap().n(), 1);

    let bad = ws.write("bad.toml", "theta = 2.0\n");
    let run = tgin(&[
        "--config",
        &bad,
        "build-index",
        "--graph",
        &graph,
        "--catalog",
        &catalog,
        "--out",
        &out,
    ]);
    assert!(!run.status.success());
}

#[test]
fn gzip_index_output() {
    let ws = Workspace::new();
    let graph = ws.write("graph.tsv", K4);
    let catalog = ws.write("catalog.tsv", K4_CATALOG);
    let plain = ws.out("index.tsv");
    let gz = ws.out("index.tsv.gz");
    ok(&[
        "build-index",
        "--graph",
        &graph,
        "--catalog",
        &catalog,
        "--out",
        &plain,
    ]);
    ok(&[
        "build-index",
        "--graph",
        &graph,
        "--catalog",
        &catalog,
        "--out",
        &gz,
    ]);
    assert_eq!(std::fs::read(&gz).unwrap()[..2], [0x1f, 0x8b]);
    assert_eq!(read_index(&gz).unwrap(), read_index(&plain).unwrap());
}

#[test]
fn homophily_on_uniform_category() {
    let ws = Workspace::new();
    let graph = ws.write("graph.tsv", K4);
    let catalog = ws.write("catalog.tsv", K4_CATALOG);
    let out = ws.out("homophily.tsv");
    ok(&[
        "stats",
        "homophily",
        "--graph",
        &graph,
        "--catalog",
        &catalog,
        "--out",
        &out,
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "attribute\tfraction");
    assert_eq!(lines[2], "any\t1.000000");
    assert!(lines.contains(&"category\t1.000000"));
    assert!(lines.contains(&"brand\t0.000000"));
}

#[test]
fn clique_on_complete_graph() {
    let ws = Workspace::new();
    let names: Vec<String> = (0..6).map(|i| format!("v{i}")).collect();
    let mut text = String::from("#nodes 6 #edges 15 window 3\n");
    for i in 0..6 {
        for j in i + 1..6 {
            text.push_str(&format!("{}\t{}\t1\n", names[i], names[j]));
        }
    }
    let graph = ws.write("graph.tsv", &text);
    let out = ws.out("clique.tsv");
    ok(&[
        "stats", "clique", "--graph", &graph, "--out", &out, "--trials", "5000",
    ]);
    let report = std::fs::read_to_string(&out).unwrap();
    for k in 2..=5 {
        assert!(
            report.contains(&format!("{k}-clique\t1.000000\t")),
            "{report}"
        );
    }
}

#[test]
fn diversity_on_clustered_fixture() {
    let ws = Workspace::new();
    let star = synth::clustered_star(8, 8, 3);
    let graph = ws.out("graph.tsv");
    star.graph.write_file(&graph).unwrap();
    let catalog = ws.path("catalog.tsv");
    write_catalog(&star.catalog, &catalog);
    let out = ws.out("diversity.tsv");
    ok(&[
        "stats",
        "diversity",
        "--graph",
        &graph,
        "--catalog",
        catalog.to_str().unwrap(),
        "--out",
        &out,
        "--max-order",
        "1",
    ]);
    let report = std::fs::read_to_string(&out).unwrap();
    let mean = |method: &str| -> f64 {
        let line = report.lines().find(|l| l.starts_with(method)).unwrap();
        line.split('\t').nth(1).unwrap().parse().unwrap()
    };
    assert!(mean("dpp") >= mean("weight"), "{report}");

    let run = tgin(&[
        "stats",
        "diversity",
        "--graph",
        &graph,
        "--catalog",
        catalog.to_str().unwrap(),
        "--out",
        &out,
        "--attribute",
        "colour",
    ]);
    assert!(!run.status.success());
}

#[test]
fn selftest_passes() {
    let run = ok(&["selftest", "--seeds", "2"]);
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert_eq!(
        stdout.lines().filter(|l| l.starts_with("[PASS]")).count(),
        4,
        "{stdout}"
    );
}
