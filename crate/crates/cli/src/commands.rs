use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use simga::bench::{run_bench, BenchConfig};
use simga::checkpoint::{read_checkpoint, write_checkpoint};
use simga::dataset::{
    read_features, read_index_list, read_labels, write_features, BundlePaths, DatasetBundle, Split,
    Splits,
};
use simga::generators::rng_from_seed;
use simga::graph::{load_edge_list, node_homophily, Graph};
use simga::model::{
    accuracy, fit_with_similarity, grouping_report, logits, precompute_similarity, HyperParams,
};
use simga::simrank::{
    class_score_histogram, read_sparse_sim, simrank_production, simrank_production_topk,
    write_sparse_sim, SimMode, SparseSim,
};
use simga::verify::{run_verify, VerifyConfig};
use simga::Error;

use crate::{HyperArgs, Shared};

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
    pub hint: Option<String>,
}

pub type CliResult<T> = Result<T, CliError>;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_GUARD: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonFinite(_) | Error::Diverged { .. } => EXIT_NUMERIC,
        Error::GuardExceeded(_) | Error::DenseLimit { .. } => EXIT_GUARD,
        _ => EXIT_INPUT,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let hint = match &e {
            Error::DenseLimit { .. } => Some("rerun with --mode approx".to_string()),
            Error::Diverged { .. } => Some("lower --lr or raise --weight-decay".to_string()),
            _ => None,
        };
        CliError {
            code: exit_code(&e),
            message: e.to_string(),
            hint,
        }
    }
}

fn input_error(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_INPUT,
        message: message.into(),
        hint: None,
    }
}

/// Opens `path` and runs `parse` on it, prefixing failures with the path.
fn read_file<T>(path: &Path, parse: impl FnOnce(BufReader<File>) -> simga::Result<T>) -> CliResult<T> {
    let file = File::open(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    parse(BufReader::new(file)).map_err(|e| {
        let mut err = CliError::from(e);
        if !err.message.starts_with(&path.display().to_string()) {
            err.message = format!("{}: {}", path.display(), err.message);
        }
        err
    })
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> CliResult<()> {
    let file = File::create(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn ensure_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| input_error(format!("{}: {e}", dir.display())))
}

impl Shared {
    fn resolve(&self, flag: &Option<PathBuf>, name: &str, pick: fn(&BundlePaths) -> &PathBuf) -> CliResult<PathBuf> {
        if let Some(p) = flag {
            return Ok(p.clone());
        }
        match &self.data_dir {
            Some(dir) => Ok(pick(&BundlePaths::in_dir(dir)).clone()),
            None => Err(input_error(format!("missing --{name} (or --data-dir)"))),
        }
    }

    fn edges_path(&self) -> CliResult<PathBuf> {
        self.resolve(&self.edges, "edges", |p| &p.edges)
    }

    fn labels_path(&self) -> CliResult<PathBuf> {
        self.resolve(&self.labels, "labels", |p| &p.labels)
    }

    fn labels_available(&self) -> bool {
        self.labels.is_some() || self.data_dir.is_some()
    }

    fn paths(&self) -> CliResult<BundlePaths> {
        Ok(BundlePaths {
            edges: self.edges_path()?,
            features: self.resolve(&self.features, "features", |p| &p.features)?,
            labels: self.labels_path()?,
            train: self.resolve(&self.train_split, "train-split", |p| &p.train)?,
            val: self.resolve(&self.val_split, "val-split", |p| &p.val)?,
            test: self.resolve(&self.test_split, "test-split", |p| &p.test)?,
        })
    }

    /// Reads the bundle file by file so parse errors name the offending file.
    fn load_bundle(&self) -> CliResult<DatasetBundle> {
        let p = self.paths()?;
        let graph = read_file(&p.edges, load_edge_list)?;
        let features = read_file(&p.features, read_features)?;
        let labels = read_file(&p.labels, read_labels)?;
        let splits = Splits {
            train: read_file(&p.train, read_index_list)?,
            val: read_file(&p.val, read_index_list)?,
            test: read_file(&p.test, read_index_list)?,
        };
        let num_classes = labels.iter().max().map_or(0, |m| m + 1);
        // Trailing isolated nodes never appear in the edge list.
        let graph = if graph.num_nodes() < labels.len() {
            let edges: Vec<_> = graph.edges().collect();
            Graph::from_edges(labels.len(), &edges)?
        } else {
            graph
        };
        Ok(DatasetBundle::new(graph, features, labels, num_classes, splits)?)
    }

    fn load_graph(&self, min_nodes: usize) -> CliResult<Graph> {
        let g = read_file(&self.edges_path()?, load_edge_list)?;
        if g.num_nodes() < min_nodes {
            let edges: Vec<_> = g.edges().collect();
            return Ok(Graph::from_edges(min_nodes, &edges)?);
        }
        Ok(g)
    }

    fn hyper(&self, overrides: &HyperArgs) -> CliResult<HyperParams> {
        let mut hp = HyperParams::default();
        if let Some(path) = &self.config {
            read_file(path, |r| hp.apply_config(r))?;
        }
        let pairs: [(&str, Option<String>); 13] = [
            ("delta", overrides.delta.map(|x| x.to_string())),
            ("alpha", overrides.alpha.map(|x| x.to_string())),
            ("decay", overrides.decay.map(|x| x.to_string())),
            ("eps", overrides.eps.map(|x| x.to_string())),
            ("topk", overrides.topk.map(|x| x.to_string())),
            ("hidden", overrides.hidden.map(|x| x.to_string())),
            ("main_depth", overrides.main_depth.map(|x| x.to_string())),
            ("lr", overrides.lr.map(|x| x.to_string())),
            ("dropout", overrides.dropout.map(|x| x.to_string())),
            ("weight_decay", overrides.weight_decay.map(|x| x.to_string())),
            ("max_epochs", overrides.max_epochs.map(|x| x.to_string())),
            ("patience", overrides.patience.clone()),
            ("sim_mode", overrides.sim_mode.clone()),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                hp.set(key, &v)?;
            }
        }
        if let Some(seed) = self.seed {
            hp.seed = seed;
        }
        hp.validate()?;
        Ok(hp)
    }
}

fn load_sim(path: &Path, bundle: &DatasetBundle) -> CliResult<SparseSim> {
    let s = read_file(path, read_sparse_sim)?;
    if s.n() != bundle.num_nodes() {
        return Err(input_error(format!(
            "{}: similarity covers {} nodes, dataset has {}",
            path.display(),
            s.n(),
            bundle.num_nodes()
        )));
    }
    Ok(s)
}

pub fn homophily(shared: &Shared) -> CliResult<()> {
    let labels = read_file(&shared.labels_path()?, read_labels)?;
    let g = shared.load_graph(labels.len())?;
    if g.num_nodes() != labels.len() {
        return Err(input_error(format!(
            "{} labels for {} nodes",
            labels.len(),
            g.num_nodes()
        )));
    }
    println!("{:.4}", node_homophily(&g, &labels)?);
    Ok(())
}

pub fn simrank(
    shared: &Shared,
    c: f64,
    eps: f64,
    k: usize,
    mode: &str,
    histogram: Option<(usize, f64)>,
) -> CliResult<()> {
    let mode: SimMode = mode.parse()?;
    let labels = match histogram {
        Some(_) if !shared.labels_available() => {
            return Err(input_error("--histogram needs --labels"));
        }
        Some(_) => Some(read_file(&shared.labels_path()?, read_labels)?),
        None => None,
    };
    let g = shared.load_graph(labels.as_ref().map_or(0, Vec::len))?;
    ensure_out(&shared.out)?;

    let start = Instant::now();
    let s = simrank_production_topk(&g, c, eps, mode, k)?;
    let seconds = start.elapsed().as_secs_f64();
    let dump = shared.out.join("simrank.txt");
    write_file(&dump, |w| write_sparse_sim(&s, w))?;

    if let (Some((bins, floor)), Some(labels)) = (histogram, labels) {
        let dense = simrank_production(&g, c, eps, mode)?;
        let h = class_score_histogram(&dense, &labels, bins, floor)?;
        let path = shared.out.join("histogram.tsv");
        write_file(&path, |w| w.write_all(h.to_tsv().as_bytes()))?;
    }
    println!("nodes\t{}", g.num_nodes());
    println!("nnz\t{}", s.nnz());
    println!("precompute_seconds\t{seconds:.6}");
    println!("output\t{}", dump.display());
    Ok(())
}

pub fn train(shared: &Shared, overrides: &HyperArgs, sim: Option<&Path>) -> CliResult<()> {
    let bundle = shared.load_bundle()?;
    let hp = shared.hyper(overrides)?;
    ensure_out(&shared.out)?;

    // Loading a dump stands in for precomputation in the timing fields.
    let start = Instant::now();
    let s = match sim {
        Some(path) => load_sim(path, &bundle)?,
        None => precompute_similarity(&bundle, &hp)?,
    };
    let precompute_seconds = start.elapsed().as_secs_f64();
    let (params, report) = fit_with_similarity(&bundle, &s, &hp, precompute_seconds)?;

    write_file(&shared.out.join("report.json"), |w| {
        w.write_all(report.to_json().as_bytes())?;
        w.write_all(b"\n")
    })?;
    write_file(&shared.out.join("checkpoint.txt"), |w| write_checkpoint(&params, &hp, w))?;
    let z = logits(&bundle, &s, &params, &hp, false, &mut rng_from_seed(hp.seed))?;
    write_file(&shared.out.join("embeddings.txt"), |w| write_features(&z, w))?;

    println!("{}", report.to_json());
    Ok(())
}

pub fn eval(
    shared: &Shared,
    checkpoint: &Path,
    sim: Option<&Path>,
    split: &str,
    pairs: usize,
) -> CliResult<()> {
    let split: Split = split.parse()?;
    let bundle = shared.load_bundle()?;
    let (params, hp) = read_file(checkpoint, read_checkpoint)?;
    let s = match sim {
        Some(path) => load_sim(path, &bundle)?,
        None => precompute_similarity(&bundle, &hp)?,
    };
    let z = logits(&bundle, &s, &params, &hp, false, &mut rng_from_seed(hp.seed))?;
    let ids = bundle.splits.get(split);
    let acc = accuracy(&z, &bundle.labels, ids)?;
    let grouping = grouping_report(
        &z,
        &bundle.labels,
        pairs,
        &[],
        &mut rng_from_seed(shared.seed.unwrap_or(hp.seed)),
    )?;
    let out = serde_json::json!({
        "split": format!("{split:?}").to_lowercase(),
        "nodes": ids.len(),
        "accuracy": acc,
        "grouping": grouping,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("plain values serialize"));
    Ok(())
}

pub fn verify(shared: &Shared, c: f64, corrupt_push: Option<f64>) -> CliResult<()> {
    let cfg = VerifyConfig {
        seed: shared.seed.unwrap_or(0),
        decay: c,
        corrupt_push,
    };
    let report = run_verify(&cfg)?;
    print!("{}", report.to_tsv());
    if report.all_passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .suites
            .iter()
            .filter(|s| !s.passed)
            .map(|s| s.name.as_str())
            .collect();
        Err(CliError {
            code: EXIT_NUMERIC,
            message: format!("failed suites: {}", failed.join(", ")),
            hint: None,
        })
    }
}

pub fn bench(
    shared: &Shared,
    ladder: Vec<usize>,
    degree: f64,
    eps: f64,
    k: usize,
    repeats: usize,
) -> CliResult<()> {
    let cfg = BenchConfig {
        ladder,
        degree,
        eps,
        topk: k,
        repeats,
        seed: shared.seed.unwrap_or(0),
        ..BenchConfig::default()
    };
    let report = run_bench(&cfg)?;
    print!("{}", report.to_tsv());
    Ok(())
}
