//! Seeded synthetic graphs and datasets for tests, verification and
//! benchmarks.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{DatasetBundle, Splits};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nn::DenseMatrix;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform random graph with `round(n * avg_degree / 2)` distinct edges.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, n: usize, avg_degree: f64) -> Graph {
    let max_edges = n * n.saturating_sub(1) / 2;
    let target = ((n as f64 * avg_degree / 2.0).round() as usize).min(max_edges);
    let mut edges = std::collections::HashSet::with_capacity(target);
    while edges.len() < target {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            edges.insert((u.min(v), u.max(v)));
        }
    }
    let mut edges: Vec<_> = edges.into_iter().collect();
    edges.sort_unstable();
    Graph::from_edges(n, &edges).expect("ids in range")
}

/// Random recursive tree plus uniform extra edges up to `avg_degree`.
pub fn random_connected_graph<R: Rng + ?Sized>(rng: &mut R, n: usize, avg_degree: f64) -> Graph {
    let mut edges: std::collections::BTreeSet<(usize, usize)> = (1..n)
        .map(|v| (rng.random_range(0..v), v))
        .collect();
    let max_edges = n * n.saturating_sub(1) / 2;
    let target = ((n as f64 * avg_degree / 2.0).round() as usize).clamp(n.saturating_sub(1), max_edges);
    while edges.len() < target {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v {
            edges.insert((u.min(v), u.max(v)));
        }
    }
    let edges: Vec<_> = edges.into_iter().collect();
    Graph::from_edges(n, &edges).expect("ids in range")
}

/// Shuffled 50/25/25 split of `0..n`.
pub fn random_splits<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Splits {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    let n_train = n / 2;
    let n_val = n / 4;
    let mut train = ids[..n_train].to_vec();
    let mut val = ids[n_train..n_train + n_val].to_vec();
    let mut test = ids[n_train + n_val..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Splits { train, val, test }
}

fn gaussian_features<R: Rng + ?Sized>(rng: &mut R, n: usize, f: usize) -> DenseMatrix {
    let data = (0..n * f).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    DenseMatrix::from_vec(n, f, data).expect("shape by construction")
}

/// A bundle together with node pairs that share feature rows and neighbor sets.
#[derive(Debug, Clone)]
pub struct TwinBundle {
    pub bundle: DatasetBundle,
    pub twins: Vec<(usize, usize)>,
}

const TWIN_BASE_NODES: usize = 24;
const TWIN_FEATURES: usize = 8;
const TWIN_CLASSES: usize = 3;

/// Random base graph plus `twin_pairs` appended pairs `(u, v)` with
/// `N(u) = N(v)` (drawn from the base nodes) and bit-equal feature rows.
/// Twins share a label.
pub fn gen_twin_graph(seed: u64, twin_pairs: usize) -> Result<TwinBundle> {
    if twin_pairs == 0 {
        return Err(Error::param("twin_pairs must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let base = TWIN_BASE_NODES;
    let n = base + 2 * twin_pairs;
    let base_graph = random_connected_graph(&mut rng, base, 3.0);
    let mut edges: Vec<(usize, usize)> = base_graph.edges().collect();
    let mut features = gaussian_features(&mut rng, n, TWIN_FEATURES);
    let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..TWIN_CLASSES)).collect();

    let mut twins = Vec::with_capacity(twin_pairs);
    let pool: Vec<usize> = (0..base).collect();
    for i in 0..twin_pairs {
        let u = base + 2 * i;
        let v = u + 1;
        let size = rng.random_range(2..=4);
        for &w in pool.choose_multiple(&mut rng, size) {
            edges.push((u, w));
            edges.push((v, w));
        }
        let row = features.row(u).to_vec();
        features.row_mut(v).copy_from_slice(&row);
        labels[v] = labels[u];
        twins.push((u, v));
    }
    let graph = Graph::from_edges(n, &edges)?;
    let splits = random_splits(&mut rng, n);
    let bundle = DatasetBundle::new(graph, features, labels, TWIN_CLASSES, splits)?;
    Ok(TwinBundle { bundle, twins })
}

const HETERO_FEATURES: usize = 16;
const HETERO_CROSS_EDGES: usize = 3;
const HETERO_SAME_CLASS_RATE: f64 = 0.3;

/// Graph whose labels are a structural role: nodes of class `y` link to
/// random nodes of class `(y + 1) mod classes` (for two classes, the two
/// sides of a random bipartite graph), with occasional same-class edges.
/// Features are Gaussian noise independent of the label. Labels are
/// balanced to within one node and splits are 50/25/25.
pub fn gen_structural_heterophily(seed: u64, n: usize, classes: usize) -> Result<DatasetBundle> {
    if classes < 2 || n < 4 * classes {
        return Err(Error::param(format!(
            "need classes >= 2 and n >= 4 * classes (n = {n}, classes = {classes})"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    labels.shuffle(&mut rng);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (v, &y) in labels.iter().enumerate() {
        by_class[y].push(v);
    }

    let mut edges = Vec::new();
    for u in 0..n {
        let y = labels[u];
        let next = &by_class[(y + 1) % classes];
        for &v in next.choose_multiple(&mut rng, HETERO_CROSS_EDGES) {
            edges.push((u, v));
        }
        if rng.random::<f64>() < HETERO_SAME_CLASS_RATE {
            let same = &by_class[y];
            let v = same[rng.random_range(0..same.len())];
            edges.push((u, v));
        }
    }
    let graph = Graph::from_edges(n, &edges)?;
    let features = gaussian_features(&mut rng, n, HETERO_FEATURES);
    let splits = random_splits(&mut rng, n);
    DatasetBundle::new(graph, features, labels, classes, splits)
}
