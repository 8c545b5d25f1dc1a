use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::hash::{BuildHasherDefault, Hasher};

use super::sparse::SparseSim;
use super::{check_decay, check_dense, SimMethod};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nn::DenseMatrix;

/// Multiplicative hash for small integer keys.
#[derive(Default, Clone, Copy)]
pub(crate) struct IdHasher(u64);

impl Hasher for IdHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0.rotate_left(5) ^ b as u64).wrapping_mul(0x517c_c1b7_2722_0a95);
        }
    }

    fn write_usize(&mut self, x: usize) {
        self.0 = (x as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    }
}

type Row = HashMap<usize, f64, BuildHasherDefault<IdHasher>>;

/// Order among equal residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Smallest `(u, v)` first.
    #[default]
    Lexicographic,
    /// Largest `(u, v)` first.
    ReverseLexicographic,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PushOptions {
    pub tie_break: TieBreak,
    /// Overrides the decay used when spreading residual mass while keeping
    /// the termination threshold at `(1-c) eps`. Only meant as a negative
    /// control for verification.
    pub push_decay: Option<f64>,
}

/// Raw Localpush output: the accumulated estimate (not rescaled, diagonal not
/// pinned) and the residual left on termination, both stored by row.
#[derive(Debug, Clone)]
pub struct RawPushMatrix {
    n: usize,
    decay: f64,
    eps: f64,
    estimate: Vec<Row>,
    residual: Vec<Row>,
    pushes: usize,
}

#[derive(Debug, PartialEq)]
struct Candidate {
    value: f64,
    u: usize,
    v: usize,
    reverse: bool,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| {
                let ord = (other.u, other.v).cmp(&(self.u, self.v));
                if self.reverse {
                    ord.reverse()
                } else {
                    ord
                }
            })
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Localpush with the default max-residual-first, lexicographic worklist.
pub fn simrank_localpush(g: &Graph, c: f64, eps: f64) -> Result<RawPushMatrix> {
    simrank_localpush_with(g, c, eps, PushOptions::default())
}

/// Starting from `R = I`, repeatedly takes the largest residual `R(u,v)`,
/// commits it to the estimate, and spreads `c R(u,v) / (|N(u')| |N(v')|)` to
/// every `(u', v')` in `N(u) x N(v)`, until no residual exceeds `(1-c) eps`.
pub fn simrank_localpush_with(
    g: &Graph,
    c: f64,
    eps: f64,
    opts: PushOptions,
) -> Result<RawPushMatrix> {
    check_decay(c)?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::param(format!("eps = {eps} must be positive")));
    }
    let spread = opts.push_decay.unwrap_or(c);
    let n = g.num_nodes();
    let threshold = (1.0 - c) * eps;
    let reverse = opts.tie_break == TieBreak::ReverseLexicographic;
    let inv_deg: Vec<f64> = g
        .degrees()
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { 1.0 / d as f64 })
        .collect();

    let mut estimate: Vec<Row> = vec![Row::default(); n];
    let mut residual: Vec<Row> = vec![Row::default(); n];
    let mut heap = BinaryHeap::new();
    for u in 0..n {
        residual[u].insert(u, 1.0);
        if 1.0 > threshold {
            heap.push(Candidate {
                value: 1.0,
                u,
                v: u,
                reverse,
            });
        }
    }

    let mut pushes = 0usize;
    while let Some(Candidate { value, u, v, .. }) = heap.pop() {
        let current = residual[u].get(&v).copied().unwrap_or(0.0);
        if current != value {
            continue; // superseded entry
        }
        residual[u].insert(v, 0.0);
        *estimate[u].entry(v).or_insert(0.0) += value;
        pushes += 1;

        let base = spread * value;
        for &a in g.neighbors(u) {
            let row_scale = base * inv_deg[a];
            let row = &mut residual[a];
            for &b in g.neighbors(v) {
                let r = row.entry(b).or_insert(0.0);
                *r += row_scale * inv_deg[b];
                if *r > threshold {
                    heap.push(Candidate {
                        value: *r,
                        u: a,
                        v: b,
                        reverse,
                    });
                }
            }
        }
    }

    Ok(RawPushMatrix {
        n,
        decay: c,
        eps,
        estimate,
        residual,
        pushes,
    })
}

impl RawPushMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Number of pops that committed residual mass.
    pub fn pushes(&self) -> usize {
        self.pushes
    }

    pub fn estimate(&self, u: usize, v: usize) -> f64 {
        self.estimate[u].get(&v).copied().unwrap_or(0.0)
    }

    pub fn residual(&self, u: usize, v: usize) -> f64 {
        self.residual[u].get(&v).copied().unwrap_or(0.0)
    }

    /// Stored estimate entries of row `u` in unspecified order.
    pub fn estimate_row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.estimate[u].iter().map(|(&v, &x)| (v, x))
    }

    pub fn max_residual(&self) -> f64 {
        self.residual
            .iter()
            .flat_map(|r| r.values())
            .fold(0.0, |m: f64, &x| m.max(x))
    }

    pub fn total_estimate_mass(&self) -> f64 {
        let mut total = 0.0;
        for row in &self.estimate {
            let mut entries: Vec<_> = row.iter().collect();
            entries.sort_unstable_by_key(|(&v, _)| v);
            total += entries.iter().map(|(_, &x)| x).sum::<f64>();
        }
        total
    }

    pub fn stored_entries(&self) -> usize {
        self.estimate.iter().map(Row::len).sum()
    }

    pub fn estimate_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for (u, row) in self.estimate.iter().enumerate() {
            for (&v, &x) in row {
                m[(u, v)] = x;
            }
        }
        m
    }

    pub fn residual_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for (u, row) in self.residual.iter().enumerate() {
            for (&v, &x) in row {
                m[(u, v)] = x;
            }
        }
        m
    }

    /// Dense guard applies; prefer [`RawPushMatrix::production_topk`] for large graphs.
    pub fn try_estimate_dense(&self) -> Result<DenseMatrix> {
        check_dense(self.n)?;
        Ok(self.estimate_dense())
    }

    /// Rescales by `1 - c`, pins the diagonal to one and keeps the `k`
    /// largest entries per row, without building a dense matrix.
    pub fn production_topk(&self, k: usize) -> Result<SparseSim> {
        let scale = 1.0 - self.decay;
        let rows = (0..self.n).map(|u| {
            let mut row: Vec<(usize, f64)> = self.estimate[u]
                .iter()
                .filter(|(&v, _)| v != u)
                .map(|(&v, &x)| (v, x * scale))
                .collect();
            row.push((u, 1.0));
            row
        });
        SparseSim::from_candidate_rows(self.n, k, self.decay, SimMethod::Approx, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isolated_single_node() {
        let g = Graph::from_edges(1, &[]).unwrap();
        let raw = simrank_localpush(&g, 0.6, 0.1).unwrap();
        assert_eq!(raw.estimate(0, 0), 1.0);
        assert_eq!(raw.residual(0, 0), 0.0);
        assert_eq!(raw.pushes(), 1);
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert!(simrank_localpush(&g, 0.6, 0.0).is_err());
        assert!(simrank_localpush(&g, 0.6, -1.0).is_err());
        assert!(simrank_localpush(&g, 1.2, 0.1).is_err());
    }

    #[test]
    fn residual_guard_on_exit() {
        let g = Graph::from_edges(
            6,
            &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)],
        )
        .unwrap();
        for eps in [0.1, 0.01, 0.001] {
            let raw = simrank_localpush(&g, 0.6, eps).unwrap();
            assert!(raw.max_residual() <= 0.4 * eps);
        }
    }

    #[test]
    fn star_leaves_accumulate_the_series() {
        // Unscaled series for two leaves of a 2-leaf star: c/(1-c^2) + c^2/(2(1-c^2)).
        let g = Graph::from_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let raw = simrank_localpush(&g, 0.6, 1e-9).unwrap();
        assert!((raw.estimate(1, 2) - 1.21875).abs() < 1e-8);
    }

    #[test]
    fn candidate_order() {
        let a = Candidate { value: 0.5, u: 0, v: 3, reverse: false };
        let b = Candidate { value: 0.5, u: 1, v: 0, reverse: false };
        let c = Candidate { value: 0.7, u: 2, v: 2, reverse: false };
        let mut heap = BinaryHeap::from(vec![b, c, a]);
        let order: Vec<_> = std::iter::from_fn(|| heap.pop()).map(|x| (x.u, x.v)).collect();
        assert_eq!(order, vec![(2, 2), (0, 3), (1, 0)]);
    }

    #[test]
    fn tie_break_order_stays_within_bound() {
        let edges: Vec<_> = (0..8).map(|i| (i, (i + 1) % 8)).chain([(0, 4)]).collect();
        let g = Graph::from_edges(8, &edges).unwrap();
        let (c, eps) = (0.6, 0.05);
        let fwd = simrank_localpush(&g, c, eps).unwrap();
        let opts = PushOptions {
            tie_break: TieBreak::ReverseLexicographic,
            ..PushOptions::default()
        };
        let rev = simrank_localpush_with(&g, c, eps, opts).unwrap();
        assert!(rev.max_residual() <= (1.0 - c) * eps);
        let mut a = fwd.estimate_dense();
        let mut b = rev.estimate_dense();
        a.scale(1.0 - c);
        b.scale(1.0 - c);
        assert!(a.max_abs_diff(&b) <= 2.0 * eps);
    }
}
