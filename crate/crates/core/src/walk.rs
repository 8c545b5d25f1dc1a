//! Random-walk views of SimRank: walk distributions as propagated
//! embeddings, brute-force tour enumeration, pairwise meeting probabilities
//! and the layer-wise inner-product series.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{transition, Graph, TransitionMatrix};
use crate::nn::DenseMatrix;
use crate::simrank::{check_decay, check_dense, SimMatrix, SimMethod};

/// Largest graph and walk length accepted by [`enumerate_tours`].
pub const TOUR_MAX_NODES: usize = 12;
pub const TOUR_MAX_LENGTH: usize = 6;

/// Row `source` of `P^length`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkDistribution {
    pub source: usize,
    pub length: usize,
    pub probs: Vec<f64>,
}

impl WalkDistribution {
    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn dot(&self, other: &WalkDistribution) -> f64 {
        self.probs.iter().zip(&other.probs).map(|(a, b)| a * b).sum()
    }
}

/// `e_u^T P^l`, i.e. the `l`-th propagated embedding of node `u` when the
/// input embedding is the identity.
pub fn walk_distribution(p: &TransitionMatrix<'_>, u: usize, l: usize) -> Result<WalkDistribution> {
    let n = p.num_nodes();
    if u >= n {
        return Err(Error::param(format!("source {u} out of range for n = {n}")));
    }
    let mut cur = vec![0.0; n];
    cur[u] = 1.0;
    let mut next = vec![0.0; n];
    for _ in 0..l {
        p.step_distribution(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(WalkDistribution {
        source: u,
        length: l,
        probs: cur,
    })
}

/// Sums the probability of every explicit length-`l` tour from `u` by
/// endpoint, multiplying `1/|N(w)|` along the way.
pub fn enumerate_tours(g: &Graph, u: usize, l: usize) -> Result<BTreeMap<usize, f64>> {
    let n = g.num_nodes();
    if n > TOUR_MAX_NODES || l > TOUR_MAX_LENGTH {
        return Err(Error::GuardExceeded(format!(
            "tour enumeration limited to n <= {TOUR_MAX_NODES} and l <= {TOUR_MAX_LENGTH} (got n = {n}, l = {l})"
        )));
    }
    if u >= n {
        return Err(Error::param(format!("source {u} out of range for n = {n}")));
    }
    fn visit(g: &Graph, at: usize, left: usize, prob: f64, out: &mut BTreeMap<usize, f64>) {
        if left == 0 {
            *out.entry(at).or_insert(0.0) += prob;
            return;
        }
        let nb = g.neighbors(at);
        let step = prob / nb.len() as f64;
        for &w in nb {
            visit(g, w, left - 1, step, out);
        }
    }
    let mut out = BTreeMap::new();
    visit(g, u, l, 1.0, &mut out);
    Ok(out)
}

/// Probability that independent length-`l` walks from `u` and `v` end on
/// the same node: the inner product of the two walk distributions.
pub fn meeting_probability(p: &TransitionMatrix<'_>, u: usize, v: usize, l: usize) -> Result<f64> {
    if l == 0 {
        return Err(Error::param("meeting probability needs l >= 1"));
    }
    let a = walk_distribution(p, u, l)?;
    let b = walk_distribution(p, v, l)?;
    Ok(a.dot(&b))
}

/// `sum_{l=1}^{L} c^l <h_u^(l), h_v^(l)>` for every pair, diagonal pinned to
/// one. Built from explicit walk distributions, independent of the
/// fixed-point and power-series routes.
pub fn simrank_series(g: &Graph, c: f64, max_len: usize) -> Result<SimMatrix> {
    check_decay(c)?;
    if max_len == 0 {
        return Err(Error::param("series needs L >= 1"));
    }
    let n = g.num_nodes();
    check_dense(n)?;
    let p = transition(g);
    // embeddings: row u = h_u^(l)
    let mut emb = DenseMatrix::identity(n);
    let mut scores = DenseMatrix::zeros(n, n);
    let mut weight = 1.0;
    for _ in 1..=max_len {
        let mut next = DenseMatrix::zeros(n, n);
        for u in 0..n {
            p.step_distribution(emb.row(u), next.row_mut(u));
        }
        emb = next;
        weight *= c;
        let gram = emb.matmul_t(&emb)?;
        scores.axpy(weight, &gram)?;
    }
    for u in 0..n {
        scores[(u, u)] = 1.0;
    }
    Ok(SimMatrix {
        scores,
        method: SimMethod::WalkSeries,
        decay: c,
        iterations: max_len,
        eps: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn zero_length_is_indicator() {
        let g = path3();
        let d = walk_distribution(&transition(&g), 1, 0).unwrap();
        assert_eq!(d.probs, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn path_walks() {
        let g = path3();
        let p = transition(&g);
        assert_eq!(walk_distribution(&p, 0, 1).unwrap().probs, vec![0.0, 1.0, 0.0]);
        assert_eq!(walk_distribution(&p, 0, 2).unwrap().probs, vec![0.5, 0.0, 0.5]);
        let tours = enumerate_tours(&g, 0, 2).unwrap();
        assert_eq!(tours, BTreeMap::from([(0, 0.5), (2, 0.5)]));
        assert!(walk_distribution(&p, 3, 1).is_err());
    }

    #[test]
    fn star_tours_and_isolated_source() {
        let star = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let t = enumerate_tours(&star, 0, 1).unwrap();
        assert_eq!(t.len(), 3);
        assert!(t.values().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));

        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        assert!(enumerate_tours(&g, 2, 2).unwrap().is_empty());
        let d = walk_distribution(&transition(&g), 2, 3).unwrap();
        assert_eq!(d.mass(), 0.0);
    }

    #[test]
    fn tour_guard() {
        let big = Graph::from_edges(13, &[(0, 1)]).unwrap();
        assert!(matches!(enumerate_tours(&big, 0, 1), Err(Error::GuardExceeded(_))));
        assert!(matches!(enumerate_tours(&path3(), 0, 7), Err(Error::GuardExceeded(_))));
    }

    #[test]
    fn meeting_examples() {
        let star = Graph::from_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let p = transition(&star);
        assert_eq!(meeting_probability(&p, 1, 2, 1).unwrap(), 1.0);

        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (3, 4)]).unwrap();
        let p = transition(&g);
        for l in 1..5 {
            assert_eq!(meeting_probability(&p, 0, 3, l).unwrap(), 0.0);
            let d = walk_distribution(&p, 1, l).unwrap();
            let self_meet = meeting_probability(&p, 1, 1, l).unwrap();
            assert!((self_meet - d.dot(&d)).abs() < 1e-15);
        }
        assert!(meeting_probability(&p, 0, 1, 0).is_err());
    }

    #[test]
    fn single_edge_series_is_zero() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        for l in [1, 5, 30] {
            assert_eq!(simrank_series(&g, 0.6, l).unwrap().get(0, 1), 0.0);
        }
    }

    #[test]
    fn series_tail_bound() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5), (2, 5)])
            .unwrap();
        let c: f64 = 0.6;
        for l in [1, 3, 8] {
            let a = simrank_series(&g, c, l).unwrap();
            let b = simrank_series(&g, c, l + 10).unwrap();
            let bound = c.powi(l as i32 + 1) / (1.0 - c);
            assert!(a.max_offdiag_diff(&b) <= bound + 1e-15);
        }
    }

    #[test]
    fn path_leaves_series_exceeds_fixed_point() {
        // Odd steps: both walks sit on the center (inner product 1); even
        // steps: both uniform over the two leaves (inner product 1/2).
        // sum = c/(1-c^2) + c^2/(2(1-c^2)) = 1.21875 at c = 0.6, whereas
        // fixed-point SimRank of the two leaves is exactly 0.6.
        let s = simrank_series(&path3(), 0.6, 80).unwrap();
        assert!((s.get(0, 2) - 1.21875).abs() < 1e-12);
    }
}
