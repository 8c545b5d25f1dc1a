use super::{check_decay, check_dense, SimMatrix, SimMethod};
use crate::error::{Error, Result};
use crate::graph::{transition, Graph, TransitionMatrix};
use crate::nn::DenseMatrix;

/// `c * P X P^T` for a dense `X`.
///
/// Rows of `P` for isolated nodes are zero, so their rows and columns vanish.
fn propagate(p: &TransitionMatrix<'_>, x: &DenseMatrix, c: f64) -> DenseMatrix {
    let n = p.num_nodes();
    let g = p.graph();
    // right = X P^T: right(a, v) = avg_{v' in N(v)} X(a, v')
    let mut right = DenseMatrix::zeros(n, n);
    for a in 0..n {
        p.average_neighbors(x.row(a), right.row_mut(a));
    }
    // out(u, .) = c * avg_{u' in N(u)} right(u', .)
    let mut out = DenseMatrix::zeros(n, n);
    for u in 0..n {
        let w = c * p.inv_degree(u);
        if w == 0.0 {
            continue;
        }
        let row = out.row_mut(u);
        for &nb in g.neighbors(u) {
            for (o, &r) in row.iter_mut().zip(right.row(nb)) {
                *o += r;
            }
        }
        row.iter_mut().for_each(|o| *o *= w);
    }
    out
}

/// SimRank by fixed-point iteration from `S = I`, with the diagonal pinned
/// to one after every round.
pub fn simrank_fixedpoint(g: &Graph, c: f64, iterations: usize) -> Result<SimMatrix> {
    check_decay(c)?;
    if iterations == 0 {
        return Err(Error::param("fixed-point SimRank needs at least one iteration"));
    }
    let n = g.num_nodes();
    check_dense(n)?;
    let p = transition(g);
    let mut s = DenseMatrix::identity(n);
    for _ in 0..iterations {
        s = propagate(&p, &s, c);
        for u in 0..n {
            s[(u, u)] = 1.0;
        }
    }
    Ok(SimMatrix {
        scores: s,
        method: SimMethod::FixedPoint,
        decay: c,
        iterations,
        eps: None,
    })
}

/// `sum_{k=0}^{T} c^k P^k ((1-c) I) (P^T)^k`, evaluated in Horner form.
pub fn simrank_power_series(g: &Graph, c: f64, terms: usize) -> Result<SimMatrix> {
    check_decay(c)?;
    let n = g.num_nodes();
    check_dense(n)?;
    let p = transition(g);
    let base = 1.0 - c;
    let mut s = DenseMatrix::identity(n);
    s.scale(base);
    for _ in 0..terms {
        s = propagate(&p, &s, c);
        for u in 0..n {
            s[(u, u)] += base;
        }
    }
    Ok(SimMatrix {
        scores: s,
        method: SimMethod::PowerSeries,
        decay: c,
        iterations: terms,
        eps: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge_pair_is_dissimilar() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let s = simrank_fixedpoint(&g, 0.6, 20).unwrap();
        assert_eq!(s.get(0, 1), 0.0);
        assert_eq!(s.get(0, 0), 1.0);
    }

    #[test]
    fn star_leaves_get_decay() {
        let g = Graph::from_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let s = simrank_fixedpoint(&g, 0.6, 20).unwrap();
        assert!((s.get(1, 2) - 0.6).abs() < 1e-15);
        assert_eq!(s.get(0, 1), 0.0);
    }

    #[test]
    fn isolated_nodes_have_unit_diagonal_only() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2)]).unwrap();
        let s = simrank_fixedpoint(&g, 0.6, 10).unwrap();
        for v in 0..4 {
            assert_eq!(s.get(3, v), if v == 3 { 1.0 } else { 0.0 });
            assert_eq!(s.get(v, 3), if v == 3 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn parameter_errors() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert!(simrank_fixedpoint(&g, 0.0, 5).is_err());
        assert!(simrank_fixedpoint(&g, 1.0, 5).is_err());
        assert!(simrank_fixedpoint(&g, 0.6, 0).is_err());
        assert!(simrank_power_series(&g, 1.5, 5).is_err());
    }

    #[test]
    fn series_zeroth_term() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let s = simrank_power_series(&g, 0.6, 0).unwrap();
        let mut expected = DenseMatrix::identity(3);
        expected.scale(0.4);
        assert_eq!(s.scores, expected);
    }

    #[test]
    fn series_is_monotone_in_terms() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (1, 3)]).unwrap();
        let mut prev = simrank_power_series(&g, 0.6, 0).unwrap();
        for t in 1..12 {
            let cur = simrank_power_series(&g, 0.6, t).unwrap();
            for (a, b) in cur.scores.as_slice().iter().zip(prev.scores.as_slice()) {
                assert!(a + 1e-15 >= *b);
            }
            prev = cur;
        }
    }

    #[test]
    fn series_star_leaves_gap_against_fixed_point() {
        // Closed form of the linearized series for two leaves of a star with
        // L leaves: (1-c) * (c/(1-c^2) + c^2/((1-c^2) L)) = 0.4875 for L = 2.
        let g = Graph::from_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let series = simrank_power_series(&g, 0.6, 60).unwrap();
        let fixed = simrank_fixedpoint(&g, 0.6, 20).unwrap();
        assert!((series.get(1, 2) - 0.4875).abs() < 1e-12);
        let gap = fixed.get(1, 2) - series.get(1, 2);
        assert!((gap - 0.1125).abs() < 1e-12, "gap {gap}");
    }
}
