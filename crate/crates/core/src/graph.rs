//! Undirected sparse graphs in compressed adjacency form.
//!
//! A [`Graph`] is immutable once built: neighbor lists are sorted, symmetric,
//! free of duplicates and self-loops. Node ids are dense `0..n`; ids that never
//! appear in an edge simply become isolated nodes.

use std::io::BufRead;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    degrees: Vec<usize>,
    num_edges: usize,
}

impl Graph {
    /// Builds a graph over `n` nodes from an undirected edge list.
    ///
    /// Either orientation of an edge yields both adjacency entries. Duplicates
    /// collapse and self-loops are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::param(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                continue;
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        Ok(Self::from_adjacency(adj))
    }

    fn from_adjacency(mut adj: Vec<Vec<usize>>) -> Self {
        let n = adj.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut degrees = Vec::with_capacity(n);
        offsets.push(0);
        let mut total = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            total += list.len();
            degrees.push(list.len());
            offsets.push(total);
        }
        let mut neighbors = Vec::with_capacity(total);
        for list in adj {
            neighbors.extend(list);
        }
        let g = Graph {
            offsets,
            neighbors,
            degrees,
            num_edges: total / 2,
        };
        debug_assert!(g.check_invariants().is_ok());
        g
    }

    pub fn num_nodes(&self) -> usize {
        self.degrees.len()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    #[inline]
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    #[inline]
    pub fn degree(&self, u: usize) -> usize {
        self.degrees[u]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Iterates each undirected edge once as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    /// Verifies symmetry, sortedness and the degree-sum identity.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let n = self.num_nodes();
        if self.offsets.len() != n + 1 || self.offsets[0] != 0 {
            return Err("offset array malformed".into());
        }
        if *self.offsets.last().unwrap() != 2 * self.num_edges {
            return Err("last offset differs from 2m".into());
        }
        if self.degrees.iter().sum::<usize>() != 2 * self.num_edges {
            return Err("degree sum differs from 2m".into());
        }
        for u in 0..n {
            if self.offsets[u + 1] < self.offsets[u] {
                return Err(format!("offsets decrease at {u}"));
            }
            let nb = self.neighbors(u);
            if nb.len() != self.degrees[u] {
                return Err(format!("degree of {u} disagrees with offsets"));
            }
            for w in nb.windows(2) {
                if w[0] >= w[1] {
                    return Err(format!("neighbors of {u} not strictly increasing"));
                }
            }
            for &v in nb {
                if v == u {
                    return Err(format!("self-loop at {u}"));
                }
                if v >= n || !self.has_edge(v, u) {
                    return Err(format!("edge ({u}, {v}) has no reverse entry"));
                }
            }
        }
        Ok(())
    }
}

/// Reads a whitespace-separated edge list. `#` lines and blank lines are skipped.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut max_id: Option<usize> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let mut next_id = |what: &str| -> Result<usize> {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("missing {what} node id"),
            })?;
            tok.parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("bad {what} node id '{tok}'"),
            })
        };
        let u = next_id("source")?;
        let v = next_id("target")?;
        if let Some(extra) = tokens.next() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("unexpected trailing token '{extra}'"),
            });
        }
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v));
    }
    let n = max_id.ok_or_else(|| Error::EmptyInput("edge list has no edges".into()))? + 1;
    Graph::from_edges(n, &edges)
}

/// Row-stochastic walk matrix `D^-1 A`, stored as the graph plus `1/degree`.
///
/// Rows of isolated nodes are all zero, so walk mass reaching them is absorbed.
#[derive(Debug, Clone)]
pub struct TransitionMatrix<'g> {
    graph: &'g Graph,
    inv_degree: Vec<f64>,
}

pub fn transition(g: &Graph) -> TransitionMatrix<'_> {
    let inv_degree = g
        .degrees()
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { 1.0 / d as f64 })
        .collect();
    TransitionMatrix {
        graph: g,
        inv_degree,
    }
}

impl<'g> TransitionMatrix<'g> {
    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn inv_degree(&self, u: usize) -> f64 {
        self.inv_degree[u]
    }

    /// Nonzero entries of row `u` as `(column, weight)`.
    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let w = self.inv_degree[u];
        self.graph.neighbors(u).iter().map(move |&v| (v, w))
    }

    pub fn row_sum(&self, u: usize) -> f64 {
        self.row(u).map(|(_, w)| w).sum()
    }

    /// Row-vector product `x^T P`: one step of a walk distribution.
    pub fn step_distribution(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (u, &mass) in x.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let share = mass * self.inv_degree[u];
            for &v in self.graph.neighbors(u) {
                out[v] += share;
            }
        }
    }

    /// Column-vector product `P x`: neighbor average of `x` at every node.
    pub fn average_neighbors(&self, x: &[f64], out: &mut [f64]) {
        for (u, o) in out.iter_mut().enumerate() {
            let s: f64 = self.graph.neighbors(u).iter().map(|&v| x[v]).sum();
            *o = s * self.inv_degree[u];
        }
    }
}

/// Mean fraction of same-label neighbors over non-isolated nodes.
pub fn node_homophily(g: &Graph, labels: &[usize]) -> Result<f64> {
    if labels.len() != g.num_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} nodes",
            labels.len(),
            g.num_nodes()
        )));
    }
    let mut total = 0.0;
    let mut counted = 0usize;
    for v in 0..g.num_nodes() {
        let nb = g.neighbors(v);
        if nb.is_empty() {
            continue;
        }
        let same = nb.iter().filter(|&&u| labels[u] == labels[v]).count();
        total += same as f64 / nb.len() as f64;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::HomophilyUndefined);
    }
    Ok(total / counted as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Graph> {
        load_edge_list(text.as_bytes())
    }

    #[test]
    fn path_graph_from_text() {
        let g = parse("0 1\n1 2").unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.neighbors(1), &[0, 2]);
    }

    #[test]
    fn duplicates_and_self_loops_collapse() {
        let g = parse("0 1\n1 0\n0 0").unwrap();
        assert_eq!(g.num_nodes(), 2);
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn id_gap_becomes_isolated_node() {
        let g = parse("0 2").unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.degree(1), 0);
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let g = parse("# header\n\n0 1\n  # indented comment\n1 2\n").unwrap();
        assert_eq!(g.num_edges(), 2);
    }

    #[test]
    fn malformed_token_reports_line() {
        match parse("0 1\n1 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(parse("0 1\n-1 2"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("3\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(parse(""), Err(Error::EmptyInput(_))));
        assert!(matches!(parse("# nothing\n"), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn homophily_examples() {
        let tri = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(node_homophily(&tri, &[0, 0, 0]).unwrap(), 1.0);

        let edge = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(node_homophily(&edge, &[0, 1]).unwrap(), 0.0);

        // center 0 (label 0), leaves labeled 0, 0, 1
        let star = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let h = node_homophily(&star, &[0, 0, 0, 1]).unwrap();
        assert!((h - (2.0 / 3.0 + 1.0 + 1.0 + 0.0) / 4.0).abs() < 1e-15);
        assert!((h - 0.6667).abs() < 1e-4);
    }

    #[test]
    fn homophily_skips_isolated_and_rejects_all_isolated() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        assert_eq!(node_homophily(&g, &[0, 0, 1]).unwrap(), 1.0);
        let empty = Graph::from_edges(3, &[]).unwrap();
        assert!(matches!(
            node_homophily(&empty, &[0, 0, 0]),
            Err(Error::HomophilyUndefined)
        ));
    }

    #[test]
    fn transition_rows() {
        let path = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let p = transition(&path);
        assert_eq!(p.row(1).collect::<Vec<_>>(), vec![(0, 0.5), (2, 0.5)]);

        let with_isolated = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let p = transition(&with_isolated);
        assert_eq!(p.row(2).count(), 0);
        assert_eq!(p.row_sum(2), 0.0);

        let star = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let p = transition(&star);
        assert!(p.row(0).all(|(_, w)| w == 0.25));
        assert_eq!(p.row_sum(0), 1.0);
    }
}
