use std::io::{BufRead, Write};

use super::{SimMatrix, SimMethod};
use crate::error::{Error, Result};
use crate::format::fmt_g17;
use crate::nn::DenseMatrix;

/// Row-wise top-k similarity in compressed row form. Columns within a row
/// are sorted ascending; every stored score is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSim {
    n: usize,
    k: usize,
    decay: f64,
    method: SimMethod,
    offsets: Vec<usize>,
    columns: Vec<usize>,
    values: Vec<f64>,
}

/// Sorts by score descending, ties to the smaller column.
fn rank_desc(a: &(usize, f64), b: &(usize, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

impl SparseSim {
    /// Keeps the `k` best positive candidates of each row.
    pub(crate) fn from_candidate_rows<I>(
        n: usize,
        k: usize,
        decay: f64,
        method: SimMethod,
        rows: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<(usize, f64)>>,
    {
        if k == 0 {
            return Err(Error::param("top-k needs k >= 1"));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut columns = Vec::new();
        let mut values = Vec::new();
        for mut row in rows {
            row.retain(|&(_, x)| x > 0.0);
            if row.len() > k {
                row.select_nth_unstable_by(k - 1, rank_desc);
                row.truncate(k);
            }
            row.sort_unstable_by_key(|&(v, _)| v);
            for (v, x) in row {
                columns.push(v);
                values.push(x);
            }
            offsets.push(columns.len());
        }
        if offsets.len() != n + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} rows for n = {n}",
                offsets.len() - 1
            )));
        }
        Ok(SparseSim {
            n,
            k,
            decay,
            method,
            offsets,
            columns,
            values,
        })
    }

    pub fn identity(n: usize, decay: f64) -> Self {
        SparseSim {
            n,
            k: 1,
            decay,
            method: SimMethod::Identity,
            offsets: (0..=n).collect(),
            columns: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn method(&self) -> SimMethod {
        self.method
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[u]..self.offsets[u + 1];
        self.columns[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn row_len(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        let r = self.offsets[u]..self.offsets[u + 1];
        match self.columns[r.clone()].binary_search(&v) {
            Ok(i) => self.values[r.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for u in 0..self.n {
            for (v, x) in self.row(u) {
                m[(u, v)] = x;
            }
        }
        m
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Keeps the `k` largest entries of each row (diagonal included); ties go to
/// the smaller column. Zero entries are never stored.
pub fn topk_prune(s: &SimMatrix, k: usize) -> Result<SparseSim> {
    let n = s.n();
    let rows = (0..n).map(|u| s.scores.row(u).iter().copied().enumerate().collect());
    SparseSim::from_candidate_rows(n, k, s.decay, s.method, rows)
}

fn check_rows(s: &SparseSim, h: &DenseMatrix) -> Result<()> {
    if h.rows() != s.n() {
        return Err(Error::DimensionMismatch(format!(
            "similarity over {} nodes applied to {} rows",
            s.n(),
            h.rows()
        )));
    }
    Ok(())
}

/// `S H`: row `u` is the score-weighted sum of the retained rows of `h`.
pub fn sparse_aggregate(s: &SparseSim, h: &DenseMatrix) -> Result<DenseMatrix> {
    check_rows(s, h)?;
    let mut out = DenseMatrix::zeros(h.rows(), h.cols());
    for u in 0..s.n() {
        let row = out.row_mut(u);
        for (v, w) in s.row(u) {
            for (o, &x) in row.iter_mut().zip(h.row(v)) {
                *o += w * x;
            }
        }
    }
    Ok(out)
}

/// `S^T G`, used when back-propagating through [`sparse_aggregate`].
pub fn sparse_aggregate_transpose(s: &SparseSim, g: &DenseMatrix) -> Result<DenseMatrix> {
    check_rows(s, g)?;
    let mut out = DenseMatrix::zeros(g.rows(), g.cols());
    for u in 0..s.n() {
        for (v, w) in s.row(u) {
            let src = g.row(u);
            for (o, &x) in out.row_mut(v).iter_mut().zip(src) {
                *o += w * x;
            }
        }
    }
    Ok(out)
}

/// Writes the text dump: a header `n k c method`, then `u v score` lines
/// sorted by `(u, v)` with 17 significant digits.
pub fn write_sparse_sim<W: Write>(s: &SparseSim, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {} {} {}", s.n, s.k, s.decay, s.method)?;
    for u in 0..s.n {
        for (v, x) in s.row(u) {
            writeln!(out, "{u} {v} {}", fmt_g17(x))?;
        }
    }
    out.flush()
}

pub fn read_sparse_sim<R: BufRead>(reader: R) -> Result<SparseSim> {
    let mut lines = reader.lines().enumerate();
    let parse_err = |line: usize, message: String| Error::Parse { line, message };

    let header = loop {
        match lines.next() {
            None => return Err(Error::EmptyInput("similarity dump has no header".into())),
            Some((i, l)) => {
                let l = l.map_err(|e| parse_err(i + 1, e.to_string()))?;
                if !l.trim().is_empty() {
                    break (i + 1, l);
                }
            }
        }
    };
    let fields: Vec<&str> = header.1.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(parse_err(header.0, "header must be 'n k c method'".into()));
    }
    let n: usize = fields[0]
        .parse()
        .map_err(|_| parse_err(header.0, format!("bad n '{}'", fields[0])))?;
    let k: usize = fields[1]
        .parse()
        .map_err(|_| parse_err(header.0, format!("bad k '{}'", fields[1])))?;
    let decay: f64 = fields[2]
        .parse()
        .map_err(|_| parse_err(header.0, format!("bad c '{}'", fields[2])))?;
    let method: SimMethod = fields[3].parse()?;
    if k == 0 {
        return Err(parse_err(header.0, "k must be positive".into()));
    }

    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut last: Option<(usize, usize)> = None;
    for (i, l) in lines {
        let line_no = i + 1;
        let l = l.map_err(|e| parse_err(line_no, e.to_string()))?;
        let t = l.trim();
        if t.is_empty() {
            continue;
        }
        let mut it = t.split_whitespace();
        let (Some(a), Some(b), Some(c), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err(parse_err(line_no, "expected 'u v score'".into()));
        };
        let u: usize = a.parse().map_err(|_| parse_err(line_no, format!("bad row '{a}'")))?;
        let v: usize = b.parse().map_err(|_| parse_err(line_no, format!("bad column '{b}'")))?;
        let x: f64 = c.parse().map_err(|_| parse_err(line_no, format!("bad score '{c}'")))?;
        if u >= n || v >= n {
            return Err(parse_err(line_no, format!("entry ({u}, {v}) outside n = {n}")));
        }
        if !(x.is_finite() && x > 0.0) {
            return Err(parse_err(line_no, format!("score {x} must be positive and finite")));
        }
        if last.is_some_and(|p| p >= (u, v)) {
            return Err(parse_err(line_no, "entries must be sorted by (u, v)".into()));
        }
        last = Some((u, v));
        rows[u].push((v, x));
        if rows[u].len() > k {
            return Err(parse_err(line_no, format!("row {u} holds more than k = {k} entries")));
        }
    }
    SparseSim::from_candidate_rows(n, k, decay, method, rows)
}
