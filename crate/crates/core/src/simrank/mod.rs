//! All-pairs SimRank: fixed-point iteration, the linearized power series,
//! Localpush, top-k sparsification and sparse aggregation.

mod exact;
mod histogram;
mod push;
mod sparse;

use std::fmt;
use std::str::FromStr;

pub use exact::{simrank_fixedpoint, simrank_power_series};
pub use histogram::{class_score_histogram, ScoreHistogram};
pub use push::{simrank_localpush, simrank_localpush_with, PushOptions, RawPushMatrix, TieBreak};
pub use sparse::{
    read_sparse_sim, sparse_aggregate, sparse_aggregate_transpose, topk_prune, write_sparse_sim,
    SparseSim,
};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nn::DenseMatrix;

/// Largest node count for which a dense `n x n` similarity matrix is built.
pub const DENSE_LIMIT: usize = 20_000;

/// How a similarity matrix was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMethod {
    FixedPoint,
    PowerSeries,
    WalkSeries,
    Exact,
    Approx,
    Identity,
}

impl SimMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SimMethod::FixedPoint => "fixedpoint",
            SimMethod::PowerSeries => "powerseries",
            SimMethod::WalkSeries => "walkseries",
            SimMethod::Exact => "exact",
            SimMethod::Approx => "approx",
            SimMethod::Identity => "identity",
        }
    }
}

impl fmt::Display for SimMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SimMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fixedpoint" => SimMethod::FixedPoint,
            "powerseries" => SimMethod::PowerSeries,
            "walkseries" => SimMethod::WalkSeries,
            "exact" => SimMethod::Exact,
            "approx" => SimMethod::Approx,
            "identity" => SimMethod::Identity,
            other => return Err(Error::param(format!("unknown similarity method '{other}'"))),
        })
    }
}

/// Dense symmetric similarity scores with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SimMatrix {
    pub scores: DenseMatrix,
    pub method: SimMethod,
    pub decay: f64,
    /// Iterations or series terms used; zero for push-based results.
    pub iterations: usize,
    pub eps: Option<f64>,
}

impl SimMatrix {
    pub fn n(&self) -> usize {
        self.scores.rows()
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.scores[(u, v)]
    }

    pub fn identity(n: usize, decay: f64) -> Self {
        SimMatrix {
            scores: DenseMatrix::identity(n),
            method: SimMethod::Identity,
            decay,
            iterations: 0,
            eps: None,
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for u in 0..n {
            for v in (u + 1)..n {
                worst = worst.max((self.get(u, v) - self.get(v, u)).abs());
            }
        }
        worst
    }

    /// Largest absolute difference over pairs `u != v`.
    pub fn max_offdiag_diff(&self, other: &SimMatrix) -> f64 {
        let n = self.n();
        assert_eq!(n, other.n());
        let mut worst: f64 = 0.0;
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    worst = worst.max((self.get(u, v) - other.get(u, v)).abs());
                }
            }
        }
        worst
    }
}

/// Which SimRank route feeds the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// Fixed-point iteration with `ceil(log_c eps)` rounds.
    Exact,
    /// Localpush, rescaled by `1 - c`, diagonal pinned to one.
    Approx,
}

impl FromStr for SimMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SimMode::Exact),
            "approx" => Ok(SimMode::Approx),
            other => Err(Error::param(format!("mode must be exact or approx, got '{other}'"))),
        }
    }
}

impl fmt::Display for SimMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimMode::Exact => "exact",
            SimMode::Approx => "approx",
        })
    }
}

pub(crate) fn check_decay(c: f64) -> Result<()> {
    if c > 0.0 && c < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("decay c = {c} must lie in (0, 1)")))
    }
}

pub(crate) fn check_dense(n: usize) -> Result<()> {
    if n > DENSE_LIMIT {
        Err(Error::DenseLimit {
            n,
            limit: DENSE_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// `ceil(log_c eps)`, at least one.
pub fn iterations_for_eps(c: f64, eps: f64) -> Result<usize> {
    check_decay(c)?;
    if !(eps > 0.0) {
        return Err(Error::param(format!("eps = {eps} must be positive")));
    }
    let t = (eps.ln() / c.ln()).ceil();
    Ok(if t < 1.0 { 1 } else { t as usize })
}

/// The similarity matrix consumed by the model.
pub fn simrank_production(g: &Graph, c: f64, eps: f64, mode: SimMode) -> Result<SimMatrix> {
    check_dense(g.num_nodes())?;
    match mode {
        SimMode::Exact => {
            let t = iterations_for_eps(c, eps)?;
            let mut s = simrank_fixedpoint(g, c, t)?;
            s.method = SimMethod::Exact;
            s.eps = Some(eps);
            Ok(s)
        }
        SimMode::Approx => {
            let raw = simrank_localpush(g, c, eps)?;
            let mut scores = raw.estimate_dense();
            scores.scale(1.0 - c);
            for u in 0..g.num_nodes() {
                scores[(u, u)] = 1.0;
            }
            Ok(SimMatrix {
                scores,
                method: SimMethod::Approx,
                decay: c,
                iterations: 0,
                eps: Some(eps),
            })
        }
    }
}

/// Production similarity followed by top-k pruning.
///
/// The approximate route never materializes a dense matrix, so it is the
/// only one available above [`DENSE_LIMIT`] nodes.
pub fn simrank_production_topk(
    g: &Graph,
    c: f64,
    eps: f64,
    mode: SimMode,
    k: usize,
) -> Result<SparseSim> {
    match mode {
        SimMode::Exact => topk_prune(&simrank_production(g, c, eps, mode)?, k),
        SimMode::Approx => {
            let raw = simrank_localpush(g, c, eps)?;
            raw.production_topk(k)
        }
    }
}
