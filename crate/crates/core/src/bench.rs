//! Scaling measurements: approximate similarity precomputation plus one
//! training epoch on random graphs of fixed average degree.

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::dataset::DatasetBundle;
use crate::error::{Error, Result};
use crate::generators::{random_graph, random_splits, rng_from_seed};
use crate::model::{loss_and_grad, HyperParams, SimgaParams};
use crate::nn::{adam_step, AdamState, DenseMatrix};
use crate::simrank::{simrank_production_topk, SimMode};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub ladder: Vec<usize>,
    pub degree: f64,
    pub decay: f64,
    pub eps: f64,
    pub topk: usize,
    pub hidden: usize,
    pub features: usize,
    /// Each timing is the minimum over this many runs.
    pub repeats: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            ladder: vec![1000, 2000, 4000, 8000],
            degree: 8.0,
            decay: 0.6,
            eps: 0.1,
            topk: 64,
            hidden: 64,
            features: 16,
            repeats: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub edges: usize,
    pub nnz: usize,
    pub precompute_seconds: f64,
    pub epoch_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub degree: f64,
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of `ln(total_seconds)` against `ln(n)`.
    pub exponent: f64,
}

impl BenchReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("n\tdegree\tedges\tnnz\tprecompute_seconds\tepoch_seconds\ttotal_seconds\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}",
                r.n, self.degree, r.edges, r.nnz, r.precompute_seconds, r.epoch_seconds, r.total_seconds
            );
        }
        let _ = writeln!(out, "# exponent\t{:.4}", self.exponent);
        out
    }
}

/// Slope of the least-squares line through `(ln x, ln y)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::param("slope needs at least two positive points"));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = logs.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::param("slope needs two distinct sizes"));
    }
    Ok(sxy / sxx)
}

fn bench_bundle<R: Rng + ?Sized>(rng: &mut R, n: usize, cfg: &BenchConfig) -> Result<DatasetBundle> {
    let graph = random_graph(rng, n, cfg.degree);
    let data = (0..n * cfg.features).map(|_| rng.random_range(-1.0..1.0)).collect();
    let features = DenseMatrix::from_vec(n, cfg.features, data)?;
    let labels = (0..n).map(|_| rng.random_range(0..2)).collect();
    let splits = random_splits(rng, n);
    DatasetBundle::new(graph, features, labels, 2, splits)
}

pub fn bench_one(n: usize, cfg: &BenchConfig) -> Result<BenchRow> {
    let mut rng = rng_from_seed(cfg.seed ^ n as u64);
    let bundle = bench_bundle(&mut rng, n, cfg)?;
    let hp = HyperParams {
        decay: cfg.decay,
        eps: cfg.eps,
        topk: cfg.topk,
        hidden: cfg.hidden,
        ..HyperParams::default()
    };
    let mut best_pre = f64::INFINITY;
    let mut best_epoch = f64::INFINITY;
    let mut nnz = 0;
    for _ in 0..cfg.repeats.max(1) {
        let start = Instant::now();
        let s = simrank_production_topk(&bundle.graph, cfg.decay, cfg.eps, SimMode::Approx, cfg.topk)?;
        best_pre = best_pre.min(start.elapsed().as_secs_f64());
        nnz = s.nnz();

        let mut params = SimgaParams::for_bundle(&bundle, &hp, &mut rng);
        let lens: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
        let mut adam = AdamState::new(&lens);
        let start = Instant::now();
        let (_, grads, _) = loss_and_grad(&bundle, &s, &params, &hp, &bundle.splits.train, true, &mut rng)?;
        adam_step(&mut params.tensors_mut(), &grads.tensors(), &mut adam, hp.lr, hp.weight_decay);
        best_epoch = best_epoch.min(start.elapsed().as_secs_f64());
    }
    Ok(BenchRow {
        n,
        edges: bundle.graph.num_edges(),
        nnz,
        precompute_seconds: best_pre,
        epoch_seconds: best_epoch,
        total_seconds: best_pre + best_epoch,
    })
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.ladder.len() < 2 {
        return Err(Error::param("the ladder needs at least two sizes"));
    }
    let rows = cfg
        .ladder
        .iter()
        .map(|&n| bench_one(n, cfg))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.total_seconds)).collect();
    Ok(BenchReport {
        degree: cfg.degree,
        exponent: loglog_slope(&points)?,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_laws() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&x| (x, 3.0 * x * x)).collect();
        assert!((loglog_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert!(loglog_slope(&[(1.0, 1.0)]).is_err());
        assert!(loglog_slope(&[(2.0, 1.0), (2.0, 3.0)]).is_err());
    }

    #[test]
    fn tiny_ladder_produces_tsv() {
        let cfg = BenchConfig {
            ladder: vec![50, 100],
            repeats: 1,
            hidden: 8,
            ..BenchConfig::default()
        };
        let report = run_bench(&cfg).unwrap();
        assert_eq!(report.rows.len(), 2);
        let tsv = report.to_tsv();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1].split('\t').count(), 7);
        assert!(lines[3].starts_with("# exponent\t"));
    }
}
