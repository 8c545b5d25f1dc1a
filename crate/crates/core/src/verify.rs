//! Built-in numerical cross-checks between independent SimRank routes and
//! the model's twin invariance, run on seeded random graphs.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::error::Result;
use crate::generators::{gen_twin_graph, random_connected_graph, random_graph, rng_from_seed};
use crate::graph::transition;
use crate::model::{logits, HyperParams, SimChoice, SimgaParams};
use crate::simrank::{
    simrank_fixedpoint, simrank_localpush_with, simrank_power_series, simrank_production_topk,
    PushOptions, SimMode,
};
use crate::walk::{enumerate_tours, meeting_probability, walk_distribution, simrank_series};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub seed: u64,
    pub decay: f64,
    /// Spreads push mass with this decay instead of `decay`. Negative control.
    pub corrupt_push: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 0,
            decay: 0.6,
            corrupt_push: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub cases: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }

    /// Tab-separated table, one suite per row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("suite\tstatus\tmax_error\ttolerance\tcases\tseconds\n");
        for s in &self.suites {
            let _ = writeln!(
                out,
                "{}\t{}\t{:.3e}\t{:.3e}\t{}\t{:.3}",
                s.name,
                if s.passed { "PASS" } else { "FAIL" },
                s.max_error,
                s.tolerance,
                s.cases,
                s.seconds
            );
        }
        out
    }
}

fn suite(name: &str, tolerance: f64, body: impl FnOnce() -> Result<(f64, usize)>) -> Result<SuiteResult> {
    let start = Instant::now();
    let (max_error, cases) = body()?;
    Ok(SuiteResult {
        name: name.to_string(),
        max_error,
        tolerance,
        passed: max_error <= tolerance,
        cases,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Walk distributions against explicit tour enumeration.
pub fn verify_walk_tours(seed: u64, graphs: usize) -> Result<SuiteResult> {
    suite("walk-vs-tours", 1e-12, || {
        let mut rng = rng_from_seed(seed);
        let mut worst = 0.0f64;
        let mut cases = 0;
        for _ in 0..graphs {
            let n = rng.random_range(2..=12);
            let d = rng.random_range(1.0..4.0);
            let g = random_graph(&mut rng, n, d);
            let p = transition(&g);
            for u in 0..n {
                for l in 0..=6 {
                    let dist = walk_distribution(&p, u, l)?;
                    let tours = enumerate_tours(&g, u, l)?;
                    for (w, &x) in dist.probs.iter().enumerate() {
                        let t = tours.get(&w).copied().unwrap_or(0.0);
                        worst = worst.max((x - t).abs());
                    }
                    cases += 1;
                }
            }
        }
        Ok((worst, cases))
    })
}

/// Pairwise meeting probability against the sum over paired tours.
pub fn verify_meeting(seed: u64, graphs: usize) -> Result<SuiteResult> {
    suite("meeting-vs-paired-tours", 1e-12, || {
        let mut rng = rng_from_seed(seed);
        let mut worst = 0.0f64;
        let mut cases = 0;
        for _ in 0..graphs {
            let n = rng.random_range(2..=10);
            let d = rng.random_range(1.0..4.0);
            let g = random_graph(&mut rng, n, d);
            let p = transition(&g);
            for u in 0..n {
                for v in 0..n {
                    for l in 1..=5 {
                        let tu = enumerate_tours(&g, u, l)?;
                        let tv = enumerate_tours(&g, v, l)?;
                        let paired: f64 = tu
                            .iter()
                            .map(|(w, a)| a * tv.get(w).copied().unwrap_or(0.0))
                            .sum();
                        worst = worst.max((meeting_probability(&p, u, v, l)? - paired).abs());
                        cases += 1;
                    }
                }
            }
        }
        Ok((worst, cases))
    })
}

/// Layer-wise walk series (L = 25) against fixed-point SimRank (T = 50).
pub fn verify_series_identity(seed: u64, c: f64, graphs: usize) -> Result<SuiteResult> {
    let tolerance = c.powi(26) / (1.0 - c) + 1e-9;
    suite("walk-series-vs-fixed-point", tolerance, || {
        let mut rng = rng_from_seed(seed);
        let mut worst = 0.0f64;
        for _ in 0..graphs {
            let n = rng.random_range(3..=50);
            let d = rng.random_range(2.0..5.0);
            let g = random_connected_graph(&mut rng, n, d);
            let series = simrank_series(&g, c, 25)?;
            let fixed = simrank_fixedpoint(&g, c, 50)?;
            worst = worst.max(series.max_offdiag_diff(&fixed));
        }
        Ok((worst, graphs))
    })
}

/// Rescaled Localpush estimate against the power series, plus the residual
/// guard on exit. The reported error is the worst ratio to the allowed
/// value, so the tolerance is 1.
pub fn verify_localpush(
    seed: u64,
    c: f64,
    graphs: usize,
    corrupt_push: Option<f64>,
) -> Result<SuiteResult> {
    suite("localpush-vs-power-series", 1.0, || {
        let mut rng = rng_from_seed(seed);
        let mut worst = 0.0f64;
        let mut cases = 0;
        for _ in 0..graphs {
            let n = rng.random_range(10..=200);
            let d = rng.random_range(2.0..6.0);
            let g = random_graph(&mut rng, n, d);
            let series = simrank_power_series(&g, c, 50)?;
            for eps in [0.1, 0.01] {
                let opts = PushOptions {
                    push_decay: corrupt_push,
                    ..PushOptions::default()
                };
                let raw = simrank_localpush_with(&g, c, eps, opts)?;
                let mut est = raw.estimate_dense();
                est.scale(1.0 - c);
                let err = est.max_abs_diff(&series.scores);
                worst = worst.max(err / eps);
                worst = worst.max(raw.max_residual() / ((1.0 - c) * eps));
                cases += 1;
            }
        }
        Ok((worst, cases))
    })
}

/// Output rows of twin nodes under random parameters, dropout off.
pub fn verify_twins(seed: u64, bundles: usize) -> Result<SuiteResult> {
    suite("twin-invariance", 1e-9, || {
        let mut worst = 0.0f64;
        let mut cases = 0;
        for i in 0..bundles {
            let tb = gen_twin_graph(seed.wrapping_add(i as u64), 3)?;
            let b = &tb.bundle;
            let hp = HyperParams {
                hidden: 16,
                sim_mode: SimChoice::Exact,
                ..HyperParams::default()
            };
            let s = simrank_production_topk(&b.graph, hp.decay, hp.eps, SimMode::Exact, hp.topk)?;
            let mut rng = rng_from_seed(seed ^ (0x5eed + i as u64));
            let params = SimgaParams::for_bundle(b, &hp, &mut rng);
            let z = logits(b, &s, &params, &hp, false, &mut rng)?;
            for &(u, v) in &tb.twins {
                for (a, bb) in z.row(u).iter().zip(z.row(v)) {
                    worst = worst.max((a - bb).abs());
                }
                cases += 1;
            }
        }
        Ok((worst, cases))
    })
}

pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifyReport> {
    Ok(VerifyReport {
        suites: vec![
            verify_walk_tours(cfg.seed, 50)?,
            verify_meeting(cfg.seed.wrapping_add(1), 10)?,
            verify_series_identity(cfg.seed.wrapping_add(2), cfg.decay, 20)?,
            verify_localpush(cfg.seed.wrapping_add(3), cfg.decay, 20, cfg.corrupt_push)?,
            verify_twins(cfg.seed.wrapping_add(4), 5)?,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        assert!(verify_walk_tours(1, 5).unwrap().passed);
        assert!(verify_meeting(1, 2).unwrap().passed);
        assert!(verify_twins(1, 2).unwrap().passed);
        assert!(verify_localpush(1, 0.6, 2, None).unwrap().passed);
    }

    #[test]
    fn corrupted_push_is_caught() {
        let r = verify_localpush(1, 0.6, 2, Some(0.9)).unwrap();
        assert!(!r.passed, "{r:?}");
    }

    #[test]
    fn table_has_one_row_per_suite() {
        let report = VerifyReport {
            suites: vec![verify_walk_tours(2, 1).unwrap()],
        };
        let tsv = report.to_tsv();
        assert_eq!(tsv.lines().count(), 2);
        assert!(tsv.lines().nth(1).unwrap().starts_with("walk-vs-tours\tPASS"));
    }
}
