use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::hyper::HyperParams;
use super::network::{logits, loss_and_grad, SimgaParams};
use crate::dataset::{DatasetBundle, Split};
use crate::error::{Error, Result};
use crate::generators::rng_from_seed;
use crate::nn::{adam_step, AdamState, DenseMatrix};
use crate::simrank::{simrank_production_topk, SparseSim};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Test accuracy of the restored best-validation parameters.
    pub test_accuracy: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    /// Epoch whose parameters were restored; 0 means the initial ones.
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub precompute_seconds: f64,
    pub train_seconds: f64,
    pub curve: Vec<EpochRecord>,
}

impl TrainReport {
    /// The report with both timing fields zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> TrainReport {
        TrainReport {
            precompute_seconds: 0.0,
            train_seconds: 0.0,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report fields are plain numbers")
    }

    pub fn from_json(text: &str) -> Result<TrainReport> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }
}

/// Similarity matrix the model aggregates with, following `hp`.
pub fn precompute_similarity(bundle: &DatasetBundle, hp: &HyperParams) -> Result<SparseSim> {
    let mode = hp.sim_mode.resolve(bundle.num_nodes());
    simrank_production_topk(&bundle.graph, hp.decay, hp.eps, mode, hp.topk)
}

/// Computes the similarity matrix (timed as precomputation), then trains.
pub fn fit(bundle: &DatasetBundle, hp: &HyperParams) -> Result<(SimgaParams, TrainReport)> {
    hp.validate()?;
    let start = Instant::now();
    let s = precompute_similarity(bundle, hp)?;
    let precompute_seconds = start.elapsed().as_secs_f64();
    fit_with_similarity(bundle, &s, hp, precompute_seconds)
}

/// Full-batch Adam on the training-split cross-entropy with early stopping
/// on validation accuracy. The best-validation parameters are restored
/// before the test split is scored.
pub fn fit_with_similarity(
    bundle: &DatasetBundle,
    s: &SparseSim,
    hp: &HyperParams,
    precompute_seconds: f64,
) -> Result<(SimgaParams, TrainReport)> {
    hp.validate()?;
    for (name, ids) in [
        ("train", &bundle.splits.train),
        ("val", &bundle.splits.val),
        ("test", &bundle.splits.test),
    ] {
        if ids.is_empty() {
            return Err(Error::InvalidDataset(format!("{name} split is empty")));
        }
    }
    let start = Instant::now();
    let mut init_rng = rng_from_seed(hp.seed);
    let mut params = SimgaParams::for_bundle(bundle, hp, &mut init_rng);
    let mut dropout_rng = rng_from_seed(hp.seed.wrapping_add(1));
    let lens: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
    let mut adam = AdamState::new(&lens);

    let mut best = params.clone();
    let mut best_val = evaluate(bundle, s, &params, hp, Split::Val)?;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut curve = Vec::new();

    let diverged = |epoch: usize| {
        move |e: Error| match e {
            Error::NonFinite(_) => Error::Diverged { epoch },
            other => other,
        }
    };
    for epoch in 1..=hp.max_epochs {
        let (loss, grads, _) = loss_and_grad(
            bundle,
            s,
            &params,
            hp,
            &bundle.splits.train,
            hp.dropout > 0.0,
            &mut dropout_rng,
        )
        .map_err(diverged(epoch))?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        {
            let mut tensors = params.tensors_mut();
            adam_step(&mut tensors, &grads.tensors(), &mut adam, hp.lr, hp.weight_decay);
        }
        if !params.tensors().iter().all(|t| t.iter().all(|x| x.is_finite())) {
            return Err(Error::Diverged { epoch });
        }
        let val_acc = evaluate(bundle, s, &params, hp, Split::Val).map_err(diverged(epoch))?;
        curve.push(EpochRecord {
            epoch,
            loss,
            val_acc,
        });
        if val_acc > best_val {
            best_val = val_acc;
            best = params.clone();
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if hp.patience.is_some_and(|p| stale >= p) {
                break;
            }
        }
    }

    let report = TrainReport {
        test_accuracy: evaluate(bundle, s, &best, hp, Split::Test)?,
        train_accuracy: evaluate(bundle, s, &best, hp, Split::Train)?,
        val_accuracy: best_val,
        best_epoch,
        epochs_run: curve.len(),
        precompute_seconds,
        train_seconds: start.elapsed().as_secs_f64(),
        curve,
    };
    Ok((best, report))
}

/// Fraction of `ids` whose row argmax (ties to the smallest class) equals
/// the label.
pub fn accuracy(scores: &DenseMatrix, labels: &[usize], ids: &[usize]) -> Result<f64> {
    if ids.is_empty() {
        return Err(Error::param("accuracy over an empty node set"));
    }
    let pred = scores.argmax_rows();
    let mut hits = 0usize;
    for &i in ids {
        if i >= pred.len() || i >= labels.len() {
            return Err(Error::param(format!("node {i} out of range")));
        }
        if pred[i] == labels[i] {
            hits += 1;
        }
    }
    Ok(hits as f64 / ids.len() as f64)
}

/// Accuracy on one split with dropout off.
pub fn evaluate(
    bundle: &DatasetBundle,
    s: &SparseSim,
    params: &SimgaParams,
    hp: &HyperParams,
    split: Split,
) -> Result<f64> {
    // Evaluation draws no randomness; the generator is only a placeholder.
    let z = logits(bundle, s, params, hp, false, &mut rng_from_seed(0))?;
    accuracy(&z, &bundle.labels, bundle.splits.get(split))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gen_twin_graph;

    fn quick_hp() -> HyperParams {
        HyperParams {
            hidden: 16,
            max_epochs: 60,
            patience: None,
            ..HyperParams::default()
        }
    }

    #[test]
    fn accuracy_contracts() {
        let perfect = DenseMatrix::from_rows(&[vec![5.0, 0.0], vec![0.0, 5.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(accuracy(&perfect, &[0, 1, 1], &[0, 1, 2]).unwrap(), 1.0);
        let uniform = DenseMatrix::zeros(4, 2);
        assert_eq!(accuracy(&uniform, &[0, 1, 1, 0], &[0, 1, 2, 3]).unwrap(), 0.5);
        assert_eq!(accuracy(&uniform, &[0, 1, 1, 1], &[0, 1, 2, 3]).unwrap(), 0.25);
        let a = accuracy(&perfect, &[0, 0, 1], &[2, 0, 1]).unwrap();
        let b = accuracy(&perfect, &[0, 0, 1], &[1, 2, 0]).unwrap();
        assert_eq!(a, b);
        assert!(accuracy(&perfect, &[0, 0, 1], &[]).is_err());
    }

    #[test]
    fn zero_epochs_returns_initial_params() {
        let b = gen_twin_graph(1, 3).unwrap().bundle;
        let hp = HyperParams {
            max_epochs: 0,
            ..quick_hp()
        };
        let (params, report) = fit(&b, &hp).unwrap();
        let init = SimgaParams::for_bundle(&b, &hp, &mut rng_from_seed(hp.seed));
        assert_eq!(params, init);
        assert_eq!(report.best_epoch, 0);
        assert!(report.curve.is_empty());
        assert!((0.0..=1.0).contains(&report.test_accuracy));
    }

    #[test]
    fn training_is_reproducible() {
        let b = gen_twin_graph(2, 4).unwrap().bundle;
        let hp = quick_hp();
        let (p1, r1) = fit(&b, &hp).unwrap();
        let (p2, r2) = fit(&b, &hp).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(r1.without_timing(), r2.without_timing());
        assert!(r1.best_epoch <= r1.epochs_run);
        assert_eq!(r1.curve.len(), 60);
        let back = TrainReport::from_json(&r1.to_json()).unwrap();
        assert_eq!(back, r1);
        let v: serde_json::Value = serde_json::from_str(&r1.to_json()).unwrap();
        for key in ["test_accuracy", "best_epoch", "precompute_seconds", "train_seconds", "curve"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v["curve"][0].get("val_acc").is_some());
    }

    #[test]
    fn patience_stops_early() {
        let b = gen_twin_graph(2, 4).unwrap().bundle;
        let hp = HyperParams {
            patience: Some(3),
            max_epochs: 500,
            ..quick_hp()
        };
        let (_, r) = fit(&b, &hp).unwrap();
        assert!(r.epochs_run < 500);
        assert!(r.epochs_run >= r.best_epoch + 3 || r.epochs_run == 500);
    }

    #[test]
    fn divergence_names_the_epoch() {
        let b = gen_twin_graph(2, 2).unwrap().bundle;
        let hp = HyperParams {
            lr: 1e300,
            ..quick_hp()
        };
        match fit(&b, &hp) {
            Err(Error::Diverged { epoch }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn empty_split_is_rejected() {
        let mut b = gen_twin_graph(2, 2).unwrap().bundle;
        b.splits.val.clear();
        assert!(matches!(fit(&b, &quick_hp()), Err(Error::InvalidDataset(_))));
    }
}
