use rand::Rng;

use super::hyper::HyperParams;
use crate::dataset::DatasetBundle;
use crate::error::{Error, Result};
use crate::nn::{
    dropout_mask, softmax_cross_entropy, softmax_rows, DenseMatrix, LayerInput, LinearGrad, Mlp,
    MlpCache,
};
use crate::simrank::{sparse_aggregate, sparse_aggregate_transpose, SparseSim};

/// The three learnable branches.
#[derive(Debug, Clone, PartialEq)]
pub struct SimgaParams {
    /// Features `n x f` to `n x w`.
    pub mlp_f: Mlp,
    /// Adjacency rows `n x n` to `n x w`.
    pub mlp_a: Mlp,
    /// Combined embedding `n x w` to class scores.
    pub mlp_h: Mlp,
}

/// Gradients laid out like [`SimgaParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimgaGrads {
    pub mlp_f: Vec<LinearGrad>,
    pub mlp_a: Vec<LinearGrad>,
    pub mlp_h: Vec<LinearGrad>,
}

impl SimgaParams {
    pub fn init<R: Rng + ?Sized>(
        num_nodes: usize,
        num_features: usize,
        num_classes: usize,
        hp: &HyperParams,
        rng: &mut R,
    ) -> Self {
        let w = hp.hidden;
        let main_dims: Vec<usize> = if hp.main_depth >= 2 {
            vec![w, w, num_classes]
        } else {
            vec![w, num_classes]
        };
        SimgaParams {
            mlp_f: Mlp::init(&[num_features, w], rng),
            mlp_a: Mlp::init(&[num_nodes, w], rng),
            mlp_h: Mlp::init(&main_dims, rng),
        }
    }

    pub fn for_bundle<R: Rng + ?Sized>(bundle: &DatasetBundle, hp: &HyperParams, rng: &mut R) -> Self {
        Self::init(
            bundle.num_nodes(),
            bundle.num_features(),
            bundle.num_classes,
            hp,
            rng,
        )
    }

    pub fn num_params(&self) -> usize {
        self.mlp_f.num_params() + self.mlp_a.num_params() + self.mlp_h.num_params()
    }

    /// Tensors in a fixed order: `mlp_f`, `mlp_a`, `mlp_h`.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = self.mlp_f.params();
        out.extend(self.mlp_a.params());
        out.extend(self.mlp_h.params());
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.mlp_f.params_mut();
        out.extend(self.mlp_a.params_mut());
        out.extend(self.mlp_h.params_mut());
        out
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} parameters",
                flat.len(),
                self.num_params()
            )));
        }
        let mut rest = flat;
        for t in self.tensors_mut() {
            let (head, tail) = rest.split_at(t.len());
            t.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    fn check_shapes(&self, bundle: &DatasetBundle) -> Result<()> {
        let n = bundle.num_nodes();
        let w = self.mlp_f.out_dim();
        let ok = self.mlp_f.in_dim() == bundle.num_features()
            && self.mlp_a.in_dim() == n
            && self.mlp_a.out_dim() == w
            && self.mlp_h.in_dim() == w
            && self.mlp_h.out_dim() == bundle.num_classes;
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "parameters ({}->{}, {}->{}, {}->{}) do not fit a bundle with n = {n}, f = {}, {} classes",
                self.mlp_f.in_dim(),
                w,
                self.mlp_a.in_dim(),
                self.mlp_a.out_dim(),
                self.mlp_h.in_dim(),
                self.mlp_h.out_dim(),
                bundle.num_features(),
                bundle.num_classes
            )))
        }
    }
}

impl SimgaGrads {
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.mlp_f
            .iter()
            .chain(&self.mlp_a)
            .chain(&self.mlp_h)
            .flat_map(|g| [g.weight.as_slice(), g.bias.as_slice()])
            .collect()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().concat()
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    cache_f: MlpCache,
    cache_a: MlpCache,
    cache_h: MlpCache,
    /// `delta * H_F + (1 - delta) * H_A` before the rectifier.
    mixed: DenseMatrix,
    combined: DenseMatrix,
    combined_mask: Option<DenseMatrix>,
    pub h: DenseMatrix,
    pub z: DenseMatrix,
}

impl Trace {
    pub fn min_abs_preactivation(&self) -> f64 {
        let mixed = self
            .mixed
            .as_slice()
            .iter()
            .fold(f64::INFINITY, |m, &x| m.min(x.abs()));
        [&self.cache_f, &self.cache_a, &self.cache_h]
            .iter()
            .map(|c| c.min_abs_preactivation())
            .fold(mixed, f64::min)
    }

    pub fn activation_pattern(&self) -> Vec<bool> {
        let mut p = self.cache_f.activation_pattern();
        p.extend(self.cache_a.activation_pattern());
        p.extend(self.mixed.as_slice().iter().map(|&x| x > 0.0));
        p.extend(self.cache_h.activation_pattern());
        p
    }
}

/// Coefficients `(on S H, on H)` of the aggregation step.
fn aggregation_weights(alpha: f64) -> (f64, f64) {
    if cfg!(feature = "appendix-aggregation") {
        (alpha, 1.0 - alpha)
    } else {
        (1.0 - alpha, alpha)
    }
}

/// `Z = (1 - alpha) S H + alpha H`. With the `appendix-aggregation` feature
/// the coefficients swap: `Z = alpha S H + (1 - alpha) H`.
pub fn aggregate(s: &SparseSim, h: &DenseMatrix, alpha: f64) -> Result<DenseMatrix> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param(format!("alpha = {alpha} must lie in [0, 1]")));
    }
    let (on_sh, on_h) = aggregation_weights(alpha);
    let mut z = sparse_aggregate(s, h)?;
    z.scale(on_sh);
    z.axpy(on_h, h)?;
    Ok(z)
}

/// Gradient of [`aggregate`] with respect to `h`.
fn aggregate_backward(s: &SparseSim, grad_z: &DenseMatrix, alpha: f64) -> Result<DenseMatrix> {
    let (on_sh, on_h) = aggregation_weights(alpha);
    let mut g = sparse_aggregate_transpose(s, grad_z)?;
    g.scale(on_sh);
    g.axpy(on_h, grad_z)?;
    Ok(g)
}

struct EmbedParts {
    h: DenseMatrix,
    cache_f: MlpCache,
    cache_a: MlpCache,
    cache_h: MlpCache,
    mixed: DenseMatrix,
    combined: DenseMatrix,
    combined_mask: Option<DenseMatrix>,
}

fn embed_trace<R: Rng + ?Sized>(
    bundle: &DatasetBundle,
    params: &SimgaParams,
    hp: &HyperParams,
    training: bool,
    rng: &mut R,
) -> Result<EmbedParts> {
    params.check_shapes(bundle)?;
    let dropout = hp.dropout;
    let (h_f, cache_f) = params
        .mlp_f
        .forward(LayerInput::Dense(&bundle.features), dropout, training, rng)?;
    let (h_a, cache_a) = params
        .mlp_a
        .forward(LayerInput::Adjacency(&bundle.graph), dropout, training, rng)?;
    let mut mixed = h_f.scaled(hp.delta);
    mixed.axpy(1.0 - hp.delta, &h_a)?;
    let mut combined = mixed.clone();
    combined.as_mut_slice().iter_mut().for_each(|x| *x = x.max(0.0));
    let combined_mask = if training && dropout > 0.0 {
        let mask = dropout_mask(combined.rows(), combined.cols(), dropout, rng);
        for (x, &m) in combined.as_mut_slice().iter_mut().zip(mask.as_slice()) {
            *x *= m;
        }
        Some(mask)
    } else {
        None
    };
    let (h, cache_h) = params
        .mlp_h
        .forward(LayerInput::Dense(&combined), dropout, training, rng)?;
    Ok(EmbedParts {
        h,
        cache_f,
        cache_a,
        cache_h,
        mixed,
        combined,
        combined_mask,
    })
}

/// `H = mlp_h(relu(delta * mlp_f(F) + (1 - delta) * mlp_a(A)))`, an
/// `n x classes` matrix. Dropout is applied to the combined embedding and to
/// hidden activations, and only when `training` is set.
pub fn embed<R: Rng + ?Sized>(
    bundle: &DatasetBundle,
    params: &SimgaParams,
    hp: &HyperParams,
    training: bool,
    rng: &mut R,
) -> Result<DenseMatrix> {
    Ok(embed_trace(bundle, params, hp, training, rng)?.h)
}

/// Full forward pass up to the pre-softmax scores `Z`.
pub fn forward_trace<R: Rng + ?Sized>(
    bundle: &DatasetBundle,
    s: &SparseSim,
    params: &SimgaParams,
    hp: &HyperParams,
    training: bool,
    rng: &mut R,
) -> Result<Trace> {
    if s.n() != bundle.num_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "similarity over {} nodes for a {}-node graph",
            s.n(),
            bundle.num_nodes()
        )));
    }
    let parts = embed_trace(bundle, params, hp, training, rng)?;
    let z = aggregate(s, &parts.h, hp.alpha)?;
    Ok(Trace {
        cache_f: parts.cache_f,
        cache_a: parts.cache_a,
        cache_h: parts.cache_h,
        mixed: parts.mixed,
        combined: parts.combined,
        combined_mask: parts.combined_mask,
        h: parts.h,
        z,
    })
}

/// Pre-softmax scores `Z`.
pub fn logits<R: Rng + ?Sized>(
    bundle: &DatasetBundle,
    s: &SparseSim,
    params: &SimgaParams,
    hp: &HyperParams,
    training: bool,
    rng: &mut R,
) -> Result<DenseMatrix> {
    Ok(forward_trace(bundle, s, params, hp, training, rng)?.z)
}

/// Row-wise class probabilities `softmax(Z)`.
pub fn forward<R: Rng + ?Sized>(
    bundle: &DatasetBundle,
    s: &SparseSim,
    params: &SimgaParams,
    hp: &HyperParams,
    training: bool,
    rng: &mut R,
) -> Result<DenseMatrix> {
    Ok(softmax_rows(&logits(bundle, s, params, hp, training, rng)?))
}

/// Back-propagates `dL/dZ` through a recorded forward pass.
pub fn backward(
    bundle: &DatasetBundle,
    s: &SparseSim,
    params: &SimgaParams,
    hp: &HyperParams,
    trace: &Trace,
    grad_z: &DenseMatrix,
) -> Result<SimgaGrads> {
    let grad_h = aggregate_backward(s, grad_z, hp.alpha)?;
    let (mlp_h, grad_combined) = params.mlp_h.backward(
        LayerInput::Dense(&trace.combined),
        &trace.cache_h,
        &grad_h,
        true,
    )?;
    let mut grad_combined = grad_combined.expect("input gradient requested");
    if let Some(mask) = &trace.combined_mask {
        for (g, &m) in grad_combined.as_mut_slice().iter_mut().zip(mask.as_slice()) {
            *g *= m;
        }
    }
    for (g, &x) in grad_combined.as_mut_slice().iter_mut().zip(trace.mixed.as_slice()) {
        if x <= 0.0 {
            *g = 0.0;
        }
    }
    let (mlp_f, _) = params.mlp_f.backward(
        LayerInput::Dense(&bundle.features),
        &trace.cache_f,
        &grad_combined.scaled(hp.delta),
        false,
    )?;
    let (mlp_a, _) = params.mlp_a.backward(
        LayerInput::Adjacency(&bundle.graph),
        &trace.cache_a,
        &grad_combined.scaled(1.0 - hp.delta),
        false,
    )?;
    Ok(SimgaGrads {
        mlp_f,
        mlp_a,
        mlp_h,
    })
}

/// Mean cross-entropy over `mask` and its gradient, plus the forward trace.
pub fn loss_and_grad<R: Rng + ?Sized>(
    bundle: &DatasetBundle,
    s: &SparseSim,
    params: &SimgaParams,
    hp: &HyperParams,
    mask: &[usize],
    training: bool,
    rng: &mut R,
) -> Result<(f64, SimgaGrads, Trace)> {
    let trace = forward_trace(bundle, s, params, hp, training, rng)?;
    let (loss, grad_z) = softmax_cross_entropy(&trace.z, &bundle.labels, mask)?;
    let grads = backward(bundle, s, params, hp, &trace, &grad_z)?;
    Ok((loss, grads, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_twin_graph, rng_from_seed};
    use crate::graph::Graph;
    use crate::nn::{grad_check, GradCheckConfig, Probe};
    use crate::simrank::{simrank_production_topk, SimMode};

    fn small_hp() -> HyperParams {
        HyperParams {
            hidden: 6,
            dropout: 0.0,
            ..HyperParams::default()
        }
    }

    #[test]
    fn alpha_extremes() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let s = simrank_production_topk(&g, 0.6, 0.01, SimMode::Exact, 8).unwrap();
        let h = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.0, 3.0], vec![2.0, 2.0]])
            .unwrap();
        assert_eq!(aggregate(&s, &h, 1.0).unwrap(), h);
        let sh = sparse_aggregate(&s, &h).unwrap();
        assert_eq!(aggregate(&s, &h, 0.0).unwrap(), sh);
        let id = SparseSim::identity(4, 0.6);
        assert_eq!(aggregate(&id, &h, 0.5).unwrap(), h);
        assert!(aggregate(&s, &h, 1.5).is_err());
    }

    #[test]
    fn delta_selects_branches() {
        let tb = gen_twin_graph(4, 2).unwrap();
        let b = tb.bundle;
        let mut hp = small_hp();
        let params = SimgaParams::for_bundle(&b, &hp, &mut rng_from_seed(1));
        let mut other = b.clone();
        other.features.scale(-3.0);
        hp.delta = 0.0;
        let a = embed(&b, &params, &hp, false, &mut rng_from_seed(0)).unwrap();
        let c = embed(&other, &params, &hp, false, &mut rng_from_seed(0)).unwrap();
        assert_eq!(a, c);

        hp.delta = 1.0;
        let edges: Vec<_> = b.graph.edges().skip(3).collect();
        let mut rewired = b.clone();
        rewired.graph = Graph::from_edges(b.num_nodes(), &edges).unwrap();
        let a = embed(&b, &params, &hp, false, &mut rng_from_seed(0)).unwrap();
        let c = embed(&rewired, &params, &hp, false, &mut rng_from_seed(0)).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn zero_weights_give_bias_rows() {
        let tb = gen_twin_graph(5, 1).unwrap();
        let b = tb.bundle;
        let hp = small_hp();
        let mut params = SimgaParams::for_bundle(&b, &hp, &mut rng_from_seed(1));
        for t in params.tensors_mut() {
            t.iter_mut().for_each(|x| *x = 0.0);
        }
        params.mlp_h.layers[0].bias = vec![0.25, -1.0, 2.0];
        let h = embed(&b, &params, &hp, false, &mut rng_from_seed(0)).unwrap();
        for i in 0..h.rows() {
            assert_eq!(h.row(i), &[0.25, -1.0, 2.0]);
        }
    }

    #[test]
    fn probabilities_are_normalized_and_deterministic() {
        let b = gen_twin_graph(6, 3).unwrap().bundle;
        let hp = small_hp();
        let params = SimgaParams::for_bundle(&b, &hp, &mut rng_from_seed(2));
        let s = simrank_production_topk(&b.graph, 0.6, 0.1, SimMode::Exact, 16).unwrap();
        let p1 = forward(&b, &s, &params, &hp, false, &mut rng_from_seed(0)).unwrap();
        let p2 = forward(&b, &s, &params, &hp, false, &mut rng_from_seed(99)).unwrap();
        assert_eq!(p1, p2);
        for i in 0..p1.rows() {
            let sum: f64 = p1.row(i).iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn flat_round_trip() {
        let b = gen_twin_graph(6, 1).unwrap().bundle;
        let hp = HyperParams {
            main_depth: 2,
            ..small_hp()
        };
        let params = SimgaParams::for_bundle(&b, &hp, &mut rng_from_seed(2));
        let mut copy = SimgaParams::for_bundle(&b, &hp, &mut rng_from_seed(3));
        copy.set_flat(&params.to_flat()).unwrap();
        assert_eq!(copy, params);
        assert!(copy.set_flat(&[1.0]).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let b = gen_twin_graph(8, 2).unwrap().bundle;
        for depth in [1, 2] {
            let hp = HyperParams {
                main_depth: depth,
                ..small_hp()
            };
            let s = simrank_production_topk(&b.graph, 0.6, 0.1, SimMode::Exact, 8).unwrap();
            let base = SimgaParams::for_bundle(&b, &hp, &mut rng_from_seed(11));
            let mut work = base.clone();
            let report = grad_check(
                |theta, want| {
                    work.set_flat(theta)?;
                    let (loss, grads, trace) =
                        loss_and_grad(&b, &s, &work, &hp, &b.splits.train, false, &mut rng_from_seed(0))?;
                    Ok(Probe {
                        loss,
                        grad: want.then(|| grads.to_flat()),
                        activation_pattern: trace.activation_pattern(),
                        min_abs_preactivation: trace.min_abs_preactivation(),
                    })
                },
                &base.to_flat(),
                &GradCheckConfig::default(),
            )
            .unwrap();
            assert!(report.checked > 100, "{report:?}");
            assert!(report.max_rel_error <= 1e-4, "{report:?}");
        }
    }
}
