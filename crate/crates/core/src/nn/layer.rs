use rand::Rng;

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Left operand of a first-layer product: either a dense matrix or the
/// binary adjacency matrix of a graph, which is never densified.
#[derive(Debug, Clone, Copy)]
pub enum LayerInput<'a> {
    Dense(&'a DenseMatrix),
    Adjacency(&'a Graph),
}

impl LayerInput<'_> {
    pub fn rows(&self) -> usize {
        match self {
            LayerInput::Dense(m) => m.rows(),
            LayerInput::Adjacency(g) => g.num_nodes(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            LayerInput::Dense(m) => m.cols(),
            LayerInput::Adjacency(g) => g.num_nodes(),
        }
    }

    fn matmul(&self, w: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            LayerInput::Dense(m) => m.matmul(w),
            LayerInput::Adjacency(g) => {
                if g.num_nodes() != w.rows() {
                    return Err(Error::DimensionMismatch(format!(
                        "adjacency of {} nodes by {}x{} weight",
                        g.num_nodes(),
                        w.rows(),
                        w.cols()
                    )));
                }
                let mut out = DenseMatrix::zeros(g.num_nodes(), w.cols());
                for u in 0..g.num_nodes() {
                    let row = out.row_mut(u);
                    for &v in g.neighbors(u) {
                        for (o, &x) in row.iter_mut().zip(w.row(v)) {
                            *o += x;
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// `input^T * grad`.
    fn t_matmul(&self, grad: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            LayerInput::Dense(m) => m.t_matmul(grad),
            // A is symmetric, so A^T G = A G.
            LayerInput::Adjacency(_) => self.matmul(grad),
        }
    }
}

/// Affine map `x W + b` with `W` stored as `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLayer {
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
}

impl LinearLayer {
    /// Uniform initialization in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn init<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        LinearLayer {
            weight: DenseMatrix::from_vec(fan_in, fan_out, data).expect("shape by construction"),
            bias: vec![0.0; fan_out],
        }
    }

    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        LinearLayer {
            weight: DenseMatrix::zeros(fan_in, fan_out),
            bias: vec![0.0; fan_out],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }

    fn forward(&self, x: LayerInput<'_>) -> Result<DenseMatrix> {
        let mut z = x.matmul(&self.weight)?;
        z.add_row_vector(&self.bias);
        Ok(z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrad {
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
}

/// Stack of linear layers with a rectifier between consecutive layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<LinearLayer>,
}

/// What the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Pre-activations of every non-final layer.
    preact: Vec<DenseMatrix>,
    /// Inputs to layers 1.. (after rectifier and dropout).
    hidden: Vec<DenseMatrix>,
    /// Inverted-dropout multipliers, one per hidden activation when active.
    masks: Vec<Option<DenseMatrix>>,
}

impl MlpCache {
    /// Smallest |pre-activation| feeding a rectifier; infinite when there is none.
    pub fn min_abs_preactivation(&self) -> f64 {
        self.preact
            .iter()
            .flat_map(|z| z.as_slice().iter())
            .fold(f64::INFINITY, |m, &x| m.min(x.abs()))
    }

    /// Sign pattern of every rectifier input.
    pub fn activation_pattern(&self) -> Vec<bool> {
        self.preact
            .iter()
            .flat_map(|z| z.as_slice().iter().map(|&x| x > 0.0))
            .collect()
    }
}

/// Inverted-dropout multiplier matrix: entries are 0 or `1/(1-rate)`.
pub fn dropout_mask<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rate: f64,
    rng: &mut R,
) -> DenseMatrix {
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    let data = (0..rows * cols)
        .map(|_| if rng.random::<f64>() < keep { scale } else { 0.0 })
        .collect();
    DenseMatrix::from_vec(rows, cols, data).expect("shape by construction")
}

pub(crate) fn hadamard_in_place(a: &mut DenseMatrix, b: &DenseMatrix) {
    for (x, &m) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
        *x *= m;
    }
}

impl Mlp {
    /// Builds layers of the given widths: `dims = [in, hidden.., out]`.
    pub fn init<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Self {
        assert!(dims.len() >= 2, "an MLP needs at least one layer");
        Mlp {
            layers: dims
                .windows(2)
                .map(|w| LinearLayer::init(w[0], w[1], rng))
                .collect(),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("nonempty").out_dim()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.as_slice().len() + l.bias.len())
            .sum()
    }

    /// Parameter slices in a fixed order: weight then bias, layer by layer.
    pub fn params(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn forward<R: Rng + ?Sized>(
        &self,
        input: LayerInput<'_>,
        dropout: f64,
        training: bool,
        rng: &mut R,
    ) -> Result<(DenseMatrix, MlpCache)> {
        mlp_forward(&self.layers, input, dropout, training, rng)
    }

    /// Returns per-layer gradients and, if `want_input_grad`, the gradient
    /// with respect to a dense input.
    pub fn backward(
        &self,
        input: LayerInput<'_>,
        cache: &MlpCache,
        grad_out: &DenseMatrix,
        want_input_grad: bool,
    ) -> Result<(Vec<LinearGrad>, Option<DenseMatrix>)> {
        let depth = self.layers.len();
        let mut grads = Vec::with_capacity(depth);
        let mut g = grad_out.clone();
        for i in (0..depth).rev() {
            let x = if i == 0 {
                input
            } else {
                LayerInput::Dense(&cache.hidden[i - 1])
            };
            let weight = x.t_matmul(&g)?;
            let bias = g.column_sums();
            grads.push(LinearGrad { weight, bias });
            if i == 0 {
                break;
            }
            let mut gx = g.matmul_t(&self.layers[i].weight)?;
            if let Some(mask) = &cache.masks[i - 1] {
                hadamard_in_place(&mut gx, mask);
            }
            for (d, &z) in gx
                .as_mut_slice()
                .iter_mut()
                .zip(cache.preact[i - 1].as_slice())
            {
                if z <= 0.0 {
                    *d = 0.0;
                }
            }
            g = gx;
        }
        grads.reverse();
        let input_grad = if want_input_grad {
            Some(g.matmul_t(&self.layers[0].weight)?)
        } else {
            None
        };
        Ok((grads, input_grad))
    }
}

/// Runs a layer stack: rectifier between layers, none after the last, and
/// inverted dropout on each hidden activation while training.
pub fn mlp_forward<R: Rng + ?Sized>(
    layers: &[LinearLayer],
    input: LayerInput<'_>,
    dropout: f64,
    training: bool,
    rng: &mut R,
) -> Result<(DenseMatrix, MlpCache)> {
    if layers.is_empty() {
        return Err(Error::param("MLP has no layers"));
    }
    if !(0.0..1.0).contains(&dropout) {
        return Err(Error::param(format!("dropout rate {dropout} not in [0, 1)")));
    }
    for (i, pair) in layers.windows(2).enumerate() {
        if pair[0].out_dim() != pair[1].in_dim() {
            return Err(Error::DimensionMismatch(format!(
                "layer {i} outputs {} but layer {} expects {}",
                pair[0].out_dim(),
                i + 1,
                pair[1].in_dim()
            )));
        }
    }
    if input.cols() != layers[0].in_dim() {
        return Err(Error::DimensionMismatch(format!(
            "input width {} but first layer expects {}",
            input.cols(),
            layers[0].in_dim()
        )));
    }

    let mut cache = MlpCache {
        preact: Vec::new(),
        hidden: Vec::new(),
        masks: Vec::new(),
    };
    let mut z = layers[0].forward(input)?;
    for layer in &layers[1..] {
        let mut a = z.clone();
        a.as_mut_slice().iter_mut().for_each(|x| *x = x.max(0.0));
        let mask = (training && dropout > 0.0).then(|| dropout_mask(a.rows(), a.cols(), dropout, rng));
        if let Some(m) = &mask {
            hadamard_in_place(&mut a, m);
        }
        cache.preact.push(z);
        cache.masks.push(mask);
        z = layer.forward(LayerInput::Dense(&a))?;
        cache.hidden.push(a);
    }
    z.ensure_finite("MLP forward")?;
    Ok((z, cache))
}
