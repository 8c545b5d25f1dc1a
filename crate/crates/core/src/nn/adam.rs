/// Adam moment state for a fixed list of parameter tensors.
///
/// Weight decay is L2-style: `λθ` is added to the gradient before the moment
/// updates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    /// One accumulator pair per tensor, sized by `lens`.
    pub fn new(lens: &[usize]) -> Self {
        AdamState {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: lens.iter().map(|&n| vec![0.0; n]).collect(),
            second: lens.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&[Vec<f64>], &[Vec<f64>]) {
        (&self.first, &self.second)
    }
}

/// Applies one Adam update in place.
///
/// # Panics
/// If the parameter or gradient list does not mirror the state's shapes.
pub fn adam_step(
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    state: &mut AdamState,
    lr: f64,
    weight_decay: f64,
) {
    assert_eq!(params.len(), state.first.len(), "parameter count changed");
    assert_eq!(grads.len(), params.len(), "gradient count differs from parameters");
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    for (k, (theta, grad)) in params.iter_mut().zip(grads).enumerate() {
        let m = &mut state.first[k];
        let v = &mut state.second[k];
        assert_eq!(theta.len(), m.len(), "tensor {k} changed shape");
        assert_eq!(grad.len(), m.len(), "gradient {k} has wrong shape");
        for i in 0..theta.len() {
            let g = grad[i] + weight_decay * theta[i];
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            theta[i] -= lr * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
}
