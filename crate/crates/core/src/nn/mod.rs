//! Small dense neural-network stack with hand-derived gradients.

mod adam;
mod gradcheck;
mod layer;
mod loss;
mod matrix;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{grad_check, relative_error, GradCheckConfig, GradCheckReport, Probe};
pub use layer::{dropout_mask, mlp_forward, LayerInput, LinearGrad, LinearLayer, Mlp, MlpCache};
pub use loss::{softmax_cross_entropy, softmax_rows};
pub use matrix::DenseMatrix;
