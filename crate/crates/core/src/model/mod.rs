//! The learnable model: two input branches mixed by `delta`, a main MLP,
//! similarity aggregation with a skip connection, and its training loop.

mod grouping;
mod hyper;
mod network;
mod train;

pub use grouping::{grouping_report, row_distance, GroupingReport};
pub use hyper::{HyperParams, SimChoice, AUTO_EXACT_MAX_NODES};
pub use network::{
    aggregate, backward, embed, forward, forward_trace, logits, loss_and_grad, SimgaGrads,
    SimgaParams, Trace,
};
pub use train::{
    accuracy, evaluate, fit, fit_with_similarity, precompute_similarity, EpochRecord, TrainReport,
};
