//! End-to-end learning of a constellation: a bias-free linear encoder with
//! power normalization, a differentiable surrogate channel, and a small
//! feed-forward decoder trained with cross-entropy and Adam.
//!
//! Backpropagation is written out by hand.

mod adam;
mod network;
mod scenario;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use network::{backward, batch_loss, batch_posteriors, Batch, Decoder, Encoder, Gradients, LEAKY_RELU_SLOPE};
pub use scenario::{sample_scenario, ChannelDraw, NoiseDraw, NoiseScenario, SamplingRule, ScenarioSpec};
pub use train::{initial_encoder, train, train_with_progress, TrainConfig, TrainOutput, PLATEAU_REL_TOL, PLATEAU_WINDOW};

/// Mean categorical cross-entropy in nats, with posteriors clamped at
/// [`crate::metrics::POSTERIOR_FLOOR`].
pub use crate::metrics::cross_entropy as cross_entropy_loss;
