//! Minimal differentiable numeric core.
//!
//! Everything the recommender needs and nothing more: a [`Tensor`] type, a
//! reverse-mode [`Tape`] over vector operations, the recurrent and attention
//! layers, [`AdamState`], and a finite-difference [`grad_check`].

mod adam;
mod checkpoint;
mod gradcheck;
mod layers;
mod ops;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use gradcheck::{grad_check, relative_error, Coordinate, GradCheckConfig, GradCheckReport};
pub use layers::{
    attention_pool, bilstm_encode, uniform, xavier_uniform, AttentionPool, BiLstm, Init, Linear,
    LstmCell,
};
pub use ops::{argmax, cross_entropy, relu, softmax};
pub use tape::{GradBuffer, NodeId, Tape, LOG_CLAMP};
pub use tensor::{ParamId, ParamSet, Tensor};
