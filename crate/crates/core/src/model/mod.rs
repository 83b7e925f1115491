//! The joint recommender and zoning network, its single-task baseline,
//! training and prediction.

mod network;
mod predict;
mod train;

pub use network::{
    classify_az, decide, encode_inputs, joint_loss, joint_loss_terms, ForwardOutput, Graph, InputCache, LossNodes,
    MaxLens, Model, ModelConfig, ModelDims, PairInputs, SentenceEncoder,
};
pub use predict::{
    load_model, predict, read_predictions, recommend, recommend_for_query, save_model, write_predictions,
    ModelCheckpoint, ModelManifest, Prediction, Recommendation,
};
pub use train::{
    evaluate_loss, fit, initialise, train, EpochStats, History, TrainConfig, Trained, ZoningWeight,
};
