//! Relational graph neural networks implemented directly on dense arrays:
//! Sage-style and attention-style convolutions with basis-decomposed relation
//! weights, a linear or convolutional read-out of the patient node, binary
//! cross-entropy, hand-written backpropagation and Adam.

mod adam;
mod conv;
mod input;
mod model;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use conv::{gat_layer, sage_layer, ConvKind, ConvParams, LEAKY_SLOPE};
pub use model::{
    backward, backward_accumulate, bce_loss, layer_outputs, model_forward, sigmoid, Arch, Checkpoint, Head,
    ModelParams, ModelSpec, TensorRecord, Variant, CHECKPOINT_FORMAT, PROBABILITY_CLAMP,
};
pub use train::{
    evaluate, model_spec, predict, stratified_holdout, train, train_with_validation, write_history_csv, EpochRecord,
    TrainConfig, TrainOutcome,
};
