//! The quantum classifier: angle encoding, the layered variational circuit,
//! log-softmax readout over per-qubit `<Z>`, cross-entropy and Adam.

mod adam;
mod circuit;
mod model;
mod readout;
mod train;

pub use adam::AdamState;
pub use circuit::{CircuitSpec, EncodingLayout, ParamVector};
pub use model::{BatchResult, Model, QnnModel};
pub use readout::{cross_entropy, log_softmax};
pub(crate) use readout::{argmax, softmax_cross_entropy};
pub use train::{local_train, TrainConfig, TrainOutcome};
