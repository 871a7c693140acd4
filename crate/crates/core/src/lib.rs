//! Simulation core for decentralized quantum federated learning.
//!
//! Clients train small noisy variational circuits ([`qnn`] on top of
//! [`qsim`]), edge servers average within their cluster and reach consensus
//! among themselves ([`fed`]), and every model update is committed to a
//! hash-chained ledger with a content-addressed parameter store ([`ledger`]).
//! [`data`] turns MNIST IDX files into pooled features and client shards.

pub mod data;
pub mod error;
pub mod fed;
pub mod ledger;
pub mod qnn;
pub mod qsim;
pub mod seed;

pub use error::{Error, Result};
pub use qnn::{AdamState, CircuitSpec, EncodingLayout, ParamVector};
pub use qsim::{DensityMatrix, GateKind, GateOp, NoiseConfig};
