//! Matrix product state quantum classifier.
//!
//! Trains and evaluates a staircase-ansatz quantum classifier on tabular
//! data by exact simulation. Two interchangeable circuit backends are
//! provided — a dense statevector simulator ([`sim`]) and a tensor-train
//! engine ([`mps`]) — together with angle encoding of features
//! ([`encoding`]), parameter-shift gradient training by conjugate gradient
//! or SGD ([`training`]), binary classification metrics ([`metrics`]), and
//! dataset ingestion / task construction ([`data`]). [`pipeline`] ties the
//! stages together and [`xcheck`] cross-validates the two backends.

pub mod ansatz;
pub mod data;
pub mod encoding;
pub mod metrics;
pub mod mps;
pub mod pipeline;
pub mod sim;
pub mod training;
pub mod xcheck;
