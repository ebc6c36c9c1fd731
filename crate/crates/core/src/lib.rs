//! Reliability-aware test-time adaptation for vision–touch–language models.
//!
//! Each test batch is encoded per modality, each sample's reliability is
//! scored from prediction entropy and from the confidence drop under a
//! patch shuffle, and only samples reliable in both modalities drive the
//! online update. A small fusion network turns the reliability scores into
//! per-sample convex weights over the two modality embeddings.

pub mod adapt;
pub mod bench;
pub mod error;
pub mod fusion;
pub mod harness;
pub mod numcore;
pub mod perturb;
pub mod reliability;
pub mod rng;

pub use adapt::{AdaptationState, HyperParams, StepDiagnostics, StepOutcome, UnlabeledBatch};
pub use error::{Error, Result};
pub use harness::{run_experiment, Method, RunConfig, RunReport};
