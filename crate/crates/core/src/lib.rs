//! Group-relative policy optimization for editing token sequences towards
//! several property targets at once.
//!
//! The pieces: property oracles and tasks ([`property`]), reward shaping
//! ([`shaping`]), scalarization ([`aggregate`]), advantage estimation and the
//! clipped loss ([`optim`]), a tabular autoregressive policy ([`policy`]),
//! evaluation metrics ([`metrics`]), and the experiment driver ([`harness`]).

pub mod aggregate;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod optim;
pub mod policy;
pub mod property;
pub mod shaping;
pub mod vocab;

pub use error::{Error, Result};
