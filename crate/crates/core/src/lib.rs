//! Compression-distance analysis with context steering.
//!
//! The crate turns a labelled corpus into a matrix of compression distances
//! (NCD with a general-purpose codec, or NRC with a relative Lempel-Ziv
//! coder), grows one Ward tree per class over the rows of that matrix,
//! keeps the clusters with the best silhouette, and embeds any sample as its
//! weighted distances to a few reference objects of those clusters. The
//! [`evaluation`] module scores that embedding, and a set of baselines,
//! under K-fold cross-validation with the test objects' columns removed.

pub mod clustering;
pub mod compressors;
pub mod corpus;
pub mod distances;
pub mod error;
pub mod evaluation;
pub mod steering;
pub mod synthetic;
mod util;

pub use error::{Error, Result};
