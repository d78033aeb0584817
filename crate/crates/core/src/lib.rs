//! Rateless-coded distributed matrix-vector multiplication.
//!
//! The crate covers four layers:
//!
//! * [`ltcode`]: Robust Soliton degree distribution, LT encoding of matrix rows
//!   and an incremental peeling decoder.
//! * [`strategies`]: the replication and systematic MDS benchmark codes.
//! * [`delaysim`] and [`analysis`]: a Monte-Carlo simulator of the
//!   shifted-exponential worker delay model and the matching closed forms.
//! * [`runtime`]: a TCP master/worker runtime that streams row-vector
//!   products and stops workers once the master can decode.
//!
//! Monte-Carlo trials run on rayon when the `parallel` feature is enabled
//! (the default) and sequentially otherwise.

pub mod analysis;
pub mod delaysim;
pub mod error;
pub mod ltcode;
pub mod matrix;
pub mod par;
pub mod runtime;
pub mod strategies;

pub use error::{Error, Result};
pub use matrix::Matrix;
