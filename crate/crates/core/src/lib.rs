//! Feature and readout maps that preserve universal approximation.
//!
//! A trainable core network `f` is wrapped as `rho ∘ f ∘ phi`, where `phi`
//! is an injective feature map and `rho` a readout with a continuous
//! section. The crate provides the pieces needed to build and train such
//! lifted models:
//!
//! * [`linalg`]: small dense kernels (Jacobi eigensolver, spectral matrix
//!   functions, matrix exponential with an exact reverse-mode gradient).
//! * [`manifold`]: SPD matrices with the affine-invariant Exp/Log/distance
//!   and the Poincaré ball with Möbius addition, `exp0`/`log0` and `d_c`.
//! * [`maps`]: feature/readout maps, activations, injective
//!   matrix-exponential stacks, skip features, classifier readouts and the
//!   `lift` composition.
//! * [`net`]: feed-forward networks with explicit backpropagation,
//!   optimizers, training loop, 1-D convolution and checkpoints.
//! * [`randomnet`]: frozen random first layers with rank certificates.
//! * [`data`]: California housing ingestion, splitting and metrics.

pub mod data;
pub mod error;
pub mod linalg;
pub mod manifold;
pub mod maps;
pub mod net;
pub mod randomnet;

pub use error::{Error, Result};
pub use linalg::{Matrix, SymMatrix};
