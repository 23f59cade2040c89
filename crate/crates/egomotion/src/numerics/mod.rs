//! Minimal dense numerics: flat f64 tensors, a tanh MLP with hand-derived
//! reverse-mode gradients, Adam, and a counter-based splittable RNG.
//!
//! Everything downstream (denoiser, scorer, policy optimization) is built on
//! these four pieces, and every backward pass in the crate is validated
//! against the finite-difference oracle in [`gradcheck`].

pub mod adam;
pub mod gradcheck;
pub mod mlp;
pub mod rng;
pub mod tensor;

pub use adam::AdamState;
pub use mlp::{Linear, LinearGrad, Mlp, MlpCache, MlpGradients};
pub use rng::{sample_gaussian, Rng};
pub use tensor::Tensor;
