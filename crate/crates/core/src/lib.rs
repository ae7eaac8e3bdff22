//! Text-conditioned latent diffusion for symbolic drumbeats.
//!
//! MIDI drum loops are quantized to 128x9 pianorolls, compressed to a 128-d
//! latent by a multi-resolution LSTM autoencoder, and generated by a
//! denoising diffusion model conditioned on text embeddings derived from
//! file paths (multihot keywords or contrastively aligned projections),
//! with a distance-based evaluation harness.

pub mod ae;
pub mod checkpoint;
pub mod clip;
pub mod corpus;
pub mod diffusion;
pub mod error;
pub mod eval;
pub mod midi;
pub mod nn;
pub mod synth;
pub mod tensor;
pub mod text;

pub use error::{Error, Result};
pub use tensor::Tensor;
