//! Minimal trainable-network substrate shared by the autoencoder, the
//! contrastive aligner, and the denoiser. Backward passes are hand-derived
//! per layer and verified against finite differences in the test suites.

mod adam;
mod batchnorm;
mod encoding;
mod linear;
mod loss;
mod lstm;
mod param;

pub use adam::{Adam, AdamConfig};
pub use batchnorm::{BatchNorm, BnCache};
pub use encoding::sinusoidal_encode;
pub use linear::Linear;
pub use loss::{bce, bce_backward_logits, cosine_similarity_matrix, mse, mse_backward, softmax_cross_entropy};
pub use lstm::{LstmCell, LstmStepCache};
pub use param::Param;

use crate::tensor::Tensor;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Seeded, platform-stable RNG used everywhere a model draws randomness.
pub type Prng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Prng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
pub fn init_uniform(shape: &[usize], fan_in: usize, rng: &mut Prng) -> Tensor {
    let bound = 1.0 / (fan_in.max(1) as f32).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
    Tensor::from_vec(shape, data)
}

/// A length-n vector of standard normal draws.
pub fn standard_normal(n: usize, rng: &mut Prng) -> Vec<f32> {
    use rand_distr::{Distribution, StandardNormal};
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

pub fn relu_inplace(x: &mut Tensor) {
    x.data.iter_mut().for_each(|v| {
        if *v < 0.0 {
            *v = 0.0;
        }
    });
}

/// dL/dx for y = relu(x), given dL/dy and the forward output y.
pub fn relu_backward(dy: &Tensor, y: &Tensor) -> Tensor {
    let data = dy
        .data
        .iter()
        .zip(&y.data)
        .map(|(&d, &o)| if o > 0.0 { d } else { 0.0 })
        .collect();
    Tensor::from_vec(&dy.shape, data)
}
