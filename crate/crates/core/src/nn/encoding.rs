use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Sinusoidal positional encoding of an integer timestep:
/// enc[2k] = sin(t / 10000^(2k/dim)), enc[2k+1] = cos(t / 10000^(2k/dim)).
pub fn sinusoidal_encode(t: u32, dim: usize) -> Result<Tensor> {
    if dim % 2 != 0 {
        return Err(Error::shape(format!("sinusoidal dim must be even, got {dim}")));
    }
    let mut data = vec![0.0f32; dim];
    for k in 0..dim / 2 {
        let freq = (10000f64).powf(2.0 * k as f64 / dim as f64);
        let angle = t as f64 / freq;
        data[2 * k] = angle.sin() as f32;
        data[2 * k + 1] = angle.cos() as f32;
    }
    Ok(Tensor::from_vec(&[dim], data))
}
