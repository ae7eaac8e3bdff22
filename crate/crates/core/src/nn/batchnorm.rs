use super::Param;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// 1-D batch normalization over the batch axis of a [B, F] tensor.
/// Variance is the biased (1/B) estimator throughout, including the running
/// statistics, so eval mode with running stats equal to batch stats
/// reproduces train mode exactly.
#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Tensor,
    pub running_var: Tensor,
    pub momentum: f32,
    pub eps: f32,
}

pub struct BnCache {
    x_hat: Tensor,
    inv_std: Vec<f32>,
}

impl BatchNorm {
    pub fn new(features: usize) -> Self {
        let mut gamma = Tensor::zeros(&[features]);
        gamma.fill(1.0);
        let mut running_var = Tensor::zeros(&[features]);
        running_var.fill(1.0);
        BatchNorm {
            gamma: Param::new(gamma),
            beta: Param::new(Tensor::zeros(&[features])),
            running_mean: Tensor::zeros(&[features]),
            running_var,
            momentum: 0.1,
            eps: 1e-5,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.value.len()
    }

    pub fn forward_train(&mut self, x: &Tensor) -> Result<(Tensor, BnCache)> {
        let (b, f) = (x.rows(), x.cols());
        if b < 2 {
            return Err(Error::BatchTooSmall(format!(
                "batch norm needs B >= 2 in train mode, got {b}"
            )));
        }
        let mut mean = vec![0.0f32; f];
        for row in x.data.chunks_exact(f) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= b as f32);

        let mut var = vec![0.0f32; f];
        let mut centered = Tensor::zeros(&[b, f]);
        for (r, row) in x.data.chunks_exact(f).enumerate() {
            for (j, item) in row.iter().enumerate() {
                let c = item - mean[j];
                centered.data[r * f + j] = c;
                var[j] += c * c;
            }
        }
        var.iter_mut().for_each(|v| *v /= b as f32);

        for j in 0..f {
            self.running_mean.data[j] = (1.0 - self.momentum) * self.running_mean.data[j] + self.momentum * mean[j];
            self.running_var.data[j] = (1.0 - self.momentum) * self.running_var.data[j] + self.momentum * var[j];
        }

        let inv_std: Vec<f32> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
        let mut x_hat = Tensor::zeros(&[b, f]);
        let mut y = Tensor::zeros(&[b, f]);
        for r in 0..b {
            for j in 0..f {
                let xh = centered.data[r * f + j] * inv_std[j];
                x_hat.data[r * f + j] = xh;
                y.data[r * f + j] = self.gamma.value.data[j] * xh + self.beta.value.data[j];
            }
        }
        Ok((y, BnCache { x_hat, inv_std }))
    }

    pub fn forward_eval(&self, x: &Tensor) -> Tensor {
        let (b, f) = (x.rows(), x.cols());
        let mut y = Tensor::zeros(&[b, f]);
        for r in 0..b {
            for j in 0..f {
                let inv = 1.0 / (self.running_var.data[j] + self.eps).sqrt();
                let xh = (x.data[r * f + j] - self.running_mean.data[j]) * inv;
                y.data[r * f + j] = self.gamma.value.data[j] * xh + self.beta.value.data[j];
            }
        }
        y
    }

    pub fn backward(&mut self, cache: &BnCache, dy: &Tensor) -> Tensor {
        let (b, f) = (dy.rows(), dy.cols());
        let bf = b as f32;

        let mut dgamma = vec![0.0f32; f];
        let mut dbeta = vec![0.0f32; f];
        for r in 0..b {
            for j in 0..f {
                dgamma[j] += dy.data[r * f + j] * cache.x_hat.data[r * f + j];
                dbeta[j] += dy.data[r * f + j];
            }
        }
        for j in 0..f {
            self.gamma.grad.data[j] += dgamma[j];
            self.beta.grad.data[j] += dbeta[j];
        }

        // dx via the standard closed form in terms of per-feature sums.
        let mut sum_dxhat = vec![0.0f32; f];
        let mut sum_dxhat_xhat = vec![0.0f32; f];
        for r in 0..b {
            for j in 0..f {
                let dxh = dy.data[r * f + j] * self.gamma.value.data[j];
                sum_dxhat[j] += dxh;
                sum_dxhat_xhat[j] += dxh * cache.x_hat.data[r * f + j];
            }
        }
        let mut dx = Tensor::zeros(&[b, f]);
        for r in 0..b {
            for j in 0..f {
                let dxh = dy.data[r * f + j] * self.gamma.value.data[j];
                dx.data[r * f + j] = cache.inv_std[j] / bf
                    * (bf * dxh - sum_dxhat[j] - cache.x_hat.data[r * f + j] * sum_dxhat_xhat[j]);
            }
        }
        dx
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.gamma, &mut self.beta]
    }
}
