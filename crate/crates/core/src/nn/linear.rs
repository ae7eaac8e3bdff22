use super::{init_uniform, Param, Prng};
use crate::tensor::{add_row_broadcast, matmul, matmul_at, matmul_bt, sum_rows, Tensor};

/// Fully connected layer: y = xW + b.
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: Param, // [in, out]
    pub b: Param, // [out]
}

impl Linear {
    pub fn new(input: usize, output: usize, rng: &mut Prng) -> Self {
        Linear {
            w: Param::new(init_uniform(&[input, output], input, rng)),
            b: Param::new(Tensor::zeros(&[output])),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.value.shape[0]
    }

    pub fn output_dim(&self) -> usize {
        self.w.value.shape[1]
    }

    /// x: [B, in] -> [B, out]. The caller keeps x around for backward.
    pub fn forward(&self, x: &Tensor) -> Tensor {
        let mut y = matmul(x, &self.w.value);
        add_row_broadcast(&mut y, &self.b.value.data);
        y
    }

    /// Accumulates dW, db and returns dx.
    pub fn backward(&mut self, x: &Tensor, dy: &Tensor) -> Tensor {
        let dw = matmul_at(x, dy);
        crate::tensor::add_inplace(&mut self.w.grad, &dw);
        let db = sum_rows(dy);
        for (g, d) in self.b.grad.data.iter_mut().zip(&db) {
            *g += d;
        }
        matmul_bt(dy, &self.w.value)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b]
    }
}
