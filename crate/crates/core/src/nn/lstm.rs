use super::{init_uniform, sigmoid, Param, Prng};
use crate::tensor::{add_inplace, add_row_broadcast, matmul, matmul_at, matmul_bt, sum_rows, Tensor};

/// Single LSTM cell with the standard gate formulation. Gate pre-activations
/// are laid out [i | f | g | o] along the feature axis.
#[derive(Debug, Clone)]
pub struct LstmCell {
    pub w_x: Param, // [in, 4H]
    pub w_h: Param, // [H, 4H]
    pub b: Param,   // [4H]
    pub hidden: usize,
}

/// Everything the backward pass needs from one forward step.
pub struct LstmStepCache {
    pub x: Tensor,
    pub h_prev: Tensor,
    pub c_prev: Tensor,
    pub i: Tensor,
    pub f: Tensor,
    pub g: Tensor,
    pub o: Tensor,
    pub tanh_c: Tensor,
}

impl LstmCell {
    pub fn new(input: usize, hidden: usize, rng: &mut Prng) -> Self {
        let fan_in = input + hidden;
        LstmCell {
            w_x: Param::new(init_uniform(&[input, 4 * hidden], fan_in, rng)),
            w_h: Param::new(init_uniform(&[hidden, 4 * hidden], fan_in, rng)),
            b: Param::new(Tensor::zeros(&[4 * hidden])),
            hidden,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_x.value.shape[0]
    }

    /// One step over a batch. x: [B, in], h_prev/c_prev: [B, H].
    pub fn step(&self, x: &Tensor, h_prev: &Tensor, c_prev: &Tensor) -> (Tensor, Tensor, LstmStepCache) {
        let h = self.hidden;
        let batch = x.rows();
        let mut pre = matmul(x, &self.w_x.value);
        add_inplace(&mut pre, &matmul(h_prev, &self.w_h.value));
        add_row_broadcast(&mut pre, &self.b.value.data);

        let mut gi = Tensor::zeros(&[batch, h]);
        let mut gf = Tensor::zeros(&[batch, h]);
        let mut gg = Tensor::zeros(&[batch, h]);
        let mut go = Tensor::zeros(&[batch, h]);
        for r in 0..batch {
            let p = pre.row(r);
            for k in 0..h {
                gi.data[r * h + k] = sigmoid(p[k]);
                gf.data[r * h + k] = sigmoid(p[h + k]);
                gg.data[r * h + k] = p[2 * h + k].tanh();
                go.data[r * h + k] = sigmoid(p[3 * h + k]);
            }
        }

        let mut c = Tensor::zeros(&[batch, h]);
        let mut tanh_c = Tensor::zeros(&[batch, h]);
        let mut h_t = Tensor::zeros(&[batch, h]);
        for n in 0..batch * h {
            c.data[n] = gf.data[n] * c_prev.data[n] + gi.data[n] * gg.data[n];
            tanh_c.data[n] = c.data[n].tanh();
            h_t.data[n] = go.data[n] * tanh_c.data[n];
        }

        let cache = LstmStepCache {
            x: x.clone(),
            h_prev: h_prev.clone(),
            c_prev: c_prev.clone(),
            i: gi,
            f: gf,
            g: gg,
            o: go,
            tanh_c,
        };
        (h_t, c.clone(), cache)
    }

    /// Backward for one step. `dh`/`dc` are gradients flowing into h_t and
    /// c_t. Accumulates weight grads; returns (dx, dh_prev, dc_prev).
    pub fn step_backward(&mut self, cache: &LstmStepCache, dh: &Tensor, dc: &Tensor) -> (Tensor, Tensor, Tensor) {
        let h = self.hidden;
        let batch = dh.rows();
        let n = batch * h;

        let mut dpre = Tensor::zeros(&[batch, 4 * h]);
        let mut dc_prev = Tensor::zeros(&[batch, h]);
        for idx in 0..n {
            let (r, k) = (idx / h, idx % h);
            let tc = cache.tanh_c.data[idx];
            let d_c = dc.data[idx] + dh.data[idx] * cache.o.data[idx] * (1.0 - tc * tc);
            let d_o = dh.data[idx] * tc;
            let d_i = d_c * cache.g.data[idx];
            let d_f = d_c * cache.c_prev.data[idx];
            let d_g = d_c * cache.i.data[idx];
            dc_prev.data[idx] = d_c * cache.f.data[idx];

            let (gi, gf, gg, go) = (cache.i.data[idx], cache.f.data[idx], cache.g.data[idx], cache.o.data[idx]);
            dpre.data[r * 4 * h + k] = d_i * gi * (1.0 - gi);
            dpre.data[r * 4 * h + h + k] = d_f * gf * (1.0 - gf);
            dpre.data[r * 4 * h + 2 * h + k] = d_g * (1.0 - gg * gg);
            dpre.data[r * 4 * h + 3 * h + k] = d_o * go * (1.0 - go);
        }

        add_inplace(&mut self.w_x.grad, &matmul_at(&cache.x, &dpre));
        add_inplace(&mut self.w_h.grad, &matmul_at(&cache.h_prev, &dpre));
        let db = sum_rows(&dpre);
        for (g, d) in self.b.grad.data.iter_mut().zip(&db) {
            *g += d;
        }

        let dx = matmul_bt(&dpre, &self.w_x.value);
        let dh_prev = matmul_bt(&dpre, &self.w_h.value);
        (dx, dh_prev, dc_prev)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w_x, &mut self.w_h, &mut self.b]
    }
}
