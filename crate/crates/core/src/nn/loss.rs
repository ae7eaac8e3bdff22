use crate::error::{Error, Result};
use crate::tensor::{dot, l2_norm, Tensor};

/// Mean squared error over all elements.
pub fn mse(pred: &Tensor, target: &Tensor) -> Result<f32> {
    pred.check_same_shape(target)?;
    let n = pred.len() as f32;
    let mut acc = 0.0f32;
    for (p, t) in pred.data.iter().zip(&target.data) {
        let d = p - t;
        acc += d * d;
    }
    Ok(acc / n)
}

/// dL/dpred for mse: 2 (pred - target) / n.
pub fn mse_backward(pred: &Tensor, target: &Tensor) -> Tensor {
    let n = pred.len() as f32;
    let data = pred
        .data
        .iter()
        .zip(&target.data)
        .map(|(p, t)| 2.0 * (p - t) / n)
        .collect();
    Tensor::from_vec(&pred.shape, data)
}

/// Mean binary cross-entropy over all elements, for sigmoid outputs against
/// soft targets in [0, 1]. Predictions are clamped away from {0, 1} so the
/// logs stay finite.
pub fn bce(pred: &Tensor, target: &Tensor) -> Result<f32> {
    pred.check_same_shape(target)?;
    let n = pred.len() as f32;
    let mut acc = 0.0f32;
    for (p, t) in pred.data.iter().zip(&target.data) {
        let p = p.clamp(1e-7, 1.0 - 1e-7);
        acc -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
    }
    Ok(acc / n)
}

/// dL/dlogits for `bce` where pred = sigmoid(logits): (pred - target) / n.
/// Note this is the gradient at the *pre-sigmoid* activation — the sigmoid
/// derivative cancels, which is the whole point: a confidently wrong output
/// still gets a full-size gradient instead of the vanishing mse-through-
/// sigmoid one.
pub fn bce_backward_logits(pred: &Tensor, target: &Tensor) -> Tensor {
    let n = pred.len() as f32;
    let data = pred
        .data
        .iter()
        .zip(&target.data)
        .map(|(p, t)| (p - t) / n)
        .collect();
    Tensor::from_vec(&pred.shape, data)
}

/// -log softmax(logits)[target], plus dL/dlogits.
pub fn softmax_cross_entropy(logits: &[f32], target: usize) -> (f32, Vec<f32>) {
    let max = logits.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
    let exps: Vec<f32> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f32 = exps.iter().sum();
    let loss = -(exps[target] / sum).ln();
    let mut grad: Vec<f32> = exps.iter().map(|e| e / sum).collect();
    grad[target] -= 1.0;
    (loss, grad)
}

/// S[i][j] = cos(A_i, B_j) for A, B of shape [N, D].
pub fn cosine_similarity_matrix(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.shape != b.shape || a.shape.len() != 2 {
        return Err(Error::shape(format!(
            "cosine similarity needs equal [N,D] shapes, got {:?} vs {:?}",
            a.shape, b.shape
        )));
    }
    let n = a.rows();
    let norms_a: Vec<f32> = (0..n).map(|i| l2_norm(a.row(i))).collect();
    let norms_b: Vec<f32> = (0..n).map(|i| l2_norm(b.row(i))).collect();
    if norms_a.iter().chain(&norms_b).any(|&v| v == 0.0) {
        return Err(Error::DegenerateEmbedding);
    }
    let mut s = Tensor::zeros(&[n, n]);
    for i in 0..n {
        for j in 0..n {
            s.data[i * n + j] = dot(a.row(i), b.row(j)) / (norms_a[i] * norms_b[j]);
        }
    }
    Ok(s)
}
