//! Shared test oracles: central finite differences, independent of every
//! backward implementation they check.

#![allow(dead_code)]

use drumgen_core::tensor::Tensor;

/// Central finite-difference gradient w.r.t. every entry of one tensor
/// inside `model`. `tensor` selects the tensor, `loss` re-evaluates the
/// objective from scratch. Loss is accumulated in f64 to keep the
/// subtraction above f32 rounding noise.
pub fn fd_grad<M>(
    model: &mut M,
    tensor: impl Fn(&mut M) -> &mut Tensor,
    loss: &mut dyn FnMut(&mut M) -> f64,
    h: f32,
) -> Vec<f32> {
    let n = tensor(model).data.len();
    let mut grad = vec![0.0f32; n];
    for (idx, g) in grad.iter_mut().enumerate() {
        tensor(model).data[idx] += h;
        let plus = loss(model);
        tensor(model).data[idx] -= 2.0 * h;
        let minus = loss(model);
        tensor(model).data[idx] += h;
        *g = ((plus - minus) / (2.0 * h as f64)) as f32;
    }
    grad
}

/// Relative L2 error between two gradient vectors.
pub fn rel_l2(a: &[f32], b: &[f32]) -> f32 {
    assert_eq!(a.len(), b.len());
    let diff: f32 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f32>().sqrt();
    let na: f32 = a.iter().map(|x| x * x).sum::<f32>().sqrt();
    let nb: f32 = b.iter().map(|x| x * x).sum::<f32>().sqrt();
    diff / na.max(nb).max(1e-12)
}

/// MSE accumulated in f64; matches the library's 1/n convention.
pub fn f64_mse(pred: &Tensor, target: &Tensor) -> f64 {
    assert_eq!(pred.shape, target.shape);
    let sum: f64 = pred
        .data
        .iter()
        .zip(&target.data)
        .map(|(p, t)| {
            let d = (*p - *t) as f64;
            d * d
        })
        .sum();
    sum / pred.data.len() as f64
}
