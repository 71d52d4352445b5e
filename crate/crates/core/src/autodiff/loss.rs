use super::tensor::Tensor;
use crate::error::{input, Result};

/// Numerically stable `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Row-wise softmax of a `[B x N]` tensor, max-subtracted.
pub fn softmax(logits: &Tensor) -> Tensor {
    let n = logits.shape()[logits.shape().len() - 1];
    let mut out = logits.clone();
    for row in out.values_mut().chunks_mut(n) {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            z += *v;
        }
        row.iter_mut().for_each(|v| *v /= z);
    }
    out
}

/// Mean categorical cross-entropy of `logits[B x N]` against one-hot `labels[B x N]`.
///
/// Returns the loss and its gradient with respect to the logits,
/// `(softmax(logits) - labels) / B`.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &Tensor) -> Result<(f64, Tensor)> {
    if logits.shape().len() != 2 || logits.shape() != labels.shape() {
        return Err(input(format!(
            "logits {:?} and labels {:?} must be equal 2-d shapes",
            logits.shape(),
            labels.shape()
        )));
    }
    let (b, n) = (logits.shape()[0], logits.shape()[1]);
    for (r, row) in labels.values().chunks(n).enumerate() {
        let ones = row.iter().filter(|&&v| v == 1.0).count();
        let zeros = row.iter().filter(|&&v| v == 0.0).count();
        if ones != 1 || zeros != n - 1 {
            return Err(input(format!("label row {r} is not one-hot")));
        }
    }
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(b * n);
    for (lrow, yrow) in logits.values().chunks(n).zip(labels.values().chunks(n)) {
        let m = lrow.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = lrow.iter().map(|v| (v - m).exp()).sum();
        let log_z = z.ln() + m;
        for (&l, &y) in lrow.iter().zip(yrow) {
            if y == 1.0 {
                loss += log_z - l;
            }
            grad.push((((l - m).exp() / z) - y) / b as f64);
        }
    }
    Ok((loss / b as f64, Tensor::new(vec![b, n], grad)?))
}

/// Cross-entropy of one sigmoid score against a binary label, evaluated from the pre-sigmoid logit.
///
/// Loss is `-ln C` for label 1 and `-ln(1 - C)` for label 0 where `C = sigmoid(logit)`;
/// the returned gradient is with respect to the logit, `C - label`.
pub fn binary_cross_entropy(logit: f64, label: bool) -> (f64, f64) {
    let y = if label { 1.0 } else { 0.0 };
    let loss = if label { softplus(-logit) } else { softplus(logit) };
    (loss, sigmoid(logit) - y)
}

/// Batch mean of [`binary_cross_entropy`] over `logits[B x 1]`; the gradient is scaled by `1/B`.
pub fn binary_cross_entropy_batch(logits: &Tensor, labels: &[bool]) -> Result<(f64, Tensor)> {
    if logits.len() != labels.len() {
        return Err(input(format!(
            "{} logits for {} labels",
            logits.len(),
            labels.len()
        )));
    }
    let b = labels.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(labels.len());
    for (&l, &y) in logits.values().iter().zip(labels) {
        let (li, gi) = binary_cross_entropy(l, y);
        loss += li;
        grad.push(gi / b);
    }
    Ok((loss / b, Tensor::new(logits.shape().to_vec(), grad)?))
}
