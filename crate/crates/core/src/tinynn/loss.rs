use super::tensor::Scalar;
use crate::error::{Error, Result};

/// Row-wise softmax of a `batch x classes` logit matrix.
pub fn softmax<T: Scalar>(logits: &[T], classes: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.chunks_exact(classes) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = row.iter().map(|&v| (v - max).exp()).collect();
        let sum: T = exps.iter().copied().sum();
        out.extend(exps.into_iter().map(|e| e / sum));
    }
    out
}

/// Mean cross-entropy over the batch and its gradient with respect to the
/// logits, `(softmax - onehot) / batch`.
pub fn cross_entropy<T: Scalar>(
    logits: &[T],
    classes: usize,
    labels: &[usize],
) -> Result<(T, Vec<T>)> {
    let batch = labels.len();
    if batch == 0 || classes == 0 || logits.len() != batch * classes {
        return Err(Error::SizeMismatch(format!(
            "{} logits for {batch} labels and {classes} classes",
            logits.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange {
            label: bad,
            classes,
        });
    }
    let inv = T::one() / T::of(batch as f64);
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(logits.len());
    for (row, &label) in logits.chunks_exact(classes).zip(labels) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let sum: T = row.iter().map(|&v| (v - max).exp()).sum();
        let log_sum = sum.ln();
        loss = loss + (log_sum - (row[label] - max));
        for (k, &v) in row.iter().enumerate() {
            let p = (v - max).exp() / sum;
            let target = if k == label { T::one() } else { T::zero() };
            grad.push((p - target) * inv);
        }
    }
    Ok((loss * inv, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_log_k() {
        let (loss, _) = cross_entropy(&[0.3f64; 7 * 2], 7, &[2, 6]).unwrap();
        assert!((loss - 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn large_margin_gives_near_zero_loss() {
        let (loss, grad) = cross_entropy(&[50.0f64, 0.0, 0.0], 3, &[0]).unwrap();
        assert!((0.0..1e-6).contains(&loss));
        assert!(grad.iter().all(|g| g.abs() < 1e-6));
    }

    #[test]
    fn stable_for_huge_logits() {
        let (loss, _) = cross_entropy(&[1000.0f32, -1000.0], 2, &[1]).unwrap();
        assert!((loss - 2000.0).abs() < 1e-2);
    }

    #[test]
    fn rejects_bad_labels() {
        assert!(cross_entropy(&[0.0f64, 1.0], 2, &[2]).is_err());
        assert!(cross_entropy(&[0.0f64, 1.0], 2, &[0, 1]).is_err());
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let s = softmax(&[1.0f64, 2.0, 3.0, -1.0, 0.0, 1.0], 3);
        assert!((s[..3].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((s[3..].iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
