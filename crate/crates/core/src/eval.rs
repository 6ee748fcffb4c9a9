//! Top-N accuracy, confusion matrices and loss-curve smoothing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knnpp::Prediction;

pub const DEFAULT_TOP_N: [usize; 3] = [1, 5, 10];
pub const DEFAULT_MOST_CONFUSED: usize = 5;
pub const DEFAULT_EMA_ALPHA: f64 = 0.9;

fn check_aligned(predictions: &[Prediction], labels: &[u32]) -> Result<()> {
    if predictions.len() != labels.len() {
        return Err(Error::SizeMismatch(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    Ok(())
}

/// Fraction of samples whose true label is among the first `n` ranked
/// classes of its prediction (fewer if the ranking is shorter).
pub fn top_n_accuracy(predictions: &[Prediction], labels: &[u32], n: usize) -> Result<f64> {
    check_aligned(predictions, labels)?;
    if predictions.is_empty() {
        return Err(Error::invalid("top-N accuracy of zero samples"));
    }
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let hits = predictions
        .iter()
        .zip(labels)
        .filter(|(p, &y)| p.contains_in_top(y as usize, n))
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    /// N -> Top-N accuracy.
    pub top_n: BTreeMap<usize, f64>,
    pub samples: usize,
}

pub fn accuracy_report(
    predictions: &[Prediction],
    labels: &[u32],
    ns: &[usize],
) -> Result<AccuracyReport> {
    let mut top_n = BTreeMap::new();
    for &n in ns {
        top_n.insert(n, top_n_accuracy(predictions, labels, n)?);
    }
    Ok(AccuracyReport {
        top_n,
        samples: labels.len(),
    })
}

/// Counts of (true class, Top-1 predicted class). Column `C` holds samples
/// whose prediction ranked no class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
    label_names: Vec<String>,
}

impl ConfusionMatrix {
    pub fn new(label_names: Vec<String>) -> Self {
        let classes = label_names.len();
        Self {
            classes,
            counts: vec![0; classes * (classes + 1)],
            label_names,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.classes
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    /// Index of the abstain column.
    pub fn abstain(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * (self.classes + 1) + predicted]
    }

    pub fn row(&self, truth: usize) -> &[u64] {
        let w = self.classes + 1;
        &self.counts[truth * w..(truth + 1) * w]
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        self.row(truth).iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Diagonal over row sum; `None` for classes with no samples.
    pub fn recall(&self, class: usize) -> Option<f64> {
        let support = self.row_sum(class);
        (support > 0).then(|| self.get(class, class) as f64 / support as f64)
    }

    fn bump(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * (self.classes + 1) + predicted] += 1;
    }
}

pub fn confusion_matrix(
    predictions: &[Prediction],
    labels: &[u32],
    label_names: &[String],
) -> Result<ConfusionMatrix> {
    check_aligned(predictions, labels)?;
    let c = label_names.len();
    let mut m = ConfusionMatrix::new(label_names.to_vec());
    for (p, &y) in predictions.iter().zip(labels) {
        let y = y as usize;
        if y >= c {
            return Err(Error::LabelOutOfRange {
                label: y,
                classes: c,
            });
        }
        let predicted = match p.top1() {
            Some(t) if t >= c => {
                return Err(Error::LabelOutOfRange {
                    label: t,
                    classes: c,
                })
            }
            Some(t) => t,
            None => m.abstain(),
        };
        m.bump(y, predicted);
    }
    Ok(m)
}

/// The `m` classes with the lowest recall, ascending (ties to the lower
/// class id). Classes without samples are skipped, so fewer than `m` may
/// be returned.
pub fn most_confused(matrix: &ConfusionMatrix, m: usize) -> Result<Vec<usize>> {
    if m > matrix.num_classes() {
        return Err(Error::invalid(format!(
            "asked for {m} classes out of {}",
            matrix.num_classes()
        )));
    }
    let mut recalls: Vec<(usize, f64)> = (0..matrix.num_classes())
        .filter_map(|c| matrix.recall(c).map(|r| (c, r)))
        .collect();
    if recalls.is_empty() {
        return Err(Error::invalid("confusion matrix has no samples"));
    }
    recalls.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(recalls.into_iter().take(m).map(|r| r.0).collect())
}

/// Exponential moving average: `s_0 = x_0`, `s_t = alpha*s_{t-1} + (1-alpha)*x_t`.
pub fn ema_smooth(series: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::invalid("cannot smooth an empty series"));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha {alpha} outside [0, 1)")));
    }
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let mut out = Vec::with_capacity(series.len());
    let mut s = series[0];
    out.push(s);
    for &x in &series[1..] {
        s = alpha * s + (1.0 - alpha) * x;
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(classes: &[usize]) -> Prediction {
        Prediction {
            ranked: classes
                .iter()
                .enumerate()
                .map(|(i, &c)| (c, (classes.len() - i) as f64))
                .collect(),
            query_index: None,
        }
    }

    fn names(c: usize) -> Vec<String> {
        (0..c).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn top_n_small_case() {
        // A=0, B=1, C=2, D=3
        let preds = vec![pred(&[0, 1]), pred(&[1, 2])];
        assert_eq!(top_n_accuracy(&preds, &[0, 3], 2).unwrap(), 0.5);
    }

    #[test]
    fn top1_perfect() {
        let preds = vec![pred(&[2, 0]), pred(&[1]), pred(&[0, 1, 2])];
        assert_eq!(top_n_accuracy(&preds, &[2, 1, 0], 1).unwrap(), 1.0);
    }

    #[test]
    fn top_n_errors() {
        assert!(top_n_accuracy(&[], &[], 1).is_err());
        assert!(top_n_accuracy(&[pred(&[0])], &[0, 1], 1).is_err());
        assert!(top_n_accuracy(&[pred(&[0])], &[0], 0).is_err());
    }

    #[test]
    fn report_keys() {
        let preds = vec![pred(&[0, 1, 2])];
        let r = accuracy_report(&preds, &[2], &[1, 5, 10]).unwrap();
        assert_eq!(r.top_n[&1], 0.0);
        assert_eq!(r.top_n[&5], 1.0);
        assert_eq!(r.samples, 1);
    }

    #[test]
    fn confusion_perfect_is_diagonal() {
        let preds = vec![pred(&[0]), pred(&[1]), pred(&[1]), pred(&[2])];
        let m = confusion_matrix(&preds, &[0, 1, 1, 2], &names(3)).unwrap();
        for t in 0..3 {
            for p in 0..4 {
                let expected = if t == p { [1, 2, 1][t] } else { 0 };
                assert_eq!(m.get(t, p), expected);
            }
        }
    }

    #[test]
    fn confusion_single_error_and_abstain() {
        let preds = vec![pred(&[1, 0]), pred(&[])];
        let m = confusion_matrix(&preds, &[0, 1], &names(2)).unwrap();
        assert_eq!(m.get(0, 1), 1);
        assert_eq!(m.get(1, m.abstain()), 1);
        assert_eq!(m.total(), 2);
        assert!(confusion_matrix(&[pred(&[0])], &[5], &names(2)).is_err());
    }

    #[test]
    fn most_confused_rules() {
        let preds = vec![pred(&[0]), pred(&[1]), pred(&[2]), pred(&[3])];
        let diag = confusion_matrix(&preds, &[0, 1, 2, 3], &names(5)).unwrap();
        // class 4 has no support and is skipped
        assert_eq!(most_confused(&diag, 3).unwrap(), vec![0, 1, 2]);
        assert_eq!(most_confused(&diag, 5).unwrap(), vec![0, 1, 2, 3]);

        let preds = vec![pred(&[0]), pred(&[0]), pred(&[2])];
        let m = confusion_matrix(&preds, &[0, 1, 2], &names(3)).unwrap();
        assert_eq!(most_confused(&m, 1).unwrap(), vec![1]);
        assert!(most_confused(&m, 4).is_err());
        let empty = ConfusionMatrix::new(names(2));
        assert!(most_confused(&empty, 1).is_err());
    }

    #[test]
    fn ema_cases() {
        let xs = [3.0, -1.0, 7.5];
        assert_eq!(ema_smooth(&xs, 0.0).unwrap(), xs.to_vec());
        assert_eq!(ema_smooth(&[2.0; 4], 0.9).unwrap(), vec![2.0; 4]);
        let s = ema_smooth(&[0.0, 1.0], 0.9).unwrap();
        assert_eq!(s[0], 0.0);
        assert!((s[1] - 0.1).abs() < 1e-15);
        assert!(ema_smooth(&[], 0.5).is_err());
        assert!(ema_smooth(&[1.0], 1.0).is_err());
        assert!(ema_smooth(&[1.0], -0.1).is_err());
    }
}
