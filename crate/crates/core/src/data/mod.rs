//! Embedding sets and the dataset preparation steps that run before
//! clustering: guess-rate cleaning, minority up-sampling, stratified
//! splitting and class-size histograms.

pub(crate) mod io;
mod ops;

pub use io::{
    load_csv_embedding_set, load_embedding_set, load_sample_meta, save_embedding_set,
    save_sample_meta, EMBEDDINGS_FILE, LABELS_FILE, META_FILE, SAMPLE_META_FILE,
};
pub use ops::{
    class_histogram, clean_by_guess_rate, passing_rows, rebalance_classes, split,
    stratified_split_indices, ClassHistogram, SplitSpec, DEFAULT_GUESS_RATE_THRESHOLD,
    DEFAULT_HISTOGRAM_BINS,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-drawing metadata collected alongside the image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub sample_id: String,
    pub label_id: u32,
    /// Fraction of players who guessed the drawing correctly.
    pub guess_rate: f64,
}

/// `n` embedding rows of dimension `d` with one class label each.
///
/// Values are stored as `f32` exactly as they appear on disk; algorithms that
/// need more precision convert through [`EmbeddingSet::to_matrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    d: usize,
    data: Vec<f32>,
    labels: Vec<u32>,
    label_names: Vec<String>,
}

impl EmbeddingSet {
    pub fn new(
        d: usize,
        data: Vec<f32>,
        labels: Vec<u32>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        if data.len() != labels.len() * d {
            return Err(Error::SizeMismatch(format!(
                "{} labels with d={d} need {} values, got {}",
                labels.len(),
                labels.len() * d,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let classes = label_names.len();
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= classes) {
            return Err(Error::LabelOutOfRange {
                label: bad as usize,
                classes,
            });
        }
        Ok(Self {
            d,
            data,
            labels,
            label_names,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i] as usize
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    /// Rows in the given order (indices may repeat).
    pub fn select(&self, rows: &[usize]) -> EmbeddingSet {
        let mut data = Vec::with_capacity(rows.len() * self.d);
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            data.extend_from_slice(self.row(r));
            labels.push(self.labels[r]);
        }
        EmbeddingSet {
            d: self.d,
            data,
            labels,
            label_names: self.label_names.clone(),
        }
    }

    /// Same vectors, different labels.
    pub fn with_labels(&self, labels: Vec<u32>) -> Result<EmbeddingSet> {
        if labels.len() != self.n() {
            return Err(Error::SizeMismatch(format!(
                "{} labels for {} rows",
                labels.len(),
                self.n()
            )));
        }
        EmbeddingSet::new(self.d, self.data.clone(), labels, self.label_names.clone())
    }

    /// Row indices grouped by class, ascending within each class.
    pub fn class_rows(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(i);
        }
        out
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::new(
            self.n(),
            self.d,
            self.data.iter().map(|&v| v as f64).collect(),
        )
        .expect("shape checked at construction")
    }

    pub fn rows_matrix(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.d);
        for &r in rows {
            data.extend(self.row(r).iter().map(|&v| v as f64));
        }
        Matrix::new(rows.len(), self.d, data).expect("shape checked at construction")
    }
}
