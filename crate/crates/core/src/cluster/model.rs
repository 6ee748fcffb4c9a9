use std::path::Path;

use serde::{Deserialize, Serialize};

use super::kmeans::{lloyd_fit, KMeansConfig};
use crate::data::io as binio;
use crate::data::EmbeddingSet;
use crate::error::{Error, Result};
use crate::rng;
use crate::FORMAT_VERSION;

pub const DEFAULT_K_PER_CLASS: usize = 3;

const MODEL_FILE: &str = "model.json";
const CENTROIDS_FILE: &str = "centroids.f32";

/// Sub-cluster centres of one class, `k x d` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassCentroids {
    pub k: usize,
    pub values: Vec<f32>,
}

/// Per-class sub-cluster centroids in embedding space.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidModel {
    d: usize,
    label_names: Vec<String>,
    classes: Vec<ClassCentroids>,
}

impl CentroidModel {
    pub fn new(d: usize, label_names: Vec<String>, classes: Vec<ClassCentroids>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("centroid dimension must be at least 1"));
        }
        if label_names.len() != classes.len() {
            return Err(Error::SizeMismatch(format!(
                "{} label names for {} classes",
                label_names.len(),
                classes.len()
            )));
        }
        let mut offset = 0;
        for (c, cls) in classes.iter().enumerate() {
            if cls.k == 0 {
                return Err(Error::invalid(format!("class {c} has no centroids")));
            }
            if cls.values.len() != cls.k * d {
                return Err(Error::SizeMismatch(format!(
                    "class {c}: {} centroids of d={d} need {} values, got {}",
                    cls.k,
                    cls.k * d,
                    cls.values.len()
                )));
            }
            if let Some(i) = cls.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(offset + i));
            }
            offset += cls.values.len();
        }
        Ok(Self {
            d,
            label_names,
            classes,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn class(&self, c: usize) -> &ClassCentroids {
        &self.classes[c]
    }

    pub fn centroid(&self, class: usize, j: usize) -> &[f32] {
        &self.classes[class].values[j * self.d..(j + 1) * self.d]
    }

    pub fn total_centroids(&self) -> usize {
        self.classes.iter().map(|c| c.k).sum()
    }

    /// All centroids in pooled order (class ascending, then centroid index),
    /// with their owning class.
    pub fn pooled(&self) -> impl Iterator<Item = (usize, &[f32])> + '_ {
        self.classes
            .iter()
            .enumerate()
            .flat_map(move |(c, cls)| cls.values.chunks_exact(self.d).map(move |row| (c, row)))
    }

    /// Writes `model.json` and `centroids.f32` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        binio::create_dir(dir)?;
        let meta = ModelMeta {
            version: FORMAT_VERSION,
            d: self.d,
            classes: self
                .label_names
                .iter()
                .zip(&self.classes)
                .map(|(label, c)| ClassMeta {
                    label: label.clone(),
                    k: c.k,
                })
                .collect(),
        };
        binio::write_file(&dir.join(MODEL_FILE), &serde_json::to_vec(&meta)?)?;
        let values: Vec<f32> = self
            .classes
            .iter()
            .flat_map(|c| c.values.iter().copied())
            .collect();
        binio::write_file(&dir.join(CENTROIDS_FILE), &binio::f32_to_le(&values))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta_path = dir.join(MODEL_FILE);
        let meta: ModelMeta = serde_json::from_slice(&binio::read_file(&meta_path)?)
            .map_err(|e| Error::format(&meta_path, e.to_string()))?;
        if meta.version != FORMAT_VERSION {
            return Err(Error::format(
                &meta_path,
                format!("unsupported version {}", meta.version),
            ));
        }
        let path = dir.join(CENTROIDS_FILE);
        let values = binio::f32_from_le(&path, &binio::read_file(&path)?)?;
        let expected: usize = meta.classes.iter().map(|c| c.k * meta.d).sum();
        if values.len() != expected {
            return Err(Error::SizeMismatch(format!(
                "model.json describes {expected} centroid values, {CENTROIDS_FILE} holds {}",
                values.len()
            )));
        }
        let mut classes = Vec::with_capacity(meta.classes.len());
        let mut names = Vec::with_capacity(meta.classes.len());
        let mut offset = 0;
        for c in meta.classes {
            let len = c.k * meta.d;
            classes.push(ClassCentroids {
                k: c.k,
                values: values[offset..offset + len].to_vec(),
            });
            offset += len;
            names.push(c.label);
        }
        CentroidModel::new(meta.d, names, classes)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    version: u32,
    d: usize,
    classes: Vec<ClassMeta>,
}

#[derive(Serialize, Deserialize)]
struct ClassMeta {
    label: String,
    k: usize,
}

/// Fits `k_per_class` centroids to every class independently.
///
/// `config.k` is overridden by `k_per_class`; class `c` uses a seed derived
/// from `config.seed` and `c`.
pub fn fit_class_centroids(
    set: &EmbeddingSet,
    k_per_class: usize,
    config: &KMeansConfig,
) -> Result<CentroidModel> {
    if k_per_class == 0 {
        return Err(Error::invalid("k_per_class must be at least 1"));
    }
    let mut classes = Vec::with_capacity(set.num_classes());
    for (c, rows) in set.class_rows().iter().enumerate() {
        if rows.len() < k_per_class {
            return Err(Error::ClassTooSmall {
                class: c,
                rows: rows.len(),
                needed: k_per_class,
            });
        }
        let points = set.rows_matrix(rows);
        let cfg = KMeansConfig {
            k: k_per_class,
            seed: rng::derive(config.seed, c as u64),
            ..*config
        };
        let fit = lloyd_fit(&points, &cfg)?;
        classes.push(ClassCentroids {
            k: k_per_class,
            values: fit.centroids.as_slice().iter().map(|&v| v as f32).collect(),
        });
    }
    CentroidModel::new(set.d(), set.label_names().to_vec(), classes)
}
