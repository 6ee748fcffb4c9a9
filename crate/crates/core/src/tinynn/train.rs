use std::path::Path;

use serde::{Deserialize, Serialize};

use super::loss::{cross_entropy, softmax};
use super::model::{CnnConfig, CnnModel};
use super::optim::{Optimizer, OptimizerKind};
use super::tensor::Tensor4;
use crate::data::io as binio;
use crate::error::{Error, Result};
use crate::knnpp::Prediction;
use crate::rng;
use crate::FORMAT_VERSION;

pub const DEFAULT_LEARNING_RATE: f64 = 1e-4;
pub const DEFAULT_BATCH_SIZE: usize = 16;
pub const DEFAULT_EPOCHS: usize = 35;

// Batch size used when only evaluating.
const EVAL_BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    /// Stop after the first epoch whose full-pass training accuracy reaches
    /// this value.
    pub target_train_accuracy: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: DEFAULT_LEARNING_RATE,
            batch_size: DEFAULT_BATCH_SIZE,
            epochs: DEFAULT_EPOCHS,
            seed: 0,
            optimizer: OptimizerKind::Adam,
            target_train_accuracy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// 1-based epoch after which the snapshot was taken.
    pub epoch: usize,
    pub model: CnnModel<f32>,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub best: Checkpoint,
    /// Mini-batch loss after every optimizer step.
    pub train_loss: Vec<f64>,
    /// Validation loss after every epoch.
    pub val_loss: Vec<f64>,
    /// Full-pass training accuracy per epoch (only with a target accuracy).
    pub train_accuracy: Vec<f64>,
    pub epochs_run: usize,
}

/// Index of the smallest validation loss; ties go to the earliest epoch.
pub fn select_checkpoint(val_losses: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in val_losses.iter().enumerate() {
        if best.is_none_or(|b| v < val_losses[b]) {
            best = Some(i);
        }
    }
    best
}

/// Mean cross-entropy over a whole set.
pub fn evaluate_loss(model: &CnnModel<f32>, x: &Tensor4<f32>, labels: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for start in (0..labels.len()).step_by(EVAL_BATCH) {
        let idx: Vec<usize> = (start..(start + EVAL_BATCH).min(labels.len())).collect();
        let logits = model.forward(&x.select(&idx))?;
        let (loss, _) = cross_entropy(
            &logits,
            model.config().num_classes,
            &labels[start..start + idx.len()],
        )?;
        total += loss as f64 * idx.len() as f64;
    }
    Ok(total / labels.len() as f64)
}

/// Classes ranked by softmax probability for every sample.
pub fn predict(model: &CnnModel<f32>, x: &Tensor4<f32>) -> Result<Vec<Prediction>> {
    let classes = model.config().num_classes;
    let n = x.batch();
    let mut out = Vec::with_capacity(n);
    for start in (0..n).step_by(EVAL_BATCH) {
        let idx: Vec<usize> = (start..(start + EVAL_BATCH).min(n)).collect();
        let probs = softmax(&model.forward(&x.select(&idx))?, classes);
        for (offset, row) in probs.chunks_exact(classes).enumerate() {
            let mut ranked: Vec<(usize, f64)> = row.iter().map(|&p| p as f64).enumerate().collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            out.push(Prediction {
                ranked,
                query_index: Some(start + offset),
            });
        }
    }
    Ok(out)
}

fn accuracy(model: &CnnModel<f32>, x: &Tensor4<f32>, labels: &[usize]) -> Result<f64> {
    let preds = predict(model, x)?;
    let hits = preds
        .iter()
        .zip(labels)
        .filter(|(p, &y)| p.top1() == Some(y))
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Mini-batch training with per-epoch validation; keeps the snapshot with
/// the lowest validation loss.
pub fn train(
    model: CnnModel<f32>,
    train_x: &Tensor4<f32>,
    train_labels: &[usize],
    val_x: &Tensor4<f32>,
    val_labels: &[usize],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if !(config.learning_rate >= 0.0) || config.batch_size == 0 || config.epochs == 0 {
        return Err(Error::invalid(
            "learning rate must be >= 0, batch size and epochs >= 1",
        ));
    }
    if train_x.batch() != train_labels.len() || val_x.batch() != val_labels.len() {
        return Err(Error::SizeMismatch(
            "images and labels differ in count".into(),
        ));
    }
    if val_labels.is_empty() {
        return Err(Error::invalid("validation set is empty"));
    }
    if config.batch_size > train_labels.len() {
        return Err(Error::invalid(format!(
            "batch size {} exceeds the {} training samples",
            config.batch_size,
            train_labels.len()
        )));
    }

    let mut model = model;
    let mut optimizer = Optimizer::new(config.optimizer, model.params());
    let mut rng = rng::seeded(config.seed);
    let mut order: Vec<usize> = (0..train_labels.len()).collect();
    let mut train_loss = Vec::new();
    let mut val_loss = Vec::new();
    let mut train_accuracy = Vec::new();
    let mut best: Option<Checkpoint> = None;

    for epoch in 1..=config.epochs {
        rng::shuffle(&mut rng, &mut order);
        for chunk in order.chunks(config.batch_size) {
            let x = train_x.select(chunk);
            let labels: Vec<usize> = chunk.iter().map(|&i| train_labels[i]).collect();
            let (loss, grads) = model.backward(&x, &labels)?;
            if !loss.is_finite() {
                return Err(Error::invalid(format!(
                    "training loss diverged at epoch {epoch}"
                )));
            }
            optimizer.step(model.params_mut(), &grads, config.learning_rate);
            train_loss.push(loss as f64);
        }

        let v = evaluate_loss(&model, val_x, val_labels)?;
        val_loss.push(v);
        if best.as_ref().is_none_or(|b| v < b.val_loss) {
            best = Some(Checkpoint {
                epoch,
                model: model.clone(),
                val_loss: v,
            });
        }

        if let Some(target) = config.target_train_accuracy {
            let acc = accuracy(&model, train_x, train_labels)?;
            train_accuracy.push(acc);
            if acc >= target {
                break;
            }
        }
    }
    Ok(TrainOutcome {
        best: best.expect("epochs >= 1"),
        epochs_run: val_loss.len(),
        train_loss,
        val_loss,
        train_accuracy,
    })
}

const CHECKPOINT_META: &str = "model.json";
const CHECKPOINT_PARAMS: &str = "params.f32";

#[derive(Serialize, Deserialize)]
struct CheckpointMeta {
    version: u32,
    architecture: CnnConfig,
    epoch: usize,
    val_loss: f64,
    /// Tensors in the order they are concatenated in `params.f32`.
    params: Vec<ParamMeta>,
}

#[derive(Serialize, Deserialize)]
struct ParamMeta {
    name: String,
    shape: Vec<usize>,
}

impl Checkpoint {
    /// Writes `model.json` and `params.f32` (all tensors concatenated in
    /// parameter order, little-endian).
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        binio::create_dir(dir)?;
        let meta = CheckpointMeta {
            version: FORMAT_VERSION,
            architecture: *self.model.config(),
            epoch: self.epoch,
            val_loss: self.val_loss,
            params: self
                .model
                .params()
                .iter()
                .map(|p| ParamMeta {
                    name: p.name.clone(),
                    shape: p.shape.clone(),
                })
                .collect(),
        };
        binio::write_file(
            &dir.join(CHECKPOINT_META),
            &serde_json::to_vec_pretty(&meta)?,
        )?;
        let values: Vec<f32> = self
            .model
            .params()
            .iter()
            .flat_map(|p| p.values.iter().copied())
            .collect();
        binio::write_file(&dir.join(CHECKPOINT_PARAMS), &binio::f32_to_le(&values))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta_path = dir.join(CHECKPOINT_META);
        let meta: CheckpointMeta = serde_json::from_slice(&binio::read_file(&meta_path)?)
            .map_err(|e| Error::format(&meta_path, e.to_string()))?;
        if meta.version != FORMAT_VERSION {
            return Err(Error::format(
                &meta_path,
                format!("unsupported version {}", meta.version),
            ));
        }
        let path = dir.join(CHECKPOINT_PARAMS);
        let values = binio::f32_from_le(&path, &binio::read_file(&path)?)?;
        let shapes = meta.architecture.param_shapes();
        let described: Vec<(String, Vec<usize>)> =
            meta.params.into_iter().map(|p| (p.name, p.shape)).collect();
        if described != shapes {
            return Err(Error::format(
                &meta_path,
                "parameter list does not match the architecture",
            ));
        }
        let mut tensors = Vec::with_capacity(shapes.len());
        let mut offset = 0;
        for (_, shape) in &shapes {
            let len: usize = shape.iter().product();
            if offset + len > values.len() {
                return Err(Error::SizeMismatch(format!(
                    "{CHECKPOINT_PARAMS} holds {} values, architecture needs more",
                    values.len()
                )));
            }
            tensors.push(values[offset..offset + len].to_vec());
            offset += len;
        }
        if offset != values.len() {
            return Err(Error::SizeMismatch(format!(
                "{CHECKPOINT_PARAMS} holds {} values, architecture needs {offset}",
                values.len()
            )));
        }
        Ok(Checkpoint {
            epoch: meta.epoch,
            model: CnnModel::from_params(meta.architecture, tensors)?,
            val_loss: meta.val_loss,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_rule() {
        assert_eq!(select_checkpoint(&[0.9, 0.7, 0.8]), Some(1));
        assert_eq!(select_checkpoint(&[0.5, 0.7, 0.5]), Some(0));
        assert_eq!(select_checkpoint(&[]), None);
    }

    fn tiny_data(n: usize) -> (Tensor4<f32>, Vec<usize>) {
        let data: Vec<f32> = (0..n * 3 * 16 * 16)
            .map(|i| ((i * 31) % 23) as f32 / 23.0)
            .collect();
        (
            Tensor4::new([n, 3, 16, 16], data).unwrap(),
            (0..n).map(|i| i % 2).collect(),
        )
    }

    fn tiny_model() -> CnnModel<f32> {
        let cfg = CnnConfig {
            height: 16,
            width: 16,
            base_filters: 2,
            ..CnnConfig::new(2)
        };
        CnnModel::kaiming(cfg, 0).unwrap()
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let (x, y) = tiny_data(8);
        let model = tiny_model();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            batch_size: 4,
            epochs: 3,
            ..Default::default()
        };
        let out = train(model.clone(), &x, &y, &x, &y, &cfg).unwrap();
        assert_eq!(out.best.model, model);
        assert!(out.val_loss.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(out.best.epoch, 1);
        assert_eq!(out.train_loss.len(), 6);
    }

    #[test]
    fn reproducible_for_fixed_seed() {
        let (x, y) = tiny_data(8);
        let cfg = TrainConfig {
            learning_rate: 1e-3,
            batch_size: 3,
            epochs: 2,
            seed: 5,
            ..Default::default()
        };
        let a = train(tiny_model(), &x, &y, &x, &y, &cfg).unwrap();
        let b = train(tiny_model(), &x, &y, &x, &y, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn batch_larger_than_data_rejected() {
        let (x, y) = tiny_data(4);
        let cfg = TrainConfig {
            batch_size: 16,
            ..Default::default()
        };
        assert!(train(tiny_model(), &x, &y, &x, &y, &cfg).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let ckpt = Checkpoint {
            epoch: 7,
            model: tiny_model(),
            val_loss: 0.25,
        };
        let dir = tempfile::tempdir().unwrap();
        ckpt.save(dir.path()).unwrap();
        assert_eq!(Checkpoint::load(dir.path()).unwrap(), ckpt);
    }
}
