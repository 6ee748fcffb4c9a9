use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::layers::{
    conv2d_backward, conv2d_forward, linear_backward, linear_forward, maxpool2_backward,
    maxpool2_forward, relu_backward, relu_forward, KERNEL,
};
use super::loss::cross_entropy;
use super::tensor::{Scalar, Tensor4};
use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_BLOCKS: usize = 4;
pub const DEFAULT_BASE_FILTERS: usize = 16;
pub const DEFAULT_INPUT_SIZE: usize = 64;

/// Architecture hyperparameters. Block `b` has `base_filters * 2^b` filters;
/// each block halves the spatial size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub in_channels: usize,
    pub height: usize,
    pub width: usize,
    pub base_filters: usize,
    pub num_classes: usize,
    pub blocks: usize,
}

impl CnnConfig {
    /// RGB 64x64 input, 16 base filters, four blocks.
    pub fn new(num_classes: usize) -> Self {
        Self {
            in_channels: 3,
            height: DEFAULT_INPUT_SIZE,
            width: DEFAULT_INPUT_SIZE,
            base_filters: DEFAULT_BASE_FILTERS,
            num_classes,
            blocks: DEFAULT_BLOCKS,
        }
    }

    pub fn channels(&self, block: usize) -> usize {
        self.base_filters << block
    }

    /// Spatial size after `blocks_done` pooling steps.
    pub fn spatial_after(&self, blocks_done: usize) -> (usize, usize) {
        (self.height >> blocks_done, self.width >> blocks_done)
    }

    pub fn flatten_dim(&self) -> usize {
        let (h, w) = self.spatial_after(self.blocks);
        self.channels(self.blocks - 1) * h * w
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0
            || self.base_filters == 0
            || self.num_classes == 0
            || self.blocks == 0
        {
            return Err(Error::invalid(
                "channels, base filters, classes and blocks must all be at least 1",
            ));
        }
        let min = 1usize << self.blocks;
        if self.height < min || self.width < min {
            return Err(Error::invalid(format!(
                "{} pooling blocks need input of at least {min}x{min}, got {}x{}",
                self.blocks, self.height, self.width
            )));
        }
        Ok(())
    }

    /// Parameter tensor shapes in storage order: per block conv weight
    /// `[out, in, 3, 3]` and bias `[out]`, then fc weight
    /// `[flatten_dim, num_classes]` and fc bias `[num_classes]`.
    pub fn param_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut shapes = Vec::with_capacity(2 * self.blocks + 2);
        let mut in_ch = self.in_channels;
        for b in 0..self.blocks {
            let out = self.channels(b);
            shapes.push((format!("conv{b}.weight"), vec![out, in_ch, KERNEL, KERNEL]));
            shapes.push((format!("conv{b}.bias"), vec![out]));
            in_ch = out;
        }
        shapes.push((
            "fc.weight".into(),
            vec![self.flatten_dim(), self.num_classes],
        ));
        shapes.push(("fc.bias".into(), vec![self.num_classes]));
        shapes
    }

    fn fan_in(&self, param: usize) -> usize {
        let b = param / 2;
        if b < self.blocks {
            let in_ch = if b == 0 {
                self.in_channels
            } else {
                self.channels(b - 1)
            };
            in_ch * KERNEL * KERNEL
        } else {
            self.flatten_dim()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<T>,
}

/// `len` i.i.d. draws from `N(0, 2 / fan_in)`.
pub fn kaiming_init(fan_in: usize, len: usize, seed: u64) -> Result<Vec<f64>> {
    if fan_in == 0 {
        return Err(Error::invalid("fan_in must be at least 1"));
    }
    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
    let mut r = rng::seeded(seed);
    Ok((0..len).map(|_| normal.sample(&mut r)).collect())
}

/// Four conv blocks (conv 3x3 -> ReLU -> maxpool 2x2) and a linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel<T> {
    config: CnnConfig,
    params: Vec<Param<T>>,
}

pub(crate) struct ForwardCache<T> {
    block_inputs: Vec<Tensor4<T>>,
    pre_activations: Vec<Tensor4<T>>,
    argmax: Vec<Vec<usize>>,
    relu_dims: Vec<[usize; 4]>,
    flat: Vec<T>,
    pub(crate) logits: Vec<T>,
}

impl<T: Scalar> CnnModel<T> {
    pub fn zeros(config: CnnConfig) -> Result<Self> {
        config.validate()?;
        let params = config
            .param_shapes()
            .into_iter()
            .map(|(name, shape)| {
                let len = shape.iter().product();
                Param {
                    name,
                    shape,
                    values: vec![T::zero(); len],
                }
            })
            .collect();
        Ok(Self { config, params })
    }

    /// Kaiming-normal weights (each tensor from its own derived seed), zero
    /// biases.
    pub fn kaiming(config: CnnConfig, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        for (i, p) in model.params.iter_mut().enumerate() {
            if i % 2 == 0 {
                let fan_in = config.fan_in(i);
                p.values = kaiming_init(fan_in, p.values.len(), rng::derive(seed, i as u64))?
                    .into_iter()
                    .map(T::of)
                    .collect();
            }
        }
        Ok(model)
    }

    pub fn from_params(config: CnnConfig, params: Vec<Vec<T>>) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        if params.len() != model.params.len() {
            return Err(Error::SizeMismatch(format!(
                "{} parameter tensors, architecture has {}",
                params.len(),
                model.params.len()
            )));
        }
        for (p, values) in model.params.iter_mut().zip(params) {
            if values.len() != p.values.len() {
                return Err(Error::SizeMismatch(format!(
                    "{} needs {} values, got {}",
                    p.name,
                    p.values.len(),
                    values.len()
                )));
            }
            p.values = values;
        }
        Ok(model)
    }

    pub fn config(&self) -> &CnnConfig {
        &self.config
    }

    pub fn params(&self) -> &[Param<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param<T>] {
        &mut self.params
    }

    pub fn num_parameters(&self) -> usize {
        self.params.iter().map(|p| p.values.len()).sum()
    }

    pub fn cast<U: Scalar>(&self) -> CnnModel<U> {
        CnnModel {
            config: self.config,
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    shape: p.shape.clone(),
                    values: p.values.iter().map(|v| U::of(v.as_f64())).collect(),
                })
                .collect(),
        }
    }

    fn check_input(&self, x: &Tensor4<T>) -> Result<()> {
        let [_, c, h, w] = x.dims();
        let cfg = &self.config;
        if c != cfg.in_channels || h != cfg.height || w != cfg.width {
            return Err(Error::invalid(format!(
                "input {:?} does not match the model's {}x{}x{}",
                x.dims(),
                cfg.in_channels,
                cfg.height,
                cfg.width
            )));
        }
        Ok(())
    }

    fn conv_weight(&self, b: usize) -> Tensor4<T> {
        let p = &self.params[2 * b];
        Tensor4::new(
            [p.shape[0], p.shape[1], p.shape[2], p.shape[3]],
            p.values.clone(),
        )
        .expect("shape fixed at construction")
    }

    pub(crate) fn forward_cached(&self, x: &Tensor4<T>) -> Result<ForwardCache<T>> {
        self.check_input(x)?;
        let blocks = self.config.blocks;
        let mut cache = ForwardCache {
            block_inputs: Vec::with_capacity(blocks),
            pre_activations: Vec::with_capacity(blocks),
            argmax: Vec::with_capacity(blocks),
            relu_dims: Vec::with_capacity(blocks),
            flat: Vec::new(),
            logits: Vec::new(),
        };
        let mut h = x.clone();
        for b in 0..blocks {
            let pre = conv2d_forward(&h, &self.conv_weight(b), &self.params[2 * b + 1].values)?;
            let mut act = pre.clone();
            relu_forward(&mut act);
            let (pooled, argmax) = maxpool2_forward(&act)?;
            cache.block_inputs.push(h);
            cache.relu_dims.push(act.dims());
            cache.pre_activations.push(pre);
            cache.argmax.push(argmax);
            h = pooled;
        }
        let batch = x.batch();
        cache.flat = h.into_data();
        debug_assert_eq!(cache.flat.len(), batch * self.config.flatten_dim());
        cache.logits = linear_forward(
            &cache.flat,
            batch,
            &self.params[2 * blocks].values,
            &self.params[2 * blocks + 1].values,
        );
        Ok(cache)
    }

    /// Logits, row-major `batch x num_classes`.
    pub fn forward(&self, x: &Tensor4<T>) -> Result<Vec<T>> {
        Ok(self.forward_cached(x)?.logits)
    }

    pub fn loss(&self, x: &Tensor4<T>, labels: &[usize]) -> Result<T> {
        self.check_batch(x, labels)?;
        let logits = self.forward(x)?;
        Ok(cross_entropy(&logits, self.config.num_classes, labels)?.0)
    }

    fn check_batch(&self, x: &Tensor4<T>, labels: &[usize]) -> Result<()> {
        if x.batch() != labels.len() {
            return Err(Error::SizeMismatch(format!(
                "{} labels for a batch of {}",
                labels.len(),
                x.batch()
            )));
        }
        Ok(())
    }

    /// Mean cross-entropy loss and its gradient for every parameter tensor,
    /// in the order of [`CnnModel::params`].
    pub fn backward(&self, x: &Tensor4<T>, labels: &[usize]) -> Result<(T, Vec<Vec<T>>)> {
        self.check_batch(x, labels)?;
        let cache = self.forward_cached(x)?;
        let cfg = &self.config;
        let blocks = cfg.blocks;
        let batch = x.batch();
        let (loss, dlogits) = cross_entropy(&cache.logits, cfg.num_classes, labels)?;

        let mut grads: Vec<Vec<T>> = vec![Vec::new(); self.params.len()];
        let (dflat, dw_fc, db_fc) = linear_backward(
            &cache.flat,
            batch,
            &self.params[2 * blocks].values,
            &dlogits,
        );
        grads[2 * blocks] = dw_fc;
        grads[2 * blocks + 1] = db_fc;

        let (h, w) = cfg.spatial_after(blocks);
        let mut upstream = Tensor4::new([batch, cfg.channels(blocks - 1), h, w], dflat)?;
        for b in (0..blocks).rev() {
            let mut dact = maxpool2_backward(&upstream, &cache.argmax[b], cache.relu_dims[b]);
            relu_backward(&cache.pre_activations[b], &mut dact);
            let (dx, dw, db) =
                conv2d_backward(&cache.block_inputs[b], &self.conv_weight(b), &dact)?;
            grads[2 * b] = dw.into_data();
            grads[2 * b + 1] = db;
            upstream = dx;
        }
        Ok((loss, grads))
    }
}
