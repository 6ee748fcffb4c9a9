//! Central finite-difference verification of [`CnnModel::backward`].

use serde::Serialize;

use super::model::{CnnConfig, CnnModel};
use super::tensor::Tensor4;
use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_STEP: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

/// Gradients whose analytic and numeric magnitudes are both below this are
/// compared in absolute terms.
pub const RELATIVE_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamCheck {
    pub name: String,
    pub count: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
    pub max_rel_error: f64,
    pub step: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// `|a - b| / max(|a|, |b|, RELATIVE_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

/// Compares [`CnnModel::backward`] against central differences on every
/// parameter.
pub fn grad_check(
    model: &CnnModel<f64>,
    x: &Tensor4<f64>,
    labels: &[usize],
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport> {
    grad_check_with(model, x, labels, step, tolerance, |m, x, l| {
        Ok(m.backward(x, l)?.1)
    })
}

/// Like [`grad_check`] with a caller-supplied analytic gradient.
pub fn grad_check_with<F>(
    model: &CnnModel<f64>,
    x: &Tensor4<f64>,
    labels: &[usize],
    step: f64,
    tolerance: f64,
    analytic: F,
) -> Result<GradCheckReport>
where
    F: Fn(&CnnModel<f64>, &Tensor4<f64>, &[usize]) -> Result<Vec<Vec<f64>>>,
{
    if !(step > 0.0) || !(tolerance > 0.0) {
        return Err(Error::invalid("step and tolerance must be positive"));
    }
    let grads = analytic(model, x, labels)?;
    let mut probe = model.clone();
    let mut params = Vec::with_capacity(grads.len());
    for (pi, grad) in grads.iter().enumerate() {
        let mut check = ParamCheck {
            name: model.params()[pi].name.clone(),
            count: grad.len(),
            max_rel_error: 0.0,
            max_abs_error: 0.0,
        };
        for (i, &g) in grad.iter().enumerate() {
            let original = probe.params()[pi].values[i];
            probe.params_mut()[pi].values[i] = original + step;
            let plus = probe.loss(x, labels)?;
            probe.params_mut()[pi].values[i] = original - step;
            let minus = probe.loss(x, labels)?;
            probe.params_mut()[pi].values[i] = original;
            let numeric = (plus - minus) / (2.0 * step);
            check.max_rel_error = check.max_rel_error.max(relative_error(g, numeric));
            check.max_abs_error = check.max_abs_error.max((g - numeric).abs());
        }
        params.push(check);
    }
    let max_rel_error = params.iter().map(|p| p.max_rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        params,
        max_rel_error,
        step,
        tolerance,
        passed: max_rel_error < tolerance,
    })
}

/// The small network used for gradient checks: 8x8 RGB input, 2 base
/// filters, 3 classes. An 8x8 input admits three pooling blocks.
pub fn tiny_config() -> CnnConfig {
    CnnConfig {
        in_channels: 3,
        height: 8,
        width: 8,
        base_filters: 2,
        num_classes: 3,
        blocks: 3,
    }
}

/// Kaiming-initialised model for `config` plus a uniform-random batch of
/// `batch` inputs in `[-1, 1)` and labels cycling over the classes.
pub fn random_problem(
    config: CnnConfig,
    batch: usize,
    seed: u64,
) -> Result<(CnnModel<f64>, Tensor4<f64>, Vec<usize>)> {
    use rand::Rng;
    let model = CnnModel::<f64>::kaiming(config, seed)?;
    let mut r = rng::seeded(rng::derive(seed, 99));
    let len = batch * config.in_channels * config.height * config.width;
    let data = (0..len).map(|_| r.random::<f64>() * 2.0 - 1.0).collect();
    let x = Tensor4::new(
        [batch, config.in_channels, config.height, config.width],
        data,
    )?;
    let labels = (0..batch).map(|i| i % config.num_classes).collect();
    Ok((model, x, labels))
}
