//! Exact t-SNE (O(n²) per iteration).

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::pca::pca2_matrix;
use super::{Projection2D, ProjectionMethod};
use crate::data::EmbeddingSet;
use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::rng;

const ENTROPY_TOL: f64 = 1e-10;
const MAX_BISECTION_STEPS: usize = 200;
const MIN_PROB: f64 = 1e-12;
const MIN_GAIN: f64 = 0.01;
const INIT_STD: f64 = 1e-4;
const KL_EVERY: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iters: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch_iter: usize,
    /// Larger inputs are subsampled (seeded) to this many rows.
    pub max_points: usize,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iters: 1000,
            seed: 0,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch_iter: 250,
            max_points: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneDiagnostics {
    /// KL(P || Q) of the initial layout.
    pub initial_kl: f64,
    pub final_kl: f64,
    /// `(iteration, KL)` every 50 iterations and at the end.
    pub kl_trace: Vec<(usize, f64)>,
    /// Largest `|achieved perplexity - target|` over points.
    pub max_perplexity_error: f64,
    /// Largest `|sum_j p(j|i) - 1|` over points.
    pub max_row_sum_error: f64,
    /// Every point's bandwidth search met the entropy tolerance.
    pub calibration_converged: bool,
    pub subsampled: bool,
}

/// Per-point Gaussian conditionals calibrated to a target perplexity.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Row-major `n x n`, `conditional[i * n + j] = p(j | i)`, zero diagonal.
    pub conditional: Vec<f64>,
    /// `exp(H(P_i))` in nats.
    pub perplexity: Vec<f64>,
    pub converged: Vec<bool>,
}

fn calibrate_row(dist: &[f64], skip: usize, target_entropy: f64, out: &mut [f64]) -> (f64, bool) {
    let dmin = dist
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != skip)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    let mut beta = 1.0;
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut entropy = 0.0;
    let mut converged = false;

    for _ in 0..MAX_BISECTION_STEPS {
        let mut sum = 0.0;
        let mut weighted = 0.0;
        for (j, (&d, p)) in dist.iter().zip(out.iter_mut()).enumerate() {
            if j == skip {
                *p = 0.0;
                continue;
            }
            let shifted = d - dmin;
            *p = (-beta * shifted).exp();
            sum += *p;
            weighted += shifted * *p;
        }
        entropy = sum.ln() + beta * weighted / sum;
        for p in out.iter_mut() {
            *p /= sum;
        }
        let diff = entropy - target_entropy;
        if diff.abs() < ENTROPY_TOL {
            converged = true;
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() {
                (beta + hi) / 2.0
            } else {
                beta * 2.0
            };
        } else {
            hi = beta;
            beta = (beta + lo) / 2.0;
        }
    }
    (entropy.exp(), converged)
}

/// Bisects each point's Gaussian precision so that the conditional
/// distribution over the other points has the requested perplexity.
/// `sq_dist` is the row-major `n x n` matrix of squared distances.
pub fn calibrate_affinities(sq_dist: &[f64], n: usize, perplexity: f64) -> Result<Calibration> {
    if sq_dist.len() != n * n {
        return Err(Error::SizeMismatch(format!(
            "{} distances for {n} points",
            sq_dist.len()
        )));
    }
    if n < 2 {
        return Err(Error::invalid("calibration needs at least two points"));
    }
    let target = perplexity.ln();
    let mut conditional = vec![0.0; n * n];
    let mut achieved = Vec::with_capacity(n);
    let mut converged = Vec::with_capacity(n);
    for i in 0..n {
        let (perp, ok) = calibrate_row(
            &sq_dist[i * n..(i + 1) * n],
            i,
            target,
            &mut conditional[i * n..(i + 1) * n],
        );
        achieved.push(perp);
        converged.push(ok);
    }
    Ok(Calibration {
        conditional,
        perplexity: achieved,
        converged,
    })
}

fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let mut z = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                z += 1.0 / (1.0 + sq2(y[i], y[j]));
            }
        }
    }
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pij = p[i * n + j];
            let q = (1.0 / (1.0 + sq2(y[i], y[j])) / z).max(MIN_PROB);
            kl += pij * (pij / q).ln();
        }
    }
    kl
}

fn sq2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn initial_layout(points: &Matrix, seed: u64) -> Result<Vec<[f64; 2]>> {
    let (mut coords, axes) = pca2_matrix(points)?;
    let n = coords.len() as f64;
    let std_of = |k: usize, c: &[[f64; 2]]| {
        let mean = c.iter().map(|p| p[k]).sum::<f64>() / n;
        (c.iter().map(|p| (p[k] - mean).powi(2)).sum::<f64>() / n).sqrt()
    };
    let s0 = std_of(0, &coords);
    if s0 > 0.0 {
        for p in &mut coords {
            p[0] *= INIT_STD / s0;
            p[1] *= INIT_STD / s0;
        }
    }
    // Degenerate axes get seeded Gaussian coordinates so the layout can
    // spread in both directions.
    let noise = Normal::new(0.0, INIT_STD).expect("valid std");
    let mut r = rng::seeded(seed);
    for k in 0..2 {
        if axes.variances[k] == 0.0 || (k == 0 && s0 == 0.0) {
            for p in &mut coords {
                p[k] = noise.sample(&mut r);
            }
        }
    }
    Ok(coords)
}

/// Exact t-SNE to two dimensions with PCA initialisation, early
/// exaggeration, momentum and per-coordinate adaptive gains.
pub fn tsne2(set: &EmbeddingSet, config: &TsneConfig) -> Result<Projection2D> {
    if !(config.perplexity >= 1.0) {
        return Err(Error::invalid(format!(
            "perplexity must be >= 1, got {}",
            config.perplexity
        )));
    }
    if config.iters == 0 || config.max_points < 3 || !(config.learning_rate > 0.0) {
        return Err(Error::invalid(
            "t-SNE needs iters >= 1, max_points >= 3 and a positive learning rate",
        ));
    }
    let mut rows: Vec<usize> = (0..set.n()).collect();
    let subsampled = set.n() > config.max_points;
    if subsampled {
        let mut r = rng::seeded(rng::derive(config.seed, 1));
        rng::shuffle(&mut r, &mut rows);
        rows.truncate(config.max_points);
        rows.sort_unstable();
    }
    let n = rows.len();
    if (n as f64) < 3.0 * config.perplexity {
        return Err(Error::invalid(format!(
            "perplexity {} needs at least {} points, got {n}",
            config.perplexity,
            (3.0 * config.perplexity).ceil()
        )));
    }
    let points = set.rows_matrix(&rows);

    let mut sq = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = squared_distance(points.row(i), points.row(j));
            sq[i * n + j] = d;
            sq[j * n + i] = d;
        }
    }
    let cal = calibrate_affinities(&sq, n, config.perplexity)?;
    drop(sq);
    let max_perplexity_error = cal
        .perplexity
        .iter()
        .map(|p| (p - config.perplexity).abs())
        .fold(0.0, f64::max);
    let max_row_sum_error = cal
        .conditional
        .chunks_exact(n)
        .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let calibration_converged = cal.converged.iter().all(|&c| c);

    let mut p = cal.conditional;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = ((p[i * n + j] + p[j * n + i]) / (2.0 * n as f64)).max(MIN_PROB);
            p[i * n + j] = v;
            p[j * n + i] = v;
        }
        p[i * n + i] = 0.0;
    }

    let mut y = initial_layout(&points, config.seed)?;
    let initial_kl = kl_divergence(&p, &y);
    let mut kl_trace = vec![(0, initial_kl)];
    let mut velocity = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut grad = vec![[0.0f64; 2]; n];

    for it in 0..config.iters {
        let exaggeration = if it < config.exaggeration_iters {
            config.early_exaggeration
        } else {
            1.0
        };
        let momentum = if it < config.momentum_switch_iter {
            config.initial_momentum
        } else {
            config.final_momentum
        };

        let mut z = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                z += 2.0 / (1.0 + sq2(y[i], y[j]));
            }
        }
        for (i, g) in grad.iter_mut().enumerate() {
            let mut gx = 0.0;
            let mut gy = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let num = 1.0 / (1.0 + sq2(y[i], y[j]));
                let coeff = (exaggeration * p[i * n + j] - num / z) * num;
                gx += coeff * (y[i][0] - y[j][0]);
                gy += coeff * (y[i][1] - y[j][1]);
            }
            *g = [4.0 * gx, 4.0 * gy];
        }

        for i in 0..n {
            for k in 0..2 {
                let same_sign = (grad[i][k] > 0.0) == (velocity[i][k] > 0.0);
                gains[i][k] = if same_sign {
                    gains[i][k] * 0.8
                } else {
                    gains[i][k] + 0.2
                }
                .max(MIN_GAIN);
                velocity[i][k] =
                    momentum * velocity[i][k] - config.learning_rate * gains[i][k] * grad[i][k];
                y[i][k] += velocity[i][k];
            }
        }
        let mean = y
            .iter()
            .fold([0.0, 0.0], |acc, p| [acc[0] + p[0], acc[1] + p[1]]);
        for p in &mut y {
            p[0] -= mean[0] / n as f64;
            p[1] -= mean[1] / n as f64;
        }

        if (it + 1) % KL_EVERY == 0 && it + 1 < config.iters {
            kl_trace.push((it + 1, kl_divergence(&p, &y)));
        }
    }
    let final_kl = kl_divergence(&p, &y);
    kl_trace.push((config.iters, final_kl));

    if y.iter().any(|c| !c[0].is_finite() || !c[1].is_finite()) {
        return Err(Error::invalid("t-SNE diverged to non-finite coordinates"));
    }

    Ok(Projection2D {
        coords: y,
        labels: rows.iter().map(|&r| set.labels()[r]).collect(),
        rows,
        method: ProjectionMethod::Tsne,
        objective: final_kl,
        rank_deficient: false,
        tsne: Some(TsneDiagnostics {
            initial_kl,
            final_kl,
            kl_trace,
            max_perplexity_error,
            max_row_sum_error,
            calibration_converged,
            subsampled,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_hits_target() {
        let n = 40;
        let pts: Vec<f64> = (0..n)
            .map(|i| (i as f64 * 0.77).sin() * 5.0 + i as f64 * 0.1)
            .collect();
        let mut sq = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                sq[i * n + j] = (pts[i] - pts[j]).powi(2);
            }
        }
        let cal = calibrate_affinities(&sq, n, 10.0).unwrap();
        for i in 0..n {
            assert!(cal.converged[i]);
            assert!((cal.perplexity[i] - 10.0).abs() < 1e-6);
            let row = &cal.conditional[i * n..(i + 1) * n];
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(row[i], 0.0);
            // entropy recomputed from the probabilities themselves
            let h: f64 = row.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
            assert!((h.exp() - 10.0).abs() < 1e-6);
        }
    }

    #[test]
    fn equal_distances_cannot_reach_low_perplexity() {
        // Three mutually equidistant points always give perplexity 2.
        let sq = vec![0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0];
        let cal = calibrate_affinities(&sq, 3, 1.0).unwrap();
        assert!(cal.converged.iter().all(|&c| !c));
        assert!(cal.perplexity.iter().all(|&p| (p - 2.0).abs() < 1e-9));
    }

    #[test]
    fn rejects_infeasible_perplexity() {
        let set = EmbeddingSet::new(2, vec![0.0; 20], vec![0; 10], vec!["a".into()]).unwrap();
        let cfg = TsneConfig {
            perplexity: 5.0,
            ..Default::default()
        };
        assert!(tsne2(&set, &cfg).is_err());
        let cfg = TsneConfig {
            perplexity: 0.5,
            ..Default::default()
        };
        assert!(tsne2(&set, &cfg).is_err());
    }

    #[test]
    fn subsamples_large_inputs() {
        let n = 40;
        let data: Vec<f32> = (0..n * 3)
            .map(|i| ((i * 7919) % 101) as f32 / 10.0)
            .collect();
        let set = EmbeddingSet::new(3, data, vec![0; n], vec!["a".into()]).unwrap();
        let cfg = TsneConfig {
            perplexity: 5.0,
            iters: 100,
            max_points: 20,
            ..Default::default()
        };
        let p = tsne2(&set, &cfg).unwrap();
        assert_eq!(p.coords.len(), 20);
        assert!(p.rows.windows(2).all(|w| w[0] < w[1]));
        assert!(p.tsne.unwrap().subsampled);
    }
}
