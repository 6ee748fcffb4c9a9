use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::rng::{self, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    /// Stop once `(previous - current) <= tol * previous` for the inertia.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 3,
            max_iters: 300,
            tol: 1e-6,
            restarts: 5,
            seed: 0,
        }
    }
}

impl KMeansConfig {
    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.max_iters == 0 || self.restarts == 0 {
            return Err(Error::invalid(
                "k, max_iters and restarts must all be at least 1",
            ));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::invalid(format!(
                "tol must be >= 0, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Matrix,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
}

/// Indices of the KMeans++ (D²) seeds.
pub fn kmeanspp_seed_indices(points: &Matrix, k: usize, rng: &mut SeededRng) -> Result<Vec<usize>> {
    let n = points.rows();
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > n {
        return Err(Error::invalid(format!("k={k} exceeds the {n} points")));
    }
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let first = rng::index(rng, n);
    chosen.push(first);
    taken[first] = true;
    let mut nearest: Vec<f64> = points
        .iter_rows()
        .map(|p| squared_distance(p, points.row(first)))
        .collect();

    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in nearest.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total has a positive weight")
        } else {
            // Remaining points all coincide with a seed; pick uniformly
            // among the rows not chosen yet.
            let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
            free[rng::index(rng, free.len())]
        };
        chosen.push(next);
        taken[next] = true;
        for (i, p) in points.iter_rows().enumerate() {
            let d = squared_distance(p, points.row(next));
            if d < nearest[i] {
                nearest[i] = d;
            }
        }
        nearest[next] = 0.0;
    }
    Ok(chosen)
}

/// KMeans++ seeding: the first seed uniform, each further seed drawn with
/// probability proportional to its squared distance to the nearest seed.
pub fn kmeanspp_seed(points: &Matrix, k: usize, seed: u64) -> Result<Matrix> {
    let mut rng = rng::seeded(seed);
    let idx = kmeanspp_seed_indices(points, k, &mut rng)?;
    Ok(points.select_rows(&idx))
}

/// Nearest-centroid assignment (ties to the lowest centroid index) and the
/// resulting inertia.
pub fn assign(points: &Matrix, centroids: &Matrix) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let assignments = points
        .iter_rows()
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in centroids.iter_rows().enumerate() {
                let d = squared_distance(p, c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            inertia += best_d;
            best
        })
        .collect();
    (assignments, inertia)
}

fn update_centroids(points: &Matrix, assignments: &[usize], centroids: &mut Matrix) {
    let k = centroids.rows();
    let d = points.cols();
    let mut sums = Matrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter_rows().zip(assignments) {
        counts[a] += 1;
        for (s, v) in sums.row_mut(a).iter_mut().zip(p) {
            *s += v;
        }
    }
    for j in 0..k {
        if counts[j] > 0 {
            let inv = counts[j] as f64;
            for (c, s) in centroids.row_mut(j).iter_mut().zip(sums.row(j)) {
                *c = s / inv;
            }
        }
    }
    // Empty clusters move onto the point farthest from its own centroid.
    let mut claimed = vec![false; points.rows()];
    for j in (0..k).filter(|&j| counts[j] == 0) {
        let mut far = None;
        let mut far_d = -1.0;
        for (i, (p, &a)) in points.iter_rows().zip(assignments).enumerate() {
            if claimed[i] {
                continue;
            }
            let d = squared_distance(p, centroids.row(a));
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        if let Some(i) = far {
            claimed[i] = true;
            let row = points.row(i).to_vec();
            centroids.row_mut(j).copy_from_slice(&row);
        }
    }
}

fn lloyd_run(points: &Matrix, config: &KMeansConfig, rng: &mut SeededRng) -> Result<KMeansFit> {
    let seeds = kmeanspp_seed_indices(points, config.k, rng)?;
    let mut centroids = points.select_rows(&seeds);
    let mut trace = Vec::new();
    let mut iter = 0;
    loop {
        let (assignments, inertia) = assign(points, &centroids);
        let converged = match trace.last() {
            Some(&prev) => prev <= 0.0 || prev - inertia <= config.tol * prev,
            None => false,
        };
        trace.push(inertia);
        iter += 1;
        if converged || iter >= config.max_iters {
            return Ok(KMeansFit {
                centroids,
                assignments,
                inertia,
                inertia_trace: trace,
            });
        }
        update_centroids(points, &assignments, &mut centroids);
    }
}

/// Lloyd's algorithm from KMeans++ seeds, best of `config.restarts` runs by
/// inertia (ties to the earliest run).
pub fn lloyd_fit(points: &Matrix, config: &KMeansConfig) -> Result<KMeansFit> {
    config.validate()?;
    points.check_finite()?;
    if config.k > points.rows() {
        return Err(Error::invalid(format!(
            "k={} exceeds the {} points",
            config.k,
            points.rows()
        )));
    }
    let mut rng = rng::seeded(config.seed);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..config.restarts {
        let fit = lloyd_run(points, config, &mut rng)?;
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("restarts >= 1"))
}
