use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{distance, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteReport {
    /// `s_i` for every point, in input order.
    pub per_point: Vec<f64>,
    /// Arithmetic mean of `per_point`.
    pub overall: f64,
}

/// Silhouette coefficients with Euclidean distance, treating each distinct
/// label as one cluster.
///
/// `a_i` is the mean distance from point `i` to the other members of its
/// cluster, `b_i` the smallest mean distance to the members of any other
/// cluster, and `s_i = (b_i - a_i) / max(a_i, b_i)`. Points alone in their
/// cluster (and points with `a_i = b_i = 0`) score 0.
pub fn silhouette(points: &Matrix, labels: &[usize]) -> Result<SilhouetteReport> {
    let n = points.rows();
    if n == 0 {
        return Err(Error::invalid("silhouette of an empty point set"));
    }
    if labels.len() != n {
        return Err(Error::SizeMismatch(format!(
            "{} labels for {n} points",
            labels.len()
        )));
    }
    points.check_finite()?;

    let mut distinct: Vec<usize> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::invalid(
            "silhouette needs at least two distinct labels",
        ));
    }
    let k = distinct.len();
    let cluster: Vec<usize> = labels
        .iter()
        .map(|l| distinct.binary_search(l).expect("present"))
        .collect();
    let mut sizes = vec![0usize; k];
    for &c in &cluster {
        sizes[c] += 1;
    }

    // sums[i * k + c] = total distance from point i to the members of c.
    let mut sums = vec![0.0f64; n * k];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = distance(points.row(i), points.row(j));
            sums[i * k + cluster[j]] += d;
            sums[j * k + cluster[i]] += d;
        }
    }

    let per_point: Vec<f64> = (0..n)
        .map(|i| {
            let own = cluster[i];
            if sizes[own] < 2 {
                return 0.0;
            }
            let row = &sums[i * k..(i + 1) * k];
            let a = row[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| row[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                ((b - a) / denom).clamp(-1.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    let overall = per_point.iter().sum::<f64>() / n as f64;
    Ok(SilhouetteReport { per_point, overall })
}
