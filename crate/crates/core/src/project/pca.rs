use nalgebra::{DMatrix, SymmetricEigen};

use super::{Projection2D, ProjectionMethod};
use crate::data::EmbeddingSet;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

// Eigenvalues below this fraction of the largest count as zero.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalAxes {
    pub mean: Vec<f64>,
    /// Unit-length axes, largest variance first. An axis is all zeros when
    /// its variance is degenerate.
    pub components: Vec<Vec<f64>>,
    /// Sample variance (divisor `n - 1`) along each axis.
    pub variances: Vec<f64>,
    pub total_variance: f64,
}

impl PrincipalAxes {
    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(row.iter().zip(&self.mean))
                    .map(|(a, (x, m))| a * (x - m))
                    .sum()
            })
            .collect()
    }
}

fn centered(points: &Matrix) -> (Vec<f64>, DMatrix<f64>) {
    let (n, d) = (points.rows(), points.cols());
    let mut mean = vec![0.0; d];
    for row in points.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let x = DMatrix::from_fn(n, d, |i, j| points.row(i)[j] - mean[j]);
    (mean, x)
}

/// Top `count` principal axes of the rows of `points`.
///
/// Works on the `d x d` covariance when `d <= n` and on the `n x n` Gram
/// matrix otherwise. Each axis is oriented so its largest-magnitude loading
/// (lowest index on ties) is positive.
pub fn principal_axes(points: &Matrix, count: usize) -> Result<PrincipalAxes> {
    let (n, d) = (points.rows(), points.cols());
    if n < 2 || count == 0 || count > d {
        return Err(Error::invalid(format!(
            "principal axes need n >= 2 and 1 <= count <= d (n={n}, d={d}, count={count})"
        )));
    }
    points.check_finite()?;
    let (mean, x) = centered(points);
    let scale = 1.0 / (n - 1) as f64;

    let (values, vectors): (Vec<f64>, Vec<Vec<f64>>) = if d <= n {
        let cov = x.transpose() * &x * scale;
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .total_cmp(&eig.eigenvalues[a])
                .then(a.cmp(&b))
        });
        order
            .iter()
            .map(|&i| {
                (
                    eig.eigenvalues[i].max(0.0),
                    eig.eigenvectors.column(i).iter().copied().collect(),
                )
            })
            .unzip()
    } else {
        let gram = &x * x.transpose() * scale;
        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .total_cmp(&eig.eigenvalues[a])
                .then(a.cmp(&b))
        });
        order
            .iter()
            .take(d)
            .map(|&i| {
                let lambda = eig.eigenvalues[i].max(0.0);
                let v = x.transpose() * eig.eigenvectors.column(i);
                let norm = v.norm();
                let v = if norm > 0.0 {
                    v.iter().map(|a| a / norm).collect()
                } else {
                    vec![0.0; d]
                };
                (lambda, v)
            })
            .unzip()
    };

    let total_variance = x.iter().map(|v| v * v).sum::<f64>() * scale;
    let largest = values.first().copied().unwrap_or(0.0);
    let mut components = Vec::with_capacity(count);
    let mut variances = Vec::with_capacity(count);
    for (lambda, mut v) in values.into_iter().zip(vectors).take(count) {
        if lambda <= RANK_TOLERANCE * largest || largest <= 0.0 {
            components.push(vec![0.0; d]);
            variances.push(0.0);
            continue;
        }
        let mut pivot = 0;
        for (j, a) in v.iter().enumerate() {
            if a.abs() > v[pivot].abs() {
                pivot = j;
            }
        }
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|a| *a = -*a);
        }
        components.push(v);
        variances.push(lambda);
    }
    Ok(PrincipalAxes {
        mean,
        components,
        variances,
        total_variance,
    })
}

/// Projection of `points` onto its top two principal axes.
pub fn pca2_matrix(points: &Matrix) -> Result<(Vec<[f64; 2]>, PrincipalAxes)> {
    if points.rows() < 3 || points.cols() < 2 {
        return Err(Error::invalid(format!(
            "PCA projection needs n >= 3 and d >= 2 (n={}, d={})",
            points.rows(),
            points.cols()
        )));
    }
    let axes = principal_axes(points, 2)?;
    let coords = points
        .iter_rows()
        .map(|r| {
            let p = axes.project(r);
            [p[0], p[1]]
        })
        .collect();
    Ok((coords, axes))
}

pub fn pca2(set: &EmbeddingSet) -> Result<Projection2D> {
    let (coords, axes) = pca2_matrix(&set.to_matrix())?;
    let explained = axes.variances.iter().sum::<f64>();
    let objective = if axes.total_variance > 0.0 {
        explained / axes.total_variance
    } else {
        0.0
    };
    Ok(Projection2D {
        coords,
        labels: set.labels().to_vec(),
        rows: (0..set.n()).collect(),
        method: ProjectionMethod::Pca,
        objective,
        rank_deficient: axes.variances.contains(&0.0),
        tsne: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairwise(coords: &[[f64; 2]]) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..coords.len() {
            for j in i + 1..coords.len() {
                out.push(
                    ((coords[i][0] - coords[j][0]).powi(2) + (coords[i][1] - coords[j][1]).powi(2))
                        .sqrt(),
                );
            }
        }
        out
    }

    #[test]
    fn two_dimensional_input_is_rigid_motion() {
        let rows = [[1.0, 2.0], [3.0, -1.0], [0.5, 0.5], [4.0, 4.0], [-2.0, 1.0]];
        let pts = Matrix::from_rows(&rows).unwrap();
        let (coords, axes) = pca2_matrix(&pts).unwrap();
        let original: Vec<[f64; 2]> = rows.to_vec();
        for (a, b) in pairwise(&coords).iter().zip(pairwise(&original)) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((axes.variances.iter().sum::<f64>() - axes.total_variance).abs() < 1e-10);
    }

    #[test]
    fn line_in_ten_dimensions_is_rank_deficient() {
        let dir: Vec<f64> = (0..10).map(|j| (j as f64 + 1.0).sqrt()).collect();
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| dir.iter().map(|a| a * i as f64 - 3.0).collect())
            .collect();
        let set = EmbeddingSet::new(
            10,
            rows.iter().flatten().map(|&v| v as f32).collect(),
            vec![0; 8],
            vec!["x".into()],
        )
        .unwrap();
        let p = pca2(&set).unwrap();
        assert!(p.rank_deficient);
        assert!(p.coords.iter().all(|c| c[1] == 0.0));
        assert!((p.objective - 1.0).abs() < 1e-6);
    }

    #[test]
    fn components_orthonormal_and_sign_fixed() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let t = i as f64;
                vec![
                    t.sin() * 3.0,
                    (t * 0.7).cos(),
                    t * 0.1,
                    (t * 1.3).sin() * 0.5,
                ]
            })
            .collect();
        let axes = principal_axes(&Matrix::from_rows(&rows).unwrap(), 2).unwrap();
        let c = &axes.components;
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        assert!((dot(&c[0], &c[0]) - 1.0).abs() < 1e-10);
        assert!((dot(&c[1], &c[1]) - 1.0).abs() < 1e-10);
        assert!(dot(&c[0], &c[1]).abs() < 1e-10);
        for v in c {
            let pivot = v
                .iter()
                .cloned()
                .fold(0.0f64, |m, a| if a.abs() > m.abs() { a } else { m });
            assert!(pivot > 0.0);
        }
    }

    #[test]
    fn wide_data_uses_gram_route() {
        // d > n exercises the Gram-matrix branch; compare against the
        // covariance branch on the transposed-size problem via variances.
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|i| {
                (0..12)
                    .map(|j| ((i * 12 + j) as f64 * 0.37).sin())
                    .collect()
            })
            .collect();
        let pts = Matrix::from_rows(&rows).unwrap();
        let axes = principal_axes(&pts, 2).unwrap();
        let coords: Vec<Vec<f64>> = pts.iter_rows().map(|r| axes.project(r)).collect();
        for k in 0..2 {
            let var = coords.iter().map(|c| c[k] * c[k]).sum::<f64>() / 4.0;
            assert!((var - axes.variances[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn too_small_rejected() {
        let pts = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(pca2_matrix(&pts).is_err());
    }
}
