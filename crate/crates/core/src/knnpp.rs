//! KNN++ classification: every query ranks the pooled sub-cluster centroids
//! of all classes by Euclidean distance, and the `k_neighbors` nearest vote
//! for their class with weight `1 / sqrt(distance)`.

use serde::{Deserialize, Serialize};

use crate::cluster::CentroidModel;
use crate::data::EmbeddingSet;
use crate::error::{Error, Result};
use crate::matrix::distance_f32;

pub const DEFAULT_K_NEIGHBORS: usize = 9;
pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VotingConfig {
    pub k_neighbors: usize,
    /// Lower clamp on the distance fed to the weight, so coincident
    /// centroids get a large finite vote.
    pub epsilon: f64,
}

impl Default for VotingConfig {
    fn default() -> Self {
        Self {
            k_neighbors: DEFAULT_K_NEIGHBORS,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// Classes ranked by accumulated vote, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub ranked: Vec<(usize, f64)>,
    pub query_index: Option<usize>,
}

impl Prediction {
    pub fn top1(&self) -> Option<usize> {
        self.ranked.first().map(|r| r.0)
    }

    /// Whether `class` is among the first `n` ranked classes.
    pub fn contains_in_top(&self, class: usize, n: usize) -> bool {
        self.ranked.iter().take(n).any(|r| r.0 == class)
    }
}

/// `1 / sqrt(max(d, epsilon))`.
pub fn vote_weight(d: f64, epsilon: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::invalid(format!("distance must be >= 0, got {d}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::invalid(format!(
            "epsilon must be > 0, got {epsilon}"
        )));
    }
    Ok(1.0 / d.max(epsilon).sqrt())
}

fn check(model: &CentroidModel, config: &VotingConfig) -> Result<()> {
    let total = model.total_centroids();
    if total == 0 {
        return Err(Error::invalid("centroid model is empty"));
    }
    if config.k_neighbors == 0 || config.k_neighbors > total {
        return Err(Error::invalid(format!(
            "k_neighbors must be in 1..={total}, got {}",
            config.k_neighbors
        )));
    }
    if !(config.epsilon > 0.0) {
        return Err(Error::invalid(format!(
            "epsilon must be > 0, got {}",
            config.epsilon
        )));
    }
    Ok(())
}

fn classify_unchecked(query: &[f32], model: &CentroidModel, config: &VotingConfig) -> Prediction {
    let mut neighbors: Vec<(f64, usize, usize)> = model
        .pooled()
        .enumerate()
        .map(|(pooled, (class, c))| (distance_f32(query, c), pooled, class))
        .collect();
    let k = config.k_neighbors;
    let by_distance =
        |a: &(f64, usize, usize), b: &(f64, usize, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < neighbors.len() {
        neighbors.select_nth_unstable_by(k - 1, by_distance);
        neighbors.truncate(k);
    }
    // Accumulate in ascending distance so scores do not depend on the
    // selection algorithm's internal order.
    neighbors.sort_unstable_by(by_distance);

    let mut scores = vec![0.0f64; model.num_classes()];
    let mut voted = vec![false; model.num_classes()];
    for &(d, _, class) in &neighbors {
        scores[class] += 1.0 / d.max(config.epsilon).sqrt();
        voted[class] = true;
    }
    let mut ranked: Vec<(usize, f64)> = (0..scores.len())
        .filter(|&c| voted[c])
        .map(|c| (c, scores[c]))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Prediction {
        ranked,
        query_index: None,
    }
}

pub fn classify(query: &[f32], model: &CentroidModel, config: &VotingConfig) -> Result<Prediction> {
    check(model, config)?;
    if query.len() != model.d() {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            got: query.len(),
        });
    }
    if let Some(i) = query.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(classify_unchecked(query, model, config))
}

/// Classifies every row; `query_index` is the row index.
pub fn classify_batch(
    set: &EmbeddingSet,
    model: &CentroidModel,
    config: &VotingConfig,
) -> Result<Vec<Prediction>> {
    check(model, config)?;
    if set.d() != model.d() {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            got: set.d(),
        });
    }
    Ok((0..set.n())
        .map(|i| Prediction {
            query_index: Some(i),
            ..classify_unchecked(set.row(i), model, config)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::ClassCentroids;

    fn one_per_class(points: &[f32]) -> CentroidModel {
        CentroidModel::new(
            1,
            (0..points.len()).map(|c| format!("c{c}")).collect(),
            points
                .iter()
                .map(|&p| ClassCentroids {
                    k: 1,
                    values: vec![p],
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn weight_formula() {
        assert_eq!(vote_weight(4.0, 1e-12).unwrap(), 0.5);
        assert_eq!(vote_weight(1.0, 1e-12).unwrap(), 1.0);
        assert!((vote_weight(0.0, 1e-12).unwrap() - 1e6).abs() < 1e-6);
        assert!(vote_weight(-1.0, 1e-12).is_err());
    }

    #[test]
    fn query_on_centroid() {
        let model = one_per_class(&[0.0, 5.0, 10.0]);
        let cfg = VotingConfig {
            k_neighbors: 1,
            ..Default::default()
        };
        let p = classify(&[10.0], &model, &cfg).unwrap();
        assert_eq!(p.ranked, vec![(2, 1.0 / 1e-12f64.sqrt())]);
    }

    #[test]
    fn equal_distance_tie_goes_to_lower_class() {
        let model = one_per_class(&[-2.0, 2.0]);
        let cfg = VotingConfig {
            k_neighbors: 2,
            ..Default::default()
        };
        let p = classify(&[0.0], &model, &cfg).unwrap();
        assert_eq!(p.ranked.len(), 2);
        assert_eq!(p.ranked[0].0, 0);
        assert_eq!(p.ranked[0].1, p.ranked[1].1);
    }

    #[test]
    fn sums_same_class_votes() {
        let model = CentroidModel::new(
            1,
            vec!["a".into(), "b".into()],
            vec![
                ClassCentroids {
                    k: 2,
                    values: vec![4.0, -4.0],
                },
                ClassCentroids {
                    k: 1,
                    values: vec![1.0],
                },
            ],
        )
        .unwrap();
        let cfg = VotingConfig {
            k_neighbors: 3,
            ..Default::default()
        };
        let p = classify(&[0.0], &model, &cfg).unwrap();
        // class a: 2 * 1/sqrt(4) = 1.0, class b: 1/sqrt(1) = 1.0 -> tie, a first
        assert_eq!(p.ranked, vec![(0, 1.0), (1, 1.0)]);
    }

    #[test]
    fn errors() {
        let model = one_per_class(&[0.0, 1.0]);
        let cfg = VotingConfig {
            k_neighbors: 3,
            ..Default::default()
        };
        assert!(classify(&[0.0], &model, &cfg).is_err());
        let cfg = VotingConfig {
            k_neighbors: 1,
            ..Default::default()
        };
        assert!(matches!(
            classify(&[0.0, 1.0], &model, &cfg),
            Err(Error::DimensionMismatch {
                expected: 1,
                got: 2
            })
        ));
    }

    #[test]
    fn empty_batch() {
        let model = one_per_class(&[0.0]);
        let set = EmbeddingSet::new(1, vec![], vec![], vec!["c0".into()]).unwrap();
        let cfg = VotingConfig {
            k_neighbors: 1,
            ..Default::default()
        };
        assert!(classify_batch(&set, &model, &cfg).unwrap().is_empty());
    }
}
