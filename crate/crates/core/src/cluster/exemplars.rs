use serde::Serialize;

use super::CentroidModel;
use crate::data::EmbeddingSet;
use crate::error::{Error, Result};
use crate::matrix::distance_f32;

pub const DEFAULT_TOP_M: usize = 4;

/// The rows of one class closest to one of its centroids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentroidExemplars {
    pub centroid: usize,
    /// `(row index in the set, distance)`, ascending by distance.
    pub rows: Vec<(usize, f64)>,
    /// How many class rows have this centroid as their nearest.
    pub assigned: usize,
    /// Fewer than `top_m` rows were assigned to this centroid.
    pub truncated: bool,
}

/// For each centroid of `class_id`, the `top_m` rows of that class nearest
/// to it. Rows are first assigned to their nearest centroid of the class
/// (ties to the lower centroid index), so a row is listed at most once.
pub fn exemplars_near_centroids(
    set: &EmbeddingSet,
    model: &CentroidModel,
    class_id: usize,
    top_m: usize,
) -> Result<Vec<CentroidExemplars>> {
    if set.d() != model.d() {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            got: set.d(),
        });
    }
    if class_id >= model.num_classes() || class_id >= set.num_classes() {
        return Err(Error::LabelOutOfRange {
            label: class_id,
            classes: model.num_classes().min(set.num_classes()),
        });
    }
    if top_m == 0 {
        return Err(Error::invalid("top_m must be at least 1"));
    }
    let k = model.class(class_id).k;
    let mut buckets: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
    for row in (0..set.n()).filter(|&i| set.label(i) == class_id) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for j in 0..k {
            let d = distance_f32(set.row(row), model.centroid(class_id, j));
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        buckets[best].push((row, best_d));
    }
    Ok(buckets
        .into_iter()
        .enumerate()
        .map(|(centroid, mut rows)| {
            rows.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let assigned = rows.len();
            rows.truncate(top_m);
            CentroidExemplars {
                centroid,
                rows,
                assigned,
                truncated: assigned < top_m,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::ClassCentroids;

    fn model(values: Vec<f32>, k: usize) -> CentroidModel {
        CentroidModel::new(
            1,
            vec!["a".into(), "b".into()],
            vec![
                ClassCentroids { k, values },
                ClassCentroids {
                    k: 1,
                    values: vec![0.0],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_centroid_sorts_all_rows() {
        let set = EmbeddingSet::new(
            1,
            vec![3.0, -1.0, 0.5, 2.0, 9.0],
            vec![0, 0, 0, 0, 1],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let out = exemplars_near_centroids(&set, &model(vec![0.0], 1), 0, 4).unwrap();
        let rows: Vec<usize> = out[0].rows.iter().map(|r| r.0).collect();
        assert_eq!(rows, vec![2, 1, 3, 0]);
        assert!(!out[0].truncated);
    }

    #[test]
    fn coincident_row_first_and_shortfall_flagged() {
        let set = EmbeddingSet::new(
            1,
            vec![5.0, 0.2, 10.0],
            vec![0, 0, 0],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let out = exemplars_near_centroids(&set, &model(vec![0.0, 10.0], 2), 0, 4).unwrap();
        assert_eq!(out[1].rows[0], (2, 0.0));
        // 5.0 is equidistant and goes to the lower centroid.
        assert_eq!(
            out[0].rows.iter().map(|r| r.0).collect::<Vec<_>>(),
            vec![1, 0]
        );
        assert!(out[0].truncated && out[1].truncated);
    }

    #[test]
    fn bad_class_rejected() {
        let set = EmbeddingSet::new(1, vec![0.0], vec![0], vec!["a".into(), "b".into()]).unwrap();
        assert!(exemplars_near_centroids(&set, &model(vec![0.0], 1), 2, 4).is_err());
        assert!(exemplars_near_centroids(&set, &model(vec![0.0], 1), 0, 0).is_err());
    }
}
