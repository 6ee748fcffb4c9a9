//! KMeans++ sub-clustering of each class and cluster-quality measures.

mod exemplars;
mod kmeans;
mod model;
mod silhouette;

pub use exemplars::{exemplars_near_centroids, CentroidExemplars, DEFAULT_TOP_M};
pub use kmeans::{
    assign, kmeanspp_seed, kmeanspp_seed_indices, lloyd_fit, KMeansConfig, KMeansFit,
};
pub use model::{fit_class_centroids, CentroidModel, ClassCentroids, DEFAULT_K_PER_CLASS};
pub use silhouette::{silhouette, SilhouetteReport};
