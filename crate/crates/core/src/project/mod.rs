//! 2-D layouts of embedding sets for looking at cluster structure.

mod pca;
mod tsne;

pub use pca::{pca2, pca2_matrix, principal_axes, PrincipalAxes};
pub use tsne::{calibrate_affinities, tsne2, Calibration, TsneConfig, TsneDiagnostics};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMethod {
    Pca,
    Tsne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection2D {
    pub coords: Vec<[f64; 2]>,
    pub labels: Vec<u32>,
    /// Source row of each projected point (differs from `0..n` only when the
    /// input was subsampled).
    pub rows: Vec<usize>,
    pub method: ProjectionMethod,
    /// Final KL divergence for t-SNE; fraction of variance explained by the
    /// two axes for PCA.
    pub objective: f64,
    /// PCA found fewer than two non-degenerate axes; the missing coordinate
    /// is zero.
    pub rank_deficient: bool,
    pub tsne: Option<TsneDiagnostics>,
}
