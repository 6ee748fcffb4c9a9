//! Seeded synthetic fixtures: Gaussian blobs, planted class/sub-cluster
//! embeddings with guess rates, and a small colored-shape image set.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{EmbeddingSet, SampleMeta};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{self, SeededRng};
use crate::tinynn::ImageSet;

fn gaussian(rng: &mut SeededRng, sigma: f64) -> f64 {
    Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
}

/// `count` points in `[-extent, extent)^d` with pairwise distance at least
/// `min_separation` (rejection sampling).
pub fn separated_means(
    count: usize,
    d: usize,
    extent: f64,
    min_separation: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut r = rng::seeded(seed);
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while means.len() < count {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::invalid(
                "could not place separated means; enlarge the extent",
            ));
        }
        let m: Vec<f64> = (0..d).map(|_| r.random_range(-extent..extent)).collect();
        if means
            .iter()
            .all(|o| crate::matrix::distance(o, &m) >= min_separation)
        {
            means.push(m);
        }
    }
    Ok(means)
}

/// `per_blob` isotropic Gaussian samples around each mean; rows are grouped
/// by blob and the returned labels are blob indices.
pub fn gaussian_blobs(
    means: &[Vec<f64>],
    per_blob: usize,
    sigma: f64,
    seed: u64,
) -> Result<(Matrix, Vec<usize>)> {
    let d = means.first().map_or(0, Vec::len);
    if d == 0 || means.iter().any(|m| m.len() != d) || !(sigma >= 0.0) {
        return Err(Error::invalid(
            "means must share a non-zero dimension and sigma must be >= 0",
        ));
    }
    let mut r = rng::seeded(seed);
    let mut data = Vec::with_capacity(means.len() * per_blob * d);
    let mut labels = Vec::with_capacity(means.len() * per_blob);
    for (b, m) in means.iter().enumerate() {
        for _ in 0..per_blob {
            data.extend(m.iter().map(|&c| c + gaussian(&mut r, sigma)));
            labels.push(b);
        }
    }
    Ok((Matrix::new(means.len() * per_blob, d, data)?, labels))
}

/// Classes made of planted sub-clusters.
///
/// Class `c` is centred at `class_separation / sqrt(2) * e_c`, so class
/// centres are pairwise `class_separation` apart; sub-cluster `j` adds
/// `subcluster_separation / sqrt(2) * e_{classes + j}`. Remaining axes are
/// pure noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedSpec {
    pub classes: usize,
    pub subclusters: usize,
    pub per_class: usize,
    /// At least `classes + subclusters`.
    pub d: usize,
    pub class_separation: f64,
    pub subcluster_separation: f64,
    pub sigma: f64,
    /// Fraction of rows replaced by uniform junk with a guess rate below 0.1.
    pub junk_fraction: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        Self {
            classes: 10,
            subclusters: 3,
            per_class: 60,
            d: 16,
            class_separation: 20.0,
            subcluster_separation: 5.0,
            sigma: 0.5,
            junk_fraction: 0.0,
            seed: 0,
        }
    }
}

/// Rows of the planted set with per-row guess rates. Clean rows get rates in
/// `[0.1, 1]`, junk rows in `[0, 0.1)`.
pub fn planted_classes(spec: &PlantedSpec) -> Result<(EmbeddingSet, Vec<SampleMeta>)> {
    if spec.classes == 0 || spec.subclusters == 0 || spec.d < spec.classes + spec.subclusters {
        return Err(Error::invalid(
            "need classes, subclusters >= 1 and d >= classes + subclusters",
        ));
    }
    if !(0.0..=1.0).contains(&spec.junk_fraction) {
        return Err(Error::invalid("junk fraction must lie in [0, 1]"));
    }
    let mut r = rng::seeded(spec.seed);
    let a = spec.class_separation / 2f64.sqrt();
    let b = spec.subcluster_separation / 2f64.sqrt();
    let n = spec.classes * spec.per_class;
    let mut data = Vec::with_capacity(n * spec.d);
    let mut labels = Vec::with_capacity(n);
    let mut metas = Vec::with_capacity(n);
    for c in 0..spec.classes {
        for i in 0..spec.per_class {
            let junk = r.random::<f64>() < spec.junk_fraction;
            let j = i % spec.subclusters;
            for axis in 0..spec.d {
                let v = if junk {
                    r.random_range(-a..a)
                } else {
                    let mut centre = 0.0;
                    if axis == c {
                        centre += a;
                    }
                    if axis == spec.classes + j {
                        centre += b;
                    }
                    centre + gaussian(&mut r, spec.sigma)
                };
                data.push(v as f32);
            }
            let guess_rate = if junk {
                r.random_range(0.0..0.1)
            } else {
                r.random_range(0.1..=1.0)
            };
            metas.push(SampleMeta {
                sample_id: format!("c{c}-{i}"),
                label_id: c as u32,
                guess_rate,
            });
            labels.push(c as u32);
        }
    }
    let names = (0..spec.classes).map(|c| format!("class{c}")).collect();
    Ok((EmbeddingSet::new(spec.d, data, labels, names)?, metas))
}

/// Names of the four classes of [`colored_shapes`].
pub const SHAPE_NAMES: [&str; 4] = ["red_square", "green_disc", "blue_triangle", "yellow_cross"];

const SHAPE_COLORS: [[u8; 3]; 4] = [[220, 40, 40], [40, 200, 60], [50, 70, 230], [230, 210, 40]];

/// `per_class` RGB images of side `size` for each of four classes: a red
/// square, a green disc, a blue triangle and a yellow cross, with random
/// position, scale, small color jitter and a noisy dark background.
pub fn colored_shapes(per_class: usize, size: usize, seed: u64) -> Result<ImageSet> {
    if size < 8 {
        return Err(Error::invalid("image size must be at least 8"));
    }
    let mut r = rng::seeded(seed);
    let mut pixels = Vec::with_capacity(4 * per_class * size * size * 3);
    let mut labels = Vec::with_capacity(4 * per_class);
    for i in 0..4 * per_class {
        let class = i % 4;
        let half = r.random_range(size as f64 * 0.2..size as f64 * 0.35);
        let cx = r.random_range(half..size as f64 - half);
        let cy = r.random_range(half..size as f64 - half);
        let color =
            SHAPE_COLORS[class].map(|v| (v as i32 + r.random_range(-20..=20)).clamp(0, 255) as u8);
        for y in 0..size {
            for x in 0..size {
                let dx = x as f64 + 0.5 - cx;
                let dy = y as f64 + 0.5 - cy;
                let inside = match class {
                    0 => dx.abs() <= half && dy.abs() <= half,
                    1 => dx * dx + dy * dy <= half * half,
                    // apex up, base at dy = half
                    2 => dy <= half && dy >= -half && dx.abs() <= (dy + half) / 2.0,
                    _ => {
                        (dx.abs() <= half / 3.0 && dy.abs() <= half)
                            || (dy.abs() <= half / 3.0 && dx.abs() <= half)
                    }
                };
                for &c in &color {
                    pixels.push(if inside { c } else { r.random_range(0..40) });
                }
            }
        }
        labels.push(class as u32);
    }
    let set = ImageSet {
        channels: 3,
        height: size,
        width: size,
        pixels,
        labels,
        label_names: SHAPE_NAMES.iter().map(|s| s.to_string()).collect(),
    };
    set.validate()?;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::distance;

    #[test]
    fn means_are_separated() {
        let means = separated_means(3, 2, 20.0, 10.0, 4).unwrap();
        for i in 0..3 {
            for j in 0..i {
                assert!(distance(&means[i], &means[j]) >= 10.0);
            }
        }
    }

    #[test]
    fn planted_geometry() {
        let spec = PlantedSpec {
            sigma: 0.0,
            ..Default::default()
        };
        let (set, metas) = planted_classes(&spec).unwrap();
        assert_eq!(set.n(), 600);
        assert_eq!(set.class_counts(), vec![60; 10]);
        assert!(metas.iter().all(|m| m.guess_rate >= 0.1));
        // first sub-cluster of class 0 vs class 1, and two sub-clusters of class 0
        let d01 = crate::matrix::distance_f32(set.row(0), set.row(60));
        let d_sub = crate::matrix::distance_f32(set.row(0), set.row(1));
        assert!((d01 - 20.0).abs() < 1e-4, "{d01}");
        assert!((d_sub - 5.0).abs() < 1e-4, "{d_sub}");
    }

    #[test]
    fn junk_rows_have_low_rates() {
        let spec = PlantedSpec {
            junk_fraction: 0.2,
            seed: 3,
            ..Default::default()
        };
        let (_, metas) = planted_classes(&spec).unwrap();
        let junk = metas.iter().filter(|m| m.guess_rate < 0.1).count();
        assert!(junk > 60 && junk < 180, "{junk}");
    }

    #[test]
    fn shapes_are_deterministic() {
        let a = colored_shapes(2, 16, 1).unwrap();
        assert_eq!(a, colored_shapes(2, 16, 1).unwrap());
        assert_eq!(a.len(), 8);
        assert_eq!(a.labels, vec![0, 1, 2, 3, 0, 1, 2, 3]);
    }
}
