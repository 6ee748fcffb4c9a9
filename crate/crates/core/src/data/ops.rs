use serde::{Deserialize, Serialize};

use super::{EmbeddingSet, SampleMeta};
use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_GUESS_RATE_THRESHOLD: f64 = 0.1;
pub const DEFAULT_HISTOGRAM_BINS: usize = 10;

// Guards floor() against products like 0.29 * 100 = 28.999999999999996.
const ROUNDING_SLACK: f64 = 1e-9;

/// Indices of metas whose guess rate reaches `threshold`, in order.
pub fn passing_rows(metas: &[SampleMeta], threshold: f64) -> Vec<usize> {
    metas
        .iter()
        .enumerate()
        .filter(|(_, m)| m.guess_rate >= threshold)
        .map(|(i, _)| i)
        .collect()
}

/// Keeps rows whose drawing was guessed by at least `threshold` of players.
pub fn clean_by_guess_rate(
    set: &EmbeddingSet,
    metas: &[SampleMeta],
    threshold: f64,
) -> Result<EmbeddingSet> {
    if metas.len() != set.n() {
        return Err(Error::SizeMismatch(format!(
            "{} sample metas for {} rows",
            metas.len(),
            set.n()
        )));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!(
            "threshold {threshold} outside [0, 1]"
        )));
    }
    for (i, m) in metas.iter().enumerate() {
        if m.label_id != set.labels()[i] {
            return Err(Error::invalid(format!(
                "sample {} ({}) has label {} in metadata but {} in the set",
                i,
                m.sample_id,
                m.label_id,
                set.labels()[i]
            )));
        }
        if !(0.0..=1.0).contains(&m.guess_rate) {
            return Err(Error::invalid(format!(
                "sample {} has guess_rate {} outside [0, 1]",
                m.sample_id, m.guess_rate
            )));
        }
    }
    Ok(set.select(&passing_rows(metas, threshold)))
}

/// Up-samples every class to the largest class count.
///
/// Original rows keep their positions; the added copies follow, grouped by
/// ascending class, each drawn uniformly with replacement from its class.
pub fn rebalance_classes(set: &EmbeddingSet, seed: u64) -> Result<EmbeddingSet> {
    let by_class = set.class_rows();
    if let Some(empty) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::EmptyClass(empty));
    }
    let target = by_class.iter().map(Vec::len).max().unwrap_or(0);
    let mut rng = rng::seeded(seed);
    let mut rows: Vec<usize> = (0..set.n()).collect();
    for members in &by_class {
        for _ in members.len()..target {
            rows.push(members[rng::index(&mut rng, members.len())]);
        }
    }
    Ok(set.select(&rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.8,
            val_frac: 0.1,
            test_frac: 0.1,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn new(train_frac: f64, val_frac: f64, test_frac: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            train_frac,
            val_frac,
            test_frac,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let fracs = [self.train_frac, self.val_frac, self.test_frac];
        if fracs.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::invalid(format!(
                "split fractions must be positive, got {fracs:?}"
            )));
        }
        if (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "split fractions must sum to 1, got {fracs:?}"
            )));
        }
        Ok(())
    }
}

fn floor_slack(x: f64) -> usize {
    (x + ROUNDING_SLACK).floor() as usize
}

/// Largest-remainder apportionment of `total` over `weights`: item `i`
/// receives `floor(total * w_i / sum)` or one more, extras going to the
/// largest remainders (ties to the lower index). Exact integer arithmetic.
fn apportion(total: usize, weights: &[usize]) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let total = total as u128;
    let sum_w = sum as u128;
    let mut out: Vec<usize> = weights
        .iter()
        .map(|&w| (w as u128 * total / sum_w) as usize)
        .collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(weights[i] as u128 * total % sum_w), i));
    let extra = total as usize - out.iter().sum::<usize>();
    for &i in order.iter().take(extra) {
        out[i] += 1;
    }
    out
}

/// Stratified train/val/test row indices, each ascending.
///
/// Global val and test sizes are `floor(n * frac)`; train takes the rest.
/// Train rows are apportioned over classes in proportion to class size, so
/// each class's train count is within one of its share of the train total.
/// Every class's remaining rows are then apportioned between val and test
/// the same way.
pub fn stratified_split_indices(
    labels: &[u32],
    num_classes: usize,
    spec: &SplitSpec,
) -> Result<[Vec<usize>; 3]> {
    spec.validate()?;
    let n = labels.len();
    if n < 3 {
        return Err(Error::invalid(format!("cannot split {n} rows three ways")));
    }
    let val_total = floor_slack(n as f64 * spec.val_frac);
    let test_total = floor_slack(n as f64 * spec.test_frac);
    if val_total == 0 || test_total == 0 || val_total + test_total >= n {
        return Err(Error::invalid(format!(
            "split of {n} rows with fractions {}/{}/{} leaves a part empty",
            spec.train_frac, spec.val_frac, spec.test_frac
        )));
    }

    let mut members = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        let l = l as usize;
        if l >= num_classes {
            return Err(Error::LabelOutOfRange {
                label: l,
                classes: num_classes,
            });
        }
        members[l].push(i);
    }
    let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let train = apportion(n - val_total - test_total, &sizes);
    let held: Vec<usize> = sizes.iter().zip(&train).map(|(m, t)| m - t).collect();
    let val = apportion(val_total, &held);
    let test: Vec<usize> = held.iter().zip(&val).map(|(h, v)| h - v).collect();

    let mut parts = [Vec::new(), Vec::new(), Vec::new()];
    for (c, rows) in members.into_iter().enumerate() {
        let mut rows = rows;
        let mut rng = rng::seeded(rng::derive(spec.seed, c as u64));
        rng::shuffle(&mut rng, &mut rows);
        let (v, rest) = rows.split_at(val[c]);
        let (t, tr) = rest.split_at(test[c]);
        parts[0].extend_from_slice(tr);
        parts[1].extend_from_slice(v);
        parts[2].extend_from_slice(t);
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    if parts.iter().any(Vec::is_empty) {
        return Err(Error::invalid("a split part received no rows"));
    }
    Ok(parts)
}

/// Splits into (train, val, test) embedding sets.
pub fn split(
    set: &EmbeddingSet,
    spec: &SplitSpec,
) -> Result<(EmbeddingSet, EmbeddingSet, EmbeddingSet)> {
    let [train, val, test] = stratified_split_indices(set.labels(), set.num_classes(), spec)?;
    Ok((set.select(&train), set.select(&val), set.select(&test)))
}

/// Class sizes and a histogram of how many classes fall in each size range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassHistogram {
    pub counts: Vec<usize>,
    /// `bins + 1` uniform edges spanning `[min count, max count]`.
    pub edges: Vec<f64>,
    pub bin_counts: Vec<usize>,
}

pub fn class_histogram(set: &EmbeddingSet, bins: usize) -> Result<ClassHistogram> {
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    let counts = set.class_counts();
    let min = counts.iter().copied().min().unwrap_or(0) as f64;
    let max = counts.iter().copied().max().unwrap_or(0) as f64;
    let width = (max - min) / bins as f64;
    let edges = (0..=bins).map(|i| min + width * i as f64).collect();
    let mut bin_counts = vec![0; bins];
    for &c in &counts {
        let b = if width > 0.0 {
            (((c as f64 - min) / width).floor() as usize).min(bins - 1)
        } else {
            0
        };
        bin_counts[b] += 1;
    }
    Ok(ClassHistogram {
        counts,
        edges,
        bin_counts,
    })
}
