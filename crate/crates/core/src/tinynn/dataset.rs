//! Image datasets for the CNN.
//!
//! ```text
//! <dir>/index.json   {"version":1,"n":..,"channels":3,"height":..,"width":..,"label_names":[...]}
//! <dir>/images.u8    n images, each height*width*channels bytes, row-major
//!                    with interleaved channels (RGBRGB...)
//! <dir>/labels.u32   n little-endian u32
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tensor::{Scalar, Tensor4};
use crate::data::io as binio;
use crate::error::{Error, Result};
use crate::FORMAT_VERSION;

pub const INDEX_FILE: &str = "index.json";
pub const IMAGES_FILE: &str = "images.u8";
pub const LABELS_FILE: &str = "labels.u32";

#[derive(Serialize, Deserialize)]
struct Index {
    version: u32,
    n: usize,
    channels: usize,
    height: usize,
    width: usize,
    label_names: Vec<String>,
}

/// Raw 8-bit images with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    /// `n * height * width * channels` bytes, channels interleaved.
    pub pixels: Vec<u8>,
    pub labels: Vec<u32>,
    pub label_names: Vec<String>,
}

impl ImageSet {
    pub fn validate(&self) -> Result<()> {
        let per = self.channels * self.height * self.width;
        if per == 0 {
            return Err(Error::invalid("image dimensions must be non-zero"));
        }
        if self.pixels.len() != self.labels.len() * per {
            return Err(Error::SizeMismatch(format!(
                "{} labels need {} pixel bytes, got {}",
                self.labels.len(),
                self.labels.len() * per,
                self.pixels.len()
            )));
        }
        let classes = self.label_names.len();
        if let Some(&l) = self.labels.iter().find(|&&l| l as usize >= classes) {
            return Err(Error::LabelOutOfRange {
                label: l as usize,
                classes,
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, rows: &[usize]) -> ImageSet {
        let per = self.channels * self.height * self.width;
        let mut pixels = Vec::with_capacity(rows.len() * per);
        for &r in rows {
            pixels.extend_from_slice(&self.pixels[r * per..(r + 1) * per]);
        }
        ImageSet {
            pixels,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            label_names: self.label_names.clone(),
            ..*self
        }
    }

    /// Channel-planar tensor with values scaled to `[0, 1]`, plus labels.
    pub fn to_tensor<T: Scalar>(&self) -> (Tensor4<T>, Vec<usize>) {
        let (c, h, w) = (self.channels, self.height, self.width);
        let n = self.len();
        let mut data = vec![T::zero(); n * c * h * w];
        let scale = T::of(1.0 / 255.0);
        for i in 0..n {
            let img = &self.pixels[i * h * w * c..(i + 1) * h * w * c];
            for y in 0..h {
                for x in 0..w {
                    for ch in 0..c {
                        data[((i * c + ch) * h + y) * w + x] =
                            T::of(img[(y * w + x) * c + ch] as f64) * scale;
                    }
                }
            }
        }
        let tensor = Tensor4::new([n, c, h, w], data).expect("finite by construction");
        (tensor, self.labels.iter().map(|&l| l as usize).collect())
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        self.validate()?;
        let dir = dir.as_ref();
        binio::create_dir(dir)?;
        let index = Index {
            version: FORMAT_VERSION,
            n: self.len(),
            channels: self.channels,
            height: self.height,
            width: self.width,
            label_names: self.label_names.clone(),
        };
        binio::write_file(&dir.join(INDEX_FILE), &serde_json::to_vec(&index)?)?;
        binio::write_file(&dir.join(IMAGES_FILE), &self.pixels)?;
        let labels: Vec<u8> = self.labels.iter().flat_map(|l| l.to_le_bytes()).collect();
        binio::write_file(&dir.join(LABELS_FILE), &labels)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let index_path = dir.join(INDEX_FILE);
        let index: Index = serde_json::from_slice(&binio::read_file(&index_path)?)
            .map_err(|e| Error::format(&index_path, e.to_string()))?;
        if index.version != FORMAT_VERSION {
            return Err(Error::format(
                &index_path,
                format!("unsupported version {}", index.version),
            ));
        }
        let labels_path = dir.join(LABELS_FILE);
        let labels = binio::u32_from_le(&labels_path, &binio::read_file(&labels_path)?)?;
        if labels.len() != index.n {
            return Err(Error::SizeMismatch(format!(
                "index.json says n={} but {LABELS_FILE} holds {}",
                index.n,
                labels.len()
            )));
        }
        let set = ImageSet {
            channels: index.channels,
            height: index.height,
            width: index.width,
            pixels: binio::read_file(&dir.join(IMAGES_FILE))?,
            labels,
            label_names: index.label_names,
        };
        set.validate()?;
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ImageSet {
        ImageSet {
            channels: 3,
            height: 1,
            width: 2,
            pixels: vec![255, 0, 0, 0, 51, 0, 0, 0, 255, 10, 20, 30],
            labels: vec![0, 1],
            label_names: vec!["red".into(), "blue".into()],
        }
    }

    #[test]
    fn tensor_layout_is_planar() {
        let (t, labels) = tiny().to_tensor::<f64>();
        assert_eq!(t.dims(), [2, 3, 1, 2]);
        assert_eq!(t.plane(0, 0), &[1.0, 0.0]);
        assert_eq!(t.plane(0, 1), &[0.0, 0.2]);
        assert_eq!(t.plane(1, 2), &[1.0, 30.0 / 255.0]);
        assert_eq!(labels, vec![0, 1]);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        tiny().save(dir.path()).unwrap();
        assert_eq!(ImageSet::load(dir.path()).unwrap(), tiny());
    }

    #[test]
    fn validation() {
        let mut bad = tiny();
        bad.pixels.pop();
        assert!(bad.validate().is_err());
        let mut bad = tiny();
        bad.labels[0] = 9;
        assert!(bad.validate().is_err());
    }
}
