//! Embedding-set directory format.
//!
//! ```text
//! <dir>/meta.json          {"version":1,"n":<int>,"d":<int>,"label_names":[...]}
//! <dir>/embeddings.f32     n*d little-endian f32, row-major, no header
//! <dir>/labels.u32         n little-endian u32
//! <dir>/meta_samples.csv   optional: sample_id,label_id,guess_rate
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EmbeddingSet, SampleMeta};
use crate::error::{Error, Result};
use crate::FORMAT_VERSION;

pub const META_FILE: &str = "meta.json";
pub const EMBEDDINGS_FILE: &str = "embeddings.f32";
pub const LABELS_FILE: &str = "labels.u32";
pub const SAMPLE_META_FILE: &str = "meta_samples.csv";

#[derive(Debug, Serialize, Deserialize)]
struct SetMeta {
    version: u32,
    n: usize,
    d: usize,
    label_names: Vec<String>,
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn f32_from_le(path: &Path, bytes: &[u8]) -> Result<Vec<f32>> {
    if !bytes.len().is_multiple_of(4) {
        return Err(Error::format(path, "length is not a multiple of 4 bytes"));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub(crate) fn u32_from_le(path: &Path, bytes: &[u8]) -> Result<Vec<u32>> {
    if !bytes.len().is_multiple_of(4) {
        return Err(Error::format(path, "length is not a multiple of 4 bytes"));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub(crate) fn f32_to_le(values: &[f32]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn u32_to_le(values: &[u32]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn load_embedding_set(dir: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let dir = dir.as_ref();
    let meta_path = dir.join(META_FILE);
    let meta: SetMeta = serde_json::from_slice(&read_file(&meta_path)?)
        .map_err(|e| Error::format(&meta_path, e.to_string()))?;
    if meta.version != FORMAT_VERSION {
        return Err(Error::format(
            &meta_path,
            format!("unsupported version {}", meta.version),
        ));
    }

    let emb_path = dir.join(EMBEDDINGS_FILE);
    let data = f32_from_le(&emb_path, &read_file(&emb_path)?)?;
    let labels_path = dir.join(LABELS_FILE);
    let labels = u32_from_le(&labels_path, &read_file(&labels_path)?)?;

    if labels.len() != meta.n {
        return Err(Error::SizeMismatch(format!(
            "meta.json says n={} but {} holds {} labels",
            meta.n,
            LABELS_FILE,
            labels.len()
        )));
    }
    if data.len() != meta.n * meta.d {
        return Err(Error::SizeMismatch(format!(
            "meta.json says n={} d={} but {} holds {} values",
            meta.n,
            meta.d,
            EMBEDDINGS_FILE,
            data.len()
        )));
    }
    EmbeddingSet::new(meta.d, data, labels, meta.label_names)
}

/// Writes the three required files, creating `dir` if needed.
pub fn save_embedding_set(set: &EmbeddingSet, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    create_dir(dir)?;
    let meta = SetMeta {
        version: FORMAT_VERSION,
        n: set.n(),
        d: set.d(),
        label_names: set.label_names().to_vec(),
    };
    write_file(&dir.join(META_FILE), &serde_json::to_vec(&meta)?)?;
    write_file(&dir.join(EMBEDDINGS_FILE), &f32_to_le(set.data()))?;
    write_file(&dir.join(LABELS_FILE), &u32_to_le(set.labels()))?;
    Ok(())
}

pub fn load_sample_meta(path: impl AsRef<Path>) -> Result<Vec<SampleMeta>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
        _ => Error::Csv(e),
    })?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["sample_id", "label_id", "guess_rate"] {
        return Err(Error::format(
            path,
            "expected header sample_id,label_id,guess_rate",
        ));
    }
    let mut out = Vec::new();
    for record in reader.deserialize() {
        let meta: SampleMeta = record?;
        if !(0.0..=1.0).contains(&meta.guess_rate) {
            return Err(Error::format(
                path,
                format!(
                    "guess_rate {} of sample {} outside [0, 1]",
                    meta.guess_rate, meta.sample_id
                ),
            ));
        }
        out.push(meta);
    }
    Ok(out)
}

pub fn save_sample_meta(metas: &[SampleMeta], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
        _ => Error::Csv(e),
    })?;
    for m in metas {
        writer.serialize(m)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Loads a small fixture from CSV with header `label,<feature columns>`.
///
/// Class ids are assigned to the distinct label strings in sorted order.
pub fn load_csv_embedding_set(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("label") || headers.len() < 2 {
        return Err(Error::format(
            path,
            "expected header label,<feature columns>",
        ));
    }
    let d = headers.len() - 1;
    let mut names = Vec::new();
    let mut data = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != d + 1 {
            return Err(Error::format(
                path,
                format!(
                    "row {} has {} fields, expected {}",
                    line + 1,
                    record.len(),
                    d + 1
                ),
            ));
        }
        names.push(record[0].to_string());
        for field in record.iter().skip(1) {
            let v: f32 = field.trim().parse().map_err(|_| {
                Error::format(path, format!("row {}: bad number {field:?}", line + 1))
            })?;
            data.push(v);
        }
    }
    let mut label_names = names.clone();
    label_names.sort();
    label_names.dedup();
    let labels = names
        .iter()
        .map(|n| label_names.binary_search(n).expect("present") as u32)
        .collect();
    EmbeddingSet::new(d, data, labels, label_names)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> EmbeddingSet {
        EmbeddingSet::new(
            3,
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            vec![0, 1],
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_small_set() {
        let dir = tempfile::tempdir().unwrap();
        save_embedding_set(&small(), dir.path()).unwrap();
        let back = load_embedding_set(dir.path()).unwrap();
        assert_eq!(back, small());
        assert_eq!(back.row(1), &[4.0, 5.0, 6.0]);
        let meta = fs::read_to_string(dir.path().join(META_FILE)).unwrap();
        assert_eq!(meta, r#"{"version":1,"n":2,"d":3,"label_names":["a","b"]}"#);
    }

    #[test]
    fn label_count_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        save_embedding_set(&small(), dir.path()).unwrap();
        fs::write(
            dir.path().join(META_FILE),
            r#"{"version":1,"n":5,"d":3,"label_names":["a","b"]}"#,
        )
        .unwrap();
        let err = load_embedding_set(dir.path()).unwrap_err();
        assert!(matches!(err, Error::SizeMismatch(_)), "{err}");
    }

    #[test]
    fn missing_file_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_embedding_set(dir.path()).unwrap_err();
        assert!(err.is_io());
    }

    #[test]
    fn non_finite_payload_rejected() {
        let dir = tempfile::tempdir().unwrap();
        save_embedding_set(&small(), dir.path()).unwrap();
        let mut bytes = fs::read(dir.path().join(EMBEDDINGS_FILE)).unwrap();
        bytes[4..8].copy_from_slice(&f32::INFINITY.to_le_bytes());
        fs::write(dir.path().join(EMBEDDINGS_FILE), bytes).unwrap();
        assert!(matches!(
            load_embedding_set(dir.path()).unwrap_err(),
            Error::NonFinite(1)
        ));
    }

    #[test]
    fn out_of_range_label_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        save_embedding_set(&small(), dir.path()).unwrap();
        fs::write(dir.path().join(LABELS_FILE), u32_to_le(&[0, 7])).unwrap();
        assert!(matches!(
            load_embedding_set(dir.path()).unwrap_err(),
            Error::LabelOutOfRange { label: 7, .. }
        ));
    }

    #[test]
    fn sample_meta_round_trip_with_quoting() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(SAMPLE_META_FILE);
        let metas = vec![
            SampleMeta {
                sample_id: "a,\"quoted\"".into(),
                label_id: 0,
                guess_rate: 0.25,
            },
            SampleMeta {
                sample_id: "b".into(),
                label_id: 1,
                guess_rate: 1.0,
            },
        ];
        save_sample_meta(&metas, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("sample_id,label_id,guess_rate\n\"a,\"\"quoted\"\"\",0,0.25\n"));
        assert_eq!(load_sample_meta(&path).unwrap(), metas);
    }

    #[test]
    fn sample_meta_rejects_bad_rate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(SAMPLE_META_FILE);
        fs::write(&path, "sample_id,label_id,guess_rate\nx,0,1.5\n").unwrap();
        assert!(load_sample_meta(&path).is_err());
    }

    #[test]
    fn csv_fixture_loader() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fixture.csv");
        fs::write(&path, "label,f0,f1\ncat,1,2\ndog,3,4\ncat,5,6\n").unwrap();
        let set = load_csv_embedding_set(&path).unwrap();
        assert_eq!(set.d(), 2);
        assert_eq!(set.labels(), &[0, 1, 0]);
        assert_eq!(set.label_names(), &["cat".to_string(), "dog".to_string()]);
        assert_eq!(set.row(2), &[5.0, 6.0]);
    }
}
