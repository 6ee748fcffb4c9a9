//! CSV/JSON report files. The format is chosen from the file extension.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::cluster::{CentroidExemplars, SilhouetteReport};
use crate::data::io as binio;
use crate::error::{Error, Result};
use crate::eval::{AccuracyReport, ConfusionMatrix};
use crate::knnpp::Prediction;
use crate::project::Projection2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    /// `.csv` or `.json` (case-insensitive); anything else is an error.
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("csv") => Ok(OutputFormat::Csv),
            Some("json") => Ok(OutputFormat::Json),
            _ => Err(Error::invalid(format!(
                "cannot infer output format of {}: use a .csv or .json extension",
                path.display()
            ))),
        }
    }
}

/// `printf("%.9g")`.
pub fn format_sig9(x: f64) -> String {
    format_sig(x, 9)
}

/// `printf("%.{digits}g")` for `digits >= 1`.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", strip_zeros(mantissa), sign, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    })
}

fn finish(path: &Path, mut w: csv::Writer<std::fs::File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    binio::write_file(path.as_ref(), &bytes)
}

#[derive(Serialize)]
struct PredictionRow {
    query_index: usize,
    rank: usize,
    class_id: usize,
    score: f64,
}

/// `query_index,rank,class_id,score` (rank 1-based) or a JSON array of rows.
pub fn write_predictions(path: impl AsRef<Path>, predictions: &[Prediction]) -> Result<()> {
    let path = path.as_ref();
    let rows = predictions.iter().enumerate().flat_map(|(i, p)| {
        let q = p.query_index.unwrap_or(i);
        p.ranked
            .iter()
            .enumerate()
            .map(move |(r, &(class_id, score))| PredictionRow {
                query_index: q,
                rank: r + 1,
                class_id,
                score,
            })
    });
    match OutputFormat::from_path(path)? {
        OutputFormat::Json => write_json(path, &rows.collect::<Vec<_>>()),
        OutputFormat::Csv => {
            let mut w = csv_writer(path)?;
            w.write_record(["query_index", "rank", "class_id", "score"])?;
            for r in rows {
                w.write_record([
                    r.query_index.to_string(),
                    r.rank.to_string(),
                    r.class_id.to_string(),
                    format_sig9(r.score),
                ])?;
            }
            finish(path, w)
        }
    }
}

/// Reads a predictions CSV back, one [`Prediction`] per query index in
/// ascending order. Query indices must be `0..q` without gaps and ranks
/// `1..` in order.
pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    let path = path.as_ref();
    if OutputFormat::from_path(path)? != OutputFormat::Csv {
        return Err(Error::format(path, "predictions must be read from CSV"));
    }
    let bytes = binio::read_file(path)?;
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["query_index", "rank", "class_id", "score"] {
        return Err(Error::format(
            path,
            "expected header query_index,rank,class_id,score",
        ));
    }
    let mut by_query: BTreeMap<usize, Vec<(usize, usize, f64)>> = BTreeMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let bad = |what: &str| Error::format(path, format!("row {}: bad {what}", line + 1));
        let q: usize = record[0].parse().map_err(|_| bad("query_index"))?;
        let rank: usize = record[1].parse().map_err(|_| bad("rank"))?;
        let class_id: usize = record[2].parse().map_err(|_| bad("class_id"))?;
        let score: f64 = record[3].parse().map_err(|_| bad("score"))?;
        by_query.entry(q).or_default().push((rank, class_id, score));
    }
    let mut out = Vec::with_capacity(by_query.len());
    for (expected, (q, rows)) in by_query.into_iter().enumerate() {
        if q != expected {
            return Err(Error::format(
                path,
                format!("query index {expected} missing"),
            ));
        }
        if rows.iter().enumerate().any(|(i, r)| r.0 != i + 1) {
            return Err(Error::format(
                path,
                format!("ranks of query {q} are not 1.."),
            ));
        }
        out.push(Prediction {
            ranked: rows.into_iter().map(|(_, c, s)| (c, s)).collect(),
            query_index: Some(q),
        });
    }
    Ok(out)
}

/// CSV: header row `truth,<label names...>,abstain`, then one row per true
/// class starting with its name. JSON: the matrix object.
pub fn write_confusion(path: impl AsRef<Path>, matrix: &ConfusionMatrix) -> Result<()> {
    let path = path.as_ref();
    match OutputFormat::from_path(path)? {
        OutputFormat::Json => write_json(path, matrix),
        OutputFormat::Csv => {
            let mut w = csv_writer(path)?;
            let mut header = vec!["truth".to_string()];
            header.extend(matrix.label_names().iter().cloned());
            header.push("abstain".into());
            w.write_record(&header)?;
            for (c, name) in matrix.label_names().iter().enumerate() {
                let mut row = vec![name.clone()];
                row.extend(matrix.row(c).iter().map(u64::to_string));
                w.write_record(&row)?;
            }
            finish(path, w)
        }
    }
}

#[derive(Serialize)]
struct SilhouetteJson<'a> {
    overall: f64,
    points: Vec<SilhouetteRow<'a>>,
}

#[derive(Serialize)]
struct SilhouetteRow<'a> {
    point_index: usize,
    label: &'a str,
    s_i: f64,
}

/// `point_index,label,s_i`; JSON adds the overall mean.
pub fn write_silhouette(
    path: impl AsRef<Path>,
    report: &SilhouetteReport,
    labels: &[u32],
    label_names: &[String],
) -> Result<()> {
    let path = path.as_ref();
    if labels.len() != report.per_point.len() {
        return Err(Error::SizeMismatch(
            "labels and silhouette values differ in count".into(),
        ));
    }
    let name = |l: u32| {
        label_names
            .get(l as usize)
            .map(String::as_str)
            .unwrap_or("")
    };
    let points = report
        .per_point
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (&s, &l))| SilhouetteRow {
            point_index: i,
            label: name(l),
            s_i: s,
        })
        .collect::<Vec<_>>();
    match OutputFormat::from_path(path)? {
        OutputFormat::Json => write_json(
            path,
            &SilhouetteJson {
                overall: report.overall,
                points,
            },
        ),
        OutputFormat::Csv => {
            let mut w = csv_writer(path)?;
            w.write_record(["point_index", "label", "s_i"])?;
            for p in points {
                w.write_record([
                    p.point_index.to_string(),
                    p.label.to_string(),
                    format_sig9(p.s_i),
                ])?;
            }
            finish(path, w)
        }
    }
}

#[derive(Serialize)]
struct ExemplarRow<'a> {
    class: &'a str,
    centroid: usize,
    rank: usize,
    row: usize,
    distance: f64,
}

/// `class,centroid,rank,row,distance` with 1-based rank.
pub fn write_exemplars(
    path: impl AsRef<Path>,
    class_name: &str,
    exemplars: &[CentroidExemplars],
) -> Result<()> {
    let path = path.as_ref();
    let rows: Vec<ExemplarRow> = exemplars
        .iter()
        .flat_map(|e| {
            e.rows
                .iter()
                .enumerate()
                .map(move |(r, &(row, distance))| ExemplarRow {
                    class: class_name,
                    centroid: e.centroid,
                    rank: r + 1,
                    row,
                    distance,
                })
        })
        .collect();
    match OutputFormat::from_path(path)? {
        OutputFormat::Json => write_json(path, &rows),
        OutputFormat::Csv => {
            let mut w = csv_writer(path)?;
            w.write_record(["class", "centroid", "rank", "row", "distance"])?;
            for r in rows {
                w.write_record([
                    r.class.to_string(),
                    r.centroid.to_string(),
                    r.rank.to_string(),
                    r.row.to_string(),
                    format_sig9(r.distance),
                ])?;
            }
            finish(path, w)
        }
    }
}

/// `x,y,label_id,label_name`; JSON writes the whole projection.
pub fn write_projection(
    path: impl AsRef<Path>,
    projection: &Projection2D,
    label_names: &[String],
) -> Result<()> {
    let path = path.as_ref();
    match OutputFormat::from_path(path)? {
        OutputFormat::Json => write_json(path, projection),
        OutputFormat::Csv => {
            let mut w = csv_writer(path)?;
            w.write_record(["x", "y", "label_id", "label_name"])?;
            for (xy, &l) in projection.coords.iter().zip(&projection.labels) {
                let name = label_names.get(l as usize).cloned().unwrap_or_default();
                w.write_record([format_sig9(xy[0]), format_sig9(xy[1]), l.to_string(), name])?;
            }
            finish(path, w)
        }
    }
}

/// Two-column series such as `step,loss`, `epoch,val_loss` or `step,value`.
/// The index column starts at `first_index`.
pub fn write_series(
    path: impl AsRef<Path>,
    columns: [&str; 2],
    first_index: usize,
    values: &[f64],
) -> Result<()> {
    let path = path.as_ref();
    match OutputFormat::from_path(path)? {
        OutputFormat::Json => {
            let rows: Vec<BTreeMap<&str, f64>> = values
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    BTreeMap::from([(columns[0], (first_index + i) as f64), (columns[1], v)])
                })
                .collect();
            write_json(path, &rows)
        }
        OutputFormat::Csv => {
            let mut w = csv_writer(path)?;
            w.write_record(columns)?;
            for (i, &v) in values.iter().enumerate() {
                w.write_record([(first_index + i).to_string(), format_sig9(v)])?;
            }
            finish(path, w)
        }
    }
}

/// Reads a two-column series CSV written by [`write_series`]: returns the
/// first index and the values. Indices must be consecutive integers.
pub fn read_series(path: impl AsRef<Path>) -> Result<(usize, Vec<f64>)> {
    let path = path.as_ref();
    let bytes = binio::read_file(path)?;
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    if reader.headers()?.len() != 2 {
        return Err(Error::format(path, "expected two columns"));
    }
    let mut first = None;
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let bad = |what: &str| Error::format(path, format!("row {}: bad {what}", i + 1));
        let step: usize = record[0].parse().map_err(|_| bad("index"))?;
        let start = *first.get_or_insert(step);
        if step != start + i {
            return Err(bad("index (not consecutive)"));
        }
        values.push(record[1].parse::<f64>().map_err(|_| bad("value"))?);
    }
    Ok((first.unwrap_or(0), values))
}

/// `{"top_n":{"1":…,"5":…},"samples":…}`; CSV writes `n,accuracy` rows.
pub fn write_accuracy(path: impl AsRef<Path>, report: &AccuracyReport) -> Result<()> {
    let path = path.as_ref();
    match OutputFormat::from_path(path)? {
        OutputFormat::Json => write_json(path, report),
        OutputFormat::Csv => {
            let mut w = csv_writer(path)?;
            w.write_record(["n", "accuracy"])?;
            for (n, acc) in &report.top_n {
                w.write_record([n.to_string(), format_sig9(*acc)])?;
            }
            finish(path, w)
        }
    }
}
