//! Numeric CSV ingestion.

use std::path::Path;

use ndarray::Array2;

use super::PointCloud;
use crate::error::{Error, Result};

/// Reads a headerless numeric CSV. With `label_last`, the final column is
/// an integer class label rather than a coordinate.
pub fn load_csv(path: impl AsRef<Path>, label_last: bool) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, label_last)
}

/// Writes one row per point in shortest round-trip form, labels last when present.
pub fn write_csv(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_rows(std::io::BufWriter::new(file), cloud).map_err(|e| Error::io(path, e))
}

/// [`write_csv`] into any writer.
pub fn write_csv_to<W: std::io::Write>(writer: W, cloud: &PointCloud) -> Result<()> {
    write_rows(writer, cloud).map_err(|e| Error::io("<output>", e))
}

fn write_rows<W: std::io::Write>(writer: W, cloud: &PointCloud) -> std::io::Result<()> {
    let mut w = ::csv::Writer::from_writer(writer);
    let mut record = Vec::with_capacity(cloud.dim() + 1);
    for i in 0..cloud.len() {
        record.clear();
        record.extend(cloud.row(i).iter().map(|v| format!("{v:?}")));
        if let Some(labels) = cloud.labels() {
            record.push(labels[i].to_string());
        }
        w.write_record(&record)?;
    }
    w.flush()
}

/// Row and column numbers in errors are 1-based.
pub fn parse_csv(text: &str, label_last: bool) -> Result<PointCloud> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(::csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut flat = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            col: 0,
            msg: e.to_string(),
        })?;
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Parse {
                row,
                col: record.len().min(w) + 1,
                msg: format!("ragged row: {} fields, expected {w}", record.len()),
            });
        }
        let ncoords = if label_last { w.saturating_sub(1) } else { w };
        if ncoords == 0 {
            return Err(Error::Parse {
                row,
                col: 1,
                msg: "row has no coordinate columns".into(),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            if label_last && c == w - 1 {
                let label = cell.parse::<usize>().map_err(|_| Error::Parse {
                    row,
                    col: c + 1,
                    msg: format!("label {cell:?} is not a non-negative integer"),
                })?;
                labels.push(label);
            } else {
                let v = cell
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        row,
                        col: c + 1,
                        msg: format!("{cell:?} is not a finite number"),
                    })?;
                flat.push(v);
            }
        }
        rows += 1;
    }
    let dim = match width {
        Some(w) if label_last => w - 1,
        Some(w) => w,
        None => return Err(Error::Parse { row: 0, col: 0, msg: "empty CSV".into() }),
    };
    let points = Array2::from_shape_vec((rows, dim), flat).expect("rows checked");
    PointCloud::new(points, label_last.then_some(labels))
}
