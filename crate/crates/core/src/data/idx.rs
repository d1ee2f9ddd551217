//! IDX binary tensors (the MNIST family of files).
//!
//! Layout: a 4-byte big-endian magic, one big-endian `u32` per dimension,
//! then the raw unsigned bytes in row-major order.

use std::io::{Cursor, Write};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;

use super::PointCloud;
use crate::error::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn header(bytes: &[u8], magic: u32, ndims: usize, path: &Path) -> Result<(Vec<usize>, usize)> {
    let fmt = |msg: String| Error::Format {
        path: path.to_path_buf(),
        msg,
    };
    let mut cur = Cursor::new(bytes);
    let found = cur
        .read_u32::<BigEndian>()
        .map_err(|_| fmt("file shorter than the 4-byte magic".into()))?;
    if found != magic {
        return Err(fmt(format!(
            "unexpected magic 0x{found:08x} (expected 0x{magic:08x})"
        )));
    }
    let dims = (0..ndims)
        .map(|_| cur.read_u32::<BigEndian>().map(|v| v as usize))
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|_| fmt("truncated dimension header".into()))?;
    Ok((dims, 4 + 4 * ndims))
}

fn payload(bytes: &[u8], offset: usize, expected: usize) -> Result<&[u8]> {
    let found = bytes.len() - offset;
    if found != expected {
        return Err(Error::LengthMismatch { expected, found });
    }
    Ok(&bytes[offset..])
}

/// Parses an image tensor; each image becomes one row scaled to `[0, 1]`.
pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<PointCloud> {
    let (dims, offset) = header(bytes, IDX_IMAGES_MAGIC, 3, path)?;
    let (n, d) = (dims[0], dims[1] * dims[2]);
    if d == 0 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: "images have zero pixels".into(),
        });
    }
    let raw = payload(bytes, offset, n * d)?;
    let points = Array2::from_shape_vec((n, d), raw.iter().map(|&b| f64::from(b) / 255.0).collect())
        .expect("shape checked above");
    PointCloud::unlabeled(points)
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<usize>> {
    let (dims, offset) = header(bytes, IDX_LABELS_MAGIC, 1, path)?;
    Ok(payload(bytes, offset, dims[0])?
        .iter()
        .map(|&b| usize::from(b))
        .collect())
}

pub fn load_idx_images(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    parse_idx_images(&read_file(path)?, path)
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    parse_idx_labels(&read_file(path)?, path)
}

/// Writes `n` images of `rows x cols` raw bytes.
pub fn write_idx_images(
    path: impl AsRef<Path>,
    rows: usize,
    cols: usize,
    pixels: &[u8],
) -> Result<()> {
    let path = path.as_ref();
    if rows * cols == 0 || !pixels.len().is_multiple_of(rows * cols) {
        return Err(Error::Parameter(format!(
            "{} bytes is not a whole number of {rows}x{cols} images",
            pixels.len()
        )));
    }
    let n = pixels.len() / (rows * cols);
    let mut buf = Vec::with_capacity(16 + pixels.len());
    buf.write_u32::<BigEndian>(IDX_IMAGES_MAGIC).unwrap();
    for v in [n, rows, cols] {
        buf.write_u32::<BigEndian>(v as u32).unwrap();
    }
    buf.extend_from_slice(pixels);
    write_all(path, &buf)
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    let mut buf = Vec::with_capacity(8 + labels.len());
    buf.write_u32::<BigEndian>(IDX_LABELS_MAGIC).unwrap();
    buf.write_u32::<BigEndian>(labels.len() as u32).unwrap();
    buf.extend_from_slice(labels);
    write_all(path.as_ref(), &buf)
}

fn write_all(path: &Path, buf: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(buf).map_err(|e| Error::io(path, e))
}
