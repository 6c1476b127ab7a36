//! File formats: points and labels as CSV, images in the big-endian IDX format.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{Clustering, Label, PointSet};

/// Reads one point per row, `d` float columns. `has_header` skips the first line.
pub fn read_points_csv(path: impl AsRef<Path>, has_header: bool) -> Result<PointSet> {
    read_points(File::open(path)?, has_header)
}

pub fn read_points(reader: impl Read, has_header: bool) -> Result<PointSet> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(has_header).trim(csv::Trim::All).from_reader(reader);
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Format(format!("row {}: bad number {f:?}", line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    PointSet::from_rows(&rows)
}

pub fn write_points_csv(path: impl AsRef<Path>, points: &PointSet) -> Result<()> {
    write_points(File::create(path)?, points)
}

pub fn write_points(writer: impl Write, points: &PointSet) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for row in points.matrix().row_iter() {
        w.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a single-column label file. `k` is taken as the largest cluster label present
/// unless `k` is given explicitly.
pub fn read_labels_csv(path: impl AsRef<Path>, k: Option<usize>) -> Result<Clustering> {
    read_labels(File::open(path)?, k)
}

pub fn read_labels(reader: impl Read, k: Option<usize>) -> Result<Clustering> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 1 {
            return Err(Error::Format(format!("expected one label column, got {}", rec.len())));
        }
        labels.push(rec[0].parse::<Label>()?);
    }
    let inferred = labels.iter().filter_map(|l| l.cluster()).max().map_or(0, |m| m + 1);
    Clustering::new(labels, k.unwrap_or(inferred).max(inferred))
}

pub fn write_labels_csv(path: impl AsRef<Path>, clustering: &Clustering) -> Result<()> {
    write_labels(File::create(path)?, clustering)
}

pub fn write_labels(mut writer: impl Write, clustering: &Clustering) -> Result<()> {
    for l in clustering.labels() {
        writeln!(writer, "{l}")?;
    }
    Ok(())
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Images from an IDX3 file, each flattened to `rows * cols` values scaled to `[0, 1]`.
///
/// A file with zero images yields `None`, since a point set cannot be empty.
pub fn load_idx(path: impl AsRef<Path>) -> Result<Option<PointSet>> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    parse_idx_images(&bytes)
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<Option<PointSet>> {
    let header = be_words(bytes, 4)?;
    if header[0] != IDX_IMAGES_MAGIC {
        return Err(Error::Format(format!("bad IDX image magic {:#010x}", header[0])));
    }
    let (count, rows, cols) = (header[1] as usize, header[2] as usize, header[3] as usize);
    let dim = rows * cols;
    let payload = &bytes[16..];
    if payload.len() < count * dim {
        return Err(Error::Format(format!(
            "truncated IDX payload: need {} bytes, have {}",
            count * dim,
            payload.len()
        )));
    }
    if count == 0 {
        return Ok(None);
    }
    if dim == 0 {
        return Err(Error::Format("IDX images have zero pixels".into()));
    }
    let m = DMatrix::from_fn(count, dim, |i, j| f64::from(payload[i * dim + j]) / 255.0);
    PointSet::new(m).map(Some)
}

/// Class labels from an IDX1 file.
pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    parse_idx_labels(&bytes)
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let header = be_words(bytes, 2)?;
    if header[0] != IDX_LABELS_MAGIC {
        return Err(Error::Format(format!("bad IDX label magic {:#010x}", header[0])));
    }
    let count = header[1] as usize;
    let payload = &bytes[8..];
    if payload.len() < count {
        return Err(Error::Format(format!(
            "truncated IDX labels: need {count} bytes, have {}",
            payload.len()
        )));
    }
    Ok(payload[..count].to_vec())
}

fn be_words(bytes: &[u8], n: usize) -> Result<Vec<u32>> {
    if bytes.len() < 4 * n {
        return Err(Error::Format("truncated IDX header".into()));
    }
    Ok(bytes[..4 * n].chunks_exact(4).map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]])).collect())
}
