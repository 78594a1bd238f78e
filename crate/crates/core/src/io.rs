//! CSV formats for datasets and centroid lists.
//!
//! Dataset files have the header `point_id,coord_0,...,coord_{d-1},truth`,
//! where `truth` is the cluster id or `-1` for an outlier. Centroid files have
//! `cluster_id,coord_0,...,coord_{d-1}`. Coordinates are written with the
//! shortest representation that parses back to the same `f64`.

use std::io::{Read, Write};
use std::path::Path;

use crate::datagen::{Dataset, Truth};
use crate::error::{Error, Result};
use crate::points::PointSet;

fn coord_header(d: usize) -> impl Iterator<Item = String> {
    (0..d).map(|j| format!("coord_{j}"))
}

fn check_header(headers: &csv::StringRecord, first: &str, last: Option<&str>) -> Result<usize> {
    let n = headers.len();
    let fixed = 1 + last.is_some() as usize;
    if n <= fixed || &headers[0] != first || last.is_some_and(|l| &headers[n - 1] != l) {
        return Err(Error::Parse(format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>())));
    }
    let d = n - fixed;
    for (j, name) in coord_header(d).enumerate() {
        if headers[j + 1] != name {
            return Err(Error::Parse(format!("expected column {name}, found {}", &headers[j + 1])));
        }
    }
    Ok(d)
}

fn parse_f64(s: &str, line: u64) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: invalid number {s:?}")))
}

pub fn write_dataset<W: Write>(dataset: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["point_id".to_string()];
    header.extend(coord_header(dataset.dim()));
    header.push("truth".into());
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(dataset.dim() + 2);
    for (i, (row, t)) in dataset.points.rows().zip(&dataset.truth).enumerate() {
        record.clear();
        record.push(i.to_string());
        record.extend(row.iter().map(f64::to_string));
        record.push(t.code().to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset. The true centroids are left empty.
pub fn read_dataset<R: Read>(input: R) -> Result<Dataset> {
    let mut r = csv::Reader::from_reader(input);
    let d = check_header(r.headers()?, "point_id", Some("truth"))?;
    let mut points = PointSet::new(d)?;
    let mut truth = Vec::new();
    let mut row = vec![0.0; d];
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let id: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}: invalid point_id {:?}", &rec[0])))?;
        if id != i {
            return Err(Error::Parse(format!("line {line}: expected point_id {i}, found {id}")));
        }
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = parse_f64(&rec[j + 1], line)?;
        }
        points.push(&row)?;
        let code: i64 = rec[d + 1]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}: invalid truth {:?}", &rec[d + 1])))?;
        truth.push(Truth::from_code(code)?);
    }
    if points.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    Dataset::new(points, truth, Vec::new())
}

pub fn write_centroids<W: Write>(centroids: &[Vec<f64>], out: W) -> Result<()> {
    let d = centroids.first().ok_or(Error::Empty("centroids"))?.len();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["cluster_id".to_string()];
    header.extend(coord_header(d));
    w.write_record(&header)?;
    for (h, c) in centroids.iter().enumerate() {
        let mut rec = vec![h.to_string()];
        rec.extend(c.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_centroids<R: Read>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_reader(input);
    let d = check_header(r.headers()?, "cluster_id", None)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let c = (1..=d)
            .map(|j| parse_f64(&rec[j], line))
            .collect::<Result<Vec<f64>>>()?;
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("line {line}: non-finite centroid")));
        }
        out.push(c);
    }
    if out.is_empty() {
        return Err(Error::Empty("centroids"));
    }
    Ok(out)
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn read_dataset_file(path: &Path) -> Result<Dataset> {
    read_dataset(open(path)?)
}

pub fn read_centroids_file(path: &Path) -> Result<Vec<Vec<f64>>> {
    read_centroids(open(path)?)
}
