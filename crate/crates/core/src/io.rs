//! Plain-text formats: point patterns and estimate rows as CSV.
//!
//! A pattern file starts with `#` metadata lines, then a header and one row
//! per point:
//!
//! ```text
//! # dim=1
//! # bounds=-1.5:51.5
//! x1,y,z
//! 0.25,1.3,1
//! ```
//!
//! `bounds` is optional on input (the bounding box of the points is used) and
//! always written on output. Numbers are written in shortest round-trip form,
//! so a write/read cycle reproduces the pattern bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::est::EstimateResult;
use crate::pattern::{Bounds, MarkedPoint, PointPattern};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line: line as u64,
        message: message.into(),
    }
}

pub fn write_pattern<W: Write>(pattern: &PointPattern, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    let b = pattern.bounds();
    writeln!(out, "# dim={}", pattern.dim())?;
    let ranges: Vec<String> = b.lo().iter().zip(b.hi()).map(|(l, h)| format!("{l}:{h}")).collect();
    writeln!(out, "# bounds={}", ranges.join(","))?;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=pattern.dim()).map(|i| format!("x{i}")).collect();
    header.extend(["y".into(), "z".into()]);
    w.write_record(&header)?;
    for p in pattern.points() {
        let mut rec: Vec<String> = p.location.iter().map(f64::to_string).collect();
        rec.push(p.y.to_string());
        rec.push(p.z.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pattern<R: Read>(mut input: R) -> Result<PointPattern> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut dim = None;
    let mut bounds = None;
    let mut meta_lines = 0;
    for (i, line) in text.lines().enumerate() {
        let Some(meta) = line.strip_prefix('#') else { break };
        meta_lines += 1;
        let meta = meta.trim();
        if let Some(v) = meta.strip_prefix("dim=") {
            dim = Some(v.trim().parse::<usize>().map_err(|e| parse_err(i + 1, format!("dim: {e}")))?);
        } else if let Some(v) = meta.strip_prefix("bounds=") {
            bounds = Some(parse_bounds(v, i + 1)?);
        }
    }
    let body: String = text.lines().skip(meta_lines).collect::<Vec<_>>().join("\n");
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
    let header_line = meta_lines + 1;
    let ncol = rdr.headers().map_err(|e| parse_err(header_line, e.to_string()))?.len();
    let dim = match dim {
        Some(d) if d + 2 != ncol => {
            return Err(parse_err(header_line, format!("dim={d} needs {} columns, found {ncol}", d + 2)))
        }
        Some(d) => d,
        None if ncol >= 3 => ncol - 2,
        None => return Err(parse_err(header_line, "need at least one coordinate, y and z columns")),
    };
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize + meta_lines);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize + meta_lines);
        let nums: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| parse_err(line, format!("'{s}': {e}"))))
            .collect::<Result<_>>()?;
        if nums.len() != dim + 2 {
            return Err(parse_err(line, format!("expected {} fields, found {}", dim + 2, nums.len())));
        }
        points.push(MarkedPoint::new(nums[..dim].to_vec(), nums[dim], nums[dim + 1]));
    }
    let bounds = match bounds {
        Some(b) => b,
        None => bounding_box(dim, &points).ok_or_else(|| parse_err(header_line, "no bounds and no points"))?,
    };
    PointPattern::new(dim, points, bounds)
}

fn parse_bounds(v: &str, line: usize) -> Result<Bounds> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for part in v.split(',') {
        let (a, b) = part
            .trim()
            .split_once(':')
            .ok_or_else(|| parse_err(line, format!("bounds entry '{part}' is not lo:hi")))?;
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| parse_err(line, format!("'{s}': {e}")));
        lo.push(num(a)?);
        hi.push(num(b)?);
    }
    Bounds::new(lo, hi)
}

fn bounding_box(dim: usize, points: &[MarkedPoint]) -> Option<Bounds> {
    let first = points.first()?;
    let mut lo = first.location.clone();
    let mut hi = first.location.clone();
    for p in points {
        for k in 0..dim {
            lo[k] = lo[k].min(p.location[k]);
            hi[k] = hi[k].max(p.location[k]);
        }
    }
    Bounds::new(lo, hi).ok()
}

pub fn save_pattern(pattern: &PointPattern, path: &Path) -> Result<()> {
    write_pattern(pattern, File::create(path)?)
}

/// Reads a pattern file; parse errors name the file.
pub fn load_pattern(path: &Path) -> Result<PointPattern> {
    let file = File::open(path)?;
    read_pattern(BufReader::new(file)).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

/// Flat CSV form of an [`EstimateResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub estimator: String,
    pub band_lo: f64,
    pub band_hi: f64,
    pub value: Option<f64>,
    pub pair_count: u64,
    pub exclusions: usize,
    pub seed: u64,
    pub runtime_ms: f64,
}

impl EstimateRow {
    pub fn from_result(r: &EstimateResult, seed: u64, runtime_ms: f64) -> Self {
        Self {
            estimator: r.estimator.clone(),
            band_lo: r.band.lo(),
            band_hi: r.band.hi(),
            value: r.value,
            pair_count: r.pair_count.total(),
            exclusions: r.exclusions,
            seed,
            runtime_ms,
        }
    }
}

pub fn write_estimate_rows<W: Write>(rows: &[EstimateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
