use std::fmt::Write;
use std::fs;
use std::path::Path;

use super::records::DetectionRecord;
use crate::geometry::Quad;
use crate::{Error, Result};

/// Parses `image_id x1 y1 x2 y2 x3 y3 x4 y4 category score` lines. When
/// `default_image` is given, lines may leave out the image id.
pub fn parse_detections(text: &str, default_image: Option<&str>) -> Result<Vec<DetectionRecord<f64>>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse { line: idx + 1, message };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let (image_id, rest) = match (tokens.len(), default_image) {
            (11, _) => (tokens[0], &tokens[1..]),
            (10, Some(id)) => (id, &tokens[..]),
            (n, _) => return Err(err(format!("expected 11 fields, found {n}"))),
        };
        let mut coords = [0.0f64; 8];
        for (c, tok) in coords.iter_mut().zip(&rest[..8]) {
            *c = tok
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| err(format!("bad coordinate {tok:?}")))?;
        }
        let score: f64 = rest[9].parse().map_err(|_| err(format!("bad score {:?}", rest[9])))?;
        let quad = Quad::from_flat(coords).map_err(|e| err(e.to_string()))?;
        out.push(DetectionRecord::new(image_id, quad, rest[8], score).map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}

pub fn serialize_detections(records: &[DetectionRecord<f64>]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&r.image_id);
        for v in &r.quad.vertices {
            write!(s, " {} {}", v.x, v.y).unwrap();
        }
        writeln!(s, " {} {}", r.category, r.score).unwrap();
    }
    s
}

/// Reads one merged prediction file, or every `.txt` file of a directory
/// (per-image files named after the image id).
pub fn load_detections(path: &Path) -> Result<Vec<DetectionRecord<f64>>> {
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| Error::io(p, e));
    if !path.is_dir() {
        return parse_detections(&read(path)?, None);
    }
    let mut files: Vec<_> = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "txt"))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for f in files {
        let stem = f.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let records = parse_detections(&read(&f)?, Some(&stem)).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{}: {message}", f.display()),
            },
            e => e,
        })?;
        out.extend(records);
    }
    Ok(out)
}
