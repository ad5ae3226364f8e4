use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::geometry::{Point, Quad};
use crate::{Error, Result};

/// One annotated object: a free quadrilateral in pixel coordinates, kept in
/// the vertex order it was written in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedObject {
    pub quad: [Point<f64>; 4],
    pub category: String,
    pub difficult: bool,
}

impl AnnotatedObject {
    pub fn new(quad: [Point<f64>; 4], category: impl Into<String>, difficult: bool) -> Result<Self> {
        let category = category.into();
        if category.is_empty() || category.chars().any(char::is_whitespace) {
            return Err(Error::invalid(format!("bad category {category:?}")));
        }
        if !quad.iter().all(|p| p.is_finite()) {
            return Err(Error::invalid("non-finite annotation coordinate"));
        }
        Ok(AnnotatedObject {
            quad,
            category,
            difficult,
        })
    }

    /// Convex, counter-clockwise form used by the geometry code.
    pub fn to_quad(&self) -> Result<Quad<f64>> {
        Quad::new(self.quad)
    }

    pub fn map_points(&self, f: impl Fn(Point<f64>) -> Point<f64>) -> Self {
        AnnotatedObject {
            quad: self.quad.map(f),
            ..self.clone()
        }
    }
}

fn is_header(line: &str) -> bool {
    // DOTA label files open with "imagesource:..." and "gsd:..." lines
    line.starts_with("imagesource:") || line.starts_with("gsd:")
}

/// Parses `x1 y1 x2 y2 x3 y3 x4 y4 category difficult` lines. Blank lines,
/// `#` comments and DOTA header lines are skipped.
pub fn parse_obb_annotations(text: &str) -> Result<Vec<AnnotatedObject>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || is_header(line) {
            continue;
        }
        let err = |message: String| Error::Parse { line: line_no, message };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 10 {
            return Err(err(format!(
                "expected 8 coordinates, a category and a difficult flag, found {} fields",
                tokens.len()
            )));
        }
        let mut c = [0.0f64; 8];
        for (slot, tok) in c.iter_mut().zip(&tokens[..8]) {
            *slot = tok
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("bad coordinate {tok:?}")))?;
        }
        let difficult = match tokens[9] {
            "0" => false,
            "1" => true,
            other => return Err(err(format!("difficult flag must be 0 or 1, got {other:?}"))),
        };
        let quad = [
            Point::new(c[0], c[1]),
            Point::new(c[2], c[3]),
            Point::new(c[4], c[5]),
            Point::new(c[6], c[7]),
        ];
        out.push(AnnotatedObject {
            quad,
            category: tokens[8].to_string(),
            difficult,
        });
    }
    Ok(out)
}

/// Writes objects in the line format read by [`parse_obb_annotations`].
/// Coordinates use the shortest representation that parses back exactly.
pub fn serialize_obb_annotations(objects: &[AnnotatedObject]) -> String {
    let mut s = String::new();
    for o in objects {
        for p in &o.quad {
            let _ = write!(s, "{} {} ", p.x, p.y);
        }
        let _ = writeln!(s, "{} {}", o.category, u8::from(o.difficult));
    }
    s
}
