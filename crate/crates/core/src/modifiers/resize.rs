use serde::{Deserialize, Serialize};

use crate::raster::Raster;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Nearest,
    #[default]
    Bilinear,
    Bicubic,
}

impl Interpolation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Interpolation::Nearest => "nearest",
            Interpolation::Bilinear => "bilinear",
            Interpolation::Bicubic => "bicubic",
        }
    }
}

impl std::str::FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(Interpolation::Nearest),
            "bilinear" => Ok(Interpolation::Bilinear),
            "bicubic" => Ok(Interpolation::Bicubic),
            other => Err(Error::invalid(format!("unknown interpolation {other:?}"))),
        }
    }
}

/// `floor(dim * scale)`, at least 1.
pub fn output_dims(width: u32, height: u32, scale: f64) -> (u32, u32) {
    let dim = |d: u32| {
        let v = (d as f64 * scale).floor() as u32;
        if v == 0 {
            log::warn!("scale {scale} shrinks {d} px to nothing, clamping to 1");
            1
        } else {
            v
        }
    };
    (dim(width), dim(height))
}

/// Keys cubic kernel, a = -0.5.
fn cubic(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        (1.5 * t - 2.5) * t * t + 1.0
    } else if t < 2.0 {
        ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0
    } else {
        0.0
    }
}

/// Resamples to `floor(dims * scale)` with pixel-center alignment. Output
/// values stay inside the range of the source samples they are built from.
pub fn resize_interpolate(src: &Raster, scale: f64, method: Interpolation) -> Result<Raster> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::invalid(format!("resize scale must lie in (0, 1], got {scale}")));
    }
    if src.width == 0 || src.height == 0 {
        return Err(Error::invalid("cannot resize an empty raster"));
    }
    let (ow, oh) = output_dims(src.width, src.height, scale);
    let ch = src.channels as usize;
    let (sw, sh) = (src.width as i64, src.height as i64);
    let fx = src.width as f64 / ow as f64;
    let fy = src.height as f64 / oh as f64;
    let px = |x: i64, y: i64, c: usize| -> f64 {
        let x = x.clamp(0, sw - 1) as usize;
        let y = y.clamp(0, sh - 1) as usize;
        src.data[(y * sw as usize + x) * ch + c] as f64
    };

    let mut data = Vec::with_capacity(ow as usize * oh as usize * ch);
    for oy in 0..oh {
        let sy = (oy as f64 + 0.5) * fy - 0.5;
        for ox in 0..ow {
            let sx = (ox as f64 + 0.5) * fx - 0.5;
            for c in 0..ch {
                let v = match method {
                    Interpolation::Nearest => {
                        let x = ((ox as f64 + 0.5) * fx).floor() as i64;
                        let y = ((oy as f64 + 0.5) * fy).floor() as i64;
                        px(x, y, c)
                    }
                    Interpolation::Bilinear => {
                        let (x0, y0) = (sx.floor(), sy.floor());
                        let (tx, ty) = (sx - x0, sy - y0);
                        let (x0, y0) = (x0 as i64, y0 as i64);
                        let top = px(x0, y0, c) * (1.0 - tx) + px(x0 + 1, y0, c) * tx;
                        let bot = px(x0, y0 + 1, c) * (1.0 - tx) + px(x0 + 1, y0 + 1, c) * tx;
                        top * (1.0 - ty) + bot * ty
                    }
                    Interpolation::Bicubic => {
                        let (x0, y0) = (sx.floor() as i64, sy.floor() as i64);
                        let (mut acc, mut lo, mut hi) = (0.0, f64::MAX, f64::MIN);
                        for j in -1..=2 {
                            let wy = cubic(sy - (y0 + j) as f64);
                            for i in -1..=2 {
                                let v = px(x0 + i, y0 + j, c);
                                lo = lo.min(v);
                                hi = hi.max(v);
                                acc += v * wy * cubic(sx - (x0 + i) as f64);
                            }
                        }
                        // clamp the kernel's overshoot to the neighborhood
                        acc.clamp(lo, hi)
                    }
                };
                data.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Raster::new(ow, oh, src.channels, data)
}
