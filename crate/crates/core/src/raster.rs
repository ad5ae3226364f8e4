//! 8-bit interleaved rasters and image file I/O.

use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::{Error, Result};

/// 8-bit image with 1 (gray) or 3 (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: u32,
    pub height: u32,
    pub channels: u8,
    pub data: Vec<u8>,
}

impl Raster {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::UnsupportedFormat(format!("{channels} channels")));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(Error::invalid(format!(
                "raster buffer has {} bytes, expected {expected}",
                data.len()
            )));
        }
        Ok(Raster {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Result<Self> {
        let n = width as usize * height as usize * channels as usize;
        Raster::new(width, height, channels, vec![value; n])
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> u8) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Raster {
            width,
            height,
            channels: 1,
            data,
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32, c: u8) -> u8 {
        self.data[(y as usize * self.width as usize + x as usize) * self.channels as usize + c as usize]
    }

    /// Copies the `w x h` window at `(x0, y0)`; samples outside the raster
    /// are `pad`.
    pub fn crop_padded(&self, x0: u32, y0: u32, w: u32, h: u32, pad: u8) -> Raster {
        let ch = self.channels as usize;
        let mut data = vec![pad; w as usize * h as usize * ch];
        let x_end = (x0 + w).min(self.width);
        let y_end = (y0 + h).min(self.height);
        if x0 < x_end {
            let row_bytes = (x_end - x0) as usize * ch;
            for y in y0..y_end {
                let src = (y as usize * self.width as usize + x0 as usize) * ch;
                let dst = (y - y0) as usize * w as usize * ch;
                data[dst..dst + row_bytes].copy_from_slice(&self.data[src..src + row_bytes]);
            }
        }
        Raster {
            width: w,
            height: h,
            channels: self.channels,
            data,
        }
    }

    /// ITU-R BT.601 luma as floating point; gray rasters pass through.
    pub fn luma(&self) -> Vec<f64> {
        match self.channels {
            1 => self.data.iter().map(|&v| v as f64).collect(),
            _ => self
                .data
                .chunks_exact(3)
                .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
                .collect(),
        }
    }

    pub fn from_dynamic(img: DynamicImage) -> Result<Self> {
        let (width, height) = (img.width(), img.height());
        let (channels, data) = match img {
            DynamicImage::ImageLuma8(b) => (1, b.into_raw()),
            DynamicImage::ImageRgb8(b) => (3, b.into_raw()),
            DynamicImage::ImageLumaA8(_) => {
                log::warn!("dropping alpha band");
                (1, img.to_luma8().into_raw())
            }
            DynamicImage::ImageRgba8(_) => {
                log::warn!("dropping alpha band, using the first three bands");
                (3, img.to_rgb8().into_raw())
            }
            other => {
                return Err(Error::UnsupportedFormat(format!(
                    "{:?} (only 8-bit samples are supported)",
                    other.color()
                )))
            }
        };
        Raster::new(width, height, channels, data)
    }

    pub fn to_dynamic(&self) -> DynamicImage {
        match self.channels {
            1 => DynamicImage::ImageLuma8(
                image::GrayImage::from_raw(self.width, self.height, self.data.clone())
                    .expect("buffer size checked at construction"),
            ),
            _ => DynamicImage::ImageRgb8(
                image::RgbImage::from_raw(self.width, self.height, self.data.clone())
                    .expect("buffer size checked at construction"),
            ),
        }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let reader = image::ImageReader::open(path)
            .map_err(|e| Error::io(path, e))?
            .with_guessed_format()
            .map_err(|e| Error::io(path, e))?;
        Raster::from_dynamic(reader.decode()?)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        Raster::from_dynamic(image::load_from_memory(bytes)?)
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut out = std::io::Cursor::new(Vec::new());
        self.to_dynamic().write_to(&mut out, ImageFormat::Png)?;
        Ok(out.into_inner())
    }
}
