use crate::raster::Raster;
use crate::{Error, Result, Scalar};

/// Single-channel floating point image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    pub width: u32,
    pub height: u32,
    pub data: Vec<T>,
}

impl<T: Scalar> Plane<T> {
    pub fn new(width: u32, height: u32, data: Vec<T>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::invalid(format!(
                "plane buffer has {} samples, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Plane { width, height, data })
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> T) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane { width, height, data }
    }

    /// BT.601 luma of a color raster, or the gray values themselves.
    pub fn luma(raster: &Raster) -> Self {
        Plane {
            width: raster.width,
            height: raster.height,
            data: raster.luma().into_iter().map(T::lit).collect(),
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width as usize + x]
    }

    /// Sample with coordinates clamped to the plane.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> T {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn transpose(&self) -> Self {
        Plane::from_fn(self.height, self.width, |x, y| self.get(y as usize, x as usize))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}
