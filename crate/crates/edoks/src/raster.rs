//! Row-major `f64` rasters used for grayscale images, filter responses and
//! difference maps.

use crate::error::{Error, Result};

/// A single-channel raster of `f64` values in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: u32,
    height: u32,
    data: Vec<f64>,
}

impl Raster {
    /// Create a zero-filled raster.
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        Ok(Self {
            width,
            height,
            data: vec![0.0; width as usize * height as usize],
        })
    }

    /// Build a raster by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> f64) -> Result<Self> {
        let mut r = Self::new(width, height)?;
        for y in 0..height {
            for x in 0..width {
                let i = r.index(x, y);
                r.data[i] = f(x, y);
            }
        }
        Ok(r)
    }

    /// Wrap an existing row-major buffer.
    pub fn from_vec(width: u32, height: u32, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if data.len() != width as usize * height as usize {
            return Err(Error::InvalidParameter(format!(
                "buffer length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.data[self.index(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: f64) {
        let i = self.index(x, y);
        self.data[i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, y: u32) -> &[f64] {
        let w = self.width as usize;
        let start = y as usize * w;
        &self.data[start..start + w]
    }

    /// Maximum value; rasters are never empty so this always exists.
    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sum over all pixels, accumulated in index order so results do not
    /// depend on scheduling.
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn same_dimensions(&self, other: &Raster) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn dimension_error(&self, other: &Raster) -> Error {
        Error::DimensionMismatch(self.width, self.height, other.width, other.height)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_fn_row_major() {
        let r = Raster::from_fn(3, 2, |x, y| (y * 10 + x) as f64).unwrap();
        assert_eq!(r.as_slice(), &[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
        assert_eq!(r.get(2, 1), 12.0);
    }

    #[test]
    fn empty_rejected() {
        assert!(Raster::new(0, 4).is_err());
        assert!(Raster::new(4, 0).is_err());
    }

    #[test]
    fn bad_buffer_length_rejected() {
        assert!(Raster::from_vec(2, 2, vec![0.0; 3]).is_err());
    }
}
