//! Rendering of difference maps to images and raw float dumps.

use image::{GrayImage, Luma, Rgb, RgbImage};
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::raster::Raster;

/// Quantize a [0, 1] map to an 8-bit grayscale image (values clamped).
pub fn to_gray_image(map: &Raster) -> GrayImage {
    let mut out = GrayImage::new(map.width(), map.height());
    for y in 0..map.height() {
        for x in 0..map.width() {
            let v = (map.get(x, y).clamp(0.0, 1.0) * 255.0).round() as u8;
            out.put_pixel(x, y, Luma([v]));
        }
    }
    out
}

// Anchors of the fixed heat ramp (dark to bright), interpolated linearly.
const RAMP: [[f64; 3]; 5] = [
    [0.0, 0.0, 4.0],
    [87.0, 16.0, 110.0],
    [188.0, 55.0, 84.0],
    [249.0, 142.0, 9.0],
    [252.0, 255.0, 164.0],
];

/// Color of a [0, 1] value on the fixed heat ramp.
pub fn heat_color(v: f64) -> [u8; 3] {
    let v = v.clamp(0.0, 1.0);
    let pos = v * (RAMP.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(RAMP.len() - 1);
    let t = pos - lo as f64;
    let mut rgb = [0u8; 3];
    for (k, out) in rgb.iter_mut().enumerate() {
        *out = (RAMP[lo][k] + t * (RAMP[hi][k] - RAMP[lo][k])).round() as u8;
    }
    rgb
}

/// Render a [0, 1] map with the fixed heat ramp.
pub fn to_heat_image(map: &Raster) -> RgbImage {
    let mut out = RgbImage::new(map.width(), map.height());
    for y in 0..map.height() {
        for x in 0..map.width() {
            out.put_pixel(x, y, Rgb(heat_color(map.get(x, y))));
        }
    }
    out
}

const RAW_MAGIC: &[u8; 8] = b"EDMAP001";

/// Write a raster as a raw dump: 8-byte magic, u32 LE width and height, then
/// row-major f64 LE values. Exact round-trip for testing.
pub fn write_raw_map(map: &Raster, mut w: impl Write) -> Result<()> {
    w.write_all(RAW_MAGIC)?;
    w.write_all(&map.width().to_le_bytes())?;
    w.write_all(&map.height().to_le_bytes())?;
    for v in map.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Read a raw map dump written by [`write_raw_map`].
pub fn read_raw_map(mut r: impl Read) -> Result<Raster> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != RAW_MAGIC {
        return Err(Error::InvalidParameter("not a raw map dump".into()));
    }
    let mut quad = [0u8; 4];
    r.read_exact(&mut quad)?;
    let width = u32::from_le_bytes(quad);
    r.read_exact(&mut quad)?;
    let height = u32::from_le_bytes(quad);
    let count = width as usize * height as usize;
    let mut data = Vec::with_capacity(count);
    let mut oct = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut oct)?;
        data.push(f64::from_le_bytes(oct));
    }
    Raster::from_vec(width, height, data)
}
