//! Oklab color space conversion and perceptual color dissimilarity.
//!
//! Input images are 8-bit sRGB. Conversion decodes the sRGB transfer
//! function, maps linear RGB to LMS through a fixed 3x3 matrix, applies a
//! cube root, and maps to (L, a, b) through a second fixed matrix. Euclidean
//! distance in this space approximates perceived color difference.

use image::RgbImage;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::Raster;

/// One pixel in Oklab coordinates.
///
/// `l` is perceived lightness in [0, 1] for in-gamut colors; `a` and `b` are
/// the green-magenta and blue-yellow opponent axes. Values converted from
/// 8-bit sRGB stay inside a ∈ [-0.24, 0.28] and b ∈ [-0.32, 0.20].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OklabPixel {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

/// A full image converted to Oklab, same dimensions as its source.
#[derive(Debug, Clone, PartialEq)]
pub struct OklabImage {
    width: u32,
    height: u32,
    pixels: Vec<OklabPixel>,
}

/// Per-pixel Oklab distance between two images.
///
/// Values are nonnegative and analytically bounded by sqrt(3); for
/// sRGB-gamut inputs they stay below ~1.05. Values are reported unclamped.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaEMap {
    raster: Raster,
}

// Linear sRGB -> LMS and LMS' -> Lab matrices from the Oklab definition.
const LMS_FROM_RGB: [[f64; 3]; 3] = [
    [0.4122214708, 0.5363325363, 0.0514459929],
    [0.2119034982, 0.6806995451, 0.1073969566],
    [0.0883024619, 0.2817188376, 0.6299787005],
];
const LAB_FROM_LMS: [[f64; 3]; 3] = [
    [0.2104542553, 0.7936177850, -0.0040720468],
    [1.9779984951, -2.4285922050, 0.4505937099],
    [0.0259040371, 0.7827717662, -0.8086757660],
];
const LMS_FROM_LAB: [[f64; 3]; 3] = [
    [1.0, 0.3963377774, 0.2158037573],
    [1.0, -0.1055613458, -0.0638541728],
    [1.0, -0.0894841775, -1.2914855480],
];
const RGB_FROM_LMS: [[f64; 3]; 3] = [
    [4.0767416621, -3.3077115913, 0.2309699292],
    [-1.2684380046, 2.6097574011, -0.3413193965],
    [-0.0041960863, -0.7034186147, 1.7076147010],
];

// Rec. 709 luminance weights, applied to linear RGB.
const LUMA: [f64; 3] = [0.2126, 0.7152, 0.0722];

/// Decode one 8-bit sRGB channel to linear light.
#[inline]
pub fn srgb_decode(c: u8) -> f64 {
    srgb_decode_lut()[c as usize]
}

fn srgb_decode_lut() -> &'static [f64; 256] {
    use std::sync::OnceLock;
    static LUT: OnceLock<[f64; 256]> = OnceLock::new();
    LUT.get_or_init(|| {
        let mut lut = [0.0; 256];
        for (i, v) in lut.iter_mut().enumerate() {
            let c = i as f64 / 255.0;
            *v = if c <= 0.04045 {
                c / 12.92
            } else {
                ((c + 0.055) / 1.055).powf(2.4)
            };
        }
        lut
    })
}

/// Encode one linear channel back to 8-bit sRGB, clamping out-of-range input.
#[inline]
pub fn srgb_encode(c: f64) -> u8 {
    let c = c.clamp(0.0, 1.0);
    let v = if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    };
    (v * 255.0).round() as u8
}

#[inline]
fn mat3_mul(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Convert a single 8-bit sRGB triple to Oklab.
pub fn srgb8_to_oklab(r: u8, g: u8, b: u8) -> OklabPixel {
    let rgb = [srgb_decode(r), srgb_decode(g), srgb_decode(b)];
    let lms = mat3_mul(&LMS_FROM_RGB, rgb);
    let lms_c = [lms[0].cbrt(), lms[1].cbrt(), lms[2].cbrt()];
    let lab = mat3_mul(&LAB_FROM_LMS, lms_c);
    OklabPixel {
        l: lab[0],
        a: lab[1],
        b: lab[2],
    }
}

/// Convert an Oklab pixel back to 8-bit sRGB, clamping to gamut.
pub fn oklab_to_srgb8(p: OklabPixel) -> [u8; 3] {
    let lms_c = mat3_mul(&LMS_FROM_LAB, [p.l, p.a, p.b]);
    let lms = [
        lms_c[0] * lms_c[0] * lms_c[0],
        lms_c[1] * lms_c[1] * lms_c[1],
        lms_c[2] * lms_c[2] * lms_c[2],
    ];
    let rgb = mat3_mul(&RGB_FROM_LMS, lms);
    [
        srgb_encode(rgb[0]),
        srgb_encode(rgb[1]),
        srgb_encode(rgb[2]),
    ]
}

/// Convert a full sRGB image to Oklab. Pixels convert independently, so rows
/// are processed in parallel.
pub fn rgb_to_oklab(image: &RgbImage) -> Result<OklabImage> {
    let (width, height) = image.dimensions();
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage);
    }
    let w = width as usize;
    let mut pixels = vec![
        OklabPixel {
            l: 0.0,
            a: 0.0,
            b: 0.0
        };
        w * height as usize
    ];
    pixels.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, out) in row.iter_mut().enumerate() {
            let p = image.get_pixel(x as u32, y as u32);
            *out = srgb8_to_oklab(p[0], p[1], p[2]);
        }
    });
    Ok(OklabImage {
        width,
        height,
        pixels,
    })
}

/// Luminance-weighted grayscale of an sRGB image, computed in linear light.
/// Feeds the texture pipeline; values are in [0, 1].
pub fn linear_luminance(image: &RgbImage) -> Result<Raster> {
    let (width, height) = image.dimensions();
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage);
    }
    let w = width as usize;
    let mut data = vec![0.0; w * height as usize];
    data.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, out) in row.iter_mut().enumerate() {
            let p = image.get_pixel(x as u32, y as u32);
            *out = LUMA[0] * srgb_decode(p[0])
                + LUMA[1] * srgb_decode(p[1])
                + LUMA[2] * srgb_decode(p[2]);
        }
    });
    Raster::from_vec(width, height, data)
}

/// Euclidean distance between two Oklab pixels (the per-pixel color term).
#[inline]
pub fn delta_e(p1: OklabPixel, p2: OklabPixel) -> f64 {
    let dl = p1.l - p2.l;
    let da = p1.a - p2.a;
    let db = p1.b - p2.b;
    (dl * dl + da * da + db * db).sqrt()
}

/// Per-pixel delta E between two same-size Oklab images.
pub fn delta_e_map(x: &OklabImage, y: &OklabImage) -> Result<DeltaEMap> {
    if (x.width, x.height) != (y.width, y.height) {
        return Err(Error::DimensionMismatch(
            x.width, x.height, y.width, y.height,
        ));
    }
    let w = x.width as usize;
    let mut data = vec![0.0; w * x.height as usize];
    data.par_chunks_mut(w)
        .enumerate()
        .for_each(|(row_idx, row)| {
            let base = row_idx * w;
            for (i, out) in row.iter_mut().enumerate() {
                *out = delta_e(x.pixels[base + i], y.pixels[base + i]);
            }
        });
    Ok(DeltaEMap {
        raster: Raster::from_vec(x.width, x.height, data).expect("dimensions already validated"),
    })
}

/// Mean per-pixel Oklab distance: zero iff the images are identical.
///
/// The sum is accumulated in pixel order so the value does not depend on
/// worker count. The mean is not clamped; for sRGB-gamut inputs it stays
/// within [0, ~1.05].
pub fn ok_term(x: &OklabImage, y: &OklabImage) -> Result<f64> {
    let map = delta_e_map(x, y)?;
    let n = map.raster.as_slice().len() as f64;
    Ok(map.raster.sum() / n)
}

impl OklabImage {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> OklabPixel {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn pixels(&self) -> &[OklabPixel] {
        &self.pixels
    }

    /// Build directly from pixels; used by synthetic fixtures.
    pub fn from_pixels(width: u32, height: u32, pixels: Vec<OklabPixel>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if pixels.len() != width as usize * height as usize {
            return Err(Error::InvalidParameter(format!(
                "pixel count {} does not match {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }
}

impl DeltaEMap {
    pub fn width(&self) -> u32 {
        self.raster.width()
    }

    pub fn height(&self) -> u32 {
        self.raster.height()
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.raster.get(x, y)
    }

    pub fn as_raster(&self) -> &Raster {
        &self.raster
    }

    pub fn into_raster(self) -> Raster {
        self.raster
    }
}
