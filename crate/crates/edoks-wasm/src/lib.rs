//! Browser bindings for the edoks metric: score a canvas pair, render the
//! explainability maps, and synthesize distortions to explore.
//!
//! Buffers cross the boundary as RGBA byte arrays in canvas layout. The
//! `*_impl` functions hold the logic and stay callable from host tests; the
//! exported wrappers only translate errors for JavaScript.

use edoks::color::{oklab_to_srgb8, srgb8_to_oklab, OklabPixel};
use edoks::metric::{edoks, edoks_with_maps, MetricConfig};
use edoks::raster::Raster;
use edoks::render::heat_color;
use image::RgbImage;
use wasm_bindgen::prelude::*;

fn rgba_to_image(rgba: &[u8], width: u32, height: u32) -> Result<RgbImage, String> {
    let expected = width as usize * height as usize * 4;
    if rgba.len() != expected {
        return Err(format!(
            "buffer holds {} bytes, expected {expected} for {width}x{height} RGBA",
            rgba.len()
        ));
    }
    let mut img = RgbImage::new(width, height);
    for (pixel, chunk) in img.pixels_mut().zip(rgba.chunks_exact(4)) {
        *pixel = image::Rgb([chunk[0], chunk[1], chunk[2]]);
    }
    Ok(img)
}

fn image_to_rgba(img: &RgbImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.len() / 3 * 4);
    for p in img.pixels() {
        out.extend_from_slice(&[p[0], p[1], p[2], 255]);
    }
    out
}

fn config(alpha: f64, patch_size: u32) -> MetricConfig {
    MetricConfig {
        alpha,
        patch_size,
        ..MetricConfig::default()
    }
}

fn compare_impl(
    rgba_a: &[u8],
    rgba_b: &[u8],
    width: u32,
    height: u32,
    alpha: f64,
    patch_size: u32,
) -> Result<String, String> {
    let a = rgba_to_image(rgba_a, width, height)?;
    let b = rgba_to_image(rgba_b, width, height)?;
    let report = edoks(&a, &b, &config(alpha, patch_size)).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

fn render_map(map: &Raster, max_normalize: bool) -> Vec<u8> {
    let max = map.max_value();
    let scale = if max_normalize && max > 1e-12 {
        1.0 / max
    } else {
        1.0
    };
    let mut out = Vec::with_capacity(map.as_slice().len() * 4);
    for v in map.as_slice() {
        let rgb = heat_color(v * scale);
        out.extend_from_slice(&[rgb[0], rgb[1], rgb[2], 255]);
    }
    out
}

fn heatmap_impl(
    rgba_a: &[u8],
    rgba_b: &[u8],
    width: u32,
    height: u32,
    kind: &str,
    patch_size: u32,
) -> Result<Vec<u8>, String> {
    let a = rgba_to_image(rgba_a, width, height)?;
    let b = rgba_to_image(rgba_b, width, height)?;
    let report = edoks_with_maps(&a, &b, &config(0.5, patch_size)).map_err(|e| e.to_string())?;
    let maps = report.maps.expect("maps were requested");
    match kind {
        "texture" => Ok(render_map(&maps.texture, false)),
        "color" => Ok(render_map(maps.color.as_raster(), true)),
        "overlay" => Ok(render_map(&maps.overlay, false)),
        other => Err(format!("unknown map kind '{other}'")),
    }
}

fn distort_impl(
    rgba: &[u8],
    width: u32,
    height: u32,
    kind: &str,
    strength: f64,
) -> Result<Vec<u8>, String> {
    let img = rgba_to_image(rgba, width, height)?;
    let out = match kind {
        "blur" => image::imageops::blur(&img, strength.max(0.01) as f32),
        "hue" => {
            let (sin, cos) = strength.to_radians().sin_cos();
            let mut out = img.clone();
            for p in out.pixels_mut() {
                let lab = srgb8_to_oklab(p[0], p[1], p[2]);
                let rotated = OklabPixel {
                    l: lab.l,
                    a: lab.a * cos - lab.b * sin,
                    b: lab.a * sin + lab.b * cos,
                };
                *p = image::Rgb(oklab_to_srgb8(rotated));
            }
            out
        }
        "warp" => {
            let mut out = img.clone();
            let period = (height as f64 / 4.0).max(2.0);
            for y in 0..height {
                let shift = strength * (std::f64::consts::TAU * y as f64 / period).sin();
                for x in 0..width {
                    let sx = (x as f64 + shift).round().clamp(0.0, (width - 1) as f64) as u32;
                    out.put_pixel(x, y, *img.get_pixel(sx, y));
                }
            }
            out
        }
        other => return Err(format!("unknown distortion '{other}'")),
    };
    Ok(image_to_rgba(&out))
}

fn demo_image_impl(width: u32, height: u32) -> Vec<u8> {
    let tau = std::f64::consts::TAU;
    let mut img = RgbImage::new(width, height);
    for y in 0..height {
        for x in 0..width {
            let fx = x as f64;
            let fy = y as f64;
            let r = 0.55 + 0.3 * (tau * 0.18 * fx).sin() + 0.1 * (fy / height as f64);
            let g = 0.5 + 0.25 * (tau * 0.08 * fy).sin() + 0.15 * (fx / width as f64);
            let b = 0.5 + 0.3 * (tau * 0.12 * (fx + fy) * std::f64::consts::FRAC_1_SQRT_2).sin();
            img.put_pixel(
                x,
                y,
                image::Rgb([
                    (r.clamp(0.0, 1.0) * 255.0) as u8,
                    (g.clamp(0.0, 1.0) * 255.0) as u8,
                    (b.clamp(0.0, 1.0) * 255.0) as u8,
                ]),
            );
        }
    }
    image_to_rgba(&img)
}

/// Score two same-size RGBA buffers; returns the report JSON
/// `{emd, ok, edok, edoks, alpha, p, c}`.
#[wasm_bindgen]
pub fn compare(
    rgba_a: &[u8],
    rgba_b: &[u8],
    width: u32,
    height: u32,
    alpha: f64,
    patch_size: u32,
) -> Result<String, JsError> {
    compare_impl(rgba_a, rgba_b, width, height, alpha, patch_size).map_err(|e| JsError::new(&e))
}

/// Render one explainability map ("texture", "color" or "overlay") as an
/// RGBA heat image for a canvas.
#[wasm_bindgen]
pub fn heatmap(
    rgba_a: &[u8],
    rgba_b: &[u8],
    width: u32,
    height: u32,
    kind: &str,
    patch_size: u32,
) -> Result<Vec<u8>, JsError> {
    heatmap_impl(rgba_a, rgba_b, width, height, kind, patch_size).map_err(|e| JsError::new(&e))
}

/// Apply a synthetic distortion: "blur" (strength = sigma), "hue"
/// (strength = rotation degrees) or "warp" (strength = displacement px).
#[wasm_bindgen]
pub fn distort(
    rgba: &[u8],
    width: u32,
    height: u32,
    kind: &str,
    strength: f64,
) -> Result<Vec<u8>, JsError> {
    distort_impl(rgba, width, height, kind, strength).map_err(|e| JsError::new(&e))
}

/// Built-in demo image: textured, colorful, patch-friendly.
#[wasm_bindgen]
pub fn demo_image(width: u32, height: u32) -> Vec<u8> {
    demo_image_impl(width, height)
}
