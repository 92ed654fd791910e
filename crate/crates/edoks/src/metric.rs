//! The combined metric: EDOK (alpha-weighted dissimilarity), EDOKS (its
//! reciprocal similarity), and the explainability maps.
//!
//! The texture and color terms run as independent pipelines and are joined
//! for the report. The score path uses per-patch energies; the texture map
//! uses whole-image filter responses so it has no patch seams. Both share
//! the same kernels.

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::color::{delta_e_map, linear_luminance, ok_term, rgb_to_oklab, DeltaEMap};
use crate::emd::{emd_with, GroundDistance};
use crate::error::{Error, Result};
use crate::gabor::{
    apply_gabor, build_dictionary, GaborDictionary, DEFAULT_ORIENTATIONS, DEFAULT_SCALES,
};
use crate::raster::Raster;
use crate::signature::{effective_patch_size, signature_with, DEFAULT_SPAWN_FACTOR};

/// Difference maps below this absolute magnitude count as all-zero, so
/// numerical dust never gets amplified by max-normalization.
const MAP_NOISE_FLOOR: f64 = 1e-12;

/// Metric parameters. Defaults: alpha 0.5, patch size 128, c = 1e-12, the
/// 4x6 filter dictionary, L1 ground distance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Weight of the texture term in [0, 1].
    pub alpha: f64,
    /// Requested patch side; clamped to the image for small inputs.
    pub patch_size: u32,
    /// Small positive constant in the reciprocal, bounding EDOKS by 1/c.
    pub c: f64,
    pub scales: Vec<f64>,
    pub orientations: Vec<f64>,
    pub ground_distance: GroundDistance,
    /// Cluster spawn threshold as a fraction of the mean inter-centroid
    /// distance.
    pub spawn_factor: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            patch_size: 128,
            c: 1e-12,
            scales: DEFAULT_SCALES.to_vec(),
            orientations: DEFAULT_ORIENTATIONS.to_vec(),
            ground_distance: GroundDistance::L1,
            spawn_factor: DEFAULT_SPAWN_FACTOR,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be in [0, 1], got {}",
                self.alpha
            )));
        }
        if !self.c.is_finite() || self.c <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "c must be positive and finite, got {}",
                self.c
            )));
        }
        if self.patch_size < 3 {
            return Err(Error::InvalidParameter(format!(
                "patch size must be at least 3, got {}",
                self.patch_size
            )));
        }
        if self.spawn_factor.is_nan() || self.spawn_factor <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "spawn factor must be positive, got {}",
                self.spawn_factor
            )));
        }
        self.dictionary().map(|_| ())
    }

    /// Build the filter dictionary this config describes.
    pub fn dictionary(&self) -> Result<GaborDictionary> {
        build_dictionary(&self.scales, &self.orientations)
    }
}

/// The three explainability maps for one comparison.
#[derive(Debug, Clone)]
pub struct MapSet {
    /// Mean absolute magnitude difference over all filters, max-normalized.
    pub texture: Raster,
    /// Raw per-pixel Oklab distance.
    pub color: DeltaEMap,
    /// Pixelwise max of the two max-normalized maps.
    pub overlay: Raster,
}

/// Scores for one comparison plus the effective configuration, and the maps
/// when they were requested. The JSON form carries exactly the keys
/// `emd, ok, edok, edoks, alpha, p, c`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub emd: f64,
    pub ok: f64,
    pub edok: f64,
    pub edoks: f64,
    pub alpha: f64,
    /// Effective patch size after clamping to the image.
    pub p: u32,
    pub c: f64,
    #[serde(skip)]
    pub maps: Option<MapSet>,
}

fn check_dimensions(x: &RgbImage, y: &RgbImage) -> Result<()> {
    if x.dimensions() != y.dimensions() {
        let (xw, xh) = x.dimensions();
        let (yw, yh) = y.dimensions();
        return Err(Error::DimensionMismatch(xw, xh, yw, yh));
    }
    if x.width() == 0 || x.height() == 0 {
        return Err(Error::EmptyImage);
    }
    Ok(())
}

#[inline]
fn combine(alpha: f64, emd_value: f64, ok_value: f64) -> f64 {
    alpha * emd_value + (1.0 - alpha) * ok_value
}

/// Compute the raw (EMD, OK) term pair for an image pair. The two pipelines
/// run concurrently; results are independent of scheduling.
pub fn terms(x: &RgbImage, y: &RgbImage, cfg: &MetricConfig) -> Result<(f64, f64)> {
    check_dimensions(x, y)?;
    cfg.validate()?;
    let dict = cfg.dictionary()?;
    let (emd_value, ok_value) = rayon::join(
        || -> Result<f64> {
            let sx = signature_with(x, cfg.patch_size, &dict, cfg.spawn_factor)?;
            let sy = signature_with(y, cfg.patch_size, &dict, cfg.spawn_factor)?;
            Ok(emd_with(&sx, &sy, cfg.ground_distance)?.value)
        },
        || -> Result<f64> {
            let ox = rgb_to_oklab(x)?;
            let oy = rgb_to_oklab(y)?;
            ok_term(&ox, &oy)
        },
    );
    Ok((emd_value?, ok_value?))
}

/// EDOK: the alpha-weighted convex combination of the two terms. With
/// alpha = 1 this is exactly the EMD term; with alpha = 0 exactly the OK term.
pub fn edok(x: &RgbImage, y: &RgbImage, cfg: &MetricConfig) -> Result<f64> {
    let (emd_value, ok_value) = terms(x, y, cfg)?;
    Ok(combine(cfg.alpha, emd_value, ok_value))
}

/// Reciprocal similarity for a given dissimilarity.
#[inline]
pub fn reciprocal(edok_value: f64, c: f64) -> f64 {
    1.0 / (edok_value + c)
}

/// Full comparison report without maps.
pub fn edoks(x: &RgbImage, y: &RgbImage, cfg: &MetricConfig) -> Result<MetricReport> {
    let (emd_value, ok_value) = terms(x, y, cfg)?;
    Ok(report_from_terms(emd_value, ok_value, x, cfg))
}

/// Full comparison report including the three explainability maps.
pub fn edoks_with_maps(x: &RgbImage, y: &RgbImage, cfg: &MetricConfig) -> Result<MetricReport> {
    let mut report = edoks(x, y, cfg)?;
    let texture = texture_diff_map(x, y, cfg)?;
    let color = delta_e_map(&rgb_to_oklab(x)?, &rgb_to_oklab(y)?)?;
    let overlay = overlay_map(&texture, &color)?;
    report.maps = Some(MapSet {
        texture,
        color,
        overlay,
    });
    Ok(report)
}

/// Assemble a report from cached terms; used by the evaluation harness to
/// recombine terms across alpha values without recomputing filters.
pub fn report_from_terms(
    emd_value: f64,
    ok_value: f64,
    x: &RgbImage,
    cfg: &MetricConfig,
) -> MetricReport {
    let edok_value = combine(cfg.alpha, emd_value, ok_value);
    MetricReport {
        emd: emd_value,
        ok: ok_value,
        edok: edok_value,
        edoks: reciprocal(edok_value, cfg.c),
        alpha: cfg.alpha,
        p: effective_patch_size(cfg.patch_size, x.width(), x.height()),
        c: cfg.c,
        maps: None,
    }
}

fn normalized(map: &Raster) -> Raster {
    let max = map.max_value();
    if max <= MAP_NOISE_FLOOR {
        return Raster::new(map.width(), map.height()).expect("map is non-empty");
    }
    let data = map.as_slice().iter().map(|v| v / max).collect();
    Raster::from_vec(map.width(), map.height(), data).expect("same dimensions")
}

/// Per-pixel texture difference: mean over all filters of the absolute
/// magnitude difference, computed on whole-image responses so the map is
/// seamless, then normalized to [0, 1] by its max (an all-zero map stays
/// zero).
pub fn texture_diff_map(x: &RgbImage, y: &RgbImage, cfg: &MetricConfig) -> Result<Raster> {
    check_dimensions(x, y)?;
    let gray_x = linear_luminance(x)?;
    let gray_y = linear_luminance(y)?;
    let side = gray_x.width().min(gray_x.height());
    let dict = cfg.dictionary()?.capped(side)?;

    let w = gray_x.width();
    let h = gray_x.height();
    let mut acc = vec![0.0; w as usize * h as usize];
    // filters in order, responses for the two images in parallel
    for params in dict.filters() {
        let (rx, ry) = rayon::join(
            || apply_gabor(&gray_x, params),
            || apply_gabor(&gray_y, params),
        );
        let rx = rx?;
        let ry = ry?;
        for (a, (mx, my)) in acc
            .iter_mut()
            .zip(rx.magnitude.as_slice().iter().zip(ry.magnitude.as_slice()))
        {
            *a += (mx - my).abs();
        }
    }
    let count = dict.len() as f64;
    for v in acc.iter_mut() {
        *v /= count;
    }
    Ok(normalized(&Raster::from_vec(w, h, acc)?))
}

/// Overlay of the texture and color maps: each map is normalized by its own
/// max, then combined pixelwise with max, so the overlay support is the
/// union of the two supports and lies in [0, 1].
pub fn overlay_map(texture: &Raster, color: &DeltaEMap) -> Result<Raster> {
    if !texture.same_dimensions(color.as_raster()) {
        return Err(texture.dimension_error(color.as_raster()));
    }
    let t = normalized(texture);
    let c = normalized(color.as_raster());
    let data = t
        .as_slice()
        .iter()
        .zip(c.as_slice())
        .map(|(a, b)| a.max(*b))
        .collect();
    Raster::from_vec(texture.width(), texture.height(), data)
}
