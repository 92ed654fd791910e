//! Texture signatures: patch splitting, Meng-Hee Heng clustering, and the
//! full extraction pipeline.
//!
//! An image is converted to linear-light grayscale, split into non-overlapping
//! p x p patches (trailing pixels that do not fill a patch are dropped), each
//! patch is summarized by its normalized Gabor energy matrix, and the matrices
//! are clustered into k centroids with k found automatically. The signature is
//! the centroid list plus the fraction of patches in each cluster.

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::linear_luminance;
use crate::error::{Error, Result};
use crate::gabor::{patch_energy, GaborDictionary};
use crate::raster::Raster;

/// Non-overlapping square patches of a grayscale raster, row-major.
#[derive(Debug, Clone)]
pub struct PatchGrid {
    pub patch_size: u32,
    pub patches: Vec<Raster>,
}

/// Default fraction of the mean inter-centroid distance beyond which a point
/// spawns a new cluster.
pub const DEFAULT_SPAWN_FACTOR: f64 = 0.5;

const MAX_ITERATIONS: usize = 100;

/// A weighted set of texture centroids. Weights are cluster frequencies and
/// sum to 1; each centroid is a flattened energy matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    centroids: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SignatureWire {
    k: usize,
    centroids: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl Signature {
    /// Build a signature, validating the weight and dimension invariants.
    pub fn new(centroids: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if centroids.is_empty() {
            return Err(Error::DegenerateInput(
                "signature with zero clusters".into(),
            ));
        }
        if centroids.len() != weights.len() {
            return Err(Error::LengthMismatch(centroids.len(), weights.len()));
        }
        let dim = centroids[0].len();
        if centroids.iter().any(|c| c.len() != dim) {
            return Err(Error::InvalidParameter(
                "signature centroids have mixed dimensionality".into(),
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidParameter(
                "signature weights must be positive and finite".into(),
            ));
        }
        Ok(Self { centroids, weights })
    }

    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// True when weights sum to 1 within the stated tolerance.
    pub fn is_normalized(&self) -> bool {
        (self.total_weight() - 1.0).abs() <= 1e-9
    }

    /// Serialize as the flat `{k, centroids, weights}` JSON record.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&SignatureWire {
            k: self.k(),
            centroids: self.centroids.clone(),
            weights: self.weights.clone(),
        })?)
    }

    /// Load from the `{k, centroids, weights}` JSON record, re-validating all
    /// invariants.
    pub fn from_json(text: &str) -> Result<Self> {
        let wire: SignatureWire = serde_json::from_str(text)?;
        if wire.k != wire.centroids.len() {
            return Err(Error::InvalidParameter(format!(
                "signature k={} does not match centroid count {}",
                wire.k,
                wire.centroids.len()
            )));
        }
        Signature::new(wire.centroids, wire.weights)
    }
}

/// Split a raster into full p x p patches, row-major; trailing pixels that do
/// not fill a patch are dropped.
pub fn split_patches(image: &Raster, p: u32) -> Result<PatchGrid> {
    if p == 0 {
        return Err(Error::InvalidParameter(
            "patch size must be positive".into(),
        ));
    }
    if p > image.width().min(image.height()) {
        return Err(Error::InvalidParameter(format!(
            "patch size {} exceeds image dimensions {}x{}",
            p,
            image.width(),
            image.height()
        )));
    }
    let cols = image.width() / p;
    let rows = image.height() / p;
    let mut patches = Vec::with_capacity((rows * cols) as usize);
    for gy in 0..rows {
        for gx in 0..cols {
            let patch = Raster::from_fn(p, p, |x, y| image.get(gx * p + x, gy * p + y))?;
            patches.push(patch);
        }
    }
    Ok(PatchGrid {
        patch_size: p,
        patches,
    })
}

#[inline]
fn l1(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum()
}

/// Meng-Hee Heng clustering over energy vectors.
///
/// Starts from the two mutually farthest points (one cluster if the input is
/// a single point or has zero spread), then alternates nearest-centroid
/// assignment under L1 distance with mean recomputation. A new cluster is
/// spawned from the point farthest from its centroid whenever that distance
/// exceeds `spawn_factor` times the mean inter-centroid distance. Ties break
/// toward the lowest point index, which makes the procedure deterministic.
///
/// Returns the centroids and the fraction of points per cluster.
pub fn meng_hee_heng(
    energies: &[Vec<f64>],
    spawn_factor: f64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if energies.is_empty() {
        return Err(Error::DegenerateInput("clustering over empty input".into()));
    }
    if spawn_factor.is_nan() || spawn_factor <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "spawn factor must be positive, got {spawn_factor}"
        )));
    }
    let dim = energies[0].len();
    if energies.iter().any(|e| e.len() != dim) {
        return Err(Error::InvalidParameter(
            "energy vectors have mixed dimensionality".into(),
        ));
    }
    let l = energies.len();

    // farthest pair, lexicographically first on ties
    let mut best = (0usize, 0usize, 0.0f64);
    for i in 0..l {
        for j in (i + 1)..l {
            let d = l1(&energies[i], &energies[j]);
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    if l == 1 || best.2 == 0.0 {
        // single point or zero spread: one cluster at the common value
        return Ok((vec![energies[0].clone()], vec![1.0]));
    }

    let mut centroids = vec![energies[best.0].clone(), energies[best.1].clone()];
    let mut assignment = vec![usize::MAX; l];

    for _ in 0..MAX_ITERATIONS {
        // nearest-centroid assignment; ties go to the lowest centroid index
        let mut changed = false;
        for (z, e) in energies.iter().enumerate() {
            let mut nearest = 0usize;
            let mut nearest_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = l1(e, centroid);
                if d < nearest_d {
                    nearest_d = d;
                    nearest = c;
                }
            }
            if assignment[z] != nearest {
                assignment[z] = nearest;
                changed = true;
            }
        }

        // recompute means, dropping clusters that lost all members
        let k = centroids.len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (z, e) in energies.iter().enumerate() {
            let c = assignment[z];
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(e) {
                *s += v;
            }
        }
        let mut remap = vec![usize::MAX; k];
        let mut kept = Vec::with_capacity(k);
        for c in 0..k {
            if counts[c] > 0 {
                remap[c] = kept.len();
                let mut mean = sums[c].clone();
                for v in mean.iter_mut() {
                    *v /= counts[c] as f64;
                }
                kept.push(mean);
            }
        }
        if kept.len() != k {
            for a in assignment.iter_mut() {
                *a = remap[*a];
            }
            changed = true;
        }
        centroids = kept;

        // spawn criterion: farthest point vs. mean inter-centroid distance
        let k = centroids.len();
        let mut farthest = (0usize, -1.0f64);
        for (z, e) in energies.iter().enumerate() {
            let d = l1(e, &centroids[assignment[z]]);
            if d > farthest.1 {
                farthest = (z, d);
            }
        }
        let mean_inter = if k >= 2 {
            let mut total = 0.0;
            let mut pairs = 0usize;
            for i in 0..k {
                for j in (i + 1)..k {
                    total += l1(&centroids[i], &centroids[j]);
                    pairs += 1;
                }
            }
            total / pairs as f64
        } else {
            0.0
        };

        if farthest.1 > spawn_factor * mean_inter && k < l && farthest.1 > 0.0 {
            centroids.push(energies[farthest.0].clone());
            continue;
        }
        if !changed {
            break;
        }
    }

    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &a in &assignment {
        counts[a] += 1;
    }
    let weights = counts.iter().map(|&c| c as f64 / l as f64).collect();
    Ok((centroids, weights))
}

/// Effective patch size for an image: the requested size clamped to the
/// smaller image side (small inputs collapse to a single patch).
pub fn effective_patch_size(p: u32, width: u32, height: u32) -> u32 {
    p.min(width).min(height)
}

/// Full signature extraction with the default spawn factor.
pub fn signature(image: &RgbImage, p: u32, dictionary: &GaborDictionary) -> Result<Signature> {
    signature_with(image, p, dictionary, DEFAULT_SPAWN_FACTOR)
}

/// Full signature extraction: grayscale, patch split (p clamped to the image),
/// per-patch energies in parallel, then clustering.
pub fn signature_with(
    image: &RgbImage,
    p: u32,
    dictionary: &GaborDictionary,
    spawn_factor: f64,
) -> Result<Signature> {
    let gray = linear_luminance(image)?;
    let p_eff = effective_patch_size(p, gray.width(), gray.height());
    let grid = split_patches(&gray, p_eff)?;
    let capped = dictionary.capped(p_eff)?;
    let energies: Vec<Vec<f64>> = grid
        .patches
        .par_iter()
        .map(|patch| patch_energy(patch, &capped).map(|e| e.into_vec()))
        .collect::<Result<Vec<_>>>()?;
    let (centroids, weights) = meng_hee_heng(&energies, spawn_factor)?;
    Signature::new(centroids, weights)
}
