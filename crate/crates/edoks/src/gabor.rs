//! Gabor filter dictionary and per-patch energy matrices.
//!
//! The default dictionary spans four spatial frequencies {0.1, 0.2, 0.3, 0.4}
//! cycles/pixel and six orientations {0, 30, ..., 150} degrees, twenty-four
//! filters in total. Each filter is a complex sinusoid under an isotropic
//! Gaussian envelope; the real (cosine) and imaginary (sine) kernels are made
//! exactly zero-mean so a constant patch produces no response, and are scaled
//! to unit joint L2 norm so responses are comparable across kernel sizes.
//!
//! With an isotropic envelope the complex kernel factors into a product of
//! two 1-D complex kernels, so the same-size convolution runs as two 1-D
//! passes plus a box-filter correction for the mean subtraction. Borders are
//! reflected (edge pixel repeated).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::Raster;

/// Default spatial frequencies, cycles per pixel.
pub const DEFAULT_SCALES: [f64; 4] = [0.1, 0.2, 0.3, 0.4];
/// Default orientations in degrees.
pub const DEFAULT_ORIENTATIONS: [f64; 6] = [0.0, 30.0, 60.0, 90.0, 120.0, 150.0];

/// Gaussian envelope std-dev as a fraction of the wavelength (about one
/// octave of half-response bandwidth).
pub const SIGMA_WAVELENGTH_FACTOR: f64 = 0.56;

/// Parameters of one Gabor filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaborParams {
    /// Spatial frequency in cycles per pixel.
    pub scale: f64,
    /// Orientation of the wave vector in degrees.
    pub orientation: f64,
    /// Side of the square kernel, odd and >= 3.
    pub kernel_size: usize,
    /// Gaussian envelope std-dev in pixels.
    pub sigma: f64,
}

impl GaborParams {
    /// Derive kernel geometry from a frequency/orientation pair:
    /// sigma = 0.56 * wavelength, kernel side = smallest odd integer
    /// >= 6*sigma + 1 (at least 3).
    pub fn from_scale_orientation(scale: f64, orientation: f64) -> Result<Self> {
        if scale.is_nan() || scale <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gabor scale must be positive, got {scale}"
            )));
        }
        let wavelength = 1.0 / scale;
        let sigma = SIGMA_WAVELENGTH_FACTOR * wavelength;
        let mut kernel_size = (6.0 * sigma + 1.0).ceil() as usize;
        if kernel_size.is_multiple_of(2) {
            kernel_size += 1;
        }
        kernel_size = kernel_size.max(3);
        Ok(Self {
            scale,
            orientation,
            kernel_size,
            sigma,
        })
    }

    /// Cap the kernel at the largest odd size that fits a patch side.
    pub fn capped(mut self, side: u32) -> Result<Self> {
        let side = side as usize;
        if side < 3 {
            return Err(Error::InvalidParameter(format!(
                "patch side {side} is below the minimum kernel size 3"
            )));
        }
        let max_odd = if side.is_multiple_of(2) {
            side - 1
        } else {
            side
        };
        self.kernel_size = self.kernel_size.min(max_odd);
        Ok(self)
    }
}

/// A filter dictionary: the Cartesian product of scales and orientations in
/// scale-major order.
#[derive(Debug, Clone)]
pub struct GaborDictionary {
    scales: Vec<f64>,
    orientations: Vec<f64>,
    filters: Vec<GaborParams>,
}

/// Build the dictionary from frequency and orientation lists.
pub fn build_dictionary(scales: &[f64], orientations: &[f64]) -> Result<GaborDictionary> {
    if scales.is_empty() {
        return Err(Error::InvalidParameter("scale list is empty".into()));
    }
    if orientations.is_empty() {
        return Err(Error::InvalidParameter("orientation list is empty".into()));
    }
    let mut filters = Vec::with_capacity(scales.len() * orientations.len());
    for &s in scales {
        for &o in orientations {
            filters.push(GaborParams::from_scale_orientation(s, o)?);
        }
    }
    Ok(GaborDictionary {
        scales: scales.to_vec(),
        orientations: orientations.to_vec(),
        filters,
    })
}

/// The 4x6 dictionary used throughout the metric.
pub fn default_dictionary() -> GaborDictionary {
    build_dictionary(&DEFAULT_SCALES, &DEFAULT_ORIENTATIONS)
        .expect("default dictionary parameters are valid")
}

impl GaborDictionary {
    pub fn filters(&self) -> &[GaborParams] {
        &self.filters
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn orientations(&self) -> &[f64] {
        &self.orientations
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    /// Dictionary with every kernel capped at the given patch side.
    pub fn capped(&self, side: u32) -> Result<GaborDictionary> {
        let filters = self
            .filters
            .iter()
            .map(|p| p.capped(side))
            .collect::<Result<Vec<_>>>()?;
        Ok(GaborDictionary {
            scales: self.scales.clone(),
            orientations: self.orientations.clone(),
            filters,
        })
    }
}

/// Complex response of one filter applied to one raster.
#[derive(Debug, Clone)]
pub struct GaborResponse {
    pub real: Raster,
    pub imag: Raster,
    pub magnitude: Raster,
}

/// Per-patch energy matrix: squared-magnitude response per (scale,
/// orientation), normalized to sum to 1 (or the uniform matrix for a flat
/// patch, where the accumulator would vanish).
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMatrix {
    n_scales: usize,
    n_orientations: usize,
    values: Vec<f64>,
}

impl EnergyMatrix {
    pub fn uniform(n_scales: usize, n_orientations: usize) -> Self {
        let n = n_scales * n_orientations;
        Self {
            n_scales,
            n_orientations,
            values: vec![1.0 / n as f64; n],
        }
    }

    pub fn n_scales(&self) -> usize {
        self.n_scales
    }

    pub fn n_orientations(&self) -> usize {
        self.n_orientations
    }

    /// Entry for scale index `i`, orientation index `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_orientations + j]
    }

    /// Scale-major flattening, the R^24 vector fed to clustering.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Index of the maximum entry as (scale, orientation).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (best / self.n_orientations, best % self.n_orientations)
    }
}

/// 1-D complex factors of the separable kernel plus the scalars needed for
/// exact mean removal and normalization. The factors are stored conjugated
/// so that correlation with them realizes true convolution with the kernel.
struct SeparableKernel {
    half: usize,
    // row-direction (x) factor, conjugated
    ax_re: Vec<f64>,
    ax_im: Vec<f64>,
    // column-direction (y) factor, conjugated
    ay_re: Vec<f64>,
    ay_im: Vec<f64>,
    mean_re: f64,
    mean_im: f64,
    inv_norm: f64,
}

fn build_kernel(params: &GaborParams) -> Result<SeparableKernel> {
    let k = params.kernel_size;
    if k < 3 || k.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "kernel size must be odd and >= 3, got {k}"
        )));
    }
    let half = k / 2;
    let theta = params.orientation.to_radians();
    let fx = params.scale * theta.cos();
    let fy = params.scale * theta.sin();
    let two_sigma_sq = 2.0 * params.sigma * params.sigma;

    let n = 2 * half + 1;
    let mut ax_re = vec![0.0; n];
    let mut ax_im = vec![0.0; n];
    let mut ay_re = vec![0.0; n];
    let mut ay_im = vec![0.0; n];
    // sums of the unconjugated factors, for the kernel DC
    let (mut sx_re, mut sx_im, mut sy_re, mut sy_im) = (0.0, 0.0, 0.0, 0.0);
    // sums of squared envelopes, for the L2 norm
    let (mut ex, mut ey) = (0.0, 0.0);
    for t in 0..n {
        let d = t as f64 - half as f64;
        let env = (-d * d / two_sigma_sq).exp();
        let px = std::f64::consts::TAU * fx * d;
        let py = std::f64::consts::TAU * fy * d;
        ax_re[t] = env * px.cos();
        ax_im[t] = -env * px.sin();
        ay_re[t] = env * py.cos();
        ay_im[t] = -env * py.sin();
        sx_re += env * px.cos();
        sx_im += env * px.sin();
        sy_re += env * py.cos();
        sy_im += env * py.sin();
        ex += env * env;
        ey += env * env;
    }
    let count = (n * n) as f64;
    // DC of the 2-D kernel = (sum of x factor) * (sum of y factor) / K^2
    let dc_re = (sx_re * sy_re - sx_im * sy_im) / count;
    let dc_im = (sx_re * sy_im + sx_im * sy_re) / count;
    // || kernel - DC ||^2 = sum|kernel|^2 - K^2 |DC|^2
    let norm_sq = ex * ey - count * (dc_re * dc_re + dc_im * dc_im);
    if norm_sq.is_nan() || norm_sq <= 1e-300 {
        return Err(Error::InvalidParameter(
            "degenerate gabor kernel (zero norm after mean removal)".into(),
        ));
    }
    Ok(SeparableKernel {
        half,
        ax_re,
        ax_im,
        ay_re,
        ay_im,
        mean_re: dc_re,
        mean_im: dc_im,
        inv_norm: 1.0 / norm_sq.sqrt(),
    })
}

#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 {
        -i - 1
    } else if i >= n {
        2 * n - 1 - i
    } else {
        i
    };
    j as usize
}

/// Copy one row into a reflect-padded buffer of length w + 2*half.
fn pad_row(src_row: &[f64], half: usize, padded: &mut [f64]) {
    let w = src_row.len();
    for t in 0..half {
        padded[t] = src_row[reflect(t as isize - half as isize, w)];
        padded[half + w + t] = src_row[reflect((w + t) as isize, w)];
    }
    padded[half..half + w].copy_from_slice(src_row);
}

/// Horizontal correlation of a real image with a complex 1-D kernel,
/// accumulated tap-major over contiguous slices.
fn correlate_rows_real(
    src: &Raster,
    k_re: &[f64],
    k_im: &[f64],
    half: usize,
) -> (Vec<f64>, Vec<f64>) {
    let w = src.width() as usize;
    let h = src.height() as usize;
    let mut out_re = vec![0.0; w * h];
    let mut out_im = vec![0.0; w * h];
    let data = src.as_slice();
    out_re
        .par_chunks_mut(w)
        .zip(out_im.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (row_re, row_im))| {
            let mut padded = vec![0.0; w + 2 * half];
            pad_row(&data[y * w..(y + 1) * w], half, &mut padded);
            for (t, (&kr, &ki)) in k_re.iter().zip(k_im).enumerate() {
                let window = &padded[t..t + w];
                for ((o_re, o_im), &v) in row_re.iter_mut().zip(row_im.iter_mut()).zip(window) {
                    *o_re += kr * v;
                    *o_im += ki * v;
                }
            }
        });
    (out_re, out_im)
}

/// Vertical correlation of a complex image with a complex 1-D kernel. Each
/// tap adds a whole source row (reflected at the borders) onto the output
/// row, so the inner loops run over contiguous slices.
fn correlate_cols_complex(
    src_re: &[f64],
    src_im: &[f64],
    w: usize,
    h: usize,
    k_re: &[f64],
    k_im: &[f64],
    half: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut out_re = vec![0.0; w * h];
    let mut out_im = vec![0.0; w * h];
    out_re
        .par_chunks_mut(w)
        .zip(out_im.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (row_re, row_im))| {
            for (t, (&kr, &ki)) in k_re.iter().zip(k_im).enumerate() {
                let yy = reflect(y as isize + t as isize - half as isize, h);
                let src_r = &src_re[yy * w..(yy + 1) * w];
                let src_i = &src_im[yy * w..(yy + 1) * w];
                for ((o_re, o_im), (&a, &b)) in row_re
                    .iter_mut()
                    .zip(row_im.iter_mut())
                    .zip(src_r.iter().zip(src_i))
                {
                    *o_re += kr * a - ki * b;
                    *o_im += kr * b + ki * a;
                }
            }
        });
    (out_re, out_im)
}

/// Same-size box sum over the kernel window with reflected borders; used to
/// correct for the subtracted kernel mean.
fn box_sum(src: &Raster, half: usize) -> Vec<f64> {
    let w = src.width() as usize;
    let h = src.height() as usize;
    let data = src.as_slice();
    let mut rows = vec![0.0; w * h];
    rows.par_chunks_mut(w).enumerate().for_each(|(y, out_row)| {
        let mut padded = vec![0.0; w + 2 * half];
        pad_row(&data[y * w..(y + 1) * w], half, &mut padded);
        for t in 0..(2 * half + 1) {
            for (o, &v) in out_row.iter_mut().zip(&padded[t..t + w]) {
                *o += v;
            }
        }
    });
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, out_row)| {
        for t in 0..(2 * half + 1) {
            let yy = reflect(y as isize + t as isize - half as isize, h);
            for (o, &v) in out_row.iter_mut().zip(&rows[yy * w..(yy + 1) * w]) {
                *o += v;
            }
        }
    });
    out
}

/// Convolve a raster with the cosine- and sine-phase Gabor kernels
/// (zero-mean, jointly L2-normalized), returning real, imaginary and
/// magnitude responses of the same size. Borders are reflected.
pub fn apply_gabor(patch: &Raster, params: &GaborParams) -> Result<GaborResponse> {
    let kernel = build_kernel(params)?;
    let k = params.kernel_size as u32;
    if patch.width() < k || patch.height() < k {
        return Err(Error::InvalidParameter(format!(
            "patch {}x{} is smaller than the {}x{} kernel",
            patch.width(),
            patch.height(),
            params.kernel_size,
            params.kernel_size
        )));
    }
    let w = patch.width() as usize;
    let h = patch.height() as usize;

    let (mid_re, mid_im) = correlate_rows_real(patch, &kernel.ax_re, &kernel.ax_im, kernel.half);
    let (mut re, mut im) = correlate_cols_complex(
        &mid_re,
        &mid_im,
        w,
        h,
        &kernel.ay_re,
        &kernel.ay_im,
        kernel.half,
    );
    let boxed = box_sum(patch, kernel.half);

    let mut mag = vec![0.0; w * h];
    re.par_chunks_mut(w)
        .zip(im.par_chunks_mut(w))
        .zip(mag.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, ((row_re, row_im), row_mag))| {
            let base = y * w;
            for x in 0..w {
                let b = boxed[base + x];
                let r = (row_re[x] - kernel.mean_re * b) * kernel.inv_norm;
                let i = (row_im[x] - kernel.mean_im * b) * kernel.inv_norm;
                row_re[x] = r;
                row_im[x] = i;
                row_mag[x] = (r * r + i * i).sqrt();
            }
        });

    Ok(GaborResponse {
        real: Raster::from_vec(patch.width(), patch.height(), re)?,
        imag: Raster::from_vec(patch.width(), patch.height(), im)?,
        magnitude: Raster::from_vec(patch.width(), patch.height(), mag)?,
    })
}

/// Threshold below which the energy accumulator counts as degenerate and the
/// uniform matrix is returned.
pub const DEGENERATE_ENERGY_EPS: f64 = 1e-12;

/// Energy matrix of one patch under a dictionary: entry (i, j) is the sum of
/// squared magnitudes for filter (scale_i, orientation_j), normalized so all
/// entries sum to 1. A flat patch (accumulator below
/// [`DEGENERATE_ENERGY_EPS`]) yields the uniform matrix instead.
pub fn patch_energy(patch: &Raster, dictionary: &GaborDictionary) -> Result<EnergyMatrix> {
    let n_scales = dictionary.scales.len();
    let n_orientations = dictionary.orientations.len();
    let energies: Vec<f64> = dictionary
        .filters
        .par_iter()
        .map(|params| {
            let resp = apply_gabor(patch, params)?;
            // sum |F|^2 in index order
            let energy: f64 = resp
                .real
                .as_slice()
                .iter()
                .zip(resp.imag.as_slice())
                .map(|(r, i)| r * r + i * i)
                .sum();
            Ok(energy)
        })
        .collect::<Result<Vec<_>>>()?;
    let accumulator: f64 = energies.iter().sum();
    if accumulator < DEGENERATE_ENERGY_EPS {
        return Ok(EnergyMatrix::uniform(n_scales, n_orientations));
    }
    Ok(EnergyMatrix {
        n_scales,
        n_orientations,
        values: energies.iter().map(|e| e / accumulator).collect(),
    })
}
