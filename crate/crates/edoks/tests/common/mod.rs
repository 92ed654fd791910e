//! Shared test support: an exhaustive transportation oracle that is
//! independent of the solver under test, plus synthetic image fixtures.

#![allow(dead_code)]

use edoks::color::{oklab_to_srgb8, srgb8_to_oklab, OklabPixel};
use edoks::signature::Signature;
use image::RgbImage;
use rand::rngs::StdRng;
use rand::Rng;

/// Exhaustive EMD oracle for balanced problems: enumerate every basic
/// solution (spanning tree of the bipartite graph), solve its flows by leaf
/// elimination, keep feasible ones, and return the minimum cost over total
/// flow. Exponential; intended for n, m <= 4.
pub fn oracle_emd(wx: &[f64], wy: &[f64], cost: &[Vec<f64>]) -> f64 {
    let n = wx.len();
    let m = wy.len();
    assert!(
        ((wx.iter().sum::<f64>()) - (wy.iter().sum::<f64>())).abs() < 1e-9,
        "oracle handles balanced problems only"
    );
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let basis_size = n + m - 1;
    let mut best = f64::INFINITY;

    let mut choice: Vec<usize> = (0..basis_size).collect();
    loop {
        let subset: Vec<(usize, usize)> = choice.iter().map(|&c| cells[c]).collect();
        if let Some(flows) = solve_tree(n, m, &subset, wx, wy) {
            let total: f64 = flows.iter().map(|(_, _, f)| f).sum();
            if total > 1e-12 {
                let c: f64 = flows.iter().map(|(i, j, f)| f * cost[*i][*j]).sum();
                best = best.min(c / total);
            }
        }
        // next combination in lexicographic order
        let mut idx = basis_size;
        loop {
            if idx == 0 {
                return best;
            }
            idx -= 1;
            if choice[idx] < cells.len() - (basis_size - idx) {
                choice[idx] += 1;
                for t in (idx + 1)..basis_size {
                    choice[t] = choice[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Solve flows on a candidate spanning tree by repeatedly satisfying leaf
/// nodes; rejects non-trees and negative flows.
fn solve_tree(
    n: usize,
    m: usize,
    cells: &[(usize, usize)],
    wx: &[f64],
    wy: &[f64],
) -> Option<Vec<(usize, usize, f64)>> {
    let mut rem_row = wx.to_vec();
    let mut rem_col = wy.to_vec();
    let mut alive: Vec<(usize, usize)> = cells.to_vec();
    let mut flows = Vec::with_capacity(cells.len());

    while !alive.is_empty() {
        let mut row_deg = vec![0usize; n];
        let mut col_deg = vec![0usize; m];
        for &(i, j) in &alive {
            row_deg[i] += 1;
            col_deg[j] += 1;
        }
        // find a leaf: a row or column that touches exactly one live cell
        let leaf_pos = alive
            .iter()
            .position(|&(i, j)| row_deg[i] == 1 || col_deg[j] == 1)?;
        let (i, j) = alive.remove(leaf_pos);
        let f = if row_deg[i] == 1 {
            rem_row[i]
        } else {
            rem_col[j]
        };
        if f < -1e-9 {
            return None;
        }
        rem_row[i] -= f;
        rem_col[j] -= f;
        flows.push((i, j, f));
    }
    if rem_row.iter().any(|r| r.abs() > 1e-9) || rem_col.iter().any(|r| r.abs() > 1e-9) {
        return None;
    }
    if flows.iter().any(|(_, _, f)| *f < -1e-9) {
        return None;
    }
    Some(flows)
}

/// Oracle for possibly unbalanced problems: balances with a zero-cost slack
/// node, enumerates as in [`oracle_emd`], and normalizes by the real
/// (non-slack) flow, which equals min(total_x, total_y) at every vertex.
pub fn oracle_emd_general(wx: &[f64], wy: &[f64], cost: &[Vec<f64>]) -> f64 {
    let n = wx.len();
    let m = wy.len();
    let total_x: f64 = wx.iter().sum();
    let total_y: f64 = wy.iter().sum();
    let surplus = total_x - total_y;
    if surplus.abs() <= 1e-12 {
        return oracle_emd(wx, wy, cost);
    }
    // slack cells cost zero and are excluded from the value, so only the
    // augmented weight vectors are needed
    let (wx2, wy2): (Vec<f64>, Vec<f64>) = if surplus > 0.0 {
        let mut wy2 = wy.to_vec();
        wy2.push(surplus);
        (wx.to_vec(), wy2)
    } else {
        let mut wx2 = wx.to_vec();
        wx2.push(-surplus);
        (wx2, wy.to_vec())
    };

    let n2 = wx2.len();
    let m2 = wy2.len();
    let cells: Vec<(usize, usize)> = (0..n2).flat_map(|i| (0..m2).map(move |j| (i, j))).collect();
    let basis_size = n2 + m2 - 1;
    let mut best = f64::INFINITY;
    let mut choice: Vec<usize> = (0..basis_size).collect();
    loop {
        let subset: Vec<(usize, usize)> = choice.iter().map(|&c| cells[c]).collect();
        if let Some(flows) = solve_tree(n2, m2, &subset, &wx2, &wy2) {
            let real: Vec<&(usize, usize, f64)> =
                flows.iter().filter(|(i, j, _)| *i < n && *j < m).collect();
            let moved: f64 = real.iter().map(|(_, _, f)| f).sum();
            if moved > 1e-12 {
                let work: f64 = real.iter().map(|(i, j, f)| f * cost[*i][*j]).sum();
                best = best.min(work / moved);
            }
        }
        let mut idx = basis_size;
        loop {
            if idx == 0 {
                return best;
            }
            idx -= 1;
            if choice[idx] < cells.len() - (basis_size - idx) {
                choice[idx] += 1;
                for t in (idx + 1)..basis_size {
                    choice[t] = choice[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// L1 cost matrix between two centroid sets.
pub fn l1_cost(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .map(|u| {
            b.iter()
                .map(|v| u.iter().zip(v).map(|(x, y)| (x - y).abs()).sum())
                .collect()
        })
        .collect()
}

/// Random normalized signature with up to `max_k` clusters of the given
/// dimensionality.
pub fn rand_signature(rng: &mut StdRng, max_k: usize, dim: usize) -> Signature {
    let k = rng.gen_range(1..=max_k);
    let centroids: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    Signature::new(centroids, weights).unwrap()
}

/// Random sRGB image.
pub fn rand_image(rng: &mut StdRng, width: u32, height: u32) -> RgbImage {
    let mut im = RgbImage::new(width, height);
    for p in im.pixels_mut() {
        *p = image::Rgb([rng.gen(), rng.gen(), rng.gen()]);
    }
    im
}

/// Colorful multi-frequency texture used as the base of distortion fixtures.
pub fn textured_base(side: u32) -> RgbImage {
    let mut im = RgbImage::new(side, side);
    for y in 0..side {
        for x in 0..side {
            let fx = x as f64;
            let fy = y as f64;
            let tau = std::f64::consts::TAU;
            let r = 0.55 + 0.35 * (tau * 0.2 * fx).sin();
            let g = 0.5 + 0.3 * (tau * 0.1 * fy).sin() + 0.1 * (fx / side as f64);
            let b = 0.5 + 0.35 * (tau * 0.15 * (fx + fy) * std::f64::consts::FRAC_1_SQRT_2).sin();
            im.put_pixel(
                x,
                y,
                image::Rgb([
                    (r.clamp(0.0, 1.0) * 255.0).round() as u8,
                    (g.clamp(0.0, 1.0) * 255.0).round() as u8,
                    (b.clamp(0.0, 1.0) * 255.0).round() as u8,
                ]),
            );
        }
    }
    im
}

/// Rotate the hue (Oklab a/b plane) of pixels inside a box, preserving
/// lightness.
pub fn hue_rotate_box(
    src: &RgbImage,
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
    angle_deg: f64,
) -> RgbImage {
    let angle = angle_deg.to_radians();
    let (sin, cos) = angle.sin_cos();
    let mut out = src.clone();
    for y in y0..y1 {
        for x in x0..x1 {
            let p = src.get_pixel(x, y);
            let lab = srgb8_to_oklab(p[0], p[1], p[2]);
            let rotated = OklabPixel {
                l: lab.l,
                a: lab.a * cos - lab.b * sin,
                b: lab.a * sin + lab.b * cos,
            };
            out.put_pixel(x, y, image::Rgb(oklab_to_srgb8(rotated)));
        }
    }
    out
}

// ---- separability fixture ----------------------------------------------
//
// The fixture separates the two distortion channels by construction:
// luminance carries the texture (low contrast), chroma varies slowly and
// carries no texture energy. The color distortion rotates the chroma vector
// inside the plane orthogonal to the Rec. 709 luminance weights, so the
// grayscale pipeline sees (up to 8-bit quantization) the identical image,
// while the geometric warp displaces the luminance grating and leaves the
// palette untouched.

const LUMA_W: [f64; 3] = [0.2126, 0.7152, 0.0722];

fn srgb_decode_f(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn srgb_encode_f(c: f64) -> u8 {
    let c = c.clamp(0.0, 1.0);
    let v = if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    };
    (v * 255.0).round() as u8
}

/// Orthonormal basis of the plane orthogonal to the luminance weights.
fn chroma_basis() -> ([f64; 3], [f64; 3]) {
    let w = LUMA_W;
    let mut u = [w[2], 0.0, -w[0]];
    let un = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    for c in u.iter_mut() {
        *c /= un;
    }
    let mut v = [
        w[1] * u[2] - w[2] * u[1],
        w[2] * u[0] - w[0] * u[2],
        w[0] * u[1] - w[1] * u[0],
    ];
    let vn = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    for c in v.iter_mut() {
        *c /= vn;
    }
    (u, v)
}

/// Base image for the separability criterion: low-contrast luminance
/// texture plus a slowly rotating chroma field of constant magnitude.
pub fn separability_base(side: u32) -> RgbImage {
    let (u, v) = chroma_basis();
    let tau = std::f64::consts::TAU;
    let mut im = RgbImage::new(side, side);
    for y in 0..side {
        for x in 0..side {
            let fx = x as f64;
            let fy = y as f64;
            let lum = 0.5
                + 0.05 * (tau * 0.2 * fx).sin()
                + 0.03 * (tau * 0.1 * (fx + fy) * std::f64::consts::FRAC_1_SQRT_2).sin();
            let phi = tau * (fx + 2.0 * fy) / (3.0 * side as f64);
            let chroma = 0.16;
            let mut rgb = [0.0f64; 3];
            for c in 0..3 {
                rgb[c] = lum + chroma * (phi.cos() * u[c] + phi.sin() * v[c]);
            }
            im.put_pixel(
                x,
                y,
                image::Rgb([
                    srgb_encode_f(rgb[0]),
                    srgb_encode_f(rgb[1]),
                    srgb_encode_f(rgb[2]),
                ]),
            );
        }
    }
    im
}

/// Rotate the chroma of box pixels inside the luma-orthogonal plane; the
/// linear luminance of every pixel is preserved exactly (up to 8-bit
/// re-quantization), so only the color term can see this distortion.
pub fn luma_preserving_color_shift_box(
    src: &RgbImage,
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
    angle_deg: f64,
) -> RgbImage {
    let (ub, vb) = chroma_basis();
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let mut out = src.clone();
    for y in y0..y1 {
        for x in x0..x1 {
            let p = src.get_pixel(x, y);
            let lin = [
                srgb_decode_f(p[0]),
                srgb_decode_f(p[1]),
                srgb_decode_f(p[2]),
            ];
            let lum = LUMA_W[0] * lin[0] + LUMA_W[1] * lin[1] + LUMA_W[2] * lin[2];
            let chroma = [lin[0] - lum, lin[1] - lum, lin[2] - lum];
            let cu = chroma[0] * ub[0] + chroma[1] * ub[1] + chroma[2] * ub[2];
            let cv = chroma[0] * vb[0] + chroma[1] * vb[1] + chroma[2] * vb[2];
            let ru = cu * cos - cv * sin;
            let rv = cu * sin + cv * cos;
            let mut rgb = [0.0f64; 3];
            for c in 0..3 {
                rgb[c] = lum + ru * ub[c] + rv * vb[c];
            }
            out.put_pixel(
                x,
                y,
                image::Rgb([
                    srgb_encode_f(rgb[0]),
                    srgb_encode_f(rgb[1]),
                    srgb_encode_f(rgb[2]),
                ]),
            );
        }
    }
    out
}

/// Sinusoidal horizontal displacement of pixels inside a box (a geometric
/// warp with preserved palette).
pub fn warp_box(src: &RgbImage, x0: u32, y0: u32, x1: u32, y1: u32, amplitude: f64) -> RgbImage {
    let mut out = src.clone();
    let period = (y1 - y0).max(1) as f64 / 2.0;
    for y in y0..y1 {
        for x in x0..x1 {
            let shift = amplitude * (std::f64::consts::TAU * (y - y0) as f64 / period).sin();
            let sx = (x as f64 + shift)
                .round()
                .clamp(0.0, (src.width() - 1) as f64) as u32;
            out.put_pixel(x, y, *src.get_pixel(sx, y));
        }
    }
    out
}
