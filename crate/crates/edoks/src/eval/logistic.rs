//! Five-parameter logistic regression used before computing PLCC:
//!
//! `f(x) = b1 * (1/2 - 1/(1 + exp(b2 (x - b3)))) + b4 x + b5`
//!
//! The curve is linear in (b1, b4, b5) once (b2, b3) are fixed, so the fit
//! runs a derivative-free simplex descent over (b2, b3) with the linear
//! coefficients solved exactly at every step. Five deterministic restarts
//! from perturbed seeds guard against local minima.

use crate::error::{Error, Result};

/// Fitted parameters b1..b5 plus the sum of squared errors.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub beta: [f64; 5],
    pub residual: f64,
    /// Set when the scores were constant and the fit collapsed to the mean.
    pub degenerate: bool,
}

impl LogisticFit {
    /// Evaluate the fitted mapping at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let [b1, b2, b3, b4, b5] = self.beta;
        b1 * (0.5 - 1.0 / (1.0 + (b2 * (x - b3)).exp())) + b4 * x + b5
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

#[inline]
fn sigmoid_term(x: f64, b2: f64, b3: f64) -> f64 {
    0.5 - 1.0 / (1.0 + (b2 * (x - b3)).exp())
}

/// Solve the 3x3 normal equations for (b1, b4, b5) given fixed (b2, b3);
/// returns the coefficients and the resulting sum of squared errors.
fn linear_subfit(scores: &[f64], mos: &[f64], b2: f64, b3: f64) -> ([f64; 3], f64) {
    let n = scores.len();
    // columns: g(x), x, 1
    let mut a = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for i in 0..n {
        let cols = [sigmoid_term(scores[i], b2, b3), scores[i], 1.0];
        for r in 0..3 {
            b[r] += cols[r] * mos[i];
            for c in 0..3 {
                a[r][c] += cols[r] * cols[c];
            }
        }
    }
    // tiny ridge keeps the solve well-posed when columns collinear
    let ridge = 1e-12 * (1.0 + (a[0][0] + a[1][1] + a[2][2]) / 3.0);
    for (r, row) in a.iter_mut().enumerate() {
        row[r] += ridge;
    }

    // gaussian elimination with partial pivoting
    let mut m = [[0.0f64; 4]; 3];
    for r in 0..3 {
        m[r][..3].copy_from_slice(&a[r]);
        m[r][3] = b[r];
    }
    for col in 0..3 {
        let mut piv = col;
        for r in (col + 1)..3 {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        m.swap(col, piv);
        let d = m[col][col];
        if d.abs() < 1e-300 {
            continue;
        }
        let pivot_row = m[col];
        for (r, row) in m.iter_mut().enumerate() {
            if r != col {
                let factor = row[col] / d;
                for (t, p) in row.iter_mut().zip(&pivot_row).skip(col) {
                    *t -= factor * p;
                }
            }
        }
    }
    let mut coeff = [0.0f64; 3];
    for r in 0..3 {
        coeff[r] = if m[r][r].abs() < 1e-300 {
            0.0
        } else {
            m[r][3] / m[r][r]
        };
    }

    let mut sse = 0.0;
    for i in 0..n {
        let pred = coeff[0] * sigmoid_term(scores[i], b2, b3) + coeff[1] * scores[i] + coeff[2];
        let e = pred - mos[i];
        sse += e * e;
    }
    (coeff, sse)
}

/// Nelder-Mead over (b2, b3), minimizing the projected SSE.
fn simplex_descent(
    scores: &[f64],
    mos: &[f64],
    start: [f64; 2],
    steps: [f64; 2],
) -> ([f64; 2], f64) {
    let f = |p: [f64; 2]| linear_subfit(scores, mos, p[0], p[1]).1;
    let mut simplex = [
        start,
        [start[0] + steps[0], start[1]],
        [start[0], start[1] + steps[1]],
    ];
    let mut values = simplex.map(f);

    for _ in 0..400 {
        // sort ascending by value
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, mid, worst) = (order[0], order[1], order[2]);
        if (values[worst] - values[best]).abs() <= 1e-15 * (1.0 + values[best].abs()) {
            break;
        }
        let centroid = [
            (simplex[best][0] + simplex[mid][0]) / 2.0,
            (simplex[best][1] + simplex[mid][1]) / 2.0,
        ];
        let reflect = [
            centroid[0] + (centroid[0] - simplex[worst][0]),
            centroid[1] + (centroid[1] - simplex[worst][1]),
        ];
        let fr = f(reflect);
        if fr < values[best] {
            let expand = [
                centroid[0] + 2.0 * (centroid[0] - simplex[worst][0]),
                centroid[1] + 2.0 * (centroid[1] - simplex[worst][1]),
            ];
            let fe = f(expand);
            if fe < fr {
                simplex[worst] = expand;
                values[worst] = fe;
            } else {
                simplex[worst] = reflect;
                values[worst] = fr;
            }
        } else if fr < values[mid] {
            simplex[worst] = reflect;
            values[worst] = fr;
        } else {
            let contract = [
                centroid[0] + 0.5 * (simplex[worst][0] - centroid[0]),
                centroid[1] + 0.5 * (simplex[worst][1] - centroid[1]),
            ];
            let fc = f(contract);
            if fc < values[worst] {
                simplex[worst] = contract;
                values[worst] = fc;
            } else {
                // shrink toward best
                for i in 0..3 {
                    if i != best {
                        simplex[i] = [
                            simplex[best][0] + 0.5 * (simplex[i][0] - simplex[best][0]),
                            simplex[best][1] + 0.5 * (simplex[i][1] - simplex[best][1]),
                        ];
                        values[i] = f(simplex[i]);
                    }
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..3 {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best], values[best])
}

/// Fit the five-parameter logistic mapping from scores to MOS by least
/// squares. Deterministic: fixed seeds, no randomness.
pub fn fit_logistic(scores: &[f64], mos: &[f64]) -> Result<LogisticFit> {
    if scores.len() != mos.len() {
        return Err(Error::LengthMismatch(scores.len(), mos.len()));
    }
    if scores.len() < 5 {
        return Err(Error::InvalidParameter(format!(
            "logistic fit needs at least 5 points, got {}",
            scores.len()
        )));
    }

    let s_mean = mean(scores);
    let s_std = std_dev(scores);
    if s_std <= 1e-15 * (1.0 + s_mean.abs()) {
        // constant scores: the mapping collapses to the MOS mean
        let m_mean = mean(mos);
        let residual = mos.iter().map(|y| (y - m_mean) * (y - m_mean)).sum();
        return Ok(LogisticFit {
            beta: [0.0, 0.0, s_mean, 0.0, m_mean],
            residual,
            degenerate: true,
        });
    }

    let b2_0 = 1.0 / s_std;
    // deterministic restart seeds around the initialization
    let seeds: [([f64; 2], [f64; 2]); 5] = [
        ([b2_0, s_mean], [0.5 * b2_0, 0.5 * s_std]),
        ([0.3 * b2_0, s_mean - 0.5 * s_std], [0.2 * b2_0, s_std]),
        ([3.0 * b2_0, s_mean + 0.5 * s_std], [b2_0, 0.5 * s_std]),
        ([-b2_0, s_mean], [0.5 * b2_0, 0.5 * s_std]),
        ([10.0 * b2_0, s_mean], [5.0 * b2_0, s_std]),
    ];

    let mut best: Option<([f64; 2], f64)> = None;
    for (start, steps) in seeds {
        let (point, value) = simplex_descent(scores, mos, start, steps);
        if best.as_ref().is_none_or(|(_, v)| value < *v) {
            best = Some((point, value));
        }
    }
    let ([b2, b3], _) = best.expect("at least one seed ran");
    let (coeff, residual) = linear_subfit(scores, mos, b2, b3);
    Ok(LogisticFit {
        beta: [coeff[0], b2, b3, coeff[1], coeff[2]],
        residual,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_representable() {
        let scores: Vec<f64> = (0..20).map(|i| i as f64 * 0.35 - 2.0).collect();
        let fit = fit_logistic(&scores, &scores).unwrap();
        assert!(fit.residual <= 1e-8, "residual {}", fit.residual);
        assert!(!fit.degenerate);
    }

    #[test]
    fn affine_is_representable() {
        let scores: Vec<f64> = (0..15).map(|i| i as f64 * 0.5).collect();
        let mos: Vec<f64> = scores.iter().map(|s| 2.0 * s + 3.0).collect();
        let fit = fit_logistic(&scores, &mos).unwrap();
        assert!(fit.residual <= 1e-8, "residual {}", fit.residual);
    }

    #[test]
    fn recovers_synthetic_sigmoid() {
        // generate from known parameters with small deterministic noise
        let beta = [1.2, 2.5, 1.0, 0.05, 0.4];
        let truth = LogisticFit {
            beta,
            residual: 0.0,
            degenerate: false,
        };
        let noise_amp = 1e-3;
        let scores: Vec<f64> = (0..60).map(|i| i as f64 / 59.0 * 4.0 - 1.0).collect();
        let mos: Vec<f64> = scores
            .iter()
            .enumerate()
            .map(|(i, s)| truth.eval(*s) + noise_amp * ((i as f64 * 12.9898).sin()))
            .collect();
        let fit = fit_logistic(&scores, &mos).unwrap();
        // fitted curve must match the generator within the noise level
        for i in 0..=40 {
            let x = i as f64 / 40.0 * 4.0 - 1.0;
            let err = (fit.eval(x) - truth.eval(x)).abs();
            assert!(err < 10.0 * noise_amp, "curve off by {err} at {x}");
        }
        assert!(fit.residual <= scores.len() as f64 * noise_amp * noise_amp * 4.0);
    }

    #[test]
    fn constant_scores_flagged_degenerate() {
        let scores = vec![2.0; 8];
        let mos: Vec<f64> = (0..8).map(|i| i as f64 / 7.0).collect();
        let fit = fit_logistic(&scores, &mos).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.beta[1], 0.0);
        assert_eq!(fit.beta[3], 0.0);
        // prediction is the MOS mean everywhere
        assert!((fit.eval(2.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn too_few_points_rejected() {
        assert!(fit_logistic(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(fit_logistic(&[1.0; 5], &[1.0; 4]).is_err());
    }
}
