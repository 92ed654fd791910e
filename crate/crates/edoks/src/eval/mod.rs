//! Evaluation harness: 2AFC triplet accuracy, JND group means, MOS
//! correlation analysis and the alpha ablation sweep.

pub mod correlation;
pub mod logistic;
pub mod manifest;

use image::RgbImage;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric::reciprocal;

pub use correlation::{average_ranks, kendall_tau_b, pearson, spearman};
pub use logistic::{fit_logistic, LogisticFit};

/// One 2AFC triplet: which of p0/p1 is closer to the reference, with the
/// fraction of judges preferring p1.
#[derive(Debug, Clone)]
pub struct TripletSample {
    pub reference: RgbImage,
    pub p0: RgbImage,
    pub p1: RgbImage,
    pub human_choice: f64,
}

/// One JND pair with the number of judges voting "same".
#[derive(Debug, Clone)]
pub struct JndSample {
    pub reference: RgbImage,
    pub distorted: RgbImage,
    pub votes_same: u32,
    pub judges: u32,
}

impl JndSample {
    /// Implicit mean opinion score: fraction of judges voting "same".
    pub fn mos(&self) -> f64 {
        self.votes_same as f64 / self.judges as f64
    }
}

/// A metric score paired with the human MOS for one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MosRecord {
    pub mos: f64,
    pub metric_score: f64,
}

/// Cached raw terms for one image pair, recombined per alpha in the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermPair {
    pub emd: f64,
    pub ok: f64,
}

/// One point of the alpha ablation curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaPoint {
    pub alpha: f64,
    pub srocc: f64,
}

/// The three correlation coefficients against MOS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlations {
    pub srocc: f64,
    pub krocc: f64,
    pub plcc: f64,
}

/// Anything that scores the similarity of an image pair (higher = more
/// similar).
pub trait Scorer: Sync {
    fn score(&self, a: &RgbImage, b: &RgbImage) -> Result<f64>;
}

impl<F> Scorer for F
where
    F: Fn(&RgbImage, &RgbImage) -> Result<f64> + Sync,
{
    fn score(&self, a: &RgbImage, b: &RgbImage) -> Result<f64> {
        self(a, b)
    }
}

/// Agreement credit for one triplet: the metric picks the patch with the
/// higher similarity; credit is the fraction of judges that agree, 0.5 on a
/// tie.
pub fn twoafc_credit(sim_p0: f64, sim_p1: f64, human_choice: f64) -> f64 {
    if sim_p1 > sim_p0 {
        human_choice
    } else if sim_p1 < sim_p0 {
        1.0 - human_choice
    } else {
        0.5
    }
}

/// Mean agreement credit of a scorer over a triplet set.
pub fn twoafc_accuracy<S: Scorer>(samples: &[TripletSample], scorer: &S) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("empty 2AFC sample list".into()));
    }
    let credits: Vec<f64> = samples
        .par_iter()
        .map(|s| {
            let sim0 = scorer.score(&s.reference, &s.p0)?;
            let sim1 = scorer.score(&s.reference, &s.p1)?;
            Ok(twoafc_credit(sim0, sim1, s.human_choice))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(credits.iter().sum::<f64>() / credits.len() as f64)
}

/// Mean scores over the unanimous-same and unanimous-not-same subsets.
/// Samples with a split jury are excluded; both subsets must be nonempty.
pub fn jnd_group_means<S: Scorer>(samples: &[JndSample], scorer: &S) -> Result<(f64, f64)> {
    for s in samples {
        if s.judges == 0 || s.votes_same > s.judges {
            return Err(Error::InvalidParameter(format!(
                "invalid jnd votes {}/{}",
                s.votes_same, s.judges
            )));
        }
    }
    let scored: Vec<(f64, &JndSample)> = samples
        .par_iter()
        .map(|s| Ok((scorer.score(&s.reference, &s.distorted)?, s)))
        .collect::<Result<Vec<_>>>()?;

    let mut same = Vec::new();
    let mut not_same = Vec::new();
    for (score, s) in &scored {
        if s.votes_same == s.judges {
            same.push(*score);
        } else if s.votes_same == 0 {
            not_same.push(*score);
        }
    }
    if same.is_empty() {
        return Err(Error::DegenerateInput(
            "no unanimous-same samples in the JND set".into(),
        ));
    }
    if not_same.is_empty() {
        return Err(Error::DegenerateInput(
            "no unanimous-not-same samples in the JND set".into(),
        ));
    }
    Ok((
        same.iter().sum::<f64>() / same.len() as f64,
        not_same.iter().sum::<f64>() / not_same.len() as f64,
    ))
}

/// Score every JND sample, pairing metric scores with the implicit MOS.
pub fn score_jnd_samples<S: Scorer>(samples: &[JndSample], scorer: &S) -> Result<Vec<MosRecord>> {
    samples
        .par_iter()
        .map(|s| {
            Ok(MosRecord {
                mos: s.mos(),
                metric_score: scorer.score(&s.reference, &s.distorted)?,
            })
        })
        .collect()
}

/// SROCC / KROCC on raw scores (tie-corrected), PLCC on logistic-mapped
/// scores. With fewer than 5 points the logistic mapping is skipped and PLCC
/// falls back to the plain linear correlation.
pub fn correlations(scores: &[f64], mos: &[f64]) -> Result<Correlations> {
    if scores.len() != mos.len() {
        return Err(Error::LengthMismatch(scores.len(), mos.len()));
    }
    if scores.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 observations, got {}",
            scores.len()
        )));
    }
    let srocc = spearman(scores, mos)?;
    let krocc = kendall_tau_b(scores, mos)?;
    let plcc = if scores.len() >= 5 {
        let fit = fit_logistic(scores, mos)?;
        let mapped: Vec<f64> = scores.iter().map(|s| fit.eval(*s)).collect();
        pearson(&mapped, mos)?
    } else {
        pearson(scores, mos)?
    };
    Ok(Correlations { srocc, krocc, plcc })
}

/// SROCC of the EDOKS similarity against MOS for every alpha in the grid.
/// Terms are cached per pair and only recombined, so no filtering reruns.
pub fn alpha_sweep(
    terms: &[TermPair],
    mos: &[f64],
    alphas: &[f64],
    c: f64,
) -> Result<Vec<AlphaPoint>> {
    if terms.len() != mos.len() {
        return Err(Error::LengthMismatch(terms.len(), mos.len()));
    }
    if alphas.is_empty() {
        return Err(Error::InvalidParameter("empty alpha grid".into()));
    }
    if c.is_nan() || c <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "c must be positive, got {c}"
        )));
    }
    for &alpha in alphas {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha {alpha} outside [0, 1]"
            )));
        }
    }
    alphas
        .iter()
        .map(|&alpha| {
            let scores: Vec<f64> = terms
                .iter()
                .map(|t| reciprocal(alpha * t.emd + (1.0 - alpha) * t.ok, c))
                .collect();
            Ok(AlphaPoint {
                alpha,
                srocc: spearman(&scores, mos)?,
            })
        })
        .collect()
}
