//! Weighted raw-score distributions and their continuized percentile ranks.
//!
//! A raw score takes integer values 0..=K. For percentile ranks each integer
//! score is spread uniformly over an interval of width one centered on it, so
//! the continuized score ranges over [-0.5, K + 0.5]. This is the standard
//! kernel used by equipercentile equating of number-correct scores.

use crate::error::{Error, Result};
use crate::ingest::RawScoreVector;

/// Weighted distribution of raw scores 0..=max_score.
#[derive(Debug, Clone)]
pub struct ScoreDistribution {
    max_score: u32,
    /// probs[k] = weighted share of respondents with score k; sums to 1.
    probs: Vec<f64>,
    /// cdf[k] = weighted share with score <= k; cdf[max_score] = 1 exactly.
    cdf: Vec<f64>,
    mean: f64,
    sd: f64,
    total_weight: f64,
}

impl ScoreDistribution {
    /// Tabulates the weighted distribution of a score vector.
    pub fn from_scores(scores: &RawScoreVector) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::DegenerateInput(
                "score distribution requires at least one respondent".into(),
            ));
        }
        let k = scores.max_score as usize;
        let mut mass = vec![0.0f64; k + 1];
        for (&s, &w) in scores.scores.iter().zip(&scores.weights) {
            if s as usize > k {
                return Err(Error::DegenerateInput(format!(
                    "score {s} exceeds maximum {k}"
                )));
            }
            mass[s as usize] += w;
        }
        let total_weight: f64 = mass.iter().sum();
        if total_weight <= 0.0 {
            return Err(Error::DegenerateInput("total weight is zero".into()));
        }

        let probs: Vec<f64> = mass.iter().map(|m| m / total_weight).collect();
        // Accumulate the raw weights first so that cdf is monotone and the
        // final entry is exactly 1 regardless of rounding in the division.
        let mut cdf = Vec::with_capacity(k + 1);
        let mut acc = 0.0;
        for m in &mass {
            acc += m;
            cdf.push(acc / total_weight);
        }
        cdf[k] = 1.0;

        let mean: f64 = probs.iter().enumerate().map(|(s, p)| s as f64 * p).sum();
        let var: f64 = probs
            .iter()
            .enumerate()
            .map(|(s, p)| p * (s as f64 - mean).powi(2))
            .sum();
        Ok(Self {
            max_score: scores.max_score,
            probs,
            cdf,
            mean,
            sd: var.max(0.0).sqrt(),
            total_weight,
        })
    }

    /// Builds a distribution directly from score shares (used by model-implied
    /// distributions and tests). `probs` must be non-negative and sum to ~1.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::DegenerateInput("empty probability vector".into()));
        }
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&p| !p.is_finite() || p < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::DegenerateInput(format!(
                "score shares must be non-negative and sum to 1 (sum = {sum})"
            )));
        }
        let probs: Vec<f64> = probs.iter().map(|p| p / sum).collect();
        let k = probs.len() - 1;
        let mut cdf = Vec::with_capacity(k + 1);
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cdf.push(acc);
        }
        cdf[k] = 1.0;
        let mean: f64 = probs.iter().enumerate().map(|(s, p)| s as f64 * p).sum();
        let var: f64 = probs
            .iter()
            .enumerate()
            .map(|(s, p)| p * (s as f64 - mean).powi(2))
            .sum();
        Ok(Self {
            max_score: k as u32,
            probs,
            cdf,
            mean,
            sd: var.max(0.0).sqrt(),
            total_weight: 1.0,
        })
    }

    pub fn max_score(&self) -> u32 {
        self.max_score
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// Weighted population mean of the integer scores.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Weighted population standard deviation (denominator = total weight).
    pub fn sd(&self) -> f64 {
        self.sd
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    #[inline]
    fn cdf_below(&self, k: i64) -> f64 {
        // share with score <= k, allowing k = -1
        if k < 0 {
            0.0
        } else if k as usize >= self.probs.len() {
            1.0
        } else {
            self.cdf[k as usize]
        }
    }

    /// Percentile rank of a (possibly fractional) score under the uniform
    /// kernel, in [0, 100]. Inputs outside [-0.5, max + 0.5] are clamped.
    pub fn percentile_rank(&self, x: f64) -> f64 {
        let hi = self.max_score as f64 + 0.5;
        let x = x.clamp(-0.5, hi);
        // The kernel spreads score k over [k - 0.5, k + 0.5); find k.
        let k = ((x + 0.5).floor() as i64).min(self.max_score as i64);
        let within = x - (k as f64 - 0.5);
        let p = self.cdf_below(k - 1) + self.probs[k as usize] * within;
        100.0 * p.clamp(0.0, 1.0)
    }

    /// Inverse of [`percentile_rank`]: the continuized score whose rank is `p`.
    ///
    /// Where the rank function is flat (scores with zero share), the midpoint
    /// of the flat segment is returned; p <= 0 maps to -0.5 and p >= 100 to
    /// max + 0.5.
    pub fn inverse_percentile_rank(&self, p: f64) -> f64 {
        let hi = self.max_score as f64 + 0.5;
        if p <= 0.0 {
            return -0.5;
        }
        if p >= 100.0 {
            return hi;
        }
        let q = p / 100.0;
        let k = self.probs.len();

        // Smallest x with rank >= q: scan segments forward.
        let mut x_lo = hi;
        for s in 0..k {
            let base = self.cdf_below(s as i64 - 1);
            let top = self.cdf[s];
            if top >= q {
                let w = self.probs[s];
                x_lo = if w > 0.0 {
                    (s as f64 - 0.5) + (q - base) / w
                } else {
                    s as f64 - 0.5
                };
                break;
            }
        }
        // Largest x with rank <= q: scan segments backward.
        let mut x_hi = -0.5;
        for s in (0..k).rev() {
            let base = self.cdf_below(s as i64 - 1);
            if base <= q {
                let w = self.probs[s];
                x_hi = if w > 0.0 {
                    (s as f64 - 0.5) + ((q - base) / w).min(1.0)
                } else {
                    s as f64 + 0.5
                };
                break;
            }
        }
        let x = 0.5 * (x_lo + x_hi);
        x.clamp(-0.5, hi)
    }
}
