//! Probabilistic prevalence rates on a common latent metric.
//!
//! Each respondent's severity is modeled as Gaussian around the (adjusted)
//! person parameter of their raw score, with the adjusted measurement error
//! as standard deviation. The prevalence beyond a threshold is the weighted
//! sum of the per-raw-score upper tails. Two raw-score correspondence rules
//! translate latent thresholds into integer scores on a national scale.

use std::collections::HashSet;
use std::path::Path;

use serde::Deserialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::irt_equate::LinkingTransform;
use crate::rasch::{ItemParams, PersonParams};
use crate::score_dist::ScoreDistribution;

/// Reference severity threshold for moderate-or-severe food insecurity.
pub const MODERATE_SEVERE_THRESHOLD: f64 = -0.25;
/// Reference severity threshold for severe food insecurity.
pub const SEVERE_THRESHOLD: f64 = 1.83;

/// One reference item with its severity on the reference metric.
#[derive(Debug, Clone, Deserialize)]
pub struct ReferenceItem {
    pub code: String,
    pub severity: f64,
}

/// The reference ("Global Standard") metric: item severities that national
/// scales are linked onto. The two named thresholds are built-in constants.
#[derive(Debug, Clone, Deserialize)]
pub struct GlobalStandard {
    pub items: Vec<ReferenceItem>,
}

impl GlobalStandard {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let gs: GlobalStandard = toml::from_str(text)
            .map_err(|e| Error::Schema(format!("reference severities: {e}")))?;
        if gs.items.is_empty() {
            return Err(Error::Schema("reference metric defines no items".into()));
        }
        let mut seen = HashSet::new();
        for item in &gs.items {
            if !item.severity.is_finite() {
                return Err(Error::Schema(format!(
                    "non-finite reference severity for item '{}'",
                    item.code
                )));
            }
            if !seen.insert(item.code.as_str()) {
                return Err(Error::Schema(format!(
                    "duplicate reference item code '{}'",
                    item.code
                )));
            }
        }
        Ok(gs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn codes(&self) -> Vec<String> {
        self.items.iter().map(|i| i.code.clone()).collect()
    }

    /// Reference severities packaged for the linking operations. The metric
    /// is fixed, not estimated, so the standard errors are zero.
    pub fn as_item_params(&self) -> ItemParams {
        ItemParams {
            codes: self.codes(),
            b: self.items.iter().map(|i| i.severity).collect(),
            se: vec![0.0; self.items.len()],
            mean_zero: false,
        }
    }
}

/// One raw score's contribution to a prevalence rate.
#[derive(Debug, Clone, Copy)]
pub struct PrevalenceRow {
    pub r: u32,
    /// Weighted share of respondents at this raw score.
    pub share: f64,
    /// Person parameter on the common metric.
    pub theta: f64,
    pub se: f64,
    /// P(severity > threshold) for this raw score's Gaussian.
    pub tail: f64,
    /// True where theta comes from an extreme-score pseudo-value.
    pub pseudo: bool,
}

/// Prevalence beyond one threshold, with its per-raw-score decomposition.
#[derive(Debug, Clone)]
pub struct PrevalenceResult {
    pub threshold: f64,
    pub prevalence: f64,
    pub rows: Vec<PrevalenceRow>,
}

impl PrevalenceResult {
    /// Serializes to delimited text (r, share, theta, se, tail) plus a
    /// summary line.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("r,share,theta,se,tail\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.r, row.share, row.theta, row.se, row.tail
            ));
        }
        out.push_str(&format!(
            "# prevalence beyond threshold {} = {}\n",
            self.threshold, self.prevalence
        ));
        out
    }
}

/// Upper tail of a unit Gaussian: P(Z > z) = erfc(z/√2)/2.
#[inline]
fn normal_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Prevalence of severity beyond `threshold`: Σ_r share_r · P(N(θ_r, se_r²) > threshold).
///
/// `persons` must already be adjusted to the metric the threshold lives on
/// and must cover every raw score of the distribution.
pub fn voh_prevalence(
    persons: &PersonParams,
    d: &ScoreDistribution,
    threshold: f64,
) -> Result<PrevalenceResult> {
    if persons.theta.len() != d.probs().len() {
        return Err(Error::Coverage(format!(
            "person parameters cover raw scores 0..={} but the distribution has 0..={}",
            persons.theta.len() - 1,
            d.max_score()
        )));
    }
    if !threshold.is_finite() {
        return Err(Error::Config(format!(
            "prevalence threshold must be finite, got {threshold}"
        )));
    }
    let mut rows = Vec::with_capacity(persons.theta.len());
    let mut prevalence = 0.0;
    for (r, &share) in d.probs().iter().enumerate() {
        let theta = persons.theta[r];
        let se = persons.se[r];
        let tail = if se > 0.0 {
            normal_tail((threshold - theta) / se)
        } else if theta > threshold {
            1.0
        } else {
            0.0
        };
        prevalence += share * tail;
        rows.push(PrevalenceRow {
            r: r as u32,
            share,
            theta,
            se,
            tail,
            pseudo: persons.pseudo[r],
        });
    }
    Ok(PrevalenceResult {
        threshold,
        prevalence,
        rows,
    })
}

/// A raw score chosen to correspond to a latent threshold, with tie flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub threshold: f64,
    pub raw_score: u32,
    pub tie: bool,
}

/// Raw score whose adjusted person parameter is nearest to each threshold.
///
/// θ*_r = A·θ_r + B; ties go to the smaller raw score and are flagged.
pub fn linking_correspondence(
    persons: &PersonParams,
    link: &LinkingTransform,
    thresholds: &[f64],
) -> Vec<Correspondence> {
    thresholds
        .iter()
        .map(|&t| {
            let mut best = 0usize;
            let mut best_dist = f64::INFINITY;
            let mut tie = false;
            for (r, &theta) in persons.theta.iter().enumerate() {
                let dist = (link.apply(theta) - t).abs();
                if dist < best_dist {
                    best = r;
                    best_dist = dist;
                    tie = false;
                } else if dist == best_dist {
                    tie = true; // keep the smaller r
                }
            }
            Correspondence {
                threshold: t,
                raw_score: best as u32,
                tie,
            }
        })
        .collect()
}

/// Raw score s whose observed tail share P(score ≥ s) is nearest to the
/// model prevalence; s ranges over 1..=K, ties to the smaller s, flagged.
pub fn minimization_correspondence(pr: &PrevalenceResult, d: &ScoreDistribution) -> Correspondence {
    let probs = d.probs();
    let k = d.max_score() as usize;
    // tail[s] = P(score ≥ s), accumulated from the top for monotonicity
    let mut tails = vec![0.0f64; k + 1];
    tails[k] = probs[k];
    for s in (0..k).rev() {
        tails[s] = tails[s + 1] + probs[s];
    }
    let mut best = 1usize;
    let mut best_dist = f64::INFINITY;
    let mut tie = false;
    for (s, &tail) in tails.iter().enumerate().skip(1) {
        let dist = (tail - pr.prevalence).abs();
        if dist < best_dist {
            best = s;
            best_dist = dist;
            tie = false;
        } else if dist == best_dist {
            tie = true;
        }
    }
    Correspondence {
        threshold: pr.threshold,
        raw_score: best as u32,
        tie,
    }
}
