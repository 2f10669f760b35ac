//! Per-raw-score person parameters via the test characteristic curve.
//!
//! Under the Rasch model the ML ability estimate for a raw score r solves
//! Σ_j P_j(θ) = r, i.e. the TCC inverted at r. The extreme scores 0 and J
//! have no finite ML estimate, so the conventional pseudo-scores 0.5 and
//! J − 0.5 are substituted; those entries are flagged.

use crate::error::{Error, Result};
use crate::rasch::cml::ItemParams;
use crate::rasch::irf;

/// Ability and measurement error for every raw score r = 0..=J.
#[derive(Debug, Clone)]
pub struct PersonParams {
    /// θ_r in logits, strictly increasing in r.
    pub theta: Vec<f64>,
    /// se(θ_r) = 1/sqrt(test information at θ_r).
    pub se: Vec<f64>,
    /// True where the entry comes from an extreme-score pseudo-value.
    pub pseudo: Vec<bool>,
}

impl PersonParams {
    pub fn max_score(&self) -> u32 {
        (self.theta.len() - 1) as u32
    }

    /// Applies a linear transformation θ* = A·θ + B, se* = A·se.
    pub fn transform(&self, a: f64, b: f64) -> PersonParams {
        PersonParams {
            theta: self.theta.iter().map(|t| a * t + b).collect(),
            se: self.se.iter().map(|s| a * s).collect(),
            pseudo: self.pseudo.clone(),
        }
    }
}

/// Test characteristic curve: expected raw score Σ_j irf(θ, b_j).
pub fn tcc(theta: f64, b: &[f64]) -> f64 {
    b.iter().map(|&bj| irf(theta, bj)).sum()
}

/// Test information Σ_j P_j(1−P_j); also the slope of the TCC.
pub fn test_information(theta: f64, b: &[f64]) -> f64 {
    b.iter()
        .map(|&bj| {
            let p = irf(theta, bj);
            p * (1.0 - p)
        })
        .sum()
}

/// Solves tcc(θ) = t for the unique θ; requires 0 < t < J.
///
/// The TCC is strictly increasing with range (0, J), so a root always exists;
/// a doubling bracket around [−10, 10] is refined by Newton steps that fall
/// back to bisection whenever they leave the bracket.
pub fn invert_tcc(t: f64, b: &[f64]) -> Result<f64> {
    let j = b.len() as f64;
    if !(t > 0.0 && t < j) {
        return Err(Error::Domain(format!(
            "true score {t} outside the open range (0, {j})"
        )));
    }

    let mut lo = -10.0f64;
    let mut hi = 10.0f64;
    for _ in 0..64 {
        if tcc(lo, b) < t {
            break;
        }
        lo *= 2.0;
    }
    for _ in 0..64 {
        if tcc(hi, b) > t {
            break;
        }
        hi *= 2.0;
    }

    let mut theta = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = tcc(theta, b) - t;
        if f.abs() < 1e-12 {
            return Ok(theta);
        }
        if f > 0.0 {
            hi = theta;
        } else {
            lo = theta;
        }
        let slope = test_information(theta, b);
        let newton = theta - f / slope;
        theta = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < f64::EPSILON * theta.abs().max(1.0) {
            break;
        }
    }
    let f = tcc(theta, b) - t;
    if f.abs() < 1e-10 {
        Ok(theta)
    } else {
        Err(Error::Convergence {
            iterations: 200,
            gradient_norm: f.abs(),
        })
    }
}

/// Ability and measurement error for every raw score of the fitted form.
pub fn estimate_person_params(items: &ItemParams) -> PersonParams {
    let j = items.len();
    let mut theta = Vec::with_capacity(j + 1);
    let mut se = Vec::with_capacity(j + 1);
    let mut pseudo = Vec::with_capacity(j + 1);
    for r in 0..=j {
        let target = if r == 0 {
            0.5
        } else if r == j {
            j as f64 - 0.5
        } else {
            r as f64
        };
        let th = invert_tcc(target, &items.b)
            .expect("pseudo-adjusted raw scores always lie inside (0, J)");
        theta.push(th);
        se.push(1.0 / test_information(th, &items.b).sqrt());
        pseudo.push(r == 0 || r == j);
    }
    PersonParams { theta, se, pseudo }
}
