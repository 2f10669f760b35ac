//! Item fit statistics, residual structure, and scale reliability.
//!
//! All statistics are computed over non-extreme complete-case respondents:
//! extreme raw scores have only pseudo person parameters, and including them
//! would distort residual moments that the model constrains to zero only in
//! the interior.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ingest::{MissingPolicy, Response, ResponseMatrix};
use crate::rasch::cml::ItemParams;
use crate::rasch::irf;
use crate::rasch::person::PersonParams;

/// Item-level fit statistics and scale-level summaries.
#[derive(Debug, Clone)]
pub struct FitReport {
    /// Information-weighted mean-square fit per item; 1 under the model.
    pub infit: Vec<f64>,
    /// Unweighted mean-square of standardized residuals per item.
    pub outfit: Vec<f64>,
    /// Proportion of observed ability variance not due to measurement error.
    pub reliability: f64,
    /// Weighted correlations of the standardized residual columns.
    pub residual_correlations: Vec<Vec<f64>>,
    /// Eigenvalues of the residual correlation matrix, descending.
    pub pca_eigenvalues: Vec<f64>,
}

/// Screening bands used in reports: infit inside (0.7, 1.3) and all pairwise
/// residual correlations below 0.4 in absolute value.
pub const INFIT_BAND: (f64, f64) = (0.7, 1.3);
pub const RESIDUAL_CORRELATION_LIMIT: f64 = 0.4;

/// Computes fit statistics for a fitted form.
///
/// Residuals use P_ij = irf(θ_{r(i)}, b_j) with the person parameter looked
/// up by each respondent's raw score. Errors if ability variance is
/// degenerate (all scores equal) or a residual column has zero variance.
pub fn fit_statistics(
    m: &ResponseMatrix,
    items: &ItemParams,
    persons: &PersonParams,
    policy: MissingPolicy,
) -> Result<FitReport> {
    let (complete, _) = m.complete_cases(policy);
    let j = items.len();
    if complete.n_items() != j || persons.theta.len() != j + 1 {
        return Err(Error::Diagnostics(
            "item, person, and matrix dimensions do not agree".into(),
        ));
    }

    // Interior rows with their raw scores.
    let mut rows = Vec::new();
    for i in 0..complete.n_respondents() {
        let score = complete
            .row(i)
            .iter()
            .filter(|&&c| c == Response::Affirmed)
            .count();
        if score > 0 && score < j {
            rows.push((i, score));
        }
    }
    if rows.is_empty() {
        return Err(Error::Diagnostics(
            "no non-extreme respondents available for fit statistics".into(),
        ));
    }

    let total_w: f64 = rows.iter().map(|&(i, _)| complete.weights()[i]).sum();

    // Standardized residual matrix, row per interior respondent.
    let n = rows.len();
    let mut z = DMatrix::zeros(n, j);
    let mut sq_num = vec![0.0f64; j]; // Σ w (x − P)²
    let mut var_den = vec![0.0f64; j]; // Σ w P(1−P)
    let mut z2_num = vec![0.0f64; j]; // Σ w z²
    for (out_idx, &(i, score)) in rows.iter().enumerate() {
        let w = complete.weights()[i];
        let theta = persons.theta[score];
        for k in 0..j {
            let p = irf(theta, items.b[k]);
            let v = p * (1.0 - p);
            let x = if complete.cell(i, k) == Response::Affirmed {
                1.0
            } else {
                0.0
            };
            let e = x - p;
            let zz = e / v.sqrt();
            z[(out_idx, k)] = zz;
            sq_num[k] += w * e * e;
            var_den[k] += w * v;
            z2_num[k] += w * zz * zz;
        }
    }
    let infit: Vec<f64> = sq_num.iter().zip(&var_den).map(|(n, d)| n / d).collect();
    let outfit: Vec<f64> = z2_num.iter().map(|n| n / total_w).collect();

    // Weighted correlations of residual columns.
    let mut mean = vec![0.0f64; j];
    for (out_idx, &(i, _)) in rows.iter().enumerate() {
        let w = complete.weights()[i];
        for k in 0..j {
            mean[k] += w * z[(out_idx, k)];
        }
    }
    for mk in &mut mean {
        *mk /= total_w;
    }
    let mut cov: DMatrix<f64> = DMatrix::zeros(j, j);
    for (out_idx, &(i, _)) in rows.iter().enumerate() {
        let w = complete.weights()[i];
        for k in 0..j {
            let dk = z[(out_idx, k)] - mean[k];
            for l in k..j {
                cov[(k, l)] += w * dk * (z[(out_idx, l)] - mean[l]);
            }
        }
    }
    let mut corr = vec![vec![0.0f64; j]; j];
    for k in 0..j {
        if cov[(k, k)] <= 0.0 {
            return Err(Error::Diagnostics(format!(
                "residuals of item '{}' have zero variance",
                items.codes[k]
            )));
        }
    }
    for k in 0..j {
        corr[k][k] = 1.0;
        for l in (k + 1)..j {
            let c = cov[(k, l)] / (cov[(k, k)] * cov[(l, l)]).sqrt();
            corr[k][l] = c;
            corr[l][k] = c;
        }
    }

    let corr_matrix = DMatrix::from_fn(j, j, |r, c| corr[r][c]);
    let mut pca_eigenvalues: Vec<f64> = corr_matrix
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    pca_eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());

    // Reliability: 1 − mean error variance / observed ability variance.
    let mut se2_mean = 0.0;
    let mut th_mean = 0.0;
    for &(i, score) in &rows {
        let w = complete.weights()[i];
        se2_mean += w * persons.se[score] * persons.se[score];
        th_mean += w * persons.theta[score];
    }
    se2_mean /= total_w;
    th_mean /= total_w;
    let mut th_var = 0.0;
    for &(i, score) in &rows {
        let w = complete.weights()[i];
        th_var += w * (persons.theta[score] - th_mean).powi(2);
    }
    th_var /= total_w;
    if th_var <= 0.0 {
        return Err(Error::Diagnostics(
            "ability variance is degenerate (all respondents share one raw score)".into(),
        ));
    }
    let reliability = (1.0 - se2_mean / th_var).clamp(0.0, 1.0);

    Ok(FitReport {
        infit,
        outfit,
        reliability,
        residual_correlations: corr,
        pca_eigenvalues,
    })
}
