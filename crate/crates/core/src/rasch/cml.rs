//! Weighted conditional maximum-likelihood estimation of item severities.
//!
//! Conditioning each respondent's likelihood on their raw score removes the
//! person parameter, so item severities are estimated without assumptions on
//! the ability distribution. Respondents with extreme scores (0 or J) carry
//! no conditional information and drop out of the likelihood. Sampling
//! weights are normalized to mean one over the rows entering the fit, so
//! convergence behavior and standard errors reflect the nominal sample size
//! rather than the population total.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ingest::{ExclusionStats, MissingPolicy, Response, ResponseMatrix};
use crate::rasch::esf::{log_esf, log_esf_excluding, log_esf_excluding_two};

const GRADIENT_TOL: f64 = 1e-8;
const MAX_ITERATIONS: usize = 200;
const MAX_STEP: f64 = 5.0;

/// Estimated item severities on a mean-zero scale, with standard errors.
#[derive(Debug, Clone)]
pub struct ItemParams {
    pub codes: Vec<String>,
    /// Severities b_j in logits, centered to mean zero.
    pub b: Vec<f64>,
    /// Standard errors from the observed information of the conditional
    /// likelihood (pseudo-inverse under the mean-zero constraint).
    pub se: Vec<f64>,
    /// Identification convention marker; always mean-zero centering here.
    pub mean_zero: bool,
}

impl ItemParams {
    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn position(&self, code: &str) -> Option<usize> {
        self.codes.iter().position(|c| c == code)
    }

    /// Extracts the named items, preserving the order of `codes`.
    pub fn subset(&self, codes: &[String]) -> Result<ItemParams> {
        let mut b = Vec::with_capacity(codes.len());
        let mut se = Vec::with_capacity(codes.len());
        for code in codes {
            let idx = self.position(code).ok_or_else(|| {
                Error::Schema(format!("item '{code}' is not among the fitted items"))
            })?;
            b.push(self.b[idx]);
            se.push(self.se[idx]);
        }
        Ok(ItemParams {
            codes: codes.to_vec(),
            b,
            se,
            mean_zero: false, // a subset is generally no longer centered
        })
    }
}

/// A converged conditional-likelihood fit.
#[derive(Debug, Clone)]
pub struct CmlFit {
    pub items: ItemParams,
    pub iterations: usize,
    /// Max absolute gradient component at the accepted solution.
    pub gradient_norm: f64,
    /// Conditional log-likelihood at the solution (normalized weights).
    pub log_likelihood: f64,
    /// Rows entering the fit after the missing-data policy (extremes included).
    pub n_rows: usize,
    /// Rows among those with raw score 0 or J.
    pub n_extreme: usize,
    /// Rows dropped by the missing-data policy.
    pub excluded: ExclusionStats,
}

/// Per-raw-score aggregation of the data entering the conditional likelihood.
struct Aggregate {
    /// Normalized weight mass at each interior raw score r = 0..=J
    /// (entries 0 and J stay zero).
    n_w: Vec<f64>,
    /// Weighted affirmation total per item over interior rows.
    s: Vec<f64>,
    total_interior_weight: f64,
}

/// Fits the Rasch model by weighted CML.
///
/// The missing-data policy is applied first; exclusions are reported in the
/// result. Errors: an item affirmed by none or all non-extreme respondents is
/// non-identifiable; failure to reach max |gradient| < 1e-8 within 200
/// Newton iterations is a convergence error.
pub fn fit_cml(m: &ResponseMatrix, policy: MissingPolicy) -> Result<CmlFit> {
    let (complete, excluded) = m.complete_cases(policy);
    let j = complete.n_items();
    if j < 2 {
        return Err(Error::DegenerateInput(format!(
            "conditional estimation requires at least 2 items, got {j}"
        )));
    }
    let n = complete.n_respondents();
    if n == 0 {
        return Err(Error::DegenerateInput(
            "no respondents remain after applying the missing-data policy".into(),
        ));
    }

    // Normalize weights to mean 1 over the rows entering the fit.
    let raw_total: f64 = complete.weights().iter().sum();
    let norm = n as f64 / raw_total;

    let mut n_w = vec![0.0f64; j + 1];
    let mut s = vec![0.0f64; j];
    let mut affirmed_counts = vec![0usize; j]; // interior rows only
    let mut n_interior = 0usize;
    let mut n_extreme = 0usize;
    let mut total_interior_weight = 0.0;
    for i in 0..n {
        let row = complete.row(i);
        let score = row.iter().filter(|&&c| c == Response::Affirmed).count();
        if score == 0 || score == j {
            n_extreme += 1;
            continue;
        }
        let w = complete.weights()[i] * norm;
        n_interior += 1;
        total_interior_weight += w;
        n_w[score] += w;
        for (k, &c) in row.iter().enumerate() {
            if c == Response::Affirmed {
                s[k] += w;
                affirmed_counts[k] += 1;
            }
        }
    }
    if n_interior == 0 {
        return Err(Error::DegenerateInput(
            "every respondent has an extreme raw score; severities are not estimable".into(),
        ));
    }
    for (k, &count) in affirmed_counts.iter().enumerate() {
        if count == 0 {
            return Err(Error::NonIdentifiable {
                item: complete.item_codes()[k].clone(),
                reason: "denied by every non-extreme respondent".into(),
            });
        }
        if count == n_interior {
            return Err(Error::NonIdentifiable {
                item: complete.item_codes()[k].clone(),
                reason: "affirmed by every non-extreme respondent".into(),
            });
        }
    }

    let agg = Aggregate {
        n_w,
        s,
        total_interior_weight,
    };

    // Start from centered weighted logits of the affirmation rates.
    let mut b: Vec<f64> = agg
        .s
        .iter()
        .map(|&sj| ((agg.total_interior_weight - sj) / sj).ln())
        .collect();
    center(&mut b);

    let mut ll = cond_ll(&b, &agg);
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (grad, pi) = gradient(&b, &agg);
        let grad_max = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if grad_max < GRADIENT_TOL {
            iterations -= 1; // this pass only verified convergence
            break;
        }

        let info = observed_information(&b, &agg, &pi);
        let mut delta = solve_step(&info, &grad)?;
        let step_max = delta.iter().fold(0.0f64, |a, d| a.max(d.abs()));
        if step_max > MAX_STEP {
            let shrink = MAX_STEP / step_max;
            for d in &mut delta {
                *d *= shrink;
            }
        }

        // Step-halving on the conditional log-likelihood.
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let mut trial: Vec<f64> = b
                .iter()
                .zip(&delta)
                .map(|(&bj, &dj)| bj + alpha * dj)
                .collect();
            center(&mut trial);
            let trial_ll = cond_ll(&trial, &agg);
            if trial_ll >= ll - 1e-12 {
                b = trial;
                ll = trial_ll;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break; // no ascent direction left; the gradient check decides below
        }
    }

    let (grad, pi) = gradient(&b, &agg);
    let grad_max = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    if grad_max >= GRADIENT_TOL {
        return Err(Error::Convergence {
            iterations,
            gradient_norm: grad_max,
        });
    }

    let info = observed_information(&b, &agg, &pi);
    let se = standard_errors(&info)?;

    Ok(CmlFit {
        items: ItemParams {
            codes: complete.item_codes().to_vec(),
            b,
            se,
            mean_zero: true,
        },
        iterations,
        gradient_norm: grad_max,
        log_likelihood: ll,
        n_rows: n,
        n_extreme,
        excluded,
    })
}

fn center(b: &mut [f64]) {
    let mean = b.iter().sum::<f64>() / b.len() as f64;
    for v in b.iter_mut() {
        *v -= mean;
    }
}

/// Conditional log-likelihood ℓ(b) = −Σ_j b_j S_j − Σ_r n_r log γ_r.
fn cond_ll(b: &[f64], agg: &Aggregate) -> f64 {
    let log_eps: Vec<f64> = b.iter().map(|&x| -x).collect();
    let lg = log_esf(&log_eps);
    let mut ll = 0.0;
    for (bj, sj) in b.iter().zip(&agg.s) {
        ll -= bj * sj;
    }
    for (r, &nr) in agg.n_w.iter().enumerate() {
        if nr > 0.0 {
            ll -= nr * lg[r];
        }
    }
    ll
}

/// Gradient of the conditional log-likelihood and the conditional affirmation
/// probabilities π_{r,j} = P(X_j = 1 | raw score r) it is built from.
fn gradient(b: &[f64], agg: &Aggregate) -> (Vec<f64>, Vec<Vec<f64>>) {
    let j = b.len();
    let log_eps: Vec<f64> = b.iter().map(|&x| -x).collect();
    let lg = log_esf(&log_eps);
    // pi[r][k], nonzero for interior r
    let mut pi = vec![vec![0.0f64; j]; j + 1];
    for k in 0..j {
        let excl = log_esf_excluding(&log_eps, k);
        for r in 1..j {
            pi[r][k] = (log_eps[k] + excl[r - 1] - lg[r]).exp();
        }
    }
    let mut grad = vec![0.0f64; j];
    for k in 0..j {
        let mut expected = 0.0;
        for (nw, pi_r) in agg.n_w.iter().zip(pi.iter()).take(j).skip(1) {
            if *nw > 0.0 {
                expected += nw * pi_r[k];
            }
        }
        grad[k] = expected - agg.s[k];
    }
    (grad, pi)
}

/// Observed information: Σ_r n_r Cov_r(x), the negated Hessian of the
/// conditional log-likelihood. Positive semidefinite with null vector 1.
fn observed_information(b: &[f64], agg: &Aggregate, pi: &[Vec<f64>]) -> DMatrix<f64> {
    let j = b.len();
    let log_eps: Vec<f64> = b.iter().map(|&x| -x).collect();
    let lg = log_esf(&log_eps);
    let mut info = DMatrix::zeros(j, j);
    for k in 0..j {
        let mut diag = 0.0;
        for (nw, pi_r) in agg.n_w.iter().zip(pi.iter()).take(j).skip(1) {
            if *nw > 0.0 {
                diag += nw * pi_r[k] * (1.0 - pi_r[k]);
            }
        }
        info[(k, k)] = diag;
    }
    for k in 0..j {
        for l in (k + 1)..j {
            let excl = log_esf_excluding_two(&log_eps, k, l);
            let mut off = 0.0;
            for r in 1..j {
                if agg.n_w[r] > 0.0 {
                    // π_{r,kl} = P(X_k = X_l = 1 | r); zero when r < 2
                    let pair = if r >= 2 {
                        (log_eps[k] + log_eps[l] + excl[r - 2] - lg[r]).exp()
                    } else {
                        0.0
                    };
                    off += agg.n_w[r] * (pair - pi[r][k] * pi[r][l]);
                }
            }
            info[(k, l)] = off;
            info[(l, k)] = off;
        }
    }
    info
}

/// Conjugate-gradient solve of (info + c·11ᵀ) x = rhs.
///
/// The operator is applied matrix-free. Unlike a pivoting direct solver,
/// every CG operation treats exchangeable coordinates identically, so items
/// with bitwise-equal response columns receive bitwise-equal estimates.
fn cg_solve(info: &DMatrix<f64>, c: f64, rhs: &[f64], tol: f64) -> Vec<f64> {
    let j = rhs.len();
    let matvec = |p: &[f64]| -> Vec<f64> {
        let shared = c * p.iter().sum::<f64>();
        (0..j)
            .map(|r| {
                let mut acc = 0.0;
                for (l, &pl) in p.iter().enumerate() {
                    acc += info[(r, l)] * pl;
                }
                acc + shared
            })
            .collect()
    };
    let mut x = vec![0.0f64; j];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rs: f64 = r.iter().map(|v| v * v).sum();
    let target = (tol * tol) * rs;
    for _ in 0..(8 * j + 16) {
        if rs.is_nan() || rs <= target {
            break;
        }
        let ap = matvec(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap.is_nan() || pap <= 0.0 {
            break;
        }
        let alpha = rs / pap;
        for k in 0..j {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rs_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rs_new / rs;
        rs = rs_new;
        for k in 0..j {
            p[k] = r[k] + beta * p[k];
        }
    }
    x
}

/// Newton direction: solves (info + c·11ᵀ) δ = g. The rank-one term removes
/// the null direction; because the gradient sums to zero, the solution is the
/// ascent step orthogonal to 1.
fn solve_step(info: &DMatrix<f64>, grad: &[f64]) -> Result<Vec<f64>> {
    let j = grad.len();
    let trace = info.trace();
    if trace.is_nan() || trace <= 0.0 {
        return Err(Error::DegenerateInput(
            "observed information matrix is zero".into(),
        ));
    }
    let c = trace / (j * j) as f64;
    Ok(cg_solve(info, c, grad, 1e-13))
}

/// Standard errors: square roots of the diagonal of the Moore–Penrose
/// pseudo-inverse of the observed information, realizing the mean-zero
/// identification in the covariance. With the null space spanned by 1,
/// Info⁺ = (Info + c·11ᵀ)⁻¹ − 11ᵀ/(c·J²); the inverse's diagonal entries
/// come from per-column CG solves.
fn standard_errors(info: &DMatrix<f64>) -> Result<Vec<f64>> {
    let j = info.nrows();
    let trace = info.trace();
    if trace.is_nan() || trace <= 0.0 {
        return Err(Error::DegenerateInput(
            "observed information matrix is zero".into(),
        ));
    }
    let c = trace / (j * j) as f64;
    let correction = 1.0 / (c * (j * j) as f64);
    let mut se = Vec::with_capacity(j);
    for k in 0..j {
        let mut e = vec![0.0f64; j];
        e[k] = 1.0;
        let col = cg_solve(info, c, &e, 1e-14);
        se.push((col[k] - correction).max(0.0).sqrt());
    }
    Ok(se)
}

/// Evaluates the weighted conditional log-likelihood of a complete matrix at
/// arbitrary severities, with raw (unnormalized) weights. Extreme-score rows
/// contribute zero. Exposed so external oracles can cross-check the fit.
pub fn conditional_log_likelihood(m: &ResponseMatrix, b: &[f64]) -> Result<f64> {
    if b.len() != m.n_items() {
        return Err(Error::DegenerateInput(format!(
            "expected {} severities, got {}",
            m.n_items(),
            b.len()
        )));
    }
    if m.has_missing() {
        return Err(Error::DegenerateInput(
            "conditional likelihood requires a complete matrix".into(),
        ));
    }
    let j = m.n_items();
    let log_eps: Vec<f64> = b.iter().map(|&x| -x).collect();
    let lg = log_esf(&log_eps);
    let mut ll = 0.0;
    for i in 0..m.n_respondents() {
        let row = m.row(i);
        let score = row.iter().filter(|&&c| c == Response::Affirmed).count();
        if score == 0 || score == j {
            continue;
        }
        let w = m.weights()[i];
        let mut term = -lg[score];
        for (k, &c) in row.iter().enumerate() {
            if c == Response::Affirmed {
                term += log_eps[k];
            }
        }
        ll += w * term;
    }
    Ok(ll)
}
