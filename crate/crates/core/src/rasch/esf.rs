//! Elementary symmetric functions of item easiness values, in the log domain.
//!
//! For easiness ε_j = exp(−b_j), the conditional likelihood of the Rasch
//! model divides by γ_r(ε), the sum over all response patterns with raw score
//! r of the product of the affirmed items' ε. These are computed by the
//! classical summation recursion; accumulating in logs keeps the values
//! representable for tests of up to 64 items.

/// log(exp(a) + exp(b)) without overflow; tolerates -inf on either side.
#[inline]
pub(crate) fn log_sum_exp2(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// log γ_r for r = 0..=J, where ε_j = exp(log_eps[j]).
///
/// γ_0 = 1 and γ_J = Π ε_j; intermediate orders come from the in-place
/// recursion γ_r ← γ_r + ε_j γ_{r−1}, applied item by item with r descending.
pub(crate) fn log_esf(log_eps: &[f64]) -> Vec<f64> {
    let j = log_eps.len();
    let mut g = vec![f64::NEG_INFINITY; j + 1];
    g[0] = 0.0;
    for (m, &le) in log_eps.iter().enumerate() {
        for r in (1..=m + 1).rev() {
            g[r] = log_sum_exp2(g[r], le + g[r - 1]);
        }
    }
    g
}

/// log γ_r computed over every item except `skip`.
pub(crate) fn log_esf_excluding(log_eps: &[f64], skip: usize) -> Vec<f64> {
    let mut g = vec![f64::NEG_INFINITY; log_eps.len()];
    g[0] = 0.0;
    let mut m = 0;
    for (idx, &le) in log_eps.iter().enumerate() {
        if idx == skip {
            continue;
        }
        m += 1;
        for r in (1..=m).rev() {
            g[r] = log_sum_exp2(g[r], le + g[r - 1]);
        }
    }
    g
}

/// log γ_r computed over every item except `skip_a` and `skip_b` (distinct).
pub(crate) fn log_esf_excluding_two(log_eps: &[f64], skip_a: usize, skip_b: usize) -> Vec<f64> {
    debug_assert_ne!(skip_a, skip_b);
    let mut g = vec![f64::NEG_INFINITY; log_eps.len().saturating_sub(1)];
    g[0] = 0.0;
    let mut m = 0;
    for (idx, &le) in log_eps.iter().enumerate() {
        if idx == skip_a || idx == skip_b {
            continue;
        }
        m += 1;
        for r in (1..=m).rev() {
            g[r] = log_sum_exp2(g[r], le + g[r - 1]);
        }
    }
    g
}
