//! Rasch measurement: conditional estimation, person parameters, diagnostics.

mod cml;
mod diagnostics;
mod esf;
mod person;

pub use cml::{conditional_log_likelihood, fit_cml, CmlFit, ItemParams};
pub use diagnostics::{fit_statistics, FitReport, INFIT_BAND, RESIDUAL_CORRELATION_LIMIT};
pub use person::{estimate_person_params, invert_tcc, tcc, test_information, PersonParams};

/// Item response function: probability of affirming an item of severity `b`
/// at ability `theta`, exp(θ−b)/(1+exp(θ−b)), evaluated without overflow.
#[inline]
pub fn irf(theta: f64, b: f64) -> f64 {
    let d = theta - b;
    if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    }
}
