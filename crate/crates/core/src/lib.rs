//! Rasch-based scale equating for dichotomous survey instruments.
//!
//! The pipeline: ingest weighted dichotomous responses, fit the Rasch model
//! by conditional maximum likelihood, validate item fit, then map raw scores
//! between test forms — classically (mean, linear, equipercentile) or through
//! the test characteristic curve after Mean/Sigma linking on an iteratively
//! selected anchor set — with bootstrap standard errors of equating and
//! probabilistic prevalence rates above latent-trait thresholds.

pub mod classical_equate;
pub mod error;
pub mod ingest;
pub mod irt_equate;
pub mod prevalence;
pub mod rasch;
pub mod resampling;
pub mod score_dist;
pub mod simulate;

pub use classical_equate::{
    equipercentile_equate, linear_equate, mean_equate, EquatingTable, Method,
};
pub use error::{Error, Result};
pub use ingest::{
    load_responses, parse_responses, ExclusionStats, ItemDef, MissingPolicy, RawScoreVector,
    Response, ResponseMatrix, ScaleDefinition,
};
pub use irt_equate::{
    irt_true_score_equate, mean_sigma_link, select_anchor, threshold_equivalent, AnchorSelection,
    LinkingTransform,
};
pub use prevalence::{
    linking_correspondence, minimization_correspondence, voh_prevalence, Correspondence,
    GlobalStandard, PrevalenceResult, PrevalenceRow, ReferenceItem, MODERATE_SEVERE_THRESHOLD,
    SEVERE_THRESHOLD,
};
pub use rasch::{
    conditional_log_likelihood, estimate_person_params, fit_cml, fit_statistics, invert_tcc, irf,
    tcc, test_information, CmlFit, FitReport, ItemParams, PersonParams, INFIT_BAND,
    RESIDUAL_CORRELATION_LIMIT,
};
pub use resampling::{
    bootstrap_see, bootstrap_see_single_group, bootstrap_see_with_threads,
    population_invariance_check, BootstrapSee, BootstrapSpec, GroupEquating, InvarianceReport,
    THREADS_ENV,
};
pub use score_dist::ScoreDistribution;
pub use simulate::{simulate_responses, PersonDist, SimSpec, WeightSpec};
