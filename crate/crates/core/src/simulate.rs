//! Synthetic response matrices drawn from the Rasch model.
//!
//! Used as the verification oracle: with known severities and a known ability
//! distribution, estimation and equating results can be checked against the
//! generating truth. All draws come from a seeded portable generator in a
//! fixed row-major order (ability, then weight where configured, then the J
//! cells), so a spec is reproducible bit for bit.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::ingest::{Response, ResponseMatrix};
use crate::rasch::irf;

/// Ability distribution for simulated respondents.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PersonDist {
    Normal {
        mean: f64,
        sd: f64,
    },
    /// Explicit list of abilities, one per respondent.
    Fixed {
        values: Vec<f64>,
    },
}

impl Default for PersonDist {
    fn default() -> Self {
        PersonDist::Normal { mean: 0.0, sd: 1.0 }
    }
}

/// Sampling-weight distribution for simulated respondents.
#[derive(Debug, Clone, Deserialize, Default, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightSpec {
    #[default]
    Unit,
    Uniform {
        low: f64,
        high: f64,
    },
}

/// Full description of one simulated response matrix.
#[derive(Debug, Clone, Deserialize)]
pub struct SimSpec {
    pub severities: Vec<f64>,
    /// Item codes; defaults to I1..IJ.
    #[serde(default)]
    pub codes: Option<Vec<String>>,
    #[serde(default)]
    pub person: PersonDist,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub weights: WeightSpec,
    /// Scale id recorded on the output matrix.
    #[serde(default = "default_scale_id")]
    pub scale_id: String,
}

fn default_scale_id() -> String {
    "SIM".into()
}

impl SimSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: SimSpec =
            toml::from_str(text).map_err(|e| Error::Config(format!("simulation spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("respondent count must be at least 1".into()));
        }
        if self.severities.is_empty() || self.severities.iter().any(|b| !b.is_finite()) {
            return Err(Error::Config(
                "severities must be a non-empty list of finite values".into(),
            ));
        }
        if let Some(codes) = &self.codes {
            if codes.len() != self.severities.len() {
                return Err(Error::Config(format!(
                    "{} item codes for {} severities",
                    codes.len(),
                    self.severities.len()
                )));
            }
        }
        match &self.person {
            PersonDist::Normal { mean, sd } => {
                if !mean.is_finite() || !sd.is_finite() || *sd < 0.0 {
                    return Err(Error::Config(format!(
                        "ability distribution Normal({mean}, {sd}) is invalid"
                    )));
                }
            }
            PersonDist::Fixed { values } => {
                if values.len() != self.n {
                    return Err(Error::Config(format!(
                        "{} fixed abilities for {} respondents",
                        values.len(),
                        self.n
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config("fixed abilities must be finite".into()));
                }
            }
        }
        if let WeightSpec::Uniform { low, high } = self.weights {
            if !(low.is_finite() && high.is_finite() && 0.0 <= low && low <= high && high > 0.0) {
                return Err(Error::Config(format!(
                    "weight distribution Uniform({low}, {high}) is invalid"
                )));
            }
        }
        Ok(())
    }

    /// Item codes for the generated matrix: the configured list, or
    /// `I1..IJ` when none was given.
    pub fn item_codes(&self) -> Vec<String> {
        match &self.codes {
            Some(codes) => codes.clone(),
            None => (1..=self.severities.len())
                .map(|i| format!("I{i}"))
                .collect(),
        }
    }
}

/// Draws a response matrix from the model: θ_i per respondent, then each
/// cell affirmed independently with probability irf(θ_i, b_j).
pub fn simulate_responses(spec: &SimSpec) -> Result<ResponseMatrix> {
    spec.validate()?;
    let j = spec.severities.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = match &spec.person {
        PersonDist::Normal { mean, sd } => Some(
            Normal::new(*mean, *sd)
                .map_err(|e| Error::Config(format!("ability distribution: {e}")))?,
        ),
        PersonDist::Fixed { .. } => None,
    };

    let mut cells = Vec::with_capacity(spec.n * j);
    let mut weights = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let theta = match &spec.person {
            PersonDist::Normal { .. } => normal.unwrap().sample(&mut rng),
            PersonDist::Fixed { values } => values[i],
        };
        let w = match spec.weights {
            WeightSpec::Unit => 1.0,
            WeightSpec::Uniform { low, high } => rng.gen_range(low..=high),
        };
        weights.push(w);
        for &b in &spec.severities {
            let p = irf(theta, b);
            cells.push(if rng.gen::<f64>() < p {
                Response::Affirmed
            } else {
                Response::Denied
            });
        }
    }
    ResponseMatrix::new(spec.scale_id.clone(), spec.item_codes(), cells, weights)
}
