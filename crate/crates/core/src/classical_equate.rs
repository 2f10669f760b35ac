//! Observed-score equating: mean, linear, and equipercentile methods.
//!
//! Each method produces, for every integer score x on the source form, the
//! real-valued score on the target form deemed equivalent. Values are never
//! rounded here; consumers decide how to present them.

use std::fmt;

use crate::error::{Error, Result};
use crate::score_dist::ScoreDistribution;

/// The equating method that produced a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    IrtTrueScore,
    Mean,
    Linear,
    Equipercentile,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::IrtTrueScore => "irt-ts",
            Method::Mean => "mean",
            Method::Linear => "linear",
            Method::Equipercentile => "equipercentile",
        };
        write!(f, "{name}")
    }
}

/// Score-by-score equating function from a source form to a target form.
#[derive(Debug, Clone)]
pub struct EquatingTable {
    pub method: Method,
    pub source: String,
    pub target: String,
    /// equated[x] = target-form equivalent of integer source score x.
    pub equated: Vec<f64>,
    /// Bootstrap standard error of equating per score, when computed.
    pub see: Option<Vec<f64>>,
}

impl EquatingTable {
    pub fn max_source_score(&self) -> u32 {
        (self.equated.len() - 1) as u32
    }

    /// Serializes as delimited text: `x, equated, see, method, source, target`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("x,equated,see,method,source,target\n");
        for (x, e) in self.equated.iter().enumerate() {
            let see = match &self.see {
                Some(v) => format!("{}", v[x]),
                None => String::new(),
            };
            out.push_str(&format!(
                "{x},{e},{see},{},{},{}\n",
                self.method, self.source, self.target
            ));
        }
        out
    }
}

/// Mean equating: shifts scores by the difference of the form means.
pub fn mean_equate(dx: &ScoreDistribution, dy: &ScoreDistribution) -> EquatingTable {
    let shift = dy.mean() - dx.mean();
    EquatingTable {
        method: Method::Mean,
        source: String::new(),
        target: String::new(),
        equated: (0..=dx.max_score()).map(|x| x as f64 + shift).collect(),
        see: None,
    }
}

/// Linear equating: matches means and standard deviations of the two forms.
///
/// e(x) = (σ_Y/σ_X)·x + μ_Y − (σ_Y/σ_X)·μ_X. Errors when σ_X = 0.
pub fn linear_equate(dx: &ScoreDistribution, dy: &ScoreDistribution) -> Result<EquatingTable> {
    if dx.sd() <= 0.0 {
        return Err(Error::DegenerateInput(
            "source distribution has zero standard deviation; linear equating undefined".into(),
        ));
    }
    let slope = dy.sd() / dx.sd();
    let intercept = dy.mean() - slope * dx.mean();
    Ok(EquatingTable {
        method: Method::Linear,
        source: String::new(),
        target: String::new(),
        equated: (0..=dx.max_score())
            .map(|x| slope * x as f64 + intercept)
            .collect(),
        see: None,
    })
}

/// Equipercentile equating: matches continuized percentile ranks.
///
/// Source scores with rank 0 or 100 map to the target boundary values −0.5
/// and K_Y + 0.5; report writers clamp these for presentation.
pub fn equipercentile_equate(dx: &ScoreDistribution, dy: &ScoreDistribution) -> EquatingTable {
    EquatingTable {
        method: Method::Equipercentile,
        source: String::new(),
        target: String::new(),
        equated: (0..=dx.max_score())
            .map(|x| dy.inverse_percentile_rank(dx.percentile_rank(x as f64)))
            .collect(),
        see: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dist(probs: &[f64]) -> ScoreDistribution {
        ScoreDistribution::from_probs(probs.to_vec()).unwrap()
    }

    #[test]
    fn mean_equate_shifts_by_mean_difference() {
        // means 5 and 6 on 0..=10 scales
        let dx = dist(&[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let dy = dist(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let t = mean_equate(&dx, &dy);
        assert_abs_diff_eq!(t.equated[3], 4.0, epsilon = 1e-14);
    }

    #[test]
    fn identical_distributions_give_identity_for_all_methods() {
        let d = dist(&[0.1, 0.2, 0.3, 0.25, 0.15]);
        let m = mean_equate(&d, &d);
        let l = linear_equate(&d, &d).unwrap();
        let e = equipercentile_equate(&d, &d);
        for x in 0..=4usize {
            assert_abs_diff_eq!(m.equated[x], x as f64, epsilon = 1e-12);
            assert_abs_diff_eq!(l.equated[x], x as f64, epsilon = 1e-12);
            assert_abs_diff_eq!(e.equated[x], x as f64, epsilon = 1e-9);
        }
    }

    #[test]
    fn mean_equating_round_trip_is_exact() {
        let dx = dist(&[0.3, 0.4, 0.3]);
        let dy = dist(&[0.1, 0.2, 0.7]);
        let fwd = mean_equate(&dx, &dy);
        // applying the reverse shift to the forward-equated values returns x
        for x in 0..=2usize {
            let back = fwd.equated[x] - dy.mean() + dx.mean();
            assert_abs_diff_eq!(back, x as f64, epsilon = 1e-14);
        }
    }

    #[test]
    fn linear_equate_known_values() {
        // μ_X = 0, σ_X = 1 on scores {0,1,2} is impossible; check with the
        // slope/intercept read off the moments instead.
        let dx = dist(&[0.25, 0.5, 0.25]); // μ = 1, σ = sqrt(0.5)
        let dy = dist(&[0.0, 0.5, 0.0, 0.5]); // μ = 2, σ = 1
        let t = linear_equate(&dx, &dy).unwrap();
        let slope = 1.0 / 0.5f64.sqrt();
        for x in 0..=2usize {
            assert_abs_diff_eq!(
                t.equated[x],
                slope * (x as f64 - 1.0) + 2.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn linear_reduces_to_mean_when_sds_match() {
        let dx = dist(&[0.25, 0.5, 0.25]);
        let shifted = dist(&[0.0, 0.25, 0.5, 0.25]); // dx shifted by 1: same σ
        let lin = linear_equate(&dx, &shifted).unwrap();
        let mean = mean_equate(&dx, &shifted);
        for x in 0..=2usize {
            assert_abs_diff_eq!(lin.equated[x], mean.equated[x], epsilon = 1e-12);
        }
    }

    #[test]
    fn linear_round_trip_is_identity() {
        let dx = dist(&[0.2, 0.3, 0.1, 0.4]);
        let dy = dist(&[0.05, 0.15, 0.4, 0.25, 0.15]);
        let fwd = linear_equate(&dx, &dy).unwrap();
        let slope_back = dx.sd() / dy.sd();
        let intercept_back = dx.mean() - slope_back * dy.mean();
        for x in 0..=3usize {
            let back = slope_back * fwd.equated[x] + intercept_back;
            assert_abs_diff_eq!(back, x as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn linear_rejects_degenerate_source() {
        let dx = dist(&[0.0, 1.0, 0.0]);
        let dy = dist(&[0.2, 0.3, 0.5]);
        assert!(matches!(
            linear_equate(&dx, &dy),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn mean_of_equated_scores_equals_target_mean() {
        let dx = dist(&[0.2, 0.3, 0.1, 0.4]);
        let dy = dist(&[0.05, 0.15, 0.4, 0.25, 0.15]);
        for table in [mean_equate(&dx, &dy), linear_equate(&dx, &dy).unwrap()] {
            let mean: f64 = table
                .equated
                .iter()
                .enumerate()
                .map(|(x, e)| dx.probs()[x] * e)
                .sum();
            assert_abs_diff_eq!(mean, dy.mean(), epsilon = 1e-12);
        }
    }

    #[test]
    fn all_methods_are_monotone() {
        let dx = dist(&[0.15, 0.2, 0.05, 0.3, 0.3]);
        let dy = dist(&[0.3, 0.05, 0.25, 0.2, 0.2]);
        for table in [
            mean_equate(&dx, &dy),
            linear_equate(&dx, &dy).unwrap(),
            equipercentile_equate(&dx, &dy),
        ] {
            for w in table.equated.windows(2) {
                assert!(
                    w[1] >= w[0],
                    "{:?} not monotone: {:?}",
                    table.method,
                    table.equated
                );
            }
        }
    }

    #[test]
    fn equipercentile_point_mass_target() {
        // Source uniform over {0,1,2}; target all mass at 2. Ranks of the
        // source integers are 1/6, 1/2, 5/6, all falling inside the target's
        // single mass segment [1.5, 2.5): the inverse is linear there.
        let dx = dist(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        let dy = dist(&[0.0, 0.0, 1.0]);
        let t = equipercentile_equate(&dx, &dy);
        assert_abs_diff_eq!(t.equated[1], 2.0, epsilon = 1e-12);
        for x in 0..=2usize {
            assert!(
                (1.5..=2.5).contains(&t.equated[x]),
                "e({x}) = {}",
                t.equated[x]
            );
        }
        for w in t.equated.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn equipercentile_transfers_the_source_distribution_onto_the_target() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let raw: Vec<f64> = (0..9).map(|_| rng.gen::<f64>() + 0.01).collect();
            let sx: f64 = raw.iter().sum();
            let dx = dist(&raw.iter().map(|r| r / sx).collect::<Vec<_>>());
            let raw2: Vec<f64> = (0..7).map(|_| rng.gen::<f64>() + 0.01).collect();
            let sy: f64 = raw2.iter().sum();
            let dy = dist(&raw2.iter().map(|r| r / sy).collect::<Vec<_>>());
            // On a dense grid of source quantiles, the equated value's rank in
            // the target must equal the source rank (full-support case).
            for i in 1..40 {
                let p = 100.0 * i as f64 / 40.0;
                let x = dx.inverse_percentile_rank(p);
                let y = dy.inverse_percentile_rank(dx.percentile_rank(x));
                assert_abs_diff_eq!(dy.percentile_rank(y), p, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn boundary_scores_map_to_target_boundaries() {
        // All source mass at 1: score 0 has rank 0 and score 2 rank 100,
        // which map to the target's continuized boundary values.
        let dx = dist(&[0.0, 1.0, 0.0]);
        let dy = dist(&[0.25, 0.25, 0.25, 0.25]);
        let t = equipercentile_equate(&dx, &dy);
        assert_eq!(t.equated[0], -0.5);
        assert_eq!(t.equated[2], 3.5); // rank 100 → K_Y + 0.5
    }

    #[test]
    fn csv_serialization_has_the_documented_columns() {
        let dx = dist(&[0.5, 0.5]);
        let mut t = mean_equate(&dx, &dx);
        t.source = "X".into();
        t.target = "Y".into();
        t.see = Some(vec![0.0, 0.1]);
        let text = t.to_csv_string();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x,equated,see,method,source,target");
        assert_eq!(lines.next().unwrap(), "0,0,0,mean,X,Y");
        assert_eq!(lines.next().unwrap(), "1,1,0.1,mean,X,Y");
    }
}
