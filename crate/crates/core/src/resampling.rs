//! Bootstrap standard errors of equating and population-invariance checks.
//!
//! The resampling unit is the respondent row, with its weight carried along;
//! each form is resampled independently with replacement and its sample size
//! preserved. Replication `rep` draws from a dedicated substream of the
//! seeded generator (stream = rep), so results are bit-identical whether
//! replications run serially or in parallel, on any thread count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classical_equate::EquatingTable;
use crate::error::{Error, Result};
use crate::ingest::ResponseMatrix;

/// Environment variable capping the number of parallel replications.
pub const THREADS_ENV: &str = "SCALE_EQUATE_THREADS";

/// Bootstrap configuration: number of replications and the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BootstrapSpec {
    pub replications: usize,
    pub seed: u64,
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        Self {
            replications: 1000,
            seed: 0,
        }
    }
}

impl BootstrapSpec {
    fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::Config(format!(
                "bootstrap needs at least 2 replications, got {}",
                self.replications
            )));
        }
        Ok(())
    }
}

/// Per-score standard errors of equating plus replication bookkeeping.
#[derive(Debug, Clone)]
pub struct BootstrapSee {
    /// SEE at each source raw score 0..=K.
    pub see: Vec<f64>,
    /// Replications requested.
    pub replications: usize,
    /// Replications whose pipeline failed (dropped from the SEE).
    pub failures: usize,
}

/// Estimates the standard error of equating by the nonparametric row
/// bootstrap: both forms are resampled independently within each
/// replication, the pipeline re-run, and the SEE at each score is the
/// sample standard deviation of the equated value across successful
/// replications.
///
/// Failed replications are dropped and counted; more than 10% failing is
/// reported as an unstable pipeline instead of a (misleading) SEE.
pub fn bootstrap_see<F>(
    x: &ResponseMatrix,
    y: &ResponseMatrix,
    spec: &BootstrapSpec,
    pipeline: F,
) -> Result<BootstrapSee>
where
    F: Fn(&ResponseMatrix, &ResponseMatrix) -> Result<EquatingTable> + Sync,
{
    bootstrap_see_with_threads(x, y, spec, env_thread_cap(), pipeline)
}

/// As [`bootstrap_see`], with an explicit thread cap instead of the
/// environment variable. `None` uses the global thread pool.
pub fn bootstrap_see_with_threads<F>(
    x: &ResponseMatrix,
    y: &ResponseMatrix,
    spec: &BootstrapSpec,
    threads: Option<usize>,
    pipeline: F,
) -> Result<BootstrapSee>
where
    F: Fn(&ResponseMatrix, &ResponseMatrix) -> Result<EquatingTable> + Sync,
{
    run_bootstrap(spec, threads, |rng| {
        let xs = resample_rows(x, rng);
        let ys = resample_rows(y, rng);
        pipeline(&xs, &ys).map(|t| t.equated)
    })
}

/// Bootstrap SEE for the single-group design: both forms are derived from
/// the same respondents, so each replication resamples the one shared group
/// once and the pipeline computes every form from that resample. The
/// substream rule matches [`bootstrap_see`], so results are thread-count
/// independent here too.
pub fn bootstrap_see_single_group<F>(
    m: &ResponseMatrix,
    spec: &BootstrapSpec,
    pipeline: F,
) -> Result<BootstrapSee>
where
    F: Fn(&ResponseMatrix) -> Result<EquatingTable> + Sync,
{
    run_bootstrap(spec, env_thread_cap(), |rng| {
        let ms = resample_rows(m, rng);
        pipeline(&ms).map(|t| t.equated)
    })
}

fn run_bootstrap<G>(
    spec: &BootstrapSpec,
    threads: Option<usize>,
    replicate: G,
) -> Result<BootstrapSee>
where
    G: Fn(&mut ChaCha8Rng) -> Result<Vec<f64>> + Sync,
{
    spec.validate()?;
    let b = spec.replications;
    let seed = spec.seed;
    let run_one = |rep: u64| -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rep);
        replicate(&mut rng)
    };
    // collect() on an indexed parallel iterator preserves replication order,
    // so the fold below sees the same sequence on every thread count.
    let draws: Vec<Result<Vec<f64>>> = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| (0..b as u64).into_par_iter().map(run_one).collect()),
        None => (0..b as u64).into_par_iter().map(run_one).collect(),
    };

    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(b);
    let mut failures = 0usize;
    let mut first_failure: Option<String> = None;
    for draw in draws {
        match draw {
            Ok(equated) => kept.push(equated),
            Err(e) => {
                failures += 1;
                if first_failure.is_none() {
                    first_failure = Some(e.to_string());
                }
            }
        }
    }
    if failures * 10 > b {
        return Err(Error::UnstablePipeline {
            failed: failures,
            total: b,
            first_failure: first_failure.unwrap_or_default(),
        });
    }
    let n_points = kept[0].len();
    if kept.iter().any(|t| t.len() != n_points) {
        return Err(Error::Diagnostics(
            "bootstrap replications disagree on the score range".into(),
        ));
    }
    let see = (0..n_points)
        .map(|i| sample_sd(kept.iter().map(|t| t[i])))
        .collect();
    Ok(BootstrapSee {
        see,
        replications: b,
        failures,
    })
}

/// One group's slice of a population-invariance check.
#[derive(Debug, Clone)]
pub struct GroupEquating {
    pub label: String,
    pub rows_x: usize,
    pub rows_y: usize,
    /// Equating table for the group, absent if the pipeline failed on it.
    pub table: Option<EquatingTable>,
    /// Failure message for flagged (excluded) groups.
    pub note: Option<String>,
}

/// Population-invariance summary: per-group tables plus the maximum
/// absolute divergence between any two groups' equated values per score.
#[derive(Debug, Clone)]
pub struct InvarianceReport {
    pub groups: Vec<GroupEquating>,
    pub max_divergence: Vec<f64>,
}

/// Runs the equating pipeline separately on each labelled subgroup and
/// reports how far the group-specific functions diverge.
///
/// `groups_x[i]` / `groups_y[i]` label row i of the respective form; groups
/// are processed in sorted label order. Groups the pipeline cannot handle
/// (typically too small to fit) are flagged, excluded from the divergence,
/// and reported.
pub fn population_invariance_check<F>(
    x: &ResponseMatrix,
    y: &ResponseMatrix,
    groups_x: &[String],
    groups_y: &[String],
    pipeline: F,
) -> Result<InvarianceReport>
where
    F: Fn(&ResponseMatrix, &ResponseMatrix) -> Result<EquatingTable>,
{
    if groups_x.len() != x.n_respondents() || groups_y.len() != y.n_respondents() {
        return Err(Error::Coverage(format!(
            "group labels cover {}/{} rows of one form and {}/{} of the other",
            groups_x.len(),
            x.n_respondents(),
            groups_y.len(),
            y.n_respondents()
        )));
    }
    let mut labels: Vec<&String> = groups_x.iter().chain(groups_y.iter()).collect();
    labels.sort();
    labels.dedup();

    let mut groups = Vec::with_capacity(labels.len());
    for label in labels {
        let rows_x: Vec<usize> = (0..groups_x.len())
            .filter(|&i| &groups_x[i] == label)
            .collect();
        let rows_y: Vec<usize> = (0..groups_y.len())
            .filter(|&i| &groups_y[i] == label)
            .collect();
        let (table, note) = if rows_x.is_empty() || rows_y.is_empty() {
            (None, Some("group absent from one form".to_string()))
        } else {
            match pipeline(&x.select_rows(&rows_x), &y.select_rows(&rows_y)) {
                Ok(t) => (Some(t), None),
                Err(e) => (None, Some(e.to_string())),
            }
        };
        groups.push(GroupEquating {
            label: label.clone(),
            rows_x: rows_x.len(),
            rows_y: rows_y.len(),
            table,
            note,
        });
    }

    let fitted: Vec<&EquatingTable> = groups.iter().filter_map(|g| g.table.as_ref()).collect();
    if fitted.is_empty() {
        return Err(Error::DegenerateInput(
            "no group was large enough to equate".into(),
        ));
    }
    let n_points = fitted[0].equated.len();
    if fitted.iter().any(|t| t.equated.len() != n_points) {
        return Err(Error::Diagnostics(
            "groups disagree on the score range".into(),
        ));
    }
    let max_divergence = (0..n_points)
        .map(|i| {
            let lo = fitted.iter().map(|t| t.equated[i]).fold(f64::MAX, f64::min);
            let hi = fitted.iter().map(|t| t.equated[i]).fold(f64::MIN, f64::max);
            hi - lo
        })
        .collect();
    Ok(InvarianceReport {
        groups,
        max_divergence,
    })
}

fn resample_rows(m: &ResponseMatrix, rng: &mut ChaCha8Rng) -> ResponseMatrix {
    let n = m.n_respondents();
    let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    m.select_rows(&rows)
}

fn env_thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
}

fn sample_sd(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    let mean = values.clone().sum::<f64>() / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical_equate::{mean_equate, Method};
    use crate::ingest::{MissingPolicy, Response, ResponseMatrix};
    use crate::score_dist::ScoreDistribution;

    fn toy_matrix(n: usize, flip: usize) -> ResponseMatrix {
        let mut cells = Vec::new();
        for i in 0..n {
            let hot = i % (flip + 1) == 0;
            cells.push(if hot {
                Response::Affirmed
            } else {
                Response::Denied
            });
            cells.push(Response::Denied);
        }
        ResponseMatrix::new("T", vec!["A".into(), "B".into()], cells, vec![1.0; n]).unwrap()
    }

    fn constant_table() -> EquatingTable {
        EquatingTable {
            method: Method::Mean,
            source: "X".into(),
            target: "Y".into(),
            equated: vec![0.0, 1.0, 2.0],
            see: None,
        }
    }

    #[test]
    fn constant_pipeline_has_zero_see_everywhere() {
        let x = toy_matrix(30, 2);
        let y = toy_matrix(40, 3);
        let spec = BootstrapSpec {
            replications: 50,
            seed: 11,
        };
        let out = bootstrap_see(&x, &y, &spec, |_, _| Ok(constant_table())).unwrap();
        assert_eq!(out.see, vec![0.0, 0.0, 0.0]);
        assert_eq!(out.failures, 0);
        assert_eq!(out.replications, 50);
    }

    #[test]
    fn same_seed_reproduces_the_see_vector_exactly() {
        let x = toy_matrix(60, 2);
        let y = toy_matrix(50, 3);
        let spec = BootstrapSpec {
            replications: 80,
            seed: 5,
        };
        let run = || {
            bootstrap_see(&x, &y, &spec, |xs, ys| {
                let dx = ScoreDistribution::from_scores(&xs.score(MissingPolicy::ExcludeRow))?;
                let dy = ScoreDistribution::from_scores(&ys.score(MissingPolicy::ExcludeRow))?;
                Ok(mean_equate(&dx, &dy))
            })
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.see, b.see);
        assert!(
            a.see.iter().any(|&s| s > 0.0),
            "nothing varied: {:?}",
            a.see
        );
    }

    #[test]
    fn thread_count_does_not_change_the_result() {
        let x = toy_matrix(60, 2);
        let y = toy_matrix(50, 3);
        let spec = BootstrapSpec {
            replications: 64,
            seed: 9,
        };
        let pipeline = |xs: &ResponseMatrix, ys: &ResponseMatrix| {
            let dx = ScoreDistribution::from_scores(&xs.score(MissingPolicy::ExcludeRow))?;
            let dy = ScoreDistribution::from_scores(&ys.score(MissingPolicy::ExcludeRow))?;
            Ok(mean_equate(&dx, &dy))
        };
        let one = bootstrap_see_with_threads(&x, &y, &spec, Some(1), pipeline).unwrap();
        let four = bootstrap_see_with_threads(&x, &y, &spec, Some(4), pipeline).unwrap();
        assert_eq!(one.see, four.see);
    }

    #[test]
    fn both_forms_are_resampled_and_sizes_are_preserved() {
        // Weights identify rows; the pipeline reports each form's mean weight,
        // so a nonzero SEE at a coordinate proves that form's rows varied.
        let wx: Vec<f64> = (0..40).map(|i| 1.0 + i as f64).collect();
        let wy: Vec<f64> = (0..30).map(|i| 2.0 + i as f64).collect();
        let x = ResponseMatrix::new("X", vec!["A".into()], vec![Response::Denied; 40], wx).unwrap();
        let y = ResponseMatrix::new("Y", vec!["A".into()], vec![Response::Denied; 30], wy).unwrap();
        let spec = BootstrapSpec {
            replications: 30,
            seed: 3,
        };
        let out = bootstrap_see(&x, &y, &spec, |xs, ys| {
            assert_eq!(xs.n_respondents(), 40);
            assert_eq!(ys.n_respondents(), 30);
            let mw =
                |m: &ResponseMatrix| m.weights().iter().sum::<f64>() / m.weights().len() as f64;
            Ok(EquatingTable {
                method: Method::Mean,
                source: "X".into(),
                target: "Y".into(),
                equated: vec![mw(xs), mw(ys)],
                see: None,
            })
        })
        .unwrap();
        assert!(out.see[0] > 0.0, "X never varied");
        assert!(out.see[1] > 0.0, "Y never varied");
    }

    #[test]
    fn rare_failures_are_dropped_and_counted() {
        let x = toy_matrix(64, 2);
        let y = toy_matrix(50, 3);
        let spec = BootstrapSpec {
            replications: 200,
            seed: 21,
        };
        // Fails only when the resampled X leads with three rows affirming
        // item A — rare (≈4% of replications) but not absent.
        let out = bootstrap_see(&x, &y, &spec, |xs, _| {
            if (0..3).all(|r| xs.cell(r, 0) == Response::Affirmed) {
                Err(Error::DegenerateInput("constructed failure".into()))
            } else {
                Ok(constant_table())
            }
        })
        .unwrap();
        assert!(out.failures > 0, "seed produced no failing replication");
        assert!(out.failures * 10 <= 200);
        assert_eq!(out.see, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn excessive_failures_become_an_unstable_pipeline_error() {
        let x = toy_matrix(10, 1);
        let y = toy_matrix(10, 1);
        let spec = BootstrapSpec {
            replications: 40,
            seed: 1,
        };
        let err = bootstrap_see(&x, &y, &spec, |_, _| {
            Err::<EquatingTable, _>(Error::DegenerateAnchor("nothing left".into()))
        })
        .unwrap_err();
        match err {
            Error::UnstablePipeline {
                failed,
                total,
                first_failure,
            } => {
                assert_eq!(failed, 40);
                assert_eq!(total, 40);
                assert!(first_failure.contains("nothing left"));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn fewer_than_two_replications_is_a_config_error() {
        let x = toy_matrix(10, 1);
        let y = toy_matrix(10, 1);
        let spec = BootstrapSpec {
            replications: 1,
            seed: 0,
        };
        assert!(matches!(
            bootstrap_see(&x, &y, &spec, |_, _| Ok(constant_table())),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn single_group_resampling_is_deterministic_and_paired() {
        let m = toy_matrix(50, 2);
        let spec = BootstrapSpec {
            replications: 60,
            seed: 13,
        };
        let run = || {
            bootstrap_see_single_group(&m, &spec, |ms| {
                // Two "forms" derived from the same resample: the statistic
                // below is identical for both by construction, so pairing
                // makes their difference exactly zero in every replication.
                let d = ScoreDistribution::from_scores(&ms.score(MissingPolicy::ExcludeRow))?;
                Ok(EquatingTable {
                    method: Method::Mean,
                    source: "short".into(),
                    target: "long".into(),
                    equated: vec![d.mean(), d.mean() - d.mean()],
                    see: None,
                })
            })
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.see, b.see);
        assert!(a.see[0] > 0.0, "mean never varied across resamples");
        assert_eq!(a.see[1], 0.0, "paired difference must be exactly zero");
    }

    #[test]
    fn identical_groups_diverge_by_zero() {
        let x = toy_matrix(40, 2);
        let y = toy_matrix(40, 3);
        let labels: Vec<String> = (0..40)
            .map(|i| if i < 20 { "g1".into() } else { "g2".into() })
            .collect();
        // Make the two groups literally identical by tiling the same block.
        let rows: Vec<usize> = (0..20).chain(0..20).collect();
        let x2 = x.select_rows(&rows);
        let y2 = y.select_rows(&rows);
        let report = population_invariance_check(&x2, &y2, &labels, &labels, |xs, ys| {
            let dx = ScoreDistribution::from_scores(&xs.score(MissingPolicy::ExcludeRow))?;
            let dy = ScoreDistribution::from_scores(&ys.score(MissingPolicy::ExcludeRow))?;
            Ok(mean_equate(&dx, &dy))
        })
        .unwrap();
        assert_eq!(report.groups.len(), 2);
        assert!(report.groups.iter().all(|g| g.table.is_some()));
        assert!(report.max_divergence.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn too_small_groups_are_flagged_and_excluded() {
        let x = toy_matrix(21, 2);
        let y = toy_matrix(21, 3);
        let labels: Vec<String> = (0..21)
            .map(|i| if i < 20 { "big".into() } else { "tiny".into() })
            .collect();
        let report = population_invariance_check(&x, &y, &labels, &labels, |xs, ys| {
            if xs.n_respondents() < 5 {
                return Err(Error::DegenerateInput("too few rows to fit".into()));
            }
            let dx = ScoreDistribution::from_scores(&xs.score(MissingPolicy::ExcludeRow))?;
            let dy = ScoreDistribution::from_scores(&ys.score(MissingPolicy::ExcludeRow))?;
            Ok(mean_equate(&dx, &dy))
        })
        .unwrap();
        let tiny = report.groups.iter().find(|g| g.label == "tiny").unwrap();
        assert!(tiny.table.is_none());
        assert!(tiny.note.as_deref().unwrap().contains("too few rows"));
        let big = report.groups.iter().find(|g| g.label == "big").unwrap();
        assert!(big.table.is_some());
        assert_eq!(
            report.max_divergence.iter().copied().fold(0.0, f64::max),
            0.0
        );
    }

    #[test]
    fn label_count_mismatch_is_a_coverage_error() {
        let x = toy_matrix(10, 1);
        let y = toy_matrix(10, 1);
        let labels = vec!["g".to_string(); 9];
        assert!(matches!(
            population_invariance_check(&x, &y, &labels, &labels, |_, _| Ok(constant_table())),
            Err(Error::Coverage(_))
        ));
    }
}
