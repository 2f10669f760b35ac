//! Cross-module checks: simulation → fit → diagnostics → equating.

use scale_equate::{
    bootstrap_see, equipercentile_equate, fit_cml, fit_statistics, mean_equate,
    population_invariance_check, simulate_responses, BootstrapSpec, MissingPolicy, PersonDist,
    ResponseMatrix, ScoreDistribution, SimSpec, WeightSpec,
};

fn sim(severities: &[f64], n: usize, seed: u64) -> SimSpec {
    SimSpec {
        severities: severities.to_vec(),
        codes: None,
        person: PersonDist::Normal { mean: 0.0, sd: 1.0 },
        n,
        seed,
        weights: WeightSpec::Unit,
        scale_id: "SIM".into(),
    }
}

#[test]
fn fit_recovers_generating_severities_within_three_standard_errors() {
    let truth = [-1.0, 0.0, 1.0];
    let m = simulate_responses(&sim(&truth, 5000, 20240801)).unwrap();
    let fit = fit_cml(&m, MissingPolicy::ExcludeRow).unwrap();
    for (j, &b) in truth.iter().enumerate() {
        let err = (fit.items.b[j] - b).abs();
        let bound = 3.0 * fit.items.se[j];
        assert!(
            err < bound,
            "item {j}: |{};- {b}| = {err} ≥ {bound}",
            fit.items.b[j]
        );
    }
}

#[test]
fn conforming_data_passes_the_fit_screens() {
    // Severities kept within ±1: residuals are benchmarked at the raw-score
    // group ability, and conditioning on the raw score shrinks an extreme
    // item's conditional variance below P(1−P), dragging its infit under
    // 0.9 even for model-true data. Moderate items sit close to 1.
    let truth = [-1.0, -0.6, -0.2, 0.2, 0.6, 1.0];
    let m = simulate_responses(&sim(&truth, 5000, 7)).unwrap();
    let fit = fit_cml(&m, MissingPolicy::ExcludeRow).unwrap();
    let persons = scale_equate::estimate_person_params(&fit.items);
    let report = fit_statistics(&m, &fit.items, &persons, MissingPolicy::ExcludeRow).unwrap();
    for j in 0..truth.len() {
        assert!(
            report.infit[j] > 0.9 && report.infit[j] < 1.1,
            "infit[{j}] = {}",
            report.infit[j]
        );
        assert!(
            report.outfit[j] > 0.8 && report.outfit[j] < 1.2,
            "outfit[{j}] = {}",
            report.outfit[j]
        );
        for k in 0..truth.len() {
            if k != j {
                assert!(
                    report.residual_correlations[j][k].abs() < 0.4,
                    "residual correlation [{j}][{k}] = {}",
                    report.residual_correlations[j][k]
                );
            }
        }
    }
    // Six narrow-range dichotomous items measure persons noisily; the
    // reliability is genuinely modest but must stay inside the open unit
    // interval for model-true data.
    assert!(report.reliability > 0.1 && report.reliability < 1.0);
}

#[test]
fn cloning_every_item_doubles_the_mean_exactly() {
    // Single-group design with the long form built by duplicating each short-
    // form item: per-row long score = 2 × short score, so the population
    // means satisfy μ_long = 2 μ_short exactly and mean equating maps the
    // short mean onto the long mean.
    let short = simulate_responses(&sim(&[-0.8, 0.0, 0.8], 800, 99)).unwrap();
    let codes = short.item_codes().to_vec();
    let n = short.n_respondents();
    let mut cells = Vec::new();
    for i in 0..n {
        cells.extend_from_slice(short.row(i));
        cells.extend_from_slice(short.row(i));
    }
    let long_codes: Vec<String> = codes
        .iter()
        .cloned()
        .chain(codes.iter().map(|c| format!("{c}_CLONE")))
        .collect();
    let long = ResponseMatrix::new("LONG", long_codes, cells, short.weights().to_vec()).unwrap();

    let ds = ScoreDistribution::from_scores(&short.score(MissingPolicy::ExcludeRow)).unwrap();
    let dl = ScoreDistribution::from_scores(&long.score(MissingPolicy::ExcludeRow)).unwrap();
    assert_eq!(dl.mean(), 2.0 * ds.mean());

    let table = mean_equate(&ds, &dl);
    let at_mean = ds.mean() - ds.mean() + dl.mean();
    let e = |x: f64| table.equated[0] + x; // mean equating is a pure shift
    assert!((e(ds.mean()) - at_mean).abs() < 1e-12);
    // shift equals μ_long − μ_short = μ_short
    assert!((table.equated[0] - ds.mean()).abs() < 1e-12);
}

#[test]
fn random_halves_diverge_within_twice_the_bootstrap_see() {
    let bx = [-1.2, -0.4, 0.4, 1.2];
    let by = [-1.0, -0.2, 0.6, 1.4];
    let x = simulate_responses(&sim(&bx, 10_000, 31)).unwrap();
    let y = simulate_responses(&sim(&by, 10_000, 32)).unwrap();
    let pipeline = |xs: &ResponseMatrix, ys: &ResponseMatrix| {
        let dx = ScoreDistribution::from_scores(&xs.score(MissingPolicy::ExcludeRow))?;
        let dy = ScoreDistribution::from_scores(&ys.score(MissingPolicy::ExcludeRow))?;
        Ok(equipercentile_equate(&dx, &dy))
    };

    let spec = BootstrapSpec {
        replications: 200,
        seed: 77,
    };
    let see = bootstrap_see(&x, &y, &spec, pipeline).unwrap().see;

    let halves: Vec<String> = (0..10_000)
        .map(|i| {
            if i % 2 == 0 {
                "even".into()
            } else {
                "odd".into()
            }
        })
        .collect();
    let report = population_invariance_check(&x, &y, &halves, &halves, pipeline).unwrap();

    // Halves have twice the sampling noise of the full data, so compare
    // against 2·SEE(half) ≈ 2·√2·SEE(full); require ≥ 90% of interior
    // scores inside the band.
    let interior = 1..bx.len(); // scores 1..=J-1
    let mut inside = 0;
    let mut total = 0;
    for xscore in interior {
        total += 1;
        if report.max_divergence[xscore] <= 2.0 * std::f64::consts::SQRT_2 * see[xscore] {
            inside += 1;
        }
    }
    assert!(
        10 * inside >= 9 * total,
        "only {inside}/{total} interior scores within the band; divergence {:?} vs see {:?}",
        report.max_divergence,
        see
    );
}
