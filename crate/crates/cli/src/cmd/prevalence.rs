//! `prevalence`: probabilistic prevalence beyond latent thresholds. With a
//! second --scale file carrying reference severities, the survey's metric is
//! first linked onto the reference metric; without one, explicit thresholds
//! are interpreted on the survey's own metric.

use anyhow::{bail, Context, Result};
use scale_equate::{
    estimate_person_params, fit_cml, fit_statistics, load_responses, select_anchor, voh_prevalence,
    GlobalStandard, MissingPolicy, PrevalenceResult, ScaleDefinition, ScoreDistribution,
    MODERATE_SEVERE_THRESHOLD, SEVERE_THRESHOLD,
};

use crate::cmd::{digest_inputs, join_f64, join_paths, out_path};
use crate::report::{fixed_table, write_artifact, Report};
use crate::PrevalenceArgs;

pub fn run(args: &PrevalenceArgs) -> Result<()> {
    if args.scale.is_empty() || args.scale.len() > 2 {
        bail!(
            "prevalence takes one --scale definition, optionally followed by a second \
             --scale file with reference severities; got {}",
            args.scale.len()
        );
    }
    let scale = ScaleDefinition::load(&args.scale[0])
        .with_context(|| format!("loading scale definition '{}'", args.scale[0].display()))?;
    let standard = match args.scale.get(1) {
        Some(path) => Some(
            GlobalStandard::load(path)
                .with_context(|| format!("loading reference severities '{}'", path.display()))?,
        ),
        None => None,
    };
    if standard.is_none() && args.thresholds.is_none() {
        bail!(
            "the default thresholds ({MODERATE_SEVERE_THRESHOLD} and {SEVERE_THRESHOLD}) live \
             on the reference metric; pass a second --scale file with reference severities, \
             or set --thresholds explicitly to use the scale's own metric"
        );
    }
    let thresholds = args
        .thresholds
        .clone()
        .unwrap_or_else(|| vec![MODERATE_SEVERE_THRESHOLD, SEVERE_THRESHOLD]);

    let data = load_responses(&args.data, &scale)
        .with_context(|| format!("loading responses '{}'", args.data.display()))?;
    let policy: MissingPolicy = args.missing.into();
    let fit = fit_cml(&data, policy)?;
    let persons = estimate_person_params(&fit.items);
    let stats = fit_statistics(&data, &fit.items, &persons, policy)?;
    let dist = ScoreDistribution::from_scores(&data.score(policy))?;

    // Link onto the reference metric when severities are supplied.
    let link_section;
    let persons_for_prevalence;
    match &standard {
        Some(gs) => {
            let gs_codes = gs.codes();
            let shared: Vec<String> = scale
                .codes()
                .into_iter()
                .filter(|c| gs_codes.contains(c))
                .collect();
            let mut unique = scale.unique_a_priori_codes();
            for code in args.unique.iter() {
                if !unique.contains(code) {
                    unique.push(code.clone());
                }
            }
            let selection = select_anchor(
                &fit.items,
                &gs.as_item_params(),
                &shared,
                &unique,
                args.anchor_tol,
            )?;
            let link = &selection.link;
            persons_for_prevalence = persons.transform(link.a, link.b);
            let mut s = format!(
                "survey metric → reference metric: theta* = {:.4}·theta + {:.4}\n",
                link.a, link.b
            );
            if selection.removals.is_empty() {
                s.push_str("anchor removals: (none)\n");
            } else {
                s.push_str("anchor removals:\n");
                for (code, d) in &selection.removals {
                    s.push_str(&format!("  {code}  displacement {d:.3}\n"));
                }
            }
            let rows: Vec<Vec<String>> = link
                .anchor_codes
                .iter()
                .zip(&link.displacements)
                .map(|(c, d)| vec![c.clone(), format!("{d:.3}")])
                .collect();
            s.push_str(&fixed_table(&["anchor", "displacement"], &rows));
            link_section = s;
        }
        None => {
            persons_for_prevalence = persons.clone();
            link_section = "no reference severities supplied; thresholds interpreted on the \
                            scale's own latent metric\n"
                .to_string();
        }
    }

    let mut results: Vec<PrevalenceResult> = Vec::with_capacity(thresholds.len());
    for &t in &thresholds {
        results.push(voh_prevalence(&persons_for_prevalence, &dist, t)?);
    }

    let config = [
        ("scale", join_paths(&args.scale)),
        ("data", args.data.display().to_string()),
        ("thresholds", join_f64(&thresholds)),
        ("anchor-tol", args.anchor_tol.to_string()),
        ("unique", args.unique.join(",")),
        ("missing", args.missing.to_string()),
        ("out", args.out.display().to_string()),
    ];
    let mut input_paths: Vec<&std::path::PathBuf> = vec![&args.scale[0]];
    if let Some(p) = args.scale.get(1) {
        input_paths.push(p);
    }
    input_paths.push(&args.data);
    let inputs = digest_inputs(&input_paths)?;
    let mut report = Report::new("prevalence", &config, args.seed, &inputs);

    report.section(
        "Calibration",
        &format!(
            "scale: {}\nrows: {}\nreliability: {:.3}\n",
            scale.scale_id, fit.n_rows, stats.reliability
        ),
    );
    report.section("Metric", &link_section);
    let prev_rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| vec![r.threshold.to_string(), format!("{:.4}", r.prevalence)])
        .collect();
    report.section(
        "Prevalence beyond each threshold",
        &fixed_table(&["threshold", "prevalence"], &prev_rows),
    );
    for r in &results {
        let rows: Vec<Vec<String>> = r
            .rows
            .iter()
            .map(|row| {
                vec![
                    row.r.to_string(),
                    format!("{:.4}", row.share),
                    format!("{:.3}", row.theta),
                    format!("{:.3}", row.se),
                    format!("{:.4}", row.tail),
                    if row.pseudo { "yes" } else { "no" }.to_string(),
                ]
            })
            .collect();
        report.section(
            &format!("Decomposition at threshold {}", r.threshold),
            &fixed_table(&["r", "share", "theta", "se", "tail", "pseudo"], &rows),
        );
    }

    std::fs::create_dir_all(&args.out)?;
    write_artifact(&out_path(&args.out, "report.txt"), &report.finish())?;
    let mut prevalence_csv = String::from("threshold,prevalence\n");
    for r in &results {
        prevalence_csv.push_str(&format!("{},{}\n", r.threshold, r.prevalence));
    }
    write_artifact(&out_path(&args.out, "prevalence.csv"), &prevalence_csv)?;
    let mut decomposition = String::from("threshold,r,share,theta,se,tail,pseudo\n");
    for r in &results {
        for row in &r.rows {
            decomposition.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.threshold, row.r, row.share, row.theta, row.se, row.tail, row.pseudo
            ));
        }
    }
    write_artifact(&out_path(&args.out, "decomposition.csv"), &decomposition)?;
    Ok(())
}
