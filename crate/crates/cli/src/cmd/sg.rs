//! `equate-sg`: single-group design. One sample answers the full form
//! (household and children-referenced items); the shorter household form is
//! the same respondents restricted to the household items. Both forms are
//! calibrated jointly, so the true-score method needs no link, and the
//! bootstrap resamples respondents once per replication with both forms
//! recomputed from the same draw.

use anyhow::{bail, Context, Result};
use scale_equate::{
    bootstrap_see_single_group, equipercentile_equate, estimate_person_params, fit_cml,
    fit_statistics, irt_true_score_equate, linear_equate, load_responses, mean_equate,
    BootstrapSpec, EquatingTable, LinkingTransform, Method, MissingPolicy, ResponseMatrix,
    ScaleDefinition, ScoreDistribution,
};

use crate::cmd::{digest_inputs, join_f64, out_path};
use crate::report::{clamp_to_range, fixed_table, value_with_see, write_artifact, Report};
use crate::{reference, EquateSgArgs};

const METHODS: [Method; 4] = [
    Method::IrtTrueScore,
    Method::Mean,
    Method::Linear,
    Method::Equipercentile,
];

/// Adult-form and full-form equating tables from one complete-case matrix.
fn equate_all(
    complete: &ResponseMatrix,
    adult_codes: &[String],
    policy: MissingPolicy,
) -> scale_equate::Result<[EquatingTable; 4]> {
    let fit = fit_cml(complete, policy)?;
    let adult_items = fit.items.subset(adult_codes)?;
    let adult_matrix = complete.restrict_to_items(adult_codes)?;
    let da = ScoreDistribution::from_scores(&adult_matrix.score(policy))?;
    let dc = ScoreDistribution::from_scores(&complete.score(policy))?;
    let irt = irt_true_score_equate(&adult_items, &fit.items, &LinkingTransform::identity())?;
    let mean = mean_equate(&da, &dc);
    let linear = linear_equate(&da, &dc)?;
    let equip = equipercentile_equate(&da, &dc);
    Ok([irt, mean, linear, equip])
}

pub fn run(args: &EquateSgArgs) -> Result<()> {
    let scale = ScaleDefinition::load(&args.scale)
        .with_context(|| format!("loading scale definition '{}'", args.scale.display()))?;
    let children = scale.children_codes();
    if children.is_empty() {
        bail!(
            "scale '{}' has no children-referenced items; the single-group design \
             derives the household form from the full form and needs both",
            scale.scale_id
        );
    }
    let adult_codes = scale.household_codes();
    if adult_codes.is_empty() {
        bail!(
            "scale '{}' has no household items left once children-referenced items \
             are set aside",
            scale.scale_id
        );
    }
    let raw = load_responses(&args.data, &scale)
        .with_context(|| format!("loading responses '{}'", args.data.display()))?;
    let policy: MissingPolicy = args.missing.into();

    // One complete-case pass over the full form so both forms are scored on
    // exactly the same respondents.
    let (complete, excluded) = raw.complete_cases(policy);
    let ka = adult_codes.len() as u32;
    let kc = complete.n_items() as u32;

    let thresholds: Vec<u32> = match &args.thresholds {
        Some(ts) => ts
            .iter()
            .map(|&t| {
                if t < 0.0 || t.fract() != 0.0 || t > f64::from(ka) {
                    bail!(
                        "threshold {t} is not a raw score on the {}-item household form",
                        ka
                    );
                }
                Ok(t as u32)
            })
            .collect::<Result<_>>()?,
        None => match reference::adult_lower_thresholds(&scale.scale_id) {
            Some((moderate, severe)) => vec![moderate, severe],
            None => bail!(
                "no built-in thresholds for scale '{}'; pass --thresholds with the \
                 household-form raw scores that open the moderate and severe ranges",
                scale.scale_id
            ),
        },
    };

    let mut tables = equate_all(&complete, &adult_codes, policy)?;
    let source = format!("{}-household", scale.scale_id);
    let target = format!("{}-full", scale.scale_id);
    for t in &mut tables {
        t.source = source.clone();
        t.target = target.clone();
    }

    // Reliability on each form, from the joint calibration.
    let fit = fit_cml(&complete, policy)?;
    let full_persons = estimate_person_params(&fit.items);
    let full_stats = fit_statistics(&complete, &fit.items, &full_persons, policy)?;
    let adult_items = fit.items.subset(&adult_codes)?;
    let adult_matrix = complete.restrict_to_items(&adult_codes)?;
    let adult_persons = estimate_person_params(&adult_items);
    let adult_stats = fit_statistics(&adult_matrix, &adult_items, &adult_persons, policy)?;

    let mut bootstrap_failures = None;
    if args.bootstrap > 0 {
        let spec = BootstrapSpec {
            replications: args.bootstrap,
            seed: args.seed,
        };
        let codes = &adult_codes;
        let result = bootstrap_see_single_group(&raw, &spec, move |m| {
            let (c, _) = m.complete_cases(policy);
            let tables = equate_all(&c, codes, policy)?;
            let mut packed = Vec::with_capacity(4 * (ka as usize + 1));
            for t in &tables {
                packed.extend_from_slice(&t.equated);
            }
            Ok(EquatingTable {
                method: Method::IrtTrueScore,
                source: String::new(),
                target: String::new(),
                equated: packed,
                see: None,
            })
        })?;
        let width = ka as usize + 1;
        for (i, t) in tables.iter_mut().enumerate() {
            t.see = Some(result.see[i * width..(i + 1) * width].to_vec());
        }
        bootstrap_failures = Some((result.failures, result.replications));
    }

    let config = [
        ("scale", args.scale.display().to_string()),
        ("data", args.data.display().to_string()),
        (
            "thresholds",
            join_f64(&thresholds.iter().map(|&t| f64::from(t)).collect::<Vec<_>>()),
        ),
        ("bootstrap", args.bootstrap.to_string()),
        ("missing", args.missing.to_string()),
        ("out", args.out.display().to_string()),
    ];
    let inputs = digest_inputs(&[&args.scale, &args.data])?;
    let mut report = Report::new("equate-sg", &config, args.seed, &inputs);

    let form_rows = vec![
        vec![
            "household".to_string(),
            ka.to_string(),
            complete.n_respondents().to_string(),
            format!("{:.3}", adult_stats.reliability),
        ],
        vec![
            "full".to_string(),
            kc.to_string(),
            complete.n_respondents().to_string(),
            format!("{:.3}", full_stats.reliability),
        ],
    ];
    let mut forms = fixed_table(&["form", "items", "rows", "reliability"], &form_rows);
    forms.push_str(&format!(
        "excluded as incomplete: {} rows (weight {:.1})\n",
        excluded.rows, excluded.weight
    ));
    report.section("Forms", &forms);

    if let Some(row) = reference::lookup(&scale.scale_id, false) {
        let mut s = format!(
            "{}, without children: mild {} to {}, moderate {} to {}, severe {} to {}\n",
            row.scale,
            row.mild.0,
            row.mild.1,
            row.moderate.0,
            row.moderate.1,
            row.severe.0,
            row.severe.1
        );
        if let Some(row) = reference::lookup(&scale.scale_id, true) {
            s.push_str(&format!(
                "{}, with children: mild {} to {}, moderate {} to {}, severe {} to {}\n",
                row.scale,
                row.mild.0,
                row.mild.1,
                row.moderate.0,
                row.moderate.1,
                row.severe.0,
                row.severe.1
            ));
        }
        report.section("National classification", &s);
    }

    report.section(
        "Threshold equivalents on the full form",
        &threshold_table(&tables, &thresholds, kc),
    );
    report.section("Equated scores", &equated_table_text(&tables, kc));
    if let Some((failed, total)) = bootstrap_failures {
        report.section(
            "Bootstrap",
            &format!("replications: {total}; failed and dropped: {failed}\n"),
        );
    }

    std::fs::create_dir_all(&args.out)?;
    write_artifact(&out_path(&args.out, "report.txt"), &report.finish())?;
    write_artifact(
        &out_path(&args.out, "summary.csv"),
        &summary_csv(&tables, &thresholds, kc),
    )?;
    for table in &tables {
        let name = match table.method {
            Method::IrtTrueScore => "equating_irt_ts.csv",
            Method::Mean => "equating_mean.csv",
            Method::Linear => "equating_linear.csv",
            Method::Equipercentile => "equating_equipercentile.csv",
        };
        write_artifact(&out_path(&args.out, name), &table.to_csv_string())?;
    }
    Ok(())
}

fn method_label(m: Method) -> &'static str {
    match m {
        Method::IrtTrueScore => "IRT-TS",
        Method::Mean => "Mean",
        Method::Linear => "Linear",
        Method::Equipercentile => "Equipercentile",
    }
}

fn threshold_label(thresholds: &[u32], i: usize) -> String {
    if thresholds.len() == 2 {
        ["moderate", "severe"][i].to_string()
    } else {
        format!("threshold-{}", i + 1)
    }
}

fn threshold_table(tables: &[EquatingTable; 4], thresholds: &[u32], kc: u32) -> String {
    let mut headers: Vec<String> = vec!["method".into()];
    for (i, t) in thresholds.iter().enumerate() {
        let label = threshold_label(thresholds, i);
        headers.push(format!("{label} {t}+ (SEE)"));
    }
    let header_refs: Vec<&str> = headers.iter().map(|s| s.as_str()).collect();
    let mut clamped_any = false;
    let rows: Vec<Vec<String>> = tables
        .iter()
        .zip(METHODS)
        .map(|(table, m)| {
            let mut row = vec![method_label(m).to_string()];
            for &t in thresholds {
                let idx = t as usize;
                let (v, clamped) = clamp_to_range(table.equated[idx], kc);
                clamped_any |= clamped;
                let see = table.see.as_ref().map(|s| s[idx]);
                let mut cell = value_with_see(v, see);
                if clamped {
                    cell.push('†');
                }
                row.push(cell);
            }
            row
        })
        .collect();
    let mut s = fixed_table(&header_refs, &rows);
    s.push_str(&format!(
        "nearest integers: {}\n",
        thresholds
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let vals: Vec<String> = tables
                    .iter()
                    .zip(METHODS)
                    .map(|(table, m)| {
                        let (v, _) = clamp_to_range(table.equated[t as usize], kc);
                        format!("{} {}", method_label(m), v.round() as i64)
                    })
                    .collect();
                format!("{}: {}", threshold_label(thresholds, i), vals.join(", "))
            })
            .collect::<Vec<_>>()
            .join("; ")
    ));
    if clamped_any {
        s.push_str("† clamped to the full-form score range\n");
    }
    s
}

fn equated_table_text(tables: &[EquatingTable; 4], kc: u32) -> String {
    let mut headers: Vec<String> = vec!["x".into()];
    for m in METHODS {
        headers.push(format!("{} (see)", m));
    }
    let header_refs: Vec<&str> = headers.iter().map(|s| s.as_str()).collect();
    let n = tables[0].equated.len();
    let mut clamped_any = false;
    let rows: Vec<Vec<String>> = (0..n)
        .map(|x| {
            let mut row = vec![x.to_string()];
            for table in tables {
                let (v, clamped) = clamp_to_range(table.equated[x], kc);
                clamped_any |= clamped;
                let see = table.see.as_ref().map(|s| s[x]);
                let mut cell = value_with_see(v, see);
                if clamped {
                    cell.push('†');
                }
                row.push(cell);
            }
            row
        })
        .collect();
    let mut s = fixed_table(&header_refs, &rows);
    if clamped_any {
        s.push_str("† clamped to the full-form score range\n");
    }
    s
}

fn summary_csv(tables: &[EquatingTable; 4], thresholds: &[u32], kc: u32) -> String {
    let mut out = String::from("method,threshold,adult_score,children_equivalent,see,nearest\n");
    for (table, m) in tables.iter().zip(METHODS) {
        for (i, &t) in thresholds.iter().enumerate() {
            let idx = t as usize;
            let e = table.equated[idx];
            let see = table
                .see
                .as_ref()
                .map(|s| s[idx].to_string())
                .unwrap_or_default();
            let (in_range, _) = clamp_to_range(e, kc);
            out.push_str(&format!(
                "{m},{},{t},{e},{see},{}\n",
                threshold_label(thresholds, i),
                in_range.round() as i64
            ));
        }
    }
    out
}
