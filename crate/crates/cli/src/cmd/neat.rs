//! `equate-neat`: two separately sampled forms, linked through an
//! iteratively selected anchor set, with latent thresholds mapped onto the
//! source form three ways (true-score equivalent, linking correspondence,
//! minimization correspondence).

use anyhow::{bail, Context, Result};
use scale_equate::{
    bootstrap_see, estimate_person_params, fit_cml, fit_statistics, irt_true_score_equate,
    linking_correspondence, load_responses, minimization_correspondence, select_anchor, tcc,
    voh_prevalence, AnchorSelection, BootstrapSpec, CmlFit, EquatingTable, FitReport, Method,
    MissingPolicy, PersonParams, ResponseMatrix, ScaleDefinition, ScoreDistribution,
    MODERATE_SEVERE_THRESHOLD, SEVERE_THRESHOLD,
};

use crate::cmd::{digest_inputs, join_f64, join_paths, out_path};
use crate::report::{fixed_table, value_with_see, write_artifact, Report};
use crate::EquateNeatArgs;

struct FittedForm {
    fit: CmlFit,
    persons: PersonParams,
    stats: FitReport,
    dist: ScoreDistribution,
    scale_id: String,
}

fn fit_form(m: &ResponseMatrix, policy: MissingPolicy, scale_id: &str) -> Result<FittedForm> {
    let fit = fit_cml(m, policy)?;
    let persons = estimate_person_params(&fit.items);
    let stats = fit_statistics(m, &fit.items, &persons, policy)?;
    let dist = ScoreDistribution::from_scores(&m.score(policy))?;
    Ok(FittedForm {
        fit,
        persons,
        stats,
        dist,
        scale_id: scale_id.to_string(),
    })
}

pub fn run(args: &EquateNeatArgs) -> Result<()> {
    if args.scale.len() != 2 {
        bail!(
            "equate-neat takes exactly two --scale definitions (source, then target); got {}",
            args.scale.len()
        );
    }
    let sx = ScaleDefinition::load(&args.scale[0])
        .with_context(|| format!("loading scale definition '{}'", args.scale[0].display()))?;
    let sy = ScaleDefinition::load(&args.scale[1])
        .with_context(|| format!("loading scale definition '{}'", args.scale[1].display()))?;
    let mx = load_responses(&args.data_x, &sx)
        .with_context(|| format!("loading responses '{}'", args.data_x.display()))?;
    let my = load_responses(&args.data_y, &sy)
        .with_context(|| format!("loading responses '{}'", args.data_y.display()))?;
    let policy: MissingPolicy = args.missing.into();
    let thresholds = args
        .thresholds
        .clone()
        .unwrap_or_else(|| vec![MODERATE_SEVERE_THRESHOLD, SEVERE_THRESHOLD]);

    let x = fit_form(&mx, policy, &sx.scale_id)?;
    let y = fit_form(&my, policy, &sy.scale_id)?;

    // Anchor candidates: codes present on both forms, in source order,
    // minus everything declared unique a priori (in either definition or
    // on the command line).
    let y_codes = sy.codes();
    let shared: Vec<String> = sx
        .codes()
        .into_iter()
        .filter(|c| y_codes.contains(c))
        .collect();
    let mut unique: Vec<String> = sx.unique_a_priori_codes();
    for code in sy
        .unique_a_priori_codes()
        .into_iter()
        .chain(args.unique.iter().cloned())
    {
        if !unique.contains(&code) {
            unique.push(code);
        }
    }

    let selection = select_anchor(
        &x.fit.items,
        &y.fit.items,
        &shared,
        &unique,
        args.anchor_tol,
    )?;
    let link = &selection.link;

    let mut table = irt_true_score_equate(&x.fit.items, &y.fit.items, link)?;
    table.source = x.scale_id.clone();
    table.target = y.scale_id.clone();

    // Latent threshold t on the target metric → real-valued source raw
    // score through the inverse link and the source TCC.
    let equivalents: Vec<f64> = thresholds
        .iter()
        .map(|&t| tcc(link.inverse().apply(t), &x.fit.items.b))
        .collect();
    let linking = linking_correspondence(&x.persons, link, &thresholds);
    let persons_on_target = x.persons.transform(link.a, link.b);
    let mut prevalences = Vec::with_capacity(thresholds.len());
    let mut minimization = Vec::with_capacity(thresholds.len());
    for &t in &thresholds {
        let prev = voh_prevalence(&persons_on_target, &x.dist, t)?;
        minimization.push(minimization_correspondence(&prev, &x.dist));
        prevalences.push(prev);
    }

    // One bootstrap covers both artifacts: each replication's vector is the
    // equated table with the threshold equivalents appended.
    let mut equivalent_see: Vec<Option<f64>> = vec![None; thresholds.len()];
    let mut bootstrap_failures = None;
    if args.bootstrap > 0 {
        let spec = BootstrapSpec {
            replications: args.bootstrap,
            seed: args.seed,
        };
        let ths = &thresholds;
        let shared_ref = &shared;
        let unique_ref = &unique;
        let tol = args.anchor_tol;
        let result = bootstrap_see(&mx, &my, &spec, move |xs, ys| {
            let fx = fit_cml(xs, policy)?;
            let fy = fit_cml(ys, policy)?;
            let sel = select_anchor(&fx.items, &fy.items, shared_ref, unique_ref, tol)?;
            let t = irt_true_score_equate(&fx.items, &fy.items, &sel.link)?;
            let mut v = t.equated;
            for &th in ths {
                v.push(tcc(sel.link.inverse().apply(th), &fx.items.b));
            }
            Ok(EquatingTable {
                method: Method::IrtTrueScore,
                source: String::new(),
                target: String::new(),
                equated: v,
                see: None,
            })
        })?;
        let split = table.equated.len();
        table.see = Some(result.see[..split].to_vec());
        for (i, s) in result.see[split..].iter().enumerate() {
            equivalent_see[i] = Some(*s);
        }
        bootstrap_failures = Some((result.failures, result.replications));
    }

    let config = [
        ("scale", join_paths(&args.scale)),
        ("data-x", args.data_x.display().to_string()),
        ("data-y", args.data_y.display().to_string()),
        ("anchor-tol", args.anchor_tol.to_string()),
        ("unique", args.unique.join(",")),
        ("thresholds", join_f64(&thresholds)),
        ("bootstrap", args.bootstrap.to_string()),
        ("missing", args.missing.to_string()),
        ("out", args.out.display().to_string()),
    ];
    let inputs = digest_inputs(&[&args.scale[0], &args.scale[1], &args.data_x, &args.data_y])?;
    let mut report = Report::new("equate-neat", &config, args.seed, &inputs);

    report.section("Forms", &forms_summary(&x, &y));
    report.section("Anchor selection", &anchor_summary(&selection, &unique));
    report.section(
        "Link",
        &format!(
            "source metric → target metric: theta* = {:.4}·theta + {:.4}\n",
            link.a, link.b
        ),
    );
    report.section(
        &format!("Threshold equivalents on the {} scale", x.scale_id),
        &equivalents_table(
            &thresholds,
            &equivalents,
            &equivalent_see,
            &linking,
            &minimization,
        ),
    );
    let prevalence_rows: Vec<Vec<String>> = thresholds
        .iter()
        .zip(&prevalences)
        .map(|(t, p)| vec![t.to_string(), format!("{:.4}", p.prevalence)])
        .collect();
    report.section(
        "Model prevalence beyond each threshold",
        &fixed_table(&["threshold", "prevalence"], &prevalence_rows),
    );
    report.section(
        "Equated scores (true-score method)",
        &equated_table_text(&table),
    );
    if let Some((failed, total)) = bootstrap_failures {
        report.section(
            "Bootstrap",
            &format!("replications: {total}; failed and dropped: {failed}\n"),
        );
    }

    std::fs::create_dir_all(&args.out)?;
    write_artifact(&out_path(&args.out, "report.txt"), &report.finish())?;
    write_artifact(
        &out_path(&args.out, "equating_irt_ts.csv"),
        &table.to_csv_string(),
    )?;
    write_artifact(
        &out_path(&args.out, "threshold_equivalents.csv"),
        &equivalents_csv(
            &thresholds,
            &equivalents,
            &equivalent_see,
            &linking,
            &minimization,
            table.max_source_score(),
        ),
    )?;
    write_artifact(
        &out_path(&args.out, "anchors.csv"),
        &anchors_csv(&selection, &x.fit, &y.fit, &shared, &unique),
    )?;
    Ok(())
}

fn forms_summary(x: &FittedForm, y: &FittedForm) -> String {
    let rows = vec![
        vec![
            "source".to_string(),
            x.scale_id.clone(),
            x.fit.n_rows.to_string(),
            x.fit.items.len().to_string(),
            format!("{:.3}", x.stats.reliability),
        ],
        vec![
            "target".to_string(),
            y.scale_id.clone(),
            y.fit.n_rows.to_string(),
            y.fit.items.len().to_string(),
            format!("{:.3}", y.stats.reliability),
        ],
    ];
    let mut s = fixed_table(&["role", "scale", "rows", "items", "reliability"], &rows);
    s.push_str(
        "Similar reliabilities support the equal-reliability requirement; \
         review before equating if they diverge.\n",
    );
    s
}

fn anchor_summary(selection: &AnchorSelection, unique: &[String]) -> String {
    let mut s = String::new();
    if unique.is_empty() {
        s.push_str("unique a priori: (none)\n");
    } else {
        s.push_str(&format!("unique a priori: {}\n", unique.join(", ")));
    }
    s.push_str(&format!("tolerance: {} logits\n", selection.tolerance));
    if selection.removals.is_empty() {
        s.push_str("removed: (none)\n");
    } else {
        s.push_str("removed:\n");
        for (code, displacement) in &selection.removals {
            s.push_str(&format!("  {code}  displacement {displacement:.3}\n"));
        }
    }
    let rows: Vec<Vec<String>> = selection
        .link
        .anchor_codes
        .iter()
        .zip(&selection.link.displacements)
        .map(|(code, d)| vec![code.clone(), format!("{d:.3}")])
        .collect();
    s.push_str(&fixed_table(&["anchor", "displacement"], &rows));
    s
}

fn equivalents_table(
    thresholds: &[f64],
    equivalents: &[f64],
    see: &[Option<f64>],
    linking: &[scale_equate::Correspondence],
    minimization: &[scale_equate::Correspondence],
) -> String {
    let mut headers: Vec<String> = vec!["method".into()];
    headers.extend(thresholds.iter().map(|t| t.to_string()));
    let header_refs: Vec<&str> = headers.iter().map(|s| s.as_str()).collect();
    let mut any_tie = false;
    let corr_cell = |c: &scale_equate::Correspondence| {
        if c.tie {
            format!("{}*", c.raw_score)
        } else {
            c.raw_score.to_string()
        }
    };
    let rows = vec![
        std::iter::once("irt-ts".to_string())
            .chain(
                equivalents
                    .iter()
                    .zip(see)
                    .map(|(e, s)| value_with_see(*e, *s)),
            )
            .collect::<Vec<_>>(),
        std::iter::once("linking".to_string())
            .chain(linking.iter().map(|c| {
                any_tie |= c.tie;
                corr_cell(c)
            }))
            .collect::<Vec<_>>(),
        std::iter::once("minimization".to_string())
            .chain(minimization.iter().map(|c| {
                any_tie |= c.tie;
                corr_cell(c)
            }))
            .collect::<Vec<_>>(),
    ];
    let mut s = fixed_table(&header_refs, &rows);
    s.push_str(&format!(
        "nearest integers (irt-ts): {}\n",
        equivalents
            .iter()
            .zip(thresholds)
            .map(|(e, t)| format!("{t} → {}", e.round() as i64))
            .collect::<Vec<_>>()
            .join("; ")
    ));
    if any_tie {
        s.push_str("* tie resolved toward the smaller raw score\n");
    }
    s
}

fn equated_table_text(table: &EquatingTable) -> String {
    let rows: Vec<Vec<String>> = table
        .equated
        .iter()
        .enumerate()
        .map(|(x, e)| {
            let see = table.see.as_ref().map(|v| v[x]);
            vec![x.to_string(), value_with_see(*e, see)]
        })
        .collect();
    fixed_table(&["x", "equated (see)"], &rows)
}

fn equivalents_csv(
    thresholds: &[f64],
    equivalents: &[f64],
    see: &[Option<f64>],
    linking: &[scale_equate::Correspondence],
    minimization: &[scale_equate::Correspondence],
    max_score: u32,
) -> String {
    let mut out = String::from("method,threshold,equivalent,see,nearest,tie\n");
    for (i, &t) in thresholds.iter().enumerate() {
        let s = see[i].map(|v| v.to_string()).unwrap_or_default();
        let nearest = (equivalents[i].round() as i64).clamp(0, max_score as i64);
        out.push_str(&format!("irt-ts,{t},{},{s},{nearest},\n", equivalents[i]));
    }
    for c in linking {
        out.push_str(&format!(
            "linking,{},{},,{},{}\n",
            c.threshold, c.raw_score, c.raw_score, c.tie
        ));
    }
    for c in minimization {
        out.push_str(&format!(
            "minimization,{},{},,{},{}\n",
            c.threshold, c.raw_score, c.raw_score, c.tie
        ));
    }
    out
}

fn anchors_csv(
    selection: &AnchorSelection,
    fx: &CmlFit,
    fy: &CmlFit,
    shared: &[String],
    unique: &[String],
) -> String {
    let mut out = String::from("code,severity_source,severity_target,displacement,role\n");
    for code in shared {
        let bx = fx.items.position(code).map(|j| fx.items.b[j]);
        let by = fy.items.position(code).map(|j| fy.items.b[j]);
        let (bx, by) = match (bx, by) {
            (Some(a), Some(b)) => (a, b),
            _ => continue,
        };
        let (displacement, role) = if unique.contains(code) {
            (String::new(), "unique-a-priori".to_string())
        } else if let Some(step) = selection
            .removals
            .iter()
            .position(|(removed, _)| removed == code)
        {
            (
                selection.removals[step].1.to_string(),
                format!("removed:{}", step + 1),
            )
        } else if let Some(pos) = selection.link.anchor_codes.iter().position(|c| c == code) {
            (
                selection.link.displacements[pos].to_string(),
                "anchor".to_string(),
            )
        } else {
            (String::new(), "candidate".to_string())
        };
        out.push_str(&format!("{code},{bx},{by},{displacement},{role}\n"));
    }
    out
}
