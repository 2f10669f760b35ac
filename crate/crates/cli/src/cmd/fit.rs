//! `fit`: calibrate one form and screen its items against the published
//! acceptance bands.

use anyhow::{Context, Result};
use scale_equate::{
    estimate_person_params, fit_cml, fit_statistics, load_responses, CmlFit, FitReport,
    MissingPolicy, PersonParams, ScaleDefinition, INFIT_BAND, RESIDUAL_CORRELATION_LIMIT,
};

use crate::cmd::{digest_inputs, out_path};
use crate::report::{fixed_table, write_artifact, Report};
use crate::FitArgs;

pub fn run(args: &FitArgs) -> Result<()> {
    let scale = ScaleDefinition::load(&args.scale)
        .with_context(|| format!("loading scale definition '{}'", args.scale.display()))?;
    let matrix = load_responses(&args.data, &scale)
        .with_context(|| format!("loading responses '{}'", args.data.display()))?;
    let policy: MissingPolicy = args.missing.into();

    let fit = fit_cml(&matrix, policy)?;
    let persons = estimate_person_params(&fit.items);
    let stats = fit_statistics(&matrix, &fit.items, &persons, policy)?;

    let config = [
        ("scale", args.scale.display().to_string()),
        ("data", args.data.display().to_string()),
        ("missing", args.missing.to_string()),
        ("out", args.out.display().to_string()),
    ];
    let inputs = digest_inputs(&[&args.scale, &args.data])?;
    let mut report = Report::new("fit", &config, args.seed, &inputs);

    report.section("Model fit", &fit_summary(&fit));
    let (item_rows, warned) = item_rows(&fit, &stats);
    report.section(
        "Items",
        &fixed_table(
            &["code", "severity", "se", "infit", "outfit", "status"],
            &item_rows,
        ),
    );
    report.section("Residual screen", &residual_summary(&stats));
    report.section(
        "Principal components of residual correlations",
        &format!(
            "eigenvalues: {}\n",
            stats
                .pca_eigenvalues
                .iter()
                .map(|v| format!("{v:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
    report.section(
        "Persons",
        &fixed_table(&["r", "theta", "se", "pseudo"], &person_rows(&persons)),
    );
    report.section("Reliability", &format!("{:.3}\n", stats.reliability));
    let verdict = if warned.is_empty() {
        "all items PASS".to_string()
    } else {
        format!("{} item(s) flagged: {}", warned.len(), warned.join(", "))
    };
    report.section("Summary", &format!("{verdict}\n"));

    std::fs::create_dir_all(&args.out)?;
    write_artifact(&out_path(&args.out, "report.txt"), &report.finish())?;
    write_artifact(
        &out_path(&args.out, "item_params.csv"),
        &item_params_csv(&fit, &stats),
    )?;
    write_artifact(
        &out_path(&args.out, "person_params.csv"),
        &person_params_csv(&persons),
    )?;
    write_artifact(
        &out_path(&args.out, "residual_correlations.csv"),
        &residual_csv(&fit, &stats),
    )?;
    write_artifact(
        &out_path(&args.out, "pca_eigenvalues.csv"),
        &eigenvalue_csv(&stats),
    )?;
    Ok(())
}

/// Item passes when its infit sits inside the acceptance band and no
/// residual correlation with another item reaches the limit.
pub fn item_status(stats: &FitReport, j: usize) -> &'static str {
    let infit_ok = stats.infit[j] > INFIT_BAND.0 && stats.infit[j] < INFIT_BAND.1;
    let corr_ok = stats.residual_correlations[j]
        .iter()
        .enumerate()
        .all(|(k, c)| k == j || c.abs() < RESIDUAL_CORRELATION_LIMIT);
    if infit_ok && corr_ok {
        "PASS"
    } else {
        "WARN"
    }
}

fn fit_summary(fit: &CmlFit) -> String {
    format!(
        "rows used: {} (extreme scores: {}; excluded by missing-data policy: {} rows, weight {:.3})\n\
         iterations: {}\n\
         max |gradient|: {:.3e}\n\
         conditional log-likelihood: {:.6}\n",
        fit.n_rows, fit.n_extreme, fit.excluded.rows, fit.excluded.weight,
        fit.iterations, fit.gradient_norm, fit.log_likelihood
    )
}

fn item_rows(fit: &CmlFit, stats: &FitReport) -> (Vec<Vec<String>>, Vec<String>) {
    let mut rows = Vec::new();
    let mut warned = Vec::new();
    for j in 0..fit.items.len() {
        let status = item_status(stats, j);
        if status == "WARN" {
            warned.push(fit.items.codes[j].clone());
        }
        rows.push(vec![
            fit.items.codes[j].clone(),
            format!("{:.3}", fit.items.b[j]),
            format!("{:.3}", fit.items.se[j]),
            format!("{:.2}", stats.infit[j]),
            format!("{:.2}", stats.outfit[j]),
            status.to_string(),
        ]);
    }
    (rows, warned)
}

fn residual_summary(stats: &FitReport) -> String {
    let j = stats.residual_correlations.len();
    let mut max_abs = 0.0f64;
    let mut arg = (0, 0);
    for a in 0..j {
        for b in 0..j {
            if a != b && stats.residual_correlations[a][b].abs() > max_abs {
                max_abs = stats.residual_correlations[a][b].abs();
                arg = (a, b);
            }
        }
    }
    let status = if max_abs < RESIDUAL_CORRELATION_LIMIT {
        "PASS"
    } else {
        "WARN"
    };
    format!(
        "max |residual correlation| = {:.3} (items {} and {}); limit {}; {}\n",
        max_abs, arg.0, arg.1, RESIDUAL_CORRELATION_LIMIT, status
    )
}

fn person_rows(persons: &PersonParams) -> Vec<Vec<String>> {
    (0..persons.theta.len())
        .map(|r| {
            vec![
                r.to_string(),
                format!("{:.3}", persons.theta[r]),
                format!("{:.3}", persons.se[r]),
                if persons.pseudo[r] { "yes" } else { "no" }.to_string(),
            ]
        })
        .collect()
}

fn item_params_csv(fit: &CmlFit, stats: &FitReport) -> String {
    let mut out = String::from("code,severity,se,infit,outfit,status\n");
    for j in 0..fit.items.len() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fit.items.codes[j],
            fit.items.b[j],
            fit.items.se[j],
            stats.infit[j],
            stats.outfit[j],
            item_status(stats, j)
        ));
    }
    out
}

fn person_params_csv(persons: &PersonParams) -> String {
    let mut out = String::from("r,theta,se,pseudo\n");
    for r in 0..persons.theta.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r, persons.theta[r], persons.se[r], persons.pseudo[r]
        ));
    }
    out
}

fn residual_csv(fit: &CmlFit, stats: &FitReport) -> String {
    let mut out = String::from("code");
    for code in &fit.items.codes {
        out.push(',');
        out.push_str(code);
    }
    out.push('\n');
    for (j, row) in stats.residual_correlations.iter().enumerate() {
        out.push_str(&fit.items.codes[j]);
        for value in row {
            out.push_str(&format!(",{value}"));
        }
        out.push('\n');
    }
    out
}

fn eigenvalue_csv(stats: &FitReport) -> String {
    let mut out = String::from("component,eigenvalue\n");
    for (i, v) in stats.pca_eigenvalues.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, v));
    }
    out
}
