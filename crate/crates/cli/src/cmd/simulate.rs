//! `simulate`: draw a synthetic response matrix from configured item
//! severities and a person distribution, writing the data alongside a scale
//! definition that the other subcommands accept directly.

use anyhow::{Context, Result};
use scale_equate::{simulate_responses, SimSpec};

use crate::cmd::{digest_inputs, out_path};
use crate::report::{sha256_file, write_artifact, Report};
use crate::SimulateArgs;

pub fn run(args: &SimulateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.data)
        .with_context(|| format!("reading simulation spec '{}'", args.data.display()))?;
    let mut spec = SimSpec::from_toml_str(&text)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    let matrix = simulate_responses(&spec)?;

    std::fs::create_dir_all(&args.out)?;
    let responses_path = out_path(&args.out, "responses.csv");
    matrix.write_csv(&responses_path)?;
    let scale_path = out_path(&args.out, "scale.toml");
    write_artifact(&scale_path, &scale_toml(&spec))?;

    let config = [
        ("data", args.data.display().to_string()),
        ("out", args.out.display().to_string()),
    ];
    let inputs = digest_inputs(&[&args.data])?;
    let mut report = Report::new("simulate", &config, spec.seed, &inputs);
    let mut body = format!(
        "scale: {}\nrespondents: {}\nitems: {}\n",
        spec.scale_id,
        matrix.n_respondents(),
        matrix.n_items()
    );
    body.push_str(&format!(
        "responses.csv  sha256={}\n",
        sha256_file(&responses_path)?
    ));
    report.section("Generated data", &body);
    write_artifact(&out_path(&args.out, "report.txt"), &report.finish())?;
    Ok(())
}

/// Scale definition matching the generated items, loadable by every other
/// subcommand.
fn scale_toml(spec: &SimSpec) -> String {
    let mut out = format!("scale_id = {:?}\n", spec.scale_id);
    for code in spec.item_codes() {
        out.push_str(&format!("\n[[items]]\ncode = {code:?}\n"));
    }
    out
}
