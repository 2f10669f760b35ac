pub mod fit;
pub mod neat;
pub mod prevalence;
pub mod sg;
pub mod simulate;

use std::path::{Path, PathBuf};

use anyhow::Result;

use crate::report::sha256_file;

/// Digests the input files for the report header, in argument order.
pub fn digest_inputs(paths: &[&PathBuf]) -> Result<Vec<(String, String)>> {
    paths
        .iter()
        .map(|p| Ok((p.display().to_string(), sha256_file(p)?)))
        .collect()
}

pub fn join_paths(paths: &[PathBuf]) -> String {
    paths
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn join_f64(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
