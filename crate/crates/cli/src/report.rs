//! Plain-text report assembly: header with config echo and input digests,
//! fixed-width tables, and the value-with-error formatting used in the
//! summary tables.
//!
//! Reports must be byte-identical across reruns with the same inputs, so
//! nothing here may depend on time, environment, or iteration order.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

pub struct Report {
    text: String,
}

impl Report {
    /// Starts a report with the standard header: tool version, command,
    /// config echo (in flag order), seed, and input digests.
    pub fn new(
        command: &str,
        config: &[(&str, String)],
        seed: u64,
        inputs: &[(String, String)],
    ) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "scale-equate {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(text, "command: {command}");
        let _ = writeln!(text, "config:");
        for (key, value) in config {
            let _ = writeln!(text, "  {key} = {value}");
        }
        let _ = writeln!(text, "  seed = {seed}");
        let _ = writeln!(text, "inputs:");
        for (path, digest) in inputs {
            let _ = writeln!(text, "  {path}  sha256={digest}");
        }
        Report { text }
    }

    pub fn section(&mut self, title: &str, body: &str) {
        let _ = write!(self.text, "\n## {title}\n{}", body.trim_end());
        self.text.push('\n');
    }

    pub fn line(&mut self, s: &str) {
        self.text.push_str(s);
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Hex-encoded SHA-256 of a file's bytes.
pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path)
        .with_context(|| format!("cannot open input '{}' for digesting", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 65536];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Renders a left-aligned fixed-width table with a dashed rule under the
/// header.
pub fn fixed_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let render = |cells: &[String], out: &mut String| {
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            out.push_str(cell);
            if i + 1 < cells.len() {
                for _ in cell.len()..widths[i] {
                    out.push(' ');
                }
            }
        }
        out.push('\n');
    };
    let header_cells: Vec<String> = headers.iter().map(|h| h.to_string()).collect();
    render(&header_cells, &mut out);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    render(&rule, &mut out);
    for row in rows {
        render(row, &mut out);
    }
    out
}

/// Summary-table cell: one-decimal value with its error in parentheses,
/// e.g. `3.3 (0.19)`.
pub fn value_with_see(value: f64, see: Option<f64>) -> String {
    match see {
        Some(s) => format!("{value:.1} ({s:.2})"),
        None => format!("{value:.1}"),
    }
}

/// Clamps an equated value into the target score range for presentation;
/// the boolean marks values that were outside it.
pub fn clamp_to_range(value: f64, max_score: u32) -> (f64, bool) {
    let hi = max_score as f64;
    if value < 0.0 {
        (0.0, true)
    } else if value > hi {
        (hi, true)
    } else {
        (value, false)
    }
}

/// Writes a text artifact, creating parent directories as needed.
pub fn write_artifact(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, content).with_context(|| format!("cannot write '{}'", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_echoes_config_in_order() {
        let r = Report::new(
            "fit",
            &[("scale", "a.toml".into()), ("data", "b.csv".into())],
            7,
            &[("a.toml".into(), "00ff".into())],
        );
        let text = r.finish();
        assert!(text.starts_with(&format!("scale-equate {}\n", env!("CARGO_PKG_VERSION"))));
        let scale_pos = text.find("scale = a.toml").unwrap();
        let data_pos = text.find("data = b.csv").unwrap();
        assert!(scale_pos < data_pos);
        assert!(text.contains("seed = 7"));
        assert!(text.contains("a.toml  sha256=00ff"));
    }

    #[test]
    fn table_columns_align() {
        let t = fixed_table(
            &["code", "value"],
            &[
                vec!["A".into(), "1.0".into()],
                vec!["LONGCODE".into(), "2.5".into()],
            ],
        );
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "code      value");
        assert_eq!(lines[1], "--------  -----");
        assert_eq!(lines[2], "A         1.0");
        assert_eq!(lines[3], "LONGCODE  2.5");
    }

    #[test]
    fn value_with_see_matches_the_summary_format() {
        assert_eq!(value_with_see(3.321, Some(0.191)), "3.3 (0.19)");
        assert_eq!(value_with_see(12.06, Some(0.1)), "12.1 (0.10)");
        assert_eq!(value_with_see(4.0, None), "4.0");
    }

    #[test]
    fn clamping_flags_out_of_range_values() {
        assert_eq!(clamp_to_range(-0.4, 8), (0.0, true));
        assert_eq!(clamp_to_range(8.2, 8), (8.0, true));
        assert_eq!(clamp_to_range(3.3, 8), (3.3, false));
    }

    #[test]
    fn digest_is_stable_hex() {
        assert_eq!(
            sha256_bytes(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
