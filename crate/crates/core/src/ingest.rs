//! Loading, validation, and reshaping of response data and scale definitions.
//!
//! Response files are UTF-8 comma-delimited text with a header row: one column
//! per item code plus an optional `weight` column. Cells are `1`/`yes`
//! (affirmed), `0`/`no` (denied), or `NA`/empty (missing). Scale definitions
//! are TOML files listing the ordered items with their flags.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// One dichotomous response cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Response {
    Affirmed,
    Denied,
    Missing,
}

/// How rows with missing cells enter scoring and fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    /// Drop rows containing any missing cell; exclusions are counted and reported.
    #[default]
    ExcludeRow,
    /// Treat missing cells as denials. Rows with every cell missing are still excluded.
    AsDenied,
}

impl fmt::Display for MissingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MissingPolicy::ExcludeRow => write!(f, "exclude"),
            MissingPolicy::AsDenied => write!(f, "as-denied"),
        }
    }
}

/// Definition of a single scale item.
#[derive(Debug, Clone, Deserialize)]
pub struct ItemDef {
    pub code: String,
    #[serde(default)]
    pub prompt: Option<String>,
    #[serde(default)]
    pub children_referenced: bool,
    #[serde(default)]
    pub unique_a_priori: bool,
}

/// Ordered item metadata defining a test form.
#[derive(Debug, Clone, Deserialize)]
pub struct ScaleDefinition {
    pub scale_id: String,
    pub items: Vec<ItemDef>,
}

impl ScaleDefinition {
    /// Parses a scale definition from TOML text and validates its invariants.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let def: ScaleDefinition =
            toml::from_str(text).map_err(|e| Error::Schema(format!("scale definition: {e}")))?;
        def.validate()?;
        Ok(def)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.items.len() < 2 {
            return Err(Error::Schema(format!(
                "scale '{}' defines {} item(s); at least 2 are required",
                self.scale_id,
                self.items.len()
            )));
        }
        let mut seen = HashSet::new();
        for item in &self.items {
            if item.code.is_empty() || item.code.chars().any(|c| c.is_whitespace() || c == ',') {
                return Err(Error::Schema(format!(
                    "item code '{}' must be non-empty and free of whitespace and commas",
                    item.code
                )));
            }
            if !seen.insert(item.code.as_str()) {
                return Err(Error::Schema(format!(
                    "duplicate item code '{}' in scale '{}'",
                    item.code, self.scale_id
                )));
            }
        }
        Ok(())
    }

    pub fn codes(&self) -> Vec<String> {
        self.items.iter().map(|i| i.code.clone()).collect()
    }

    /// Codes of items not referenced to children; these form the Adult scale.
    pub fn household_codes(&self) -> Vec<String> {
        self.items
            .iter()
            .filter(|i| !i.children_referenced)
            .map(|i| i.code.clone())
            .collect()
    }

    pub fn children_codes(&self) -> Vec<String> {
        self.items
            .iter()
            .filter(|i| i.children_referenced)
            .map(|i| i.code.clone())
            .collect()
    }

    pub fn unique_a_priori_codes(&self) -> Vec<String> {
        self.items
            .iter()
            .filter(|i| i.unique_a_priori)
            .map(|i| i.code.clone())
            .collect()
    }
}

/// Respondents x items dichotomous answers with sampling weights.
///
/// Immutable after construction; row order is the file order.
#[derive(Debug, Clone)]
pub struct ResponseMatrix {
    scale_id: String,
    items: Vec<String>,
    cells: Vec<Response>,
    weights: Vec<f64>,
}

/// Rows dropped by a missing-data policy, with the weight they carried.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExclusionStats {
    pub rows: usize,
    pub weight: f64,
}

impl ResponseMatrix {
    /// Builds a matrix from row-major cells, validating weights.
    pub fn new(
        scale_id: impl Into<String>,
        items: Vec<String>,
        cells: Vec<Response>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let n = weights.len();
        if items.is_empty() {
            return Err(Error::Schema("matrix has no items".into()));
        }
        if cells.len() != n * items.len() {
            return Err(Error::Schema(format!(
                "cell count {} does not match {} rows x {} items",
                cells.len(),
                n,
                items.len()
            )));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Parse {
                    row: i + 1,
                    message: format!("weight {w} is not a finite non-negative number"),
                });
            }
        }
        if n > 0 && weights.iter().sum::<f64>() == 0.0 {
            return Err(Error::DegenerateInput(
                "all sampling weights are zero".into(),
            ));
        }
        Ok(Self {
            scale_id: scale_id.into(),
            items,
            cells,
            weights,
        })
    }

    pub fn scale_id(&self) -> &str {
        &self.scale_id
    }

    pub fn n_respondents(&self) -> usize {
        self.weights.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn item_codes(&self) -> &[String] {
        &self.items
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn cell(&self, row: usize, col: usize) -> Response {
        self.cells[row * self.items.len() + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[Response] {
        let j = self.items.len();
        &self.cells[row * j..(row + 1) * j]
    }

    pub fn has_missing(&self) -> bool {
        self.cells.contains(&Response::Missing)
    }

    /// Keeps only the selected rows (used by resampling and grouping).
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let j = self.items.len();
        let mut cells = Vec::with_capacity(rows.len() * j);
        let mut weights = Vec::with_capacity(rows.len());
        for &r in rows {
            cells.extend_from_slice(self.row(r));
            weights.push(self.weights[r]);
        }
        Self {
            scale_id: self.scale_id.clone(),
            items: self.items.clone(),
            cells,
            weights,
        }
    }

    /// Column-filters the matrix to `keep`, preserving weights and row order.
    ///
    /// Dropping the children-referenced columns of a Children-form matrix
    /// yields the Adult form under the single-group design.
    pub fn restrict_to_items(&self, keep: &[String]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::Schema("item subset to keep is empty".into()));
        }
        let mut col_for = Vec::with_capacity(keep.len());
        for code in keep {
            match self.items.iter().position(|c| c == code) {
                Some(idx) => col_for.push(idx),
                None => {
                    return Err(Error::Schema(format!(
                        "unknown item code '{code}' in restriction"
                    )))
                }
            }
        }
        let n = self.n_respondents();
        let mut cells = Vec::with_capacity(n * keep.len());
        for i in 0..n {
            let row = self.row(i);
            for &c in &col_for {
                cells.push(row[c]);
            }
        }
        Ok(Self {
            scale_id: self.scale_id.clone(),
            items: keep.to_vec(),
            cells,
            weights: self.weights.clone(),
        })
    }

    /// Applies a missing-data policy, returning a complete matrix and the exclusions.
    ///
    /// Under `ExcludeRow` any row with a missing cell is dropped. Under
    /// `AsDenied` missing cells become denials, except rows that are missing
    /// everywhere, which are always dropped.
    pub fn complete_cases(&self, policy: MissingPolicy) -> (Self, ExclusionStats) {
        let j = self.items.len();
        let mut cells = Vec::new();
        let mut weights = Vec::new();
        let mut excluded = ExclusionStats::default();
        for i in 0..self.n_respondents() {
            let row = self.row(i);
            let n_missing = row.iter().filter(|&&c| c == Response::Missing).count();
            let drop = match policy {
                MissingPolicy::ExcludeRow => n_missing > 0,
                MissingPolicy::AsDenied => n_missing == j,
            };
            if drop {
                excluded.rows += 1;
                excluded.weight += self.weights[i];
                continue;
            }
            for &c in row {
                cells.push(if c == Response::Missing {
                    Response::Denied
                } else {
                    c
                });
            }
            weights.push(self.weights[i]);
        }
        (
            Self {
                scale_id: self.scale_id.clone(),
                items: self.items.clone(),
                cells,
                weights,
            },
            excluded,
        )
    }

    /// Counts affirmed cells per respondent under the given missing-data policy.
    pub fn score(&self, policy: MissingPolicy) -> RawScoreVector {
        let (complete, excluded) = self.complete_cases(policy);
        let scores = (0..complete.n_respondents())
            .map(|i| {
                complete
                    .row(i)
                    .iter()
                    .filter(|&&c| c == Response::Affirmed)
                    .count() as u32
            })
            .collect();
        RawScoreVector {
            scores,
            weights: complete.weights,
            max_score: self.items.len() as u32,
            excluded,
        }
    }

    /// Serializes to the same delimited format `load_responses` reads.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.items.join(","));
        out.push_str(",weight\n");
        for i in 0..self.n_respondents() {
            for &c in self.row(i) {
                out.push_str(match c {
                    Response::Affirmed => "1,",
                    Response::Denied => "0,",
                    Response::Missing => "NA,",
                });
            }
            out.push_str(&format!("{}\n", self.weights[i]));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// Per-respondent raw scores with their weights, after any policy exclusions.
#[derive(Debug, Clone)]
pub struct RawScoreVector {
    pub scores: Vec<u32>,
    pub weights: Vec<f64>,
    pub max_score: u32,
    pub excluded: ExclusionStats,
}

impl RawScoreVector {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Reads a response file against a scale definition.
///
/// Every item code must appear exactly once in the header; a `weight` column
/// is optional and defaults to 1.0 for every row. Any other column is a
/// schema error.
pub fn load_responses(path: &Path, scale: &ScaleDefinition) -> Result<ResponseMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse_responses(&text, scale)
}

/// CSV-text version of [`load_responses`].
pub fn parse_responses(text: &str, scale: &ScaleDefinition) -> Result<ResponseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable header row: {e}")))?
        .iter()
        .map(|h| h.to_string())
        .collect();
    if headers.is_empty() {
        return Err(Error::Schema("empty header row".into()));
    }
    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::Schema(format!("duplicate header column '{h}'")));
        }
    }

    let codes = scale.codes();
    let mut weight_col = None;
    for (idx, h) in headers.iter().enumerate() {
        if h == "weight" {
            weight_col = Some(idx);
        } else if !codes.contains(h) {
            return Err(Error::Schema(format!(
                "unknown item column '{h}' (not in scale '{}')",
                scale.scale_id
            )));
        }
    }
    let mut item_cols = Vec::with_capacity(codes.len());
    for code in &codes {
        match headers.iter().position(|h| h == code) {
            Some(idx) => item_cols.push(idx),
            None => {
                return Err(Error::Schema(format!(
                    "response file is missing a column for item '{code}'"
                )))
            }
        }
    }

    let mut cells = Vec::new();
    let mut weights = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let row_no = row_idx + 1;
        let record = record.map_err(|e| Error::Parse {
            row: row_no,
            message: format!("malformed record: {e}"),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row: row_no,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for &col in &item_cols {
            cells.push(parse_cell(record.get(col).unwrap_or(""), row_no)?);
        }
        let w = match weight_col {
            Some(col) => {
                let raw = record.get(col).unwrap_or("").trim();
                raw.parse::<f64>().map_err(|_| Error::Parse {
                    row: row_no,
                    message: format!("non-numeric weight '{raw}'"),
                })?
            }
            None => 1.0,
        };
        weights.push(w);
    }
    if weights.is_empty() {
        return Err(Error::Schema("response file contains no data rows".into()));
    }

    ResponseMatrix::new(scale.scale_id.clone(), codes, cells, weights)
}

fn parse_cell(raw: &str, row: usize) -> Result<Response> {
    let v = raw.trim();
    if v.is_empty() || v.eq_ignore_ascii_case("na") {
        return Ok(Response::Missing);
    }
    if v == "1" || v.eq_ignore_ascii_case("yes") {
        return Ok(Response::Affirmed);
    }
    if v == "0" || v.eq_ignore_ascii_case("no") {
        return Ok(Response::Denied);
    }
    Err(Error::Parse {
        row,
        message: format!("unrecognized response value '{v}'"),
    })
}
