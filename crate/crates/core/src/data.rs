//! Datasets and the CSV interchange format.
//!
//! The accepted CSV dialect is deliberately strict: UTF-8, comma separated,
//! exactly one header row, no quoting, "." as the decimal mark. Parse errors
//! name the offending file line and column header.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the response column should be modeled downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    Continuous,
    Binary,
}

/// A response vector with its covariate matrix and column labels.
#[derive(Debug, Clone)]
pub struct DataSet {
    pub y: Array1<f64>,
    pub x: Array2<f64>,
    pub names: Vec<String>,
    pub response_name: String,
    pub response_kind: ResponseKind,
}

fn infer_kind(y: &Array1<f64>) -> ResponseKind {
    if y.iter().all(|&v| v == 0.0 || v == 1.0) {
        ResponseKind::Binary
    } else {
        ResponseKind::Continuous
    }
}

impl DataSet {
    /// Build a dataset from parts, inferring the response kind from `y`.
    pub fn new(
        y: Array1<f64>,
        x: Array2<f64>,
        names: Vec<String>,
        response_name: impl Into<String>,
    ) -> Result<Self> {
        let n = y.len();
        let p = x.ncols();
        if x.nrows() != n {
            return Err(Error::invalid(format!(
                "response has {n} rows but covariates have {}",
                x.nrows()
            )));
        }
        if n < 2 {
            return Err(Error::invalid("need at least 2 observations"));
        }
        if p < 1 {
            return Err(Error::invalid("need at least 1 covariate"));
        }
        if names.len() != p {
            return Err(Error::invalid(format!(
                "{p} covariate columns but {} names",
                names.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("duplicate column name `{name}`")));
            }
        }
        if y.iter().any(|v| !v.is_finite()) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite value in dataset"));
        }
        let response_kind = infer_kind(&y);
        Ok(DataSet { y, x, names, response_name: response_name.into(), response_kind })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Index of a covariate by its header label.
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::invalid(format!("unknown variable `{name}`")))
    }

    /// Covariate matrix with column `j` removed.
    pub fn without_column(&self, j: usize) -> Array2<f64> {
        drop_column(&self.x, j)
    }

    /// Parse a dataset from CSV text, taking `response` as the y column and
    /// all remaining columns as covariates in header order.
    pub fn from_csv_str(text: &str, response: &str) -> Result<Self> {
        let mut raw: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
        while raw.last().is_some_and(|l| l.is_empty()) {
            raw.pop();
        }
        if raw.is_empty() {
            return Err(Error::csv("empty file: expected a header row"));
        }
        let header = raw[0];
        if header.is_empty() {
            return Err(Error::csv("empty header row"));
        }
        let columns: Vec<&str> = header.split(',').collect();
        let mut seen = std::collections::HashSet::new();
        for name in &columns {
            if !seen.insert(*name) {
                return Err(Error::csv(format!("duplicate column `{name}` in header")));
            }
        }
        let y_idx = columns
            .iter()
            .position(|c| *c == response)
            .ok_or_else(|| Error::csv(format!("response column `{response}` not found")))?;
        let p = columns.len() - 1;
        if p == 0 {
            return Err(Error::csv("no covariate columns besides the response"));
        }
        let mut y = Vec::new();
        let mut flat = Vec::new();
        for (line_idx, line) in raw.iter().enumerate().skip(1) {
            let row_no = line_idx + 1; // 1-based file line
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != columns.len() {
                return Err(Error::csv(format!(
                    "row {row_no}: expected {} fields, found {}",
                    columns.len(),
                    cells.len()
                )));
            }
            for (c, cell) in cells.iter().enumerate() {
                let value: f64 = cell.parse().map_err(|_| {
                    Error::csv(format!(
                        "row {row_no}, column `{}`: cannot parse `{cell}` as a number",
                        columns[c]
                    ))
                })?;
                if !value.is_finite() {
                    return Err(Error::csv(format!(
                        "row {row_no}, column `{}`: non-finite value `{cell}`",
                        columns[c]
                    )));
                }
                if c == y_idx {
                    y.push(value);
                } else {
                    flat.push(value);
                }
            }
        }
        let n = y.len();
        let x = Array2::from_shape_vec((n, p), flat)
            .map_err(|e| Error::csv(format!("shape error: {e}")))?;
        let names: Vec<String> =
            columns.iter().filter(|c| **c != response).map(|c| c.to_string()).collect();
        DataSet::new(Array1::from_vec(y), x, names, response)
    }

    pub fn from_csv(path: impl AsRef<Path>, response: &str) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), &e))?;
        Self::from_csv_str(&text, response)
    }
}

/// Copy of `x` with column `j` removed.
pub fn drop_column(x: &Array2<f64>, j: usize) -> Array2<f64> {
    let (n, p) = x.dim();
    assert!(j < p, "column index out of range");
    let mut out = Array2::<f64>::zeros((n, p - 1));
    for (dst, src) in (0..p).filter(|&c| c != j).enumerate() {
        out.column_mut(dst).assign(&x.column(src));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "y,x1,x2\n1,0.5,2.0\n0,1.5,-3.0\n1,2.5,0.25\n";

    #[test]
    fn parses_binary_response_and_shapes() {
        let ds = DataSet::from_csv_str(CSV, "y").unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.p(), 2);
        assert_eq!(ds.response_kind, ResponseKind::Binary);
        assert_eq!(ds.names, vec!["x1", "x2"]);
        assert_eq!(ds.x[(2, 1)], 0.25);
        assert_eq!(ds.y[1], 0.0);
    }

    #[test]
    fn response_with_three_levels_is_continuous() {
        let text = "y,x1\n0,1\n1,2\n2,3\n";
        let ds = DataSet::from_csv_str(text, "y").unwrap();
        assert_eq!(ds.response_kind, ResponseKind::Continuous);
    }

    #[test]
    fn nan_cell_error_names_row_and_column() {
        let text = "y,x1,x2\n1,0.5,2.0\n0,NaN,-3.0\n";
        let err = DataSet::from_csv_str(text, "y").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 3"), "{msg}");
        assert!(msg.contains("x1"), "{msg}");
    }

    #[test]
    fn garbage_cell_error_names_row_and_column() {
        let text = "y,x1\n1,ok\n0,2\n";
        let err = DataSet::from_csv_str(text, "y").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2") && msg.contains("x1"), "{msg}");
    }

    #[test]
    fn ragged_row_is_rejected() {
        let text = "y,x1,x2\n1,2\n";
        let err = DataSet::from_csv_str(text, "y").unwrap_err();
        assert!(err.to_string().contains("expected 3 fields"));
    }

    #[test]
    fn missing_response_and_duplicates_are_rejected() {
        assert!(DataSet::from_csv_str(CSV, "nope").is_err());
        let dup = "y,x1,x1\n1,2,3\n0,4,5\n";
        assert!(DataSet::from_csv_str(dup, "y").is_err());
    }

    #[test]
    fn drop_column_removes_the_right_one() {
        let ds = DataSet::from_csv_str(CSV, "y").unwrap();
        let z = ds.without_column(0);
        assert_eq!(z.ncols(), 1);
        assert_eq!(z[(0, 0)], 2.0);
    }
}
