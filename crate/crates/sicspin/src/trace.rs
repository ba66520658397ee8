//! Measured or synthetic data series and the CSV trace format.
//!
//! The CSV contract: optional `#`-prefixed comment lines first (a
//! `# units: <x-unit>,<y-unit>` comment declares units), then a header line
//! `x,y` or `x,y,yerr`, then one record per line with `.` as the decimal
//! point and `,` as the separator. x must be strictly increasing and y-errors
//! strictly positive. Emitted files parse back to bit-identical traces.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace must contain at least one point")]
    Empty,
    #[error("x and y lengths differ ({x_len} vs {y_len})")]
    LengthMismatch { x_len: usize, y_len: usize },
    #[error("line {line}: x values must be strictly increasing")]
    NonIncreasingX { line: usize },
    #[error("line {line}: y-errors must be positive and finite (weights undefined otherwise)")]
    BadYErr { line: usize },
    #[error("line {line}: expected {expected} comma-separated fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: could not parse `{cell}` as a number")]
    BadNumber { line: usize, cell: String },
    #[error("line {line}: header must be `x,y` or `x,y,yerr`, found `{found}`")]
    BadHeader { line: usize, found: String },
    #[error("missing header line")]
    MissingHeader,
    #[error("line {line}: non-finite value")]
    NonFinite { line: usize },
}

/// An (x, y, optional y-error) data series with unit tags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub y_err: Option<Vec<f64>>,
    /// Unit of the x column, e.g. "ns", "us", "MHz", "mW". None = unitless.
    pub x_unit: Option<String>,
    /// Unit of the y column. None = unitless.
    pub y_unit: Option<String>,
}

impl Trace {
    pub fn new(x: Vec<f64>, y: Vec<f64>, y_err: Option<Vec<f64>>) -> Result<Self, TraceError> {
        let trace = Trace {
            x,
            y,
            y_err,
            x_unit: None,
            y_unit: None,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn with_units(
        mut self,
        x_unit: impl Into<String>,
        y_unit: impl Into<String>,
    ) -> Self {
        self.x_unit = Some(x_unit.into());
        self.y_unit = Some(y_unit.into());
        self
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn validate(&self) -> Result<(), TraceError> {
        if self.x.is_empty() {
            return Err(TraceError::Empty);
        }
        if self.x.len() != self.y.len() {
            return Err(TraceError::LengthMismatch {
                x_len: self.x.len(),
                y_len: self.y.len(),
            });
        }
        if let Some(errs) = &self.y_err {
            if errs.len() != self.y.len() {
                return Err(TraceError::LengthMismatch {
                    x_len: self.x.len(),
                    y_len: errs.len(),
                });
            }
            if let Some(i) = errs.iter().position(|&e| !(e.is_finite() && e > 0.0)) {
                return Err(TraceError::BadYErr { line: i + 1 });
            }
        }
        for i in 0..self.x.len() {
            if !self.x[i].is_finite() || !self.y[i].is_finite() {
                return Err(TraceError::NonFinite { line: i + 1 });
            }
            if i > 0 && self.x[i] <= self.x[i - 1] {
                return Err(TraceError::NonIncreasingX { line: i + 1 });
            }
        }
        Ok(())
    }
}

/// Parse the CSV trace format. Error line numbers are 1-based over the whole
/// input, comments and header included.
pub fn parse_trace_csv(text: &str) -> Result<Trace, TraceError> {
    let mut x_unit = None;
    let mut y_unit = None;
    let mut lines = text.lines().enumerate().peekable();

    // Leading comment lines; `# units:` declares column units.
    while let Some((_, raw)) = lines.peek() {
        let trimmed = raw.trim();
        if !trimmed.starts_with('#') && !trimmed.is_empty() {
            break;
        }
        if let Some(rest) = trimmed.strip_prefix("# units:") {
            let mut parts = rest.splitn(2, ',');
            x_unit = parts.next().map(|s| s.trim().to_owned()).filter(|s| !s.is_empty());
            y_unit = parts.next().map(|s| s.trim().to_owned()).filter(|s| !s.is_empty());
        }
        lines.next();
    }

    let (header_idx, header) = lines.next().ok_or(TraceError::MissingHeader)?;
    let has_err = match header.trim() {
        "x,y" => false,
        "x,y,yerr" => true,
        other => {
            return Err(TraceError::BadHeader {
                line: header_idx + 1,
                found: other.to_owned(),
            })
        }
    };
    let expected = if has_err { 3 } else { 2 };

    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut y_err: Vec<f64> = Vec::new();

    for (idx, raw) in lines {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let cells: Vec<&str> = trimmed.split(',').collect();
        if cells.len() != expected {
            return Err(TraceError::RaggedRow {
                line,
                expected,
                found: cells.len(),
            });
        }
        let mut values = [0.0f64; 3];
        for (k, cell) in cells.iter().enumerate() {
            values[k] = cell.trim().parse::<f64>().map_err(|_| TraceError::BadNumber {
                line,
                cell: (*cell).to_owned(),
            })?;
            if !values[k].is_finite() {
                return Err(TraceError::NonFinite { line });
            }
        }
        if let Some(&last) = x.last() {
            if values[0] <= last {
                return Err(TraceError::NonIncreasingX { line });
            }
        }
        if has_err && values[2] <= 0.0 {
            return Err(TraceError::BadYErr { line });
        }
        x.push(values[0]);
        y.push(values[1]);
        if has_err {
            y_err.push(values[2]);
        }
    }

    if x.is_empty() {
        return Err(TraceError::Empty);
    }
    let mut trace = Trace::new(x, y, has_err.then_some(y_err))?;
    trace.x_unit = x_unit;
    trace.y_unit = y_unit;
    Ok(trace)
}

/// Emit the CSV trace format. Numbers use the shortest representation that
/// parses back to the identical f64, so emit/parse round-trips are lossless.
pub fn trace_to_csv(trace: &Trace) -> String {
    let mut out = String::new();
    if trace.x_unit.is_some() || trace.y_unit.is_some() {
        out.push_str(&format!(
            "# units: {},{}\n",
            trace.x_unit.as_deref().unwrap_or(""),
            trace.y_unit.as_deref().unwrap_or("")
        ));
    }
    match &trace.y_err {
        Some(errs) => {
            out.push_str("x,y,yerr\n");
            for ((x, y), e) in trace.x.iter().zip(&trace.y).zip(errs) {
                out.push_str(&format!("{x},{y},{e}\n"));
            }
        }
        None => {
            out.push_str("x,y\n");
            for (x, y) in trace.x.iter().zip(&trace.y) {
                out.push_str(&format!("{x},{y}\n"));
            }
        }
    }
    out
}
