use crate::error::{Error, Result};

/// Sampled densities: per-state site fractions, or per-site hawk and dove
/// counts for the Prisoner's Dilemma.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTrace {
    columns: Vec<String>,
    times: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl DensityTrace {
    /// Columns `u_0 .. u_{states-1}`.
    pub fn fractions(states: usize) -> Self {
        Self::with_columns((0..states).map(|i| format!("u_{i}")).collect())
    }

    pub fn counts() -> Self {
        Self::with_columns(vec!["hawks_per_site".into(), "doves_per_site".into()])
    }

    pub fn with_columns(columns: Vec<String>) -> Self {
        Self {
            columns,
            times: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, time: f64, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        assert!(
            self.times.last().is_none_or(|t| *t <= time),
            "times must not decrease"
        );
        self.times.push(time);
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &[f64])> {
        self.times
            .last()
            .map(|t| (*t, self.rows.last().unwrap().as_slice()))
    }

    /// Column `i` over time.
    pub fn series(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[i]).collect()
    }

    /// Header `t,<columns>`, shortest round-trip decimals, LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.rows) {
            out.push_str(&t.to_string());
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty trace file".into()))?;
        let mut cols = header.split(',');
        if cols.next() != Some("t") {
            return Err(Error::Config("trace header must start with `t`".into()));
        }
        let mut trace = Self::with_columns(cols.map(str::to_string).collect());
        for (n, line) in lines.enumerate() {
            let values: Vec<f64> = line
                .split(',')
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("trace line {}: {e}", n + 2)))?;
            if values.len() != trace.columns.len() + 1 {
                return Err(Error::Config(format!("trace line {}: wrong width", n + 2)));
            }
            trace.times.push(values[0]);
            trace.rows.push(values[1..].to_vec());
        }
        Ok(trace)
    }
}

/// Which types stayed at or above `threshold` through the final window.
#[derive(Debug, Clone, PartialEq)]
pub struct CoexistenceVerdict {
    pub persists: Vec<bool>,
    /// Lowest density of each type inside the window.
    pub minimum: Vec<f64>,
    pub threshold: f64,
    pub window: (f64, f64),
}

impl CoexistenceVerdict {
    /// Whether every type in `types` persisted.
    pub fn all_persist(&self, types: &[usize]) -> bool {
        types.iter().all(|&i| self.persists[i])
    }
}

/// A type persists iff its density is at least `threshold` at every sample
/// in `[T - window, T]`, where `T` is the last sample time.
pub fn detect_coexistence(
    trace: &DensityTrace,
    threshold: f64,
    window: f64,
) -> Result<CoexistenceVerdict> {
    let (end, _) = trace
        .last()
        .ok_or_else(|| Error::Config("cannot judge an empty trace".into()))?;
    let span = end - trace.times[0];
    if !(window >= 0.0 && window <= span + 1e-9 * span.abs().max(1.0)) {
        return Err(Error::Config(format!(
            "window {window} must lie within the trace span {span}"
        )));
    }
    let start = end - window;
    let k = trace.columns.len();
    let mut minimum = vec![f64::INFINITY; k];
    for (t, row) in trace.times.iter().zip(&trace.rows) {
        if *t >= start - 1e-9 * window.max(1.0) {
            for (m, v) in minimum.iter_mut().zip(row) {
                *m = m.min(*v);
            }
        }
    }
    Ok(CoexistenceVerdict {
        persists: minimum.iter().map(|m| *m >= threshold).collect(),
        minimum,
        threshold,
        window: (start, end),
    })
}
