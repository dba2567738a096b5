//! Measured-versus-model bound reports and sweep tables.

use std::fmt;

use crate::lacunary::LacunaryParams;

/// One measured quantity against a model bound with unit constant.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub name: String,
    pub params: Option<LacunaryParams>,
    pub t: Option<f64>,
    pub lhs: f64,
    pub rhs_model: f64,
    /// `lhs / rhs_model`, or 0 when `lhs` is 0.
    pub implied_constant: f64,
    pub pass: bool,
    /// Reported only; never counted as a failure.
    pub informational: bool,
    pub note: String,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, params: Option<LacunaryParams>, t: Option<f64>, lhs: f64, rhs_model: f64) -> Self {
        let implied_constant = if lhs == 0.0 { 0.0 } else { lhs / rhs_model };
        BoundReport {
            name: name.into(),
            params,
            t,
            lhs,
            rhs_model,
            implied_constant,
            pass: implied_constant.is_finite(),
            informational: false,
            note: String::new(),
        }
    }

    /// Passes when the implied constant is finite and at most `limit`.
    pub fn at_most(mut self, limit: f64) -> Self {
        self.pass = self.implied_constant.is_finite() && self.implied_constant <= limit;
        self
    }

    /// Passes when the implied constant is finite and at least `floor`.
    pub fn at_least(mut self, floor: f64) -> Self {
        self.pass = self.implied_constant.is_finite() && self.implied_constant >= floor;
        self
    }

    pub fn with_pass(mut self, pass: bool) -> Self {
        self.pass = pass;
        self
    }

    pub fn informational(mut self) -> Self {
        self.informational = true;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// Failed and not informational.
    pub fn is_failure(&self) -> bool {
        !self.pass && !self.informational
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match (self.pass, self.informational) {
            (_, true) => "INFO",
            (true, false) => "PASS",
            (false, false) => "FAIL",
        };
        write!(f, "{verdict} {}", self.name)?;
        if let Some(p) = &self.params {
            write!(f, " r={} beta={} K={}", p.r, p.beta, p.k)?;
        }
        if let Some(t) = self.t {
            write!(f, " t={t:e}")?;
        }
        write!(
            f,
            " lhs={:e} model={:e} C={:e}",
            self.lhs, self.rhs_model, self.implied_constant
        )?;
        if !self.note.is_empty() {
            write!(f, " ({})", self.note)?;
        }
        Ok(())
    }
}

/// A table of sweep rows plus the reports they produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepResult {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub reports: Vec<BoundReport>,
    /// Least-squares log-log slope, where the sweep defines one.
    pub slope: Option<f64>,
}

impl SweepResult {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        SweepResult {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn failures(&self) -> impl Iterator<Item = &BoundReport> {
        self.reports.iter().filter(|r| r.is_failure())
    }

    /// Orders rows by the leading columns (r, then t when present).
    pub fn sort_rows(&mut self) {
        self.rows.sort_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
    }
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// usable points.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// `max / min` of the positive finite values, the spread used for uniform
/// boundedness checks.
pub fn spread(values: &[f64]) -> f64 {
    let pos: Vec<f64> = values.iter().cloned().filter(|v| *v > 0.0 && v.is_finite()).collect();
    if pos.is_empty() {
        return 1.0;
    }
    let max = pos.iter().cloned().fold(f64::MIN, f64::max);
    let min = pos.iter().cloned().fold(f64::MAX, f64::min);
    max / min
}
