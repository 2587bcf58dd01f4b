//! Result records of benchmark runs and their CSV and JSON forms.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column order of the CSV output.
pub const CSV_HEADER: &str = "mode,k,eps,eta,level,ndof_u,ndof_p,err_grad_u,err_p,err_total,div_norm,beta,seconds";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("unknown report format `{0}` (expected csv or json)")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(ReportError::UnknownFormat(s.to_string())),
        }
    }
}

/// One sweep point. Quantities that were not computed, or could not be because the
/// solve failed, are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub mode: String,
    pub k: usize,
    /// Perturbation of the built-in mesh; `None` for a mesh read from a file.
    pub eps: Option<f64>,
    /// Constraint policy label: `critical`, `noncritical` or the threshold value.
    pub eta: String,
    /// Number of red refinements of the initial mesh.
    pub level: usize,
    pub ndof_u: usize,
    /// Pressure dofs left after the independent constraint rows.
    pub ndof_p: usize,
    pub err_grad_u: Option<f64>,
    pub err_p: Option<f64>,
    pub err_total: Option<f64>,
    pub div_norm: Option<f64>,
    pub beta: Option<f64>,
    pub seconds: f64,
    /// Solver or assembly failure of this point.
    pub error: Option<String>,
}

impl RunRecord {
    /// Whether every computed floating field is finite.
    pub fn is_finite(&self) -> bool {
        [self.err_grad_u, self.err_p, self.err_total, self.div_norm, self.beta]
            .iter()
            .flatten()
            .all(|v| v.is_finite())
            && self.seconds.is_finite()
    }

    fn csv_line(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| format!("{x:e}")).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{:.6}",
            self.mode,
            self.k,
            opt(self.eps),
            self.eta,
            self.level,
            self.ndof_u,
            self.ndof_p,
            opt(self.err_grad_u),
            opt(self.err_p),
            opt(self.err_total),
            opt(self.div_norm),
            opt(self.beta),
            self.seconds
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub records: Vec<RunRecord>,
}

impl RunReport {
    /// Sorts by (eps, policy, k, level) so the output does not depend on the order in
    /// which parallel sweep points finished.
    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| {
            let ea = a.eps.unwrap_or(f64::NEG_INFINITY);
            let eb = b.eps.unwrap_or(f64::NEG_INFINITY);
            eb.total_cmp(&ea)
                .then_with(|| a.eta.cmp(&b.eta))
                .then_with(|| a.k.cmp(&b.k))
                .then_with(|| a.level.cmp(&b.level))
        });
    }

    pub fn has_errors(&self) -> bool {
        self.records.iter().any(|r| r.error.is_some())
    }

    /// Records of one (eps, policy) series, in level and degree order.
    pub fn series(&self, eps: Option<f64>, eta: &str) -> Vec<&RunRecord> {
        let mut s: Vec<&RunRecord> = self
            .records
            .iter()
            .filter(|r| r.eta == eta && r.eps.map(f64::to_bits) == eps.map(f64::to_bits))
            .collect();
        s.sort_by_key(|r| (r.k, r.level));
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            s.push_str(&r.csv_line());
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write<W: Write>(&self, mut w: W, format: Format) -> Result<(), ReportError> {
        match format {
            Format::Csv => w.write_all(self.to_csv().as_bytes())?,
            Format::Json => w.write_all(self.to_json()?.as_bytes())?,
        }
        Ok(())
    }

    pub fn emit(&self, path: &Path, format: Format) -> Result<(), ReportError> {
        let file = std::fs::File::create(path)?;
        self.write(std::io::BufWriter::new(file), format)
    }

    /// Reads a JSON report.
    pub fn load<R: Read>(mut r: R) -> Result<Self, ReportError> {
        let mut s = String::new();
        r.read_to_string(&mut s)?;
        Self::from_json(&s)
    }
}

/// Empirical orders `log2(e_l / e_{l+1})` between consecutive halvings of `h`.
pub fn eoc(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
