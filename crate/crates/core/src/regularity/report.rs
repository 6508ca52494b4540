use std::fmt;
use std::io::Write;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Main,
    Alternative,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Main => "main",
            Branch::Alternative => "alternative",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub check: &'static str,
    pub center: Vec<f64>,
    pub branch: Branch,
    /// Whether the estimate's hypotheses (containment, measure condition)
    /// hold; a report with `hypothesis == false` is vacuous.
    pub hypothesis: bool,
    pub pass: bool,
    /// Fitted constants such as `K`, `gamma`, `delta_o`.
    pub constants: Vec<(&'static str, f64)>,
    /// Radii and other scale parameters used.
    pub scales: Vec<(&'static str, f64)>,
    /// Per-level values for iterative checks (oscillations).
    pub series: Vec<f64>,
}

impl RegularityReport {
    pub(crate) fn new(check: &'static str, center: Vec<f64>) -> Self {
        Self {
            check,
            center,
            branch: Branch::Main,
            hypothesis: true,
            pass: true,
            constants: Vec::new(),
            scales: Vec::new(),
            series: Vec::new(),
        }
    }

    pub(crate) fn vacuous(check: &'static str, center: Vec<f64>) -> Self {
        Self {
            hypothesis: false,
            ..Self::new(check, center)
        }
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|c| c.0 == name).map(|c| c.1)
    }

    pub fn scale(&self, name: &str) -> Option<f64> {
        self.scales.iter().find(|c| c.0 == name).map(|c| c.1)
    }
}

fn join(pairs: &[(&'static str, f64)]) -> String {
    pairs
        .iter()
        .map(|(k, v)| format!("{k}={v:?}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// One CSV row per report; `comment` becomes a leading `#` line.
pub fn write_reports<W: Write>(reports: &[RegularityReport], mut out: W, comment: Option<&str>) -> Result<()> {
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "check",
        "center",
        "branch",
        "hypothesis",
        "pass",
        "constants",
        "scales",
        "series",
    ])?;
    for r in reports {
        let center = r.center.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(";");
        let series = r.series.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(";");
        w.write_record([
            r.check.to_string(),
            center,
            r.branch.to_string(),
            r.hypothesis.to_string(),
            r.pass.to_string(),
            join(&r.constants),
            join(&r.scales),
            series,
        ])?;
    }
    w.flush()?;
    Ok(())
}
