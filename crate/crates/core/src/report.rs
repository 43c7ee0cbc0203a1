//! Tabular experiment output: a result table, pass/fail checks and long-format
//! plot data, written as CSV with `#` metadata lines.

use std::fmt::Write as _;

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => fmt_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => quote(s),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            Cell::Text(_) => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// 17 significant digits, so every f64 survives a text round trip.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub series: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: String,
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub checks: Vec<Check>,
    pub plot: Vec<PlotPoint>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, columns: &[&str]) -> Self {
        Self {
            experiment: experiment.to_string(),
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            checks: Vec::new(),
            plot: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.to_string(), passed, detail: detail.into() });
    }

    pub fn point(&mut self, series: &str, x: f64, y: f64) {
        self.plot.push(PlotPoint { series: series.to_string(), x, y });
    }

    /// Appends the rows, checks and plot points of a report with the same
    /// columns; metadata keys already present are kept.
    pub fn absorb(&mut self, other: ExperimentReport) {
        assert_eq!(self.columns, other.columns, "absorbed report must share the header");
        for (k, v) in other.metadata {
            if !self.metadata.iter().any(|(key, _)| *key == k) {
                self.metadata.push((k, v));
            }
        }
        self.rows.extend(other.rows);
        self.checks.extend(other.checks);
        self.plot.extend(other.plot);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Numeric column by name.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        self.rows.iter().map(|r| r[k].as_f64()).collect()
    }

    fn header(&self, s: &mut String, config_hash: &str) {
        writeln!(s, "# experiment={}", self.experiment).unwrap();
        writeln!(s, "# library_version={LIBRARY_VERSION}").unwrap();
        writeln!(s, "# config_hash={config_hash}").unwrap();
        for (k, v) in &self.metadata {
            writeln!(s, "# {k}={v}").unwrap();
        }
        for c in &self.checks {
            let verdict = if c.passed { "pass" } else { "fail" };
            writeln!(s, "# check {}={verdict} ({})", c.name, c.detail).unwrap();
        }
    }

    /// The result table; every row carries the config hash.
    pub fn to_csv(&self, config_hash: &str) -> String {
        let mut s = String::new();
        self.header(&mut s, config_hash);
        s.push_str("config_hash");
        for c in &self.columns {
            s.push(',');
            s.push_str(&quote(c));
        }
        s.push('\n');
        for row in &self.rows {
            s.push_str(config_hash);
            for cell in row {
                s.push(',');
                s.push_str(&cell.render());
            }
            s.push('\n');
        }
        s
    }

    /// Long-format plot data: experiment, series, x, y.
    pub fn plot_csv(&self, config_hash: &str) -> String {
        let mut s = String::new();
        self.header(&mut s, config_hash);
        s.push_str("config_hash,experiment,series,x,y\n");
        for p in &self.plot {
            writeln!(s, "{config_hash},{},{},{},{}", quote(&self.experiment), quote(&p.series), fmt_float(p.x), fmt_float(p.y))
                .unwrap();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut r = ExperimentReport::new("demo", &["R", "label", "n"]);
        r.meta("alpha", 1.5);
        r.push_row(vec![0.1.into(), "a,b".into(), 3usize.into()]);
        r.check("decay", true, "ok");
        r.point("err", 1.0, 2.0);
        let csv = r.to_csv("abc123");
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# experiment=demo");
        assert!(lines.contains(&"# alpha=1.5"));
        assert!(lines.contains(&"# check decay=pass (ok)"));
        assert!(lines.contains(&"config_hash,R,label,n"));
        assert_eq!(*lines.last().unwrap(), "abc123,1.0000000000000001e-1,\"a,b\",3");
        assert!(r.plot_csv("abc123").ends_with("abc123,demo,err,1.0000000000000000e0,2.0000000000000000e0\n"));
        assert_eq!(r.column("R").unwrap(), vec![0.1]);
        assert!(r.column("label").is_none());
        assert!(r.passed());
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.2250738585072014e-308, 5e-324] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
    }
}
