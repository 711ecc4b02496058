//! Plain-text tables for terminal output.

use std::fmt::Write;

use crate::pipeline::StageReport;

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: ToString>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row<S: ToString>(&mut self, cells: impl IntoIterator<Item = S>) {
        self.rows.push(cells.into_iter().map(|s| s.to_string()).collect());
    }

    pub fn render(&self) -> String {
        let cols = self.header.len();
        let mut width = vec![0; cols];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (i, c) in r.iter().enumerate().take(cols) {
                width[i] = width[i].max(c.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(i, c)| format!("{c:<w$}", w = width[i]))
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &self.header);
        let rule: Vec<String> = width.iter().map(|&w| "-".repeat(w)).collect();
        line(&mut out, &rule);
        for r in &self.rows {
            line(&mut out, r);
        }
        out
    }
}

pub fn fmt_f(x: f64) -> String {
    format!("{x:.4}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_else(|| "-".into())
}

/// One row per stage and one indented row per removal reason.
pub fn funnel(stages: &[StageReport]) -> String {
    let mut t = Table::new(["stage", "unit", "in", "out", "removed"]);
    for s in stages {
        t.row([
            s.stage.clone(),
            s.unit.clone(),
            s.input.to_string(),
            s.output.to_string(),
            (s.input - s.output).to_string(),
        ]);
        for (reason, n) in &s.rejected {
            t.row([format!("  {reason}"), String::new(), String::new(), String::new(), n.to_string()]);
        }
    }
    t.render()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligns_columns() {
        let mut t = Table::new(["a", "long"]);
        t.row(["xyz", "1"]);
        assert_eq!(t.render(), "a    long\n---  ----\nxyz  1\n");
    }
}
