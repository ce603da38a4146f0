//! Plain-text writers: CSV with one `#` header line, Wigner matrices with
//! axis headers, and two-column spectra.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nhssh::phasespace::WignerGrid;

use crate::CliError;

/// Shortest round-trip formatting, so identical runs give identical bytes.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x}")
    }
}

#[derive(Clone, Debug)]
pub struct Column {
    pub name: String,
    pub unit: &'static str,
}

impl Column {
    pub fn new(name: impl Into<String>, unit: &'static str) -> Self {
        Column { name: name.into(), unit }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<Column>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn render(&self) -> String {
        let header: Vec<String> = self.columns.iter().map(|c| format!("{} [{}]", c.name, c.unit)).collect();
        let mut out = format!("# {}\n", header.join(","));
        for row in &self.rows {
            debug_assert_eq!(row.len(), self.columns.len());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// First line names the layout, second line holds the `q` axis, then one row
/// per `p` value led by that value.
pub fn render_wigner(grid: &WignerGrid) -> String {
    let mut out = String::from("# W(q,p) [1]; q = (a+a^dag)/sqrt2, p = (a-a^dag)/(i sqrt2); first row: q axis; first column: p axis\n");
    out.push_str("p\\q");
    for q in &grid.q_axis {
        let _ = write!(out, " {}", num(*q));
    }
    out.push('\n');
    for (p, row) in grid.p_axis.iter().zip(&grid.values) {
        out.push_str(&num(*p));
        for w in row {
            let _ = write!(out, " {}", num(*w));
        }
        out.push('\n');
    }
    out
}

pub fn render_two_column(x_name: &str, x_unit: &str, y_name: &str, y_unit: &str, xs: &[f64], ys: &[f64]) -> String {
    let mut out = format!("# {x_name} [{x_unit}] {y_name} [{y_unit}]\n");
    for (x, y) in xs.iter().zip(ys) {
        let _ = writeln!(out, "{} {}", num(*x), num(*y));
    }
    out
}

pub fn write(dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
