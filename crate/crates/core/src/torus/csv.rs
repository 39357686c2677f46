//! Plain-text field exchange: a `# d=<d> N=<N>` header followed by one value
//! per line in row-major order.

use std::fmt::Write as _;
use std::path::Path;

use super::{Field, TorusGrid};
use crate::error::{config_err, Result};

pub fn to_csv_string(field: &Field) -> String {
    let g = field.grid();
    let mut out = String::with_capacity(24 * g.len() + 16);
    writeln!(out, "# d={} N={}", g.dim(), g.n()).unwrap();
    for v in field.values() {
        writeln!(out, "{v:e}").unwrap();
    }
    out
}

pub fn from_csv_str(text: &str) -> Result<Field> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = match lines.next() {
        Some(h) => h,
        None => return config_err("empty field file"),
    };
    let (dim, n) = parse_header(header)?;
    let grid = TorusGrid::new(dim, n)?;
    let mut values = Vec::with_capacity(grid.len());
    for (lineno, line) in lines.enumerate() {
        match line.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(e) => return config_err(format!("line {}: {e}: {line:?}", lineno + 2)),
        }
    }
    Field::new(grid, values)
}

fn parse_header(header: &str) -> Result<(usize, usize)> {
    let body = match header.strip_prefix('#') {
        Some(b) => b,
        None => return config_err(format!("missing '# d=<d> N=<N>' header, got {header:?}")),
    };
    let mut dim = None;
    let mut n = None;
    for tok in body.split_whitespace() {
        if let Some(v) = tok.strip_prefix("d=") {
            dim = v.parse().ok();
        } else if let Some(v) = tok.strip_prefix("N=") {
            n = v.parse().ok();
        }
    }
    match (dim, n) {
        (Some(d), Some(n)) => Ok((d, n)),
        _ => config_err(format!("malformed field header {header:?}")),
    }
}

pub fn read_field(path: &Path) -> Result<Field> {
    from_csv_str(&std::fs::read_to_string(path)?)
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    crate::io::write_atomic(path, to_csv_string(field).as_bytes())
}
