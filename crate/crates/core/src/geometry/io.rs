//! Point file format: an optional `# dim=<d>` header, then one point per line
//! with coordinates separated by single spaces.

use std::fmt::Write as _;
use std::path::Path;

use super::PointCloud;
use crate::error::{Error, Result};

pub fn write_points(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(cloud.coords().len() * 20);
    let _ = writeln!(out, "# dim={}", cloud.dim());
    for p in cloud.iter() {
        for (i, x) in p.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{x}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_points(text: &str) -> Result<PointCloud> {
    let mut dim: Option<usize> = None;
    let mut coords = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if idx != 0 {
                return Err(Error::Parse { line: lineno, msg: "header allowed on the first line only".into() });
            }
            let value = rest
                .strip_prefix("dim=")
                .ok_or_else(|| Error::Parse { line: lineno, msg: format!("unrecognised header `{rest}`") })?;
            dim = Some(
                value.parse().map_err(|_| Error::Parse { line: lineno, msg: format!("bad dimension `{value}`") })?,
            );
            continue;
        }
        let mut count = 0;
        for tok in line.split(' ').filter(|s| !s.is_empty()) {
            let v: f64 =
                tok.parse().map_err(|_| Error::Parse { line: lineno, msg: format!("bad coordinate `{tok}`") })?;
            coords.push(v);
            count += 1;
        }
        match dim {
            None => dim = Some(count),
            Some(d) if d != count => {
                return Err(Error::Parse { line: lineno, msg: format!("expected {d} coordinates, found {count}") })
            }
            _ => {}
        }
    }
    let dim = dim.ok_or_else(|| Error::Parse { line: 0, msg: "empty point file".into() })?;
    PointCloud::new(dim, coords)
}

pub fn read_points(path: &Path) -> Result<PointCloud> {
    parse_points(&std::fs::read_to_string(path)?)
}
