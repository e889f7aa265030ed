//! Solution CSV format: header `t,psi_t,weighted_y,y`, one row per grid
//! node, 17 significant digits (f64 round-trip exact). The raw-y field is
//! left blank at t = a when ρ < 1, where y itself is singular or
//! undetermined.

use std::path::Path;

use frackit::funcspace::{from_weighted, Grid, Order, WeightedFunction};
use frackit::Error;

pub const HEADER: &str = "t,psi_t,weighted_y,y";

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders a weighted function to CSV text.
pub fn render(f: &WeightedFunction) -> String {
    let grid = f.grid();
    let raw = from_weighted(f);
    let mut out = String::with_capacity(80 * (grid.n() + 2));
    out.push_str(HEADER);
    out.push('\n');
    for j in 0..=grid.n() {
        out.push_str(&fmt(grid.nodes()[j]));
        out.push(',');
        out.push_str(&fmt(grid.psi_nodes()[j]));
        out.push(',');
        out.push_str(&fmt(f.w()[j]));
        out.push(',');
        if raw[j].is_finite() {
            out.push_str(&fmt(raw[j]));
        }
        out.push('\n');
    }
    out
}

/// Reads a candidate CSV and checks its t-column against the problem grid
/// (exact equality: the 17-digit format round-trips f64 losslessly).
pub fn read_candidate(
    path: &Path,
    grid: &Grid,
    order: Order,
) -> Result<WeightedFunction, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == HEADER => {}
        other => {
            return Err(Error::InvalidArgument(format!(
                "candidate CSV header must be `{HEADER}`, got {other:?}"
            )))
        }
    }
    let mut w = Vec::with_capacity(grid.n() + 1);
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::InvalidArgument(format!(
                "candidate CSV row {}: expected 4 fields, got {}",
                row + 2,
                fields.len()
            )));
        }
        let t: f64 = fields[0].parse().map_err(|_| {
            Error::InvalidArgument(format!("candidate CSV row {}: bad t field", row + 2))
        })?;
        let weighted: f64 = fields[2].parse().map_err(|_| {
            Error::InvalidArgument(format!("candidate CSV row {}: bad weighted_y field", row + 2))
        })?;
        if row > grid.n() {
            return Err(Error::GridMismatch(format!(
                "candidate CSV has more rows than the problem grid ({} nodes)",
                grid.n() + 1
            )));
        }
        if t != grid.nodes()[row] {
            return Err(Error::GridMismatch(format!(
                "candidate CSV row {}: t = {t:e} does not match grid node {:e}",
                row + 2,
                grid.nodes()[row]
            )));
        }
        w.push(weighted);
    }
    if w.len() != grid.n() + 1 {
        return Err(Error::GridMismatch(format!(
            "candidate CSV has {} data rows, problem grid has {} nodes",
            w.len(),
            grid.n() + 1
        )));
    }
    WeightedFunction::from_weighted_samples(grid.clone(), order, w)
}
