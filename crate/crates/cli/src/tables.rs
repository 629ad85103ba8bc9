//! CSV tables. Every table has a header row and a fixed column order.

use symtorus_core::geom::{bonnesen_check, Contour, LevelSetGeometry};
use symtorus_core::rearrange::{BumpStructure, DistributionSample};

use crate::error::CliError;
use crate::io::{csv_err, finish_csv};

pub const DISTRIBUTION_HEADER: [&str; 5] = ["column", "t", "mu", "mu_reg", "mu_sing"];
pub const BUMP_HEADER: [&str; 6] = ["column", "t", "y1", "y2", "b", "single_bump"];
pub const SPHERICITY_HEADER: [&str; 8] = ["eta", "area", "perimeter", "rho_in", "rho_out", "rho_vol", "delta_rho", "bonnesen_slack"];
pub const CONTOUR_HEADER: [&str; 4] = ["contour", "vertex", "x", "y"];

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Multi-indices are joined with `:`.
fn column(c: &[usize]) -> String {
    c.iter().map(usize::to_string).collect::<Vec<_>>().join(":")
}

fn table<const K: usize>(header: [&str; K], rows: impl Iterator<Item = [String; K]>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    finish_csv(w)
}

pub fn distribution_csv(samples: &[DistributionSample]) -> Result<String, CliError> {
    table(
        DISTRIBUTION_HEADER,
        samples.iter().map(|s| [column(&s.column), num(s.level), num(s.mu), num(s.mu_reg), num(s.mu_sing)]),
    )
}

pub fn bump_csv(bumps: &[BumpStructure]) -> Result<String, CliError> {
    table(
        BUMP_HEADER,
        bumps.iter().map(|b| {
            [column(&b.column), num(b.level), opt(b.y1), opt(b.y2), opt(b.b), u8::from(b.is_single_bump).to_string()]
        }),
    )
}

/// `bonnesen_slack` is empty for sets that are not a single contained component.
pub fn sphericity_csv(rows: &[LevelSetGeometry]) -> Result<String, CliError> {
    table(
        SPHERICITY_HEADER,
        rows.iter().map(|g| {
            [
                num(g.level),
                num(g.area),
                num(g.perimeter),
                num(g.rho_in),
                num(g.rho_out),
                num(g.rho_vol),
                num(g.rho_out - g.rho_in),
                opt(bonnesen_check(g).ok().map(|b| b.slack)),
            ]
        }),
    )
}

pub fn contour_csv(loops: &[Contour]) -> Result<String, CliError> {
    table(
        CONTOUR_HEADER,
        loops
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.points.iter().enumerate().map(move |(k, p)| [i.to_string(), k.to_string(), num(p[0]), num(p[1])])),
    )
}
