//! Run configuration: a flat TOML file overridden by command-line flags.
//!
//! The length scales `phi`, `xi`, `L` and `ell` are tied by `ell = phi*L/2`
//! and `phi = xi*L^(-d/(d+1))`, so any two of them fix the rest. Giving more
//! than two is allowed as long as they agree; a disagreement is reported with
//! the relation it breaks.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use symtorus_core::energy::ModelParams;
use symtorus_core::Grid;

use crate::error::CliError;

/// Midpoint of the droplet window `(xi~_2, xi_2]` for the quartic well.
pub const XI_MID: f64 = 1.606260828191923;

/// Every key accepted in a config file. All keys are optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dim: Option<usize>,
    pub phi: Option<f64>,
    pub xi: Option<f64>,
    #[serde(rename = "L")]
    pub big_l: Option<f64>,
    pub ell: Option<f64>,
    pub omega: Option<f64>,
    pub omega_fraction: Option<f64>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub tol_g: Option<f64>,
    pub max_iter: Option<usize>,
    pub perturbation: Option<f64>,
    pub output: Option<PathBuf>,
    pub checkpoint_every: Option<usize>,
    pub potential: Option<String>,
    pub cutoff: Option<String>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Keys set in `flags` win over keys set here.
    pub fn overridden_by(self, flags: &RunConfig) -> RunConfig {
        macro_rules! pick {
            ($($f:ident),*) => { RunConfig { $($f: flags.$f.clone().or(self.$f),)* } };
        }
        pick!(
            dim,
            phi,
            xi,
            big_l,
            ell,
            omega,
            omega_fraction,
            n,
            seed,
            tol_g,
            max_iter,
            perturbation,
            output,
            checkpoint_every,
            potential,
            cutoff
        )
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let dim = self.dim.unwrap_or(2);
        let params = resolve_params(self, dim)?;
        let n = self.n.unwrap_or(128);
        let grid = Grid::new(dim, n, params.ell).map_err(|e| CliError::Config(e.to_string()))?;
        let tol_g = self.tol_g.unwrap_or(1e-8);
        if !(tol_g > 0.0 && tol_g < 1.0) {
            return Err(CliError::Config(format!("tol_g = {tol_g} must lie in (0, 1)")));
        }
        let perturbation = self.perturbation.unwrap_or(0.01);
        if !(perturbation.is_finite() && perturbation >= 0.0) {
            return Err(CliError::Config(format!("perturbation = {perturbation} must be finite and non-negative")));
        }
        let potential = self.potential.clone().unwrap_or_else(|| "quartic".into());
        if potential != "quartic" {
            return Err(CliError::Config(format!("unknown potential {potential:?}; supported: \"quartic\"")));
        }
        let cutoff = self.cutoff.clone().unwrap_or_else(|| "quintic".into());
        if cutoff != "quintic" {
            return Err(CliError::Config(format!("unknown cutoff {cutoff:?}; supported: \"quintic\"")));
        }
        Ok(Resolved {
            dim,
            phi: params.phi,
            xi: params.xi,
            big_l: params.big_l,
            ell: params.ell,
            omega: params.omega,
            n,
            spacing: grid.spacing(),
            seed: self.seed.unwrap_or(0),
            tol_g,
            max_iter: self.max_iter.unwrap_or(200_000),
            perturbation,
            output: self.output.clone().unwrap_or_else(|| PathBuf::from("out")),
            checkpoint_every: self.checkpoint_every.unwrap_or(0),
            potential,
            cutoff,
            params,
            grid,
        })
    }
}

/// Largest droplet area of the two-dimensional regime, `xi^3/2`.
pub fn max_droplet_area(xi: f64) -> f64 {
    0.5 * xi.powi(3)
}

fn resolve_params(c: &RunConfig, dim: usize) -> Result<ModelParams, CliError> {
    let bad = |e: symtorus_core::Error| CliError::Config(e.to_string());
    let given = [("phi", c.phi), ("xi", c.xi), ("L", c.big_l), ("ell", c.ell)];
    let count = given.iter().filter(|(_, v)| v.is_some()).count();
    let d = dim as f64;
    let (phi, xi) = match (c.phi, c.xi, c.big_l, c.ell) {
        (None, None, None, None) => (0.3, XI_MID),
        _ if count == 1 => {
            let name = given.iter().find(|(_, v)| v.is_some()).unwrap().0;
            return Err(CliError::Config(format!("{name} alone does not fix the scales; give two of phi, xi, L, ell")));
        }
        (Some(phi), Some(xi), _, _) => (phi, xi),
        (Some(phi), None, Some(l), _) => (phi, phi * l.powf(d / (d + 1.0))),
        (Some(phi), None, None, Some(ell)) => (phi, phi * (2.0 * ell / phi).powf(d / (d + 1.0))),
        (None, Some(xi), Some(l), _) => (xi * l.powf(-d / (d + 1.0)), xi),
        (None, Some(xi), None, Some(ell)) => {
            let l = (2.0 * ell / xi).powf(d + 1.0);
            (xi * l.powf(-d / (d + 1.0)), xi)
        }
        (None, None, Some(l), Some(ell)) => {
            let phi = 2.0 * ell / l;
            (phi, phi * l.powf(d / (d + 1.0)))
        }
        _ => unreachable!("fewer than two scales were handled above"),
    };
    for (name, v) in given.iter().chain([("phi", Some(phi)), ("xi", Some(xi))].iter()) {
        if let Some(v) = v {
            if !(v.is_finite() && *v > 0.0) {
                return Err(CliError::Config(format!("{name} = {v} must be positive and finite")));
            }
        }
    }
    // A missing L follows from (phi, xi) and a missing ell from the L in
    // effect, so the relation reported broken is one the user actually set.
    let big_l = c.big_l.unwrap_or_else(|| (xi / phi).powf((d + 1.0) / d));
    let ell = c.ell.unwrap_or(0.5 * phi * big_l);
    let omega = match (c.omega, c.omega_fraction) {
        (Some(_), Some(_)) => return Err(CliError::Config("give omega or omega_fraction, not both".into())),
        (Some(w), None) => w,
        (None, f) => {
            if dim != 2 {
                return Err(CliError::Config("omega_fraction is only defined in two dimensions; give omega".into()));
            }
            let f = f.unwrap_or(0.5);
            if !(f > 0.0 && f <= 1.0) {
                return Err(CliError::Config(format!("omega_fraction = {f} must lie in (0, 1]")));
            }
            f * max_droplet_area(xi)
        }
    };
    // User-supplied values go in verbatim so contradictions surface.
    ModelParams::new(dim, phi, omega, big_l, xi, ell).map_err(bad)
}

/// A fully validated configuration, echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub dim: usize,
    pub phi: f64,
    pub xi: f64,
    #[serde(rename = "L")]
    pub big_l: f64,
    pub ell: f64,
    pub omega: f64,
    pub n: usize,
    pub spacing: f64,
    pub seed: u64,
    pub tol_g: f64,
    pub max_iter: usize,
    pub perturbation: f64,
    pub output: PathBuf,
    pub checkpoint_every: usize,
    pub potential: String,
    pub cutoff: String,
    #[serde(skip)]
    pub params: ModelParams,
    #[serde(skip)]
    pub grid: Grid,
}
