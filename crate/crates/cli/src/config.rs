use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use specmhd_core::counterexample::{default_p_list, CounterexampleParams, ScanOptions};
use specmhd_core::mhd::{InitialCondition, SolverConfig};
use specmhd_core::SpectralGrid;

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Mhd,
    Stokes,
}

fn one() -> f64 {
    1.0
}
fn every_step() -> usize {
    1
}
fn blowup() -> f64 {
    1e6
}
fn yes() -> bool {
    true
}

/// Shared by `simulate` and `convergence`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub model: Model,
    pub n_dim: usize,
    #[serde(rename = "L", default = "one")]
    pub length: f64,
    /// Defaults to the smallest dealiased resolution for `K_R`.
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "K_R")]
    pub k_cut: usize,
    pub nu: f64,
    pub s: f64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub ic: InitialCondition,
    #[serde(default = "every_step")]
    pub diag_every: usize,
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default = "blowup")]
    pub blowup_factor: f64,
    /// Cutoffs of the convergence experiment.
    #[serde(rename = "K_list", default, skip_serializing_if = "Option::is_none")]
    pub k_list: Option<Vec<usize>>,
    /// Rerun the largest cutoff at `dt/2` in the convergence experiment.
    #[serde(default = "yes")]
    pub control: bool,
}

impl SimulationConfig {
    pub fn apply_seed(&mut self, seed: Option<u64>) {
        if let Some(s) = seed {
            self.ic.seed = s;
        }
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        let grid = match self.n {
            Some(n) => SpectralGrid::new(self.n_dim, self.length, n, self.k_cut)?,
            None => SpectralGrid::dealiased(self.n_dim, self.length, self.k_cut)?,
        };
        let mut cfg = SolverConfig::new(grid, self.nu, self.s, self.dt, self.t_end, self.ic.clone());
        if self.diag_every == 0 {
            bail!("diag_every must be at least 1");
        }
        cfg.diag_every = self.diag_every;
        cfg.snapshot_every = self.snapshot_every;
        cfg.blowup_factor = self.blowup_factor;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn cutoffs(&self) -> Result<Vec<usize>> {
        let Some(list) = &self.k_list else { bail!("convergence config needs K_list") };
        if list.len() < 3 {
            bail!("K_list needs at least 3 cutoffs, got {}", list.len());
        }
        if list.windows(2).any(|w| w[1] <= w[0]) {
            bail!("K_list must be strictly increasing (no duplicates), got {list:?}");
        }
        if list[0] == 0 {
            bail!("cutoffs must be positive");
        }
        Ok(list.clone())
    }
}

fn default_density() -> f64 {
    400.0
}
fn default_n_theta() -> usize {
    64
}
fn default_k_index() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub alpha: f64,
    pub delta: f64,
    /// Radii of the scan; alternatively `log_P_list` gives their logarithms.
    #[serde(rename = "P_list", default, skip_serializing_if = "Option::is_none")]
    pub p_list: Option<Vec<f64>>,
    #[serde(rename = "log_P_list", default, skip_serializing_if = "Option::is_none")]
    pub log_p_list: Option<Vec<f64>>,
    #[serde(default = "default_k_index")]
    pub k_index: usize,
    #[serde(default = "default_density")]
    pub radial_density: f64,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    #[serde(default)]
    pub outer: Option<ScanOptions>,
}

impl CounterexampleConfig {
    pub fn radii(&self) -> Result<Vec<f64>> {
        match (&self.p_list, &self.log_p_list) {
            (Some(_), Some(_)) => bail!("give either P_list or log_P_list, not both"),
            (Some(p), None) => Ok(p.clone()),
            (None, Some(l)) => Ok(l.iter().map(|w| w.exp()).collect()),
            (None, None) => Ok(default_p_list()),
        }
    }

    pub fn params(&self) -> Result<CounterexampleParams> {
        let radii = self.radii()?;
        let p_max = radii.iter().copied().fold(f64::NAN, f64::max);
        let params = CounterexampleParams {
            alpha: self.alpha,
            delta: self.delta,
            p_max,
            k_index: self.k_index,
            radial_density: self.radial_density,
            n_theta: self.n_theta,
        };
        params.validate()?;
        Ok(params)
    }
}

fn default_samples() -> Option<usize> {
    None
}

/// One explicit `(ξ, ζ, s)` fed to the gradient-estimate suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradientPoint {
    pub xi: Vec<f64>,
    pub zeta: Vec<f64>,
    pub s: f64,
}

/// Optional overrides for `verify`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_samples")]
    pub samples: Option<usize>,
    #[serde(default)]
    pub gradient_points: Vec<GradientPoint>,
}
