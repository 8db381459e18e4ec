//! Run configuration: built-in defaults, overridden by a TOML file, overridden
//! by command-line flags. File keys are the flag names with `_` for `-`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Lambda,
    Kappa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum HorizonUnit {
    /// Hopping periods `T_H`.
    Hop,
    /// Rabi periods `T_R`.
    Rabi,
}

/// Every key a run accepts. `None` means "not given at this level".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Must name the subcommand when present in a file.
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,

    /// Photon number of the resonance (3..=6).
    #[arg(long)]
    pub n: Option<u32>,
    /// Base excitation n0.
    #[arg(long)]
    pub n0: Option<u32>,
    /// Rotating-wave approximation (resonance for scans, cells for dynamics).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub rwa: Option<bool>,
    /// One-photon coupling lambda / omega_a.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Two-photon coupling kappa / omega_a.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Ratio t_R / t_H fixing the junction hopping.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Hopping phase in radians.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Photon cutoff per mode.
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Output CSV path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Swept coupling of scan-resonance; the other one stays fixed.
    #[arg(long, value_enum)]
    pub sweep: Option<SweepAxis>,
    #[arg(long)]
    pub lambda_min: Option<f64>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub lambda_count: Option<usize>,
    #[arg(long)]
    pub kappa_min: Option<f64>,
    #[arg(long)]
    pub kappa_max: Option<f64>,
    #[arg(long)]
    pub kappa_count: Option<usize>,
    /// Scan window in omega_c (defaults depend on the resonance).
    #[arg(long)]
    pub window_lo: Option<f64>,
    #[arg(long)]
    pub window_hi: Option<f64>,

    /// omega_c range and resolution of the spectrum command.
    #[arg(long)]
    pub omega_min: Option<f64>,
    #[arg(long)]
    pub omega_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Number of lowest levels written by the spectrum command.
    #[arg(long)]
    pub levels: Option<usize>,

    /// Trajectory length in `horizon_unit`.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, value_enum)]
    pub horizon_unit: Option<HorizonUnit>,
    /// Number of time samples (default: 400 per T_H and 40 per T_R, whichever is denser).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Also evolve with rotating-wave cells and add `*_rwa` columns.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub compare_rwa: Option<bool>,
    /// Largest population tolerated in the top two Fock levels at the end.
    #[arg(long)]
    pub tail_limit: Option<f64>,
}

macro_rules! layer {
    ($top:expr, $base:expr, $($field:ident),+) => {
        Overrides { $($field: $top.$field.clone().or_else(|| $base.$field.clone()),)+ }
    };
}

impl Overrides {
    /// Fields set in `self` win over `base`.
    pub fn over(&self, base: &Overrides) -> Overrides {
        layer!(
            self,
            base,
            command,
            n,
            n0,
            rwa,
            lambda,
            kappa,
            mu,
            theta,
            cutoff,
            out,
            sweep,
            lambda_min,
            lambda_max,
            lambda_count,
            kappa_min,
            kappa_max,
            kappa_count,
            window_lo,
            window_hi,
            omega_min,
            omega_max,
            points,
            levels,
            horizon,
            horizon_unit,
            samples,
            compare_rwa,
            tail_limit
        )
    }

    pub fn from_file(path: &Path) -> Result<Overrides> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// `defaults < file < flags`.
    pub fn resolve(command: &str, file: Option<&Path>, flags: &Overrides) -> Result<Overrides> {
        let from_file = match file {
            Some(p) => Overrides::from_file(p)?,
            None => Overrides::default(),
        };
        if let Some(c) = &from_file.command {
            if c != command {
                bail!("config file is for command '{c}', not '{command}'");
            }
        }
        let mut merged = flags.over(&from_file);
        merged.command = Some(command.to_string());
        Ok(merged)
    }
}

/// Evenly spaced grid including both ends.
pub fn grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        bail!("grid count must be at least 1");
    }
    if !(min.is_finite() && max.is_finite()) || max < min {
        bail!("grid bounds must satisfy min <= max, got [{min}, {max}]");
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let step = (max - min) / (count - 1) as f64;
    Ok((0..count).map(|k| if k + 1 == count { max } else { min + step * k as f64 }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file = Overrides { lambda: Some(0.01), kappa: Some(0.02), ..Default::default() };
        let flags = Overrides { lambda: Some(0.05), ..Default::default() };
        let merged = flags.over(&file);
        assert_eq!(merged.lambda, Some(0.05));
        assert_eq!(merged.kappa, Some(0.02));
        assert_eq!(merged.mu, None);
    }

    #[test]
    fn file_keys_match_flag_names() {
        let parsed: Overrides =
            toml::from_str("n = 3\nlambda_max = 0.1\nsweep = \"lambda\"\nhorizon_unit = \"rabi\"\n").unwrap();
        assert_eq!(parsed.n, Some(3));
        assert_eq!(parsed.lambda_max, Some(0.1));
        assert_eq!(parsed.sweep, Some(SweepAxis::Lambda));
        assert_eq!(parsed.horizon_unit, Some(HorizonUnit::Rabi));
        assert!(toml::from_str::<Overrides>("bogus = 1").is_err());
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let g = grid(0.0, 0.1, 11).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[10], 0.1);
        assert_eq!(grid(0.3, 0.3, 1).unwrap(), vec![0.3]);
        assert!(grid(0.2, 0.1, 3).is_err());
        assert!(grid(0.0, 0.1, 0).is_err());
    }
}
