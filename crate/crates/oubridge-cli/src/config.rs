//! Run configuration shared by every command.
//!
//! A [`RunConfig`] is assembled from command-line flags and an optional JSON
//! file given with `--config`; flags take precedence field by field. Unknown
//! keys in the file are rejected.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Evaluation points: a count (the command picks the layout) or explicit times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Count(usize),
    Points(Vec<f64>),
}

impl std::str::FromStr for GridSpec {
    type Err = String;

    /// A bare integer such as `101` is a count; anything else, such as `0.5`
    /// or `0.1,0.5,0.9`, is a list of times.
    fn from_str(s: &str) -> Result<Self, String> {
        if let Ok(n) = s.trim().parse::<usize>() {
            Ok(GridSpec::Count(n))
        } else {
            s.split(',')
                .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad grid point '{p}': {e}")))
                .collect::<Result<Vec<_>, _>>()
                .map(GridSpec::Points)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Cholesky factor of the covariance kernel.
    Exact,
    /// Stationary OU paths mapped through the time change.
    ViaOu,
    /// Exact Gauss-Markov transition recursion.
    GaussMarkov,
    /// Euler-Maruyama on the SDE.
    Euler,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_max: Option<f64>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_check: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_nodes_check: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ode_rtol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

macro_rules! prefer {
    ($a:expr, $b:expr; $($f:ident),* $(,)?) => {
        RunConfig { $($f: $a.$f.or($b.$f),)* }
    };
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Field-wise merge in which `self` wins over `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        prefer!(self, base; command, family, params, grid, seed, tol, epsilon, paths, method, dt, z_max,
            t_end, interval, mc_check, mc_grid, strict, y_max, y_nodes, y_nodes_check, alpha_max, order,
            kappa, ode_rtol, residual_tol, mass_nodes, out, threads)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec_parses_counts_and_lists() {
        assert_eq!("101".parse::<GridSpec>().unwrap(), GridSpec::Count(101));
        assert_eq!("0.1, 0.5".parse::<GridSpec>().unwrap(), GridSpec::Points(vec![0.1, 0.5]));
        assert_eq!("0.5".parse::<GridSpec>().unwrap(), GridSpec::Points(vec![0.5]));
        assert!("x".parse::<GridSpec>().is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let file = RunConfig::from_json(r#"{"seed": 1, "paths": 10, "T": 2}"#).unwrap();
        let flags = RunConfig { seed: Some(7), ..Default::default() };
        let merged = flags.over(file);
        assert_eq!(merged.seed, Some(7));
        assert_eq!(merged.paths, Some(10));
        assert_eq!(merged.t_end, Some(2.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"sed": 1}"#).is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = RunConfig::from_json(
            r#"{"command": "suploc", "family": "alpha-wiener", "params": {"alpha": 1, "T": 1},
                "grid": [0.3, 0.5], "interval": [0.25, 0.75], "method": "via-ou", "strict": true}"#,
        )
        .unwrap();
        let back = RunConfig::from_json(&cfg.to_json().to_string()).unwrap();
        assert_eq!(cfg, back);
    }
}
