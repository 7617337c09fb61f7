// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use crate::CliError;

/// Flags shared by every subcommand. Each overrides the matching key of
/// the `--config` file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration; keys are the long flag names with `_`.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Drift coefficient a > 0 [default: 1]
    #[arg(long)]
    pub a: Option<f64>,
    /// Pareto tail index [default: 0.5]
    #[arg(long)]
    pub eta: Option<f64>,
    /// Pareto scale [default: 1]
    #[arg(long = "x-m")]
    pub x_m: Option<f64>,
    /// QSD rate in (0, a] [default: a * eta, capped at a]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Ascending checkpoint times [default: 2,4,6,8,10]
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub checkpoints: Option<Vec<f64>>,
    /// Number of simulated paths [default: 100000]
    #[arg(long = "n-paths")]
    pub n_paths: Option<usize>,
    /// Master seed [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Step in transformed time g [default: chosen from the checkpoints]
    #[arg(long = "dg-step")]
    pub dg_step: Option<f64>,
    /// Absolute quadrature tolerance [default: 1e-10]
    #[arg(long = "quad-tol")]
    pub quad_tol: Option<f64>,
    /// Relative series truncation tolerance [default: 1e-12]
    #[arg(long = "series-tol")]
    pub series_tol: Option<f64>,
    /// Upper end of emitted y grids [default: 12]
    #[arg(long = "u-max")]
    pub u_max: Option<f64>,
    /// Directory for default output files [default: .]
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    a: Option<f64>,
    eta: Option<f64>,
    x_m: Option<f64>,
    lambda: Option<f64>,
    checkpoints: Option<Vec<f64>>,
    n_paths: Option<usize>,
    seed: Option<u64>,
    dg_step: Option<f64>,
    quad_tol: Option<f64>,
    series_tol: Option<f64>,
    u_max: Option<f64>,
    out_dir: Option<PathBuf>,
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub a: f64,
    pub eta: f64,
    pub x_m: f64,
    pub lambda: f64,
    pub checkpoints: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub dg_step: Option<f64>,
    pub quad_tol: f64,
    pub series_tol: f64,
    pub u_max: f64,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => read_file(path)?,
            None => FileConfig::default(),
        };
        let a = args.a.or(file.a).unwrap_or(1.0);
        let eta = args.eta.or(file.eta).unwrap_or(0.5);
        let config = Self {
            a,
            eta,
            x_m: args.x_m.or(file.x_m).unwrap_or(1.0),
            lambda: args.lambda.or(file.lambda).unwrap_or(a * eta.min(1.0)),
            checkpoints: args
                .checkpoints
                .clone()
                .or(file.checkpoints)
                .unwrap_or_else(|| vec![2.0, 4.0, 6.0, 8.0, 10.0]),
            n_paths: args.n_paths.or(file.n_paths).unwrap_or(100_000),
            seed: args.seed.or(file.seed).unwrap_or(42),
            dg_step: args.dg_step.or(file.dg_step),
            quad_tol: args.quad_tol.or(file.quad_tol).unwrap_or(1e-10),
            series_tol: args.series_tol.or(file.series_tol).unwrap_or(1e-12),
            u_max: args.u_max.or(file.u_max).unwrap_or(12.0),
            out_dir: args
                .out_dir
                .clone()
                .or(file.out_dir)
                .unwrap_or_else(|| PathBuf::from(".")),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("a", self.a),
            ("eta", self.eta),
            ("x_m", self.x_m),
            ("quad_tol", self.quad_tol),
            ("u_max", self.u_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.lambda > 0.0 && self.lambda <= self.a) {
            return Err(CliError::Config(format!(
                "lambda must lie in (0, a = {}], got {}",
                self.a, self.lambda
            )));
        }
        if !(self.series_tol > 0.0 && self.series_tol < 1.0) {
            return Err(CliError::Config(format!(
                "series_tol must lie in (0, 1), got {}",
                self.series_tol
            )));
        }
        if self.n_paths == 0 {
            return Err(CliError::Config("n_paths must be at least 1".into()));
        }
        if let Some(dg) = self.dg_step {
            if !(dg > 0.0 && dg.is_finite()) {
                return Err(CliError::Config(format!(
                    "dg_step must be positive, got {dg}"
                )));
            }
        }
        let ts = &self.checkpoints;
        if ts.is_empty() || ts.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(CliError::Config(format!(
                "checkpoints must be positive: {ts:?}"
            )));
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config(format!(
                "checkpoints must ascend strictly: {ts:?}"
            )));
        }
        Ok(())
    }

    /// Tail indices outside `(0, 1)` have no proven limit.
    pub fn exploratory(&self) -> bool {
        self.eta >= 1.0
    }

    pub fn output(&self, explicit: Option<&Path>, default_name: &str) -> PathBuf {
        match explicit {
            Some(p) => p.to_path_buf(),
            None => self.out_dir.join(default_name),
        }
    }
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn with_file(json: &str) -> (tempfile::NamedTempFile, CommonArgs) {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(json.as_bytes()).unwrap();
        let args = CommonArgs {
            config: Some(f.path().to_path_buf()),
            ..Default::default()
        };
        (f, args)
    }

    #[test]
    fn defaults() {
        let c = RunConfig::resolve(&CommonArgs::default()).unwrap();
        assert_eq!(c.lambda, 0.5);
        assert_eq!(c.seed, 42);
        assert_eq!(c.checkpoints, vec![2.0, 4.0, 6.0, 8.0, 10.0]);
    }

    #[test]
    fn flags_override_file() {
        let (_f, mut args) = with_file(r#"{"a": 2.0, "eta": 0.3, "seed": 7}"#);
        args.seed = Some(9);
        let c = RunConfig::resolve(&args).unwrap();
        assert_eq!((c.a, c.eta, c.seed), (2.0, 0.3, 9));
        assert!((c.lambda - 0.6).abs() < 1e-15);
    }

    #[test]
    fn unknown_key_rejected() {
        let (_f, args) = with_file(r#"{"a": 1.0, "etta": 0.5}"#);
        assert!(matches!(
            RunConfig::resolve(&args),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn invalid_values_rejected() {
        let bad = [
            r#"{"lambda": 1.5}"#,
            r#"{"checkpoints": [2.0, 1.0]}"#,
            r#"{"n_paths": 0}"#,
            r#"{"dg_step": -1.0}"#,
            r#"{"a": 0.0}"#,
        ];
        for json in bad {
            let (_f, args) = with_file(json);
            assert!(RunConfig::resolve(&args).is_err(), "{json}");
        }
    }

    #[test]
    fn exploratory_lambda_capped() {
        let args = CommonArgs {
            eta: Some(1.5),
            a: Some(2.0),
            ..Default::default()
        };
        let c = RunConfig::resolve(&args).unwrap();
        assert!(c.exploratory());
        assert_eq!(c.lambda, 2.0);
    }
}
