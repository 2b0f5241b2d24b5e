use crate::error::CliError;
use clap::Args;
use scca::experiments::{ConsistencyConfig, ModelConfig, RobustnessConfig};
use scca::function_space::BasisKind;
use scca::robust::AssociationSpec;
use scca::scca::RobustOptions;
use scca::simulation::ContaminationModel;
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Everything a subcommand may read. Loaded from `--config`, then
/// overridden field by field by command-line flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub x: Option<PathBuf>,
    pub y: Option<PathBuf>,
    /// `a:b:m` or a path to a one-column CSV.
    pub grid: Option<String>,
    pub basis: Option<BasisKind>,
    pub d: Option<usize>,
    pub tau: Option<f64>,
    pub tau_grid: Option<Vec<f64>>,
    pub folds: Option<usize>,
    pub spec: Option<AssociationSpec>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub n: Option<usize>,
    pub out: Option<PathBuf>,
    pub optimizer: Option<RobustOptions>,
    pub model: Option<ModelConfig>,
    pub contamination: Option<ContaminationModel>,
    pub consistency: Option<ConsistencyConfig>,
    pub robustness: Option<RobustnessConfig>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON run configuration; flags take precedence over its fields.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// X curves, one per row.
    #[arg(long, value_name = "CSV")]
    pub x: Option<PathBuf>,
    /// Y curves, one per row.
    #[arg(long, value_name = "CSV")]
    pub y: Option<PathBuf>,
    #[arg(long, value_name = "a:b:m|PATH")]
    pub grid: Option<String>,
    #[arg(long, value_name = "fourier|bspline")]
    pub basis: Option<BasisKind>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Comma-separated candidate values.
    #[arg(long, value_name = "T1,T2,...", value_delimiter = ',')]
    pub tau_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Association spec as JSON, a spec name, or a path to a JSON file.
    #[arg(long, value_name = "JSON|PATH")]
    pub spec: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Sample size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

impl Flags {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => {
                $(if let Some(v) = &self.$f {
                    cfg.$f = Some(v.clone());
                })*
            };
        }
        take!(x, y, grid, basis, d, tau, tau_grid, folds, seed, reps, n, out);
        if let Some(s) = &self.spec {
            cfg.spec = Some(parse_spec(s)?);
        }
        Ok(cfg)
    }
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = scca::io::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Inline JSON, a bare spec name such as `gk_bounded`, or a JSON file.
pub fn parse_spec(s: &str) -> Result<AssociationSpec, CliError> {
    let t = s.trim();
    let text = if t.starts_with('{') {
        t.to_string()
    } else if t.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') && !Path::new(t).exists() {
        format!(r#"{{"kind":"{t}"}}"#)
    } else {
        scca::io::read_to_string(Path::new(t))?
    };
    Ok(AssociationSpec::from_json(&text)?)
}

impl RunConfig {
    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn require_seed(&self, command: &str) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Input(format!("{command} is stochastic and needs --seed")))
    }

    pub fn require_path(&self, value: &Option<PathBuf>, flag: &str) -> Result<PathBuf, CliError> {
        value
            .clone()
            .ok_or_else(|| CliError::Input(format!("missing --{flag}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_forms() {
        assert_eq!(
            parse_spec("cov_pearson").unwrap(),
            AssociationSpec::CovPearson
        );
        assert_eq!(
            parse_spec("gk_bounded").unwrap(),
            AssociationSpec::gk_bounded_mad()
        );
        assert_eq!(
            parse_spec(r#"{"kind":"m_scatter"}"#).unwrap(),
            AssociationSpec::m_scatter()
        );
        assert!(matches!(parse_spec("nonsense"), Err(CliError::Input(_))));
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"d": 7, "tau": 0.5, "seed": 3, "spec": {"kind": "cov_pearson"}}"#,
        )
        .unwrap();
        let flags = Flags {
            config: Some(path),
            tau: Some(0.1),
            ..Default::default()
        };
        let cfg = flags.resolve().unwrap();
        assert_eq!(cfg.d, Some(7));
        assert_eq!(cfg.tau, Some(0.1));
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.spec, Some(AssociationSpec::CovPearson));
    }

    #[test]
    fn unknown_config_fields_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"dee": 7}"#).unwrap();
        let flags = Flags {
            config: Some(path),
            ..Default::default()
        };
        assert!(matches!(flags.resolve(), Err(CliError::Input(_))));
    }
}
