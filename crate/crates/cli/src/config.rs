//! Run configuration files (TOML).
//!
//! ```toml
//! [grid]
//! n_points = 1024
//! x_min = -10.0
//! x_max = 10.0
//!
//! [scenario]
//! builtin = "free_gaussian_symmetric"
//!
//! [integration]
//! snapshot_every = 50
//!
//! [output]
//! dir = "runs"
//! ```
//!
//! Instead of `builtin`, `[scenario]` may describe a scenario inline
//! (`name`, `kind` and the kind's fields); `[params]` and `[integration]`
//! are then required.

use std::path::{Path, PathBuf};

use dualwave_core::scenarios::{builtin, builtin_names, ScenarioSpec};
use dualwave_core::{DualParams, Grid1D};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// 0 is quiet; 1 prints progress to stderr.
    #[serde(default)]
    pub verbosity: u8,
}

/// Overrides applied on top of the scenario's own integration settings.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSection {
    pub dt: Option<f64>,
    pub n_steps: Option<usize>,
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    grid: Option<Grid1D>,
    params: Option<DualParams>,
    scenario: toml::Table,
    #[serde(default)]
    integration: Option<toml::Table>,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: ScenarioSpec,
    pub grid: Grid1D,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_builtin(name: &str) -> Result<Self, CliError> {
        Ok(RunConfig {
            scenario: resolve_builtin(name)?,
            grid: Grid1D::standard(),
            output: OutputSection::default(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config `{}`: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| CliError::Config(format!("config: {}", e.message())))?;
        let scenario = match file.scenario.get("builtin") {
            Some(name) => {
                if file.scenario.len() > 1 {
                    return Err(CliError::Config(
                        "config: `scenario.builtin` cannot be combined with inline scenario keys".into(),
                    ));
                }
                let name = name
                    .as_str()
                    .ok_or_else(|| CliError::Config("config: `scenario.builtin` must be a string".into()))?;
                let mut spec = resolve_builtin(name)?;
                if let Some(p) = file.params {
                    spec.params = p;
                }
                if let Some(t) = file.integration {
                    let o: IntegrationSection = toml::Value::Table(t)
                        .try_into()
                        .map_err(|e: toml::de::Error| CliError::Config(format!("config: integration: {}", e.message())))?;
                    spec.integration.dt = o.dt.unwrap_or(spec.integration.dt);
                    spec.integration.n_steps = o.n_steps.unwrap_or(spec.integration.n_steps);
                    spec.integration.snapshot_every = o.snapshot_every.unwrap_or(spec.integration.snapshot_every);
                }
                spec
            }
            None => {
                let mut table = file.scenario;
                let params = file
                    .params
                    .ok_or_else(|| CliError::Config("config: missing `params` section for an inline scenario".into()))?;
                let integration = file.integration.ok_or_else(|| {
                    CliError::Config("config: missing `integration` section for an inline scenario".into())
                })?;
                let params = toml::Value::try_from(params).map_err(|e| CliError::Config(format!("config: params: {e}")))?;
                table.insert("params".into(), params);
                table.insert("integration".into(), toml::Value::Table(integration));
                toml::Value::Table(table)
                    .try_into()
                    .map_err(|e: toml::de::Error| CliError::Config(format!("config: scenario: {}", e.message())))?
            }
        };
        Ok(RunConfig {
            scenario,
            grid: file.grid.unwrap_or_else(Grid1D::standard),
            output: file.output,
        })
    }

    pub fn out_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("runs"))
    }
}

pub fn resolve_builtin(name: &str) -> Result<ScenarioSpec, CliError> {
    builtin(name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown scenario `{name}`; available: {}",
            builtin_names().join(", ")
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use dualwave_core::scenarios::ScenarioKind;

    #[test]
    fn builtin_with_overrides() {
        let c = RunConfig::parse(
            r#"
            [grid]
            n_points = 512
            x_min = -8.0
            x_max = 8.0
            [scenario]
            builtin = "free_gaussian_symmetric"
            [integration]
            n_steps = 10
            [output]
            dir = "somewhere"
            "#,
        )
        .unwrap();
        assert_eq!(c.grid.n_points(), 512);
        assert_eq!(c.scenario.integration.n_steps, 10);
        assert_eq!(c.scenario.integration.dt, 1e-3);
        assert_eq!(c.out_dir(None), PathBuf::from("somewhere"));
        assert_eq!(c.out_dir(Some(Path::new("x"))), PathBuf::from("x"));
    }

    #[test]
    fn inline_wave_scenario() {
        let c = RunConfig::parse(
            r#"
            [params]
            masses = [1.0, 1.2]
            [integration]
            dt = 0.001
            n_steps = 20
            snapshot_every = 5
            [scenario]
            name = "custom"
            kind = "wave"
            initial = { type = "gaussian", sigma = 0.6, k0 = 1.0 }
            vg0 = { type = "harmonic", omega = 1.0 }
            "#,
        )
        .unwrap();
        assert_eq!(c.scenario.name, "custom");
        assert_eq!(c.scenario.params.m1(), 1.2);
        assert!(matches!(c.scenario.kind, ScenarioKind::Wave(_)));
        assert_eq!(c.grid, Grid1D::standard());
    }

    #[test]
    fn errors_name_the_key() {
        let unknown = RunConfig::parse("[scenario]\nbuiltin = \"nope\"\n").unwrap_err();
        assert!(unknown.to_string().contains("hj_caustic"), "{unknown}");
        let missing = RunConfig::parse("[params]\nmasses=[1.0,1.0]\n[integration]\ndt=0.1\nn_steps=5\n[scenario]\nname=\"a\"\nkind=\"wave\"\n")
            .unwrap_err();
        assert!(missing.to_string().contains("initial"), "{missing}");
        let bad_grid = RunConfig::parse("[grid]\nn_points = 1000\nx_min=0.0\nx_max=1.0\n[scenario]\nbuiltin=\"ck_damped\"\n")
            .unwrap_err();
        assert!(bad_grid.to_string().contains("power of two"), "{bad_grid}");
        let typo = RunConfig::parse("[scenario]\nbuiltin=\"ck_damped\"\n[integration]\nsteps = 3\n").unwrap_err();
        assert!(typo.to_string().contains("steps"), "{typo}");
    }
}
