//! Config file schema. One JSON document describes the model (a rate matrix
//! or an SDE), the fields `f` and `V`, the sets `C` and `B`, and the
//! experiment parameters; validation errors carry the offending field path.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ctmc::RateMatrix;
use crate::diffusion::{DiffusionModel, Region, ScalarField};
use crate::dsl;
use crate::measures::{StateSet, Weight};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error at {path}: {message}")]
    Json { path: String, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ctmc,
    Diffusion,
}

/// A scalar field given either as a table over states or as an expression.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Table(Vec<f64>),
    Expr(String),
}

/// A measurable set: state indices in the finite case, a geometric
/// primitive in the continuous case.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetSpec {
    Indices(Vec<usize>),
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Sublevel {
        expr: String,
        level: f64,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateSpec {
    pub b: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_delta() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

/// Experiment parameters. Every scientific knob lives here so configs carry
/// full provenance; requirements depend on the subcommand.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub r: Option<f64>,
    /// Rate tables for the resolvent equation check.
    pub g: Option<Vec<f64>>,
    pub h: Option<Vec<f64>>,
    /// Signed mass table for the norm inequality check.
    pub mu: Option<Vec<f64>>,
    pub state: Option<usize>,
    pub x0: Option<Vec<f64>>,
    pub pairs: Option<Vec<[usize; 2]>>,
    pub t_grid: Option<Vec<f64>>,
    pub t_max: Option<f64>,
    pub seed: Option<u64>,
    pub n_paths: Option<usize>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub burn_in: Option<f64>,
    pub t_cap: Option<f64>,
    pub grid: Option<GridSpec>,
    pub beta: Option<f64>,
    pub t_probe: Option<Vec<f64>>,
    /// Known reference value for the ergodic average, when available.
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    // finite chain
    pub rates: Option<Vec<Vec<f64>>>,
    pub labels: Option<Vec<String>>,
    // diffusion
    pub dimension: Option<usize>,
    pub noise_dimension: Option<usize>,
    pub drift: Option<Vec<String>>,
    pub dispersion: Option<Vec<Vec<String>>>,
    pub builtin: Option<String>,
    // fields and sets
    pub f: Option<FieldSpec>,
    pub v: Option<FieldSpec>,
    pub set_c: Option<SetSpec>,
    pub set_b: Option<SetSpec>,
    pub certificate: Option<CertificateSpec>,
    #[serde(default)]
    pub params: Params,
}

impl ModelConfig {
    /// Loads and syntax-checks a config file; path-annotated JSON errors.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), ConfigError> {
        let bytes = std::fs::read(path)?;
        let mut deserializer = serde_json::Deserializer::from_slice(&bytes);
        let config: ModelConfig =
            serde_path_to_error::deserialize(&mut deserializer).map_err(|e| {
                ConfigError::Json {
                    path: e.path().to_string(),
                    message: e.inner().to_string(),
                }
            })?;
        Ok((config, bytes))
    }

    pub fn require_ctmc(&self, subcommand: &str) -> Result<RateMatrix, ConfigError> {
        if self.kind != ModelKind::Ctmc {
            return Err(ConfigError::invalid(
                "kind",
                format!("subcommand '{subcommand}' needs kind = \"ctmc\""),
            ));
        }
        let rows = self
            .rates
            .as_ref()
            .ok_or_else(|| ConfigError::invalid("rates", "required for kind = \"ctmc\""))?;
        RateMatrix::from_rows(rows)
            .map_err(|e| ConfigError::invalid("rates", e.to_string()))
    }

    pub fn require_diffusion(&self, subcommand: &str) -> Result<DiffusionModel, ConfigError> {
        if self.kind != ModelKind::Diffusion {
            return Err(ConfigError::invalid(
                "kind",
                format!("subcommand '{subcommand}' needs kind = \"diffusion\""),
            ));
        }
        if let Some(name) = &self.builtin {
            return DiffusionModel::builtin(name).ok_or_else(|| {
                ConfigError::invalid("builtin", format!("unknown built-in model {name:?}"))
            });
        }
        let d = self
            .dimension
            .ok_or_else(|| ConfigError::invalid("dimension", "required without a builtin"))?;
        let k = self.noise_dimension.unwrap_or(d);
        if d == 0 || k == 0 {
            return Err(ConfigError::invalid(
                "dimension",
                "state and noise dimensions must be positive",
            ));
        }
        let drift_sources = self
            .drift
            .as_ref()
            .ok_or_else(|| ConfigError::invalid("drift", "required without a builtin"))?;
        if drift_sources.len() != d {
            return Err(ConfigError::invalid(
                "drift",
                format!("expected {d} components, got {}", drift_sources.len()),
            ));
        }
        let dispersion_sources = self
            .dispersion
            .as_ref()
            .ok_or_else(|| ConfigError::invalid("dispersion", "required without a builtin"))?;
        let drift_exprs = drift_sources
            .iter()
            .enumerate()
            .map(|(i, src)| {
                dsl::parse(src, d)
                    .map_err(|e| ConfigError::invalid(format!("drift[{i}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut dispersion_exprs = Vec::with_capacity(dispersion_sources.len());
        for (i, row) in dispersion_sources.iter().enumerate() {
            if row.len() != k {
                return Err(ConfigError::invalid(
                    format!("dispersion[{i}]"),
                    format!("expected {k} entries, got {}", row.len()),
                ));
            }
            let mut exprs = Vec::with_capacity(k);
            for (j, src) in row.iter().enumerate() {
                exprs.push(dsl::parse(src, d).map_err(|e| {
                    ConfigError::invalid(format!("dispersion[{i}][{j}]"), e.to_string())
                })?);
            }
            dispersion_exprs.push(exprs);
        }
        DiffusionModel::from_exprs(d, k, drift_exprs, dispersion_exprs)
            .map_err(|e| ConfigError::invalid("dispersion", e.to_string()))
    }

    /// The weight table `f` for a finite chain; defaults to `f == 1`.
    pub fn weight_table(&self, n: usize) -> Result<Weight, ConfigError> {
        match &self.f {
            None => Ok(Weight::ones(n)),
            Some(FieldSpec::Table(values)) => {
                if values.len() != n {
                    return Err(ConfigError::invalid(
                        "f",
                        format!("expected {n} entries, got {}", values.len()),
                    ));
                }
                Weight::new(values.clone()).map_err(|e| ConfigError::invalid("f", e.to_string()))
            }
            Some(FieldSpec::Expr(_)) => Err(ConfigError::invalid(
                "f",
                "finite chains take f as a table, not an expression",
            )),
        }
    }

    /// A scalar field from a spec, for diffusion models.
    pub fn scalar_field(
        &self,
        spec: Option<&FieldSpec>,
        field: &str,
        dim: usize,
    ) -> Result<ScalarField, ConfigError> {
        match spec {
            None => Err(ConfigError::invalid(field, "required for this subcommand")),
            Some(FieldSpec::Expr(src)) => {
                let expr = dsl::parse(src, dim)
                    .map_err(|e| ConfigError::invalid(field, e.to_string()))?;
                Ok(ScalarField::from_expr(expr, dim))
            }
            Some(FieldSpec::Table(_)) => Err(ConfigError::invalid(
                field,
                "diffusion models take fields as expressions, not tables",
            )),
        }
    }

    /// A state set from a spec, for finite chains.
    pub fn state_set(
        &self,
        spec: Option<&SetSpec>,
        field: &str,
        n: usize,
    ) -> Result<StateSet, ConfigError> {
        match spec {
            Some(SetSpec::Indices(indices)) => StateSet::new(indices.iter().copied(), n)
                .map_err(|e| ConfigError::invalid(field, e.to_string())),
            Some(_) => Err(ConfigError::invalid(
                field,
                "finite chains take sets as index lists",
            )),
            None => Err(ConfigError::invalid(field, "required for this subcommand")),
        }
    }

    /// A region from a spec, for diffusion models.
    pub fn region(
        &self,
        spec: Option<&SetSpec>,
        field: &str,
        dim: usize,
    ) -> Result<Region, ConfigError> {
        match spec {
            Some(SetSpec::Box { lo, hi }) => {
                if lo.len() != dim || hi.len() != dim {
                    return Err(ConfigError::invalid(
                        field,
                        format!("box bounds must have dimension {dim}"),
                    ));
                }
                Ok(Region::Box {
                    lo: lo.clone(),
                    hi: hi.clone(),
                })
            }
            Some(SetSpec::Ball { center, radius }) => {
                if center.len() != dim {
                    return Err(ConfigError::invalid(
                        field,
                        format!("ball center must have dimension {dim}"),
                    ));
                }
                Ok(Region::Ball {
                    center: center.clone(),
                    radius: *radius,
                })
            }
            Some(SetSpec::Sublevel {
                expr,
                level,
                lo,
                hi,
            }) => {
                let parsed = dsl::parse(expr, dim)
                    .map_err(|e| ConfigError::invalid(field, e.to_string()))?;
                Ok(Region::Sublevel {
                    field: ScalarField::from_expr(parsed, dim),
                    level: *level,
                    lo: lo.clone(),
                    hi: hi.clone(),
                })
            }
            Some(SetSpec::Indices(_)) => Err(ConfigError::invalid(
                field,
                "diffusion models take sets as geometric primitives",
            )),
            None => Err(ConfigError::invalid(field, "required for this subcommand")),
        }
    }

    /// The drift certificate table `V` for a finite chain.
    pub fn v_table(&self, n: usize) -> Result<Vec<f64>, ConfigError> {
        match &self.v {
            Some(FieldSpec::Table(values)) => {
                if values.len() != n {
                    return Err(ConfigError::invalid(
                        "v",
                        format!("expected {n} entries, got {}", values.len()),
                    ));
                }
                Ok(values.clone())
            }
            Some(FieldSpec::Expr(_)) => Err(ConfigError::invalid(
                "v",
                "finite chains take V as a table, not an expression",
            )),
            None => Err(ConfigError::invalid("v", "required for this subcommand")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(content.as_bytes()).unwrap();
        file
    }

    #[test]
    fn loads_minimal_ctmc_config() {
        let file = write_temp(
            r#"{"kind": "ctmc", "rates": [[-1.0, 1.0], [2.0, -2.0]], "set_c": [0]}"#,
        );
        let (config, _) = ModelConfig::load(file.path()).unwrap();
        let q = config.require_ctmc("lyapunov").unwrap();
        assert_eq!(q.n(), 2);
        let c = config.state_set(config.set_c.as_ref(), "set_c", 2).unwrap();
        assert!(c.contains(0));
    }

    #[test]
    fn json_errors_carry_paths() {
        let file = write_temp(r#"{"kind": "ctmc", "params": {"dt": "fast"}}"#);
        let err = ModelConfig::load(file.path()).unwrap_err();
        match err {
            ConfigError::Json { path, .. } => assert!(path.contains("params.dt"), "{path}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        let file = write_temp(r#"{"kind": "ctmc", "rate_matrix": []}"#);
        assert!(ModelConfig::load(file.path()).is_err());
    }

    #[test]
    fn diffusion_model_from_expressions() {
        let file = write_temp(
            r#"{
                "kind": "diffusion",
                "dimension": 1,
                "noise_dimension": 1,
                "drift": ["-x1"],
                "dispersion": [["sqrt(2)"]],
                "f": "x1^2 + 1",
                "set_c": {"lo": [-1.7320508075688772], "hi": [1.7320508075688772]}
            }"#,
        );
        let (config, _) = ModelConfig::load(file.path()).unwrap();
        let model = config.require_diffusion("diffusion").unwrap();
        assert_eq!(model.dim(), 1);
        let f = config
            .scalar_field(config.f.as_ref(), "f", model.dim())
            .unwrap();
        assert_eq!(f.eval(&[2.0]).unwrap(), 5.0);
        let region = config.region(config.set_c.as_ref(), "set_c", 1).unwrap();
        assert!(region.contains(&[1.0]).unwrap());
        assert!(!region.contains(&[2.0]).unwrap());
    }

    #[test]
    fn kind_mismatch_has_field_path() {
        let file = write_temp(r#"{"kind": "diffusion", "builtin": "ou"}"#);
        let (config, _) = ModelConfig::load(file.path()).unwrap();
        let err = config.require_ctmc("decay").unwrap_err();
        assert!(err.to_string().starts_with("kind:"), "{err}");
    }

    #[test]
    fn bad_expression_is_reported_with_field() {
        let file = write_temp(
            r#"{"kind": "diffusion", "dimension": 1, "drift": ["x2"], "dispersion": [["1"]]}"#,
        );
        let (config, _) = ModelConfig::load(file.path()).unwrap();
        let err = config.require_diffusion("diffusion").unwrap_err();
        assert!(err.to_string().contains("drift[0]"), "{err}");
    }
}
