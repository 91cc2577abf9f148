//! Run configuration: a versioned TOML schema with expression-valued data
//! functions, plus command-line overrides.
//!
//! Unknown fields are rejected so that typos surface as usage errors naming
//! the offending field. Data functions are either expression strings in the
//! grammar of [`crate::expr`] or inline sample tables `[[x, v], ...]`;
//! material functions may also be given as polynomial coefficient tables.

use crate::error::{Error, Result};
use crate::material::MaterialModel;
use crate::scenario::{DataFn, ScenarioData};
use serde::Deserialize;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub material: MaterialConfig,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub converge: ConvergeConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub preset: String,
    /// additive shift in a = shift + sin(u) for the built-in presets
    #[serde(default = "default_a_shift")]
    pub a_shift: f64,
    /// k1 for the saxton-trig preset
    #[serde(default = "default_k1")]
    pub k1: f64,
    /// custom preset: c(u) as an expression or polynomial coefficients
    pub c: Option<FunctionSpec>,
    /// custom preset: a(u)
    pub a: Option<FunctionSpec>,
    /// custom preset: declared lower bound for |c'| and |a|
    pub m0: Option<f64>,
    pub u_domain: Option<(f64, f64)>,
}

fn default_a_shift() -> f64 {
    2.0
}
fn default_k1() -> f64 {
    1.0
}

/// An expression string, a polynomial coefficient table (ascending powers),
/// or inline samples.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Expression(String),
    Polynomial(Vec<f64>),
    Table { table: Vec<(f64, f64)> },
}

impl FunctionSpec {
    fn to_expr_source(&self, what: &str) -> Result<String> {
        match self {
            FunctionSpec::Expression(s) => Ok(s.clone()),
            FunctionSpec::Polynomial(coeffs) => {
                if coeffs.is_empty() {
                    return Err(Error::Config {
                        field: what.to_string(),
                        message: "polynomial coefficient table is empty".into(),
                    });
                }
                let terms: Vec<String> = coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| format!("({c:.17e})*u^{k}"))
                    .collect();
                Ok(terms.join(" + "))
            }
            FunctionSpec::Table { .. } => Err(Error::Config {
                field: what.to_string(),
                message: "material functions do not accept sample tables".into(),
            }),
        }
    }

    fn to_data_fn(&self, what: &str, max_order: usize) -> Result<DataFn> {
        match self {
            FunctionSpec::Expression(s) => DataFn::analytic(s, max_order).map_err(|e| {
                Error::Config {
                    field: what.to_string(),
                    message: e.to_string(),
                }
            }),
            FunctionSpec::Polynomial(_) => Err(Error::Config {
                field: what.to_string(),
                message: "data functions take expressions or sample tables, not coefficients"
                    .into(),
            }),
            FunctionSpec::Table { table } => {
                let xs: Vec<f64> = table.iter().map(|p| p.0).collect();
                let vs: Vec<f64> = table.iter().map(|p| p.1).collect();
                DataFn::tabulated(&xs, &vs).map_err(|e| Error::Config {
                    field: what.to_string(),
                    message: e.to_string(),
                })
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub phi1: f64,
    #[serde(default)]
    pub lambda: f64,
    pub psi0: f64,
    pub y_range: (f64, f64),
    pub phi2: FunctionSpec,
    pub psi1: FunctionSpec,
    pub psi2: FunctionSpec,
}

fn default_name() -> String {
    "scenario".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_tau: usize,
    pub n_y: usize,
    /// delta cap: runs start here and halve on failure
    pub delta: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n_tau: 128,
            n_y: 64,
            delta: 0.1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: usize,
    /// crossover for the divided-difference Taylor rule
    pub eps_dd: f64,
    pub max_halvings: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            max_iters: 80,
            eps_dd: crate::source::EPS_DD_DEFAULT,
            max_halvings: 5,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergeConfig {
    /// tau-interval counts of the refinement ladder (n_y scales along)
    pub n_tau_grids: Vec<usize>,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        ConvergeConfig {
            n_tau_grids: vec![32, 64, 128],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// sweep covers [0, lambda_cap * scale]
    pub scale: f64,
    pub points: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            scale: 1.0,
            points: 5,
        }
    }
}

/// Flag overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n_tau: Option<usize>,
    pub n_y: Option<usize>,
    pub delta: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub lambda: Option<f64>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            field: "config".into(),
            message: format!("{}: {e}", path.display()),
        })?;
        Self::from_str(&text)
    }

    pub fn from_str(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config {
            field: "config".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.n_tau {
            self.grid.n_tau = v;
        }
        if let Some(v) = o.n_y {
            self.grid.n_y = v;
        }
        if let Some(v) = o.delta {
            self.grid.delta = v;
        }
        if let Some(v) = o.tol {
            self.solver.tol = v;
        }
        if let Some(v) = o.max_iters {
            self.solver.max_iters = v;
        }
        if let Some(v) = o.lambda {
            self.scenario.lambda = v;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config {
                field: "schema_version".into(),
                message: format!(
                    "unsupported schema version {} (expected {SCHEMA_VERSION})",
                    self.schema_version
                ),
            });
        }
        if self.grid.n_tau < 8 {
            return Err(Error::Config {
                field: "grid.n_tau".into(),
                message: "must be at least 8".into(),
            });
        }
        if self.grid.n_y < 8 {
            return Err(Error::Config {
                field: "grid.n_y".into(),
                message: "must be at least 8".into(),
            });
        }
        if !(self.grid.delta > 0.0) {
            return Err(Error::Config {
                field: "grid.delta".into(),
                message: "must be positive".into(),
            });
        }
        if !(self.solver.tol > 0.0) {
            return Err(Error::Config {
                field: "solver.tol".into(),
                message: "must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<MaterialModel> {
        let m = &self.material;
        match m.preset.as_str() {
            "linear" => MaterialModel::linear(m.a_shift, m.u_domain.unwrap_or((-1.0, 1.0))),
            "saxton-trig" => {
                MaterialModel::saxton_trig(m.k1, m.a_shift, m.u_domain.unwrap_or((-10.0, 10.0)))
            }
            "custom" => {
                let c = m
                    .c
                    .as_ref()
                    .ok_or_else(|| Error::Config {
                        field: "material.c".into(),
                        message: "custom preset requires c".into(),
                    })?
                    .to_expr_source("material.c")?;
                let a = m
                    .a
                    .as_ref()
                    .ok_or_else(|| Error::Config {
                        field: "material.a".into(),
                        message: "custom preset requires a".into(),
                    })?
                    .to_expr_source("material.a")?;
                let dom = m.u_domain.ok_or_else(|| Error::Config {
                    field: "material.u_domain".into(),
                    message: "custom preset requires u_domain".into(),
                })?;
                MaterialModel::from_sources("custom", &c, &a, m.m0, dom)
            }
            other => Err(Error::Config {
                field: "material.preset".into(),
                message: format!("unknown preset `{other}` (linear | saxton-trig | custom)"),
            }),
        }
    }

    pub fn build_scenario(&self) -> Result<ScenarioData> {
        let s = &self.scenario;
        Ok(ScenarioData {
            name: s.name.clone(),
            phi1: s.phi1,
            lambda: s.lambda,
            psi0: s.psi0,
            y_range: s.y_range,
            phi2: s.phi2.to_data_fn("scenario.phi2", 4)?,
            psi1: s.psi1.to_data_fn("scenario.psi1", 3)?,
            psi2: s.psi2.to_data_fn("scenario.psi2", 3)?,
        })
    }

    /// Deterministic digest of the canonical config text, for report
    /// identification without timestamps.
    pub fn digest(text: &str) -> String {
        // FNV-1a, enough for an identifier
        let mut h: u64 = 0xcbf29ce484222325;
        for b in text.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
schema_version = 1

[material]
preset = "linear"

[scenario]
name = "constant-data"
phi1 = 0.0
lambda = 0.0
psi0 = 1.0
y_range = [-1.0, 1.0]
phi2 = "0"
psi1 = "1"
psi2 = "0.5"

[grid]
n_tau = 64
n_y = 32
delta = 0.1
"#;

    #[test]
    fn parses_a_sound_config() {
        let cfg = RunConfig::from_str(GOOD).unwrap();
        assert_eq!(cfg.grid.n_tau, 64);
        let model = cfg.build_model().unwrap();
        let scen = cfg.build_scenario().unwrap();
        assert_eq!(model.name, "linear");
        assert_eq!(scen.psi2.eval(0, 0.3), 0.5);
    }

    #[test]
    fn rejects_unknown_fields_by_name() {
        let bad = GOOD.replace("n_tau = 64", "n_tau = 64\nnn_xy = 3");
        let err = RunConfig::from_str(&bad).unwrap_err();
        assert!(err.to_string().contains("nn_xy"), "{err}");
    }

    #[test]
    fn rejects_bad_grid_parameters() {
        let bad = GOOD.replace("n_tau = 64", "n_tau = 4");
        let err = RunConfig::from_str(&bad).unwrap_err();
        assert!(err.to_string().contains("n_tau"), "{err}");
    }

    #[test]
    fn custom_material_from_polynomial_coefficients() {
        let cfg = GOOD
            .replace(
                "preset = \"linear\"",
                "preset = \"custom\"\nc = [0.0, -1.0]\na = \"2 + sin(u)\"\nm0 = 1.0\nu_domain = [-1.0, 1.0]",
            )
            .parse::<String>()
            .unwrap();
        let cfg = RunConfig::from_str(&cfg).unwrap();
        let model = cfg.build_model().unwrap();
        assert_eq!(model.c(0.25), -0.25);
        assert_eq!(model.dc(0.25), -1.0);
    }

    #[test]
    fn tabulated_scenario_data_is_accepted() {
        let mut table = String::from("psi1 = { table = [");
        for i in 0..=40 {
            let x = -1.0 + 2.0 * (i as f64) / 40.0;
            table.push_str(&format!("[{x:.6}, 1.0],"));
        }
        table.push_str("] }");
        let cfg = GOOD.replace("psi1 = \"1\"", &table);
        let cfg = RunConfig::from_str(&cfg).unwrap();
        let scen = cfg.build_scenario().unwrap();
        assert!(scen.psi1.is_tabulated());
        assert!((scen.psi1.eval(0, 0.123) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(RunConfig::digest(GOOD), RunConfig::digest(GOOD));
        assert_ne!(RunConfig::digest(GOOD), RunConfig::digest("x"));
    }
}
