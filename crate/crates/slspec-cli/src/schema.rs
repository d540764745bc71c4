//! Problem-file schema: a versioned JSON document describing the potential,
//! the two boundary functions, the shift `α`, and optional solver overrides.
//!
//! Parsing is strict — unknown keys anywhere in the document are errors — so
//! a file that parses today keeps meaning the same thing tomorrow.

use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use slspec::{BoundaryValueProblem, Potential, RationalBoundaryFunction, SolverConfig};

use crate::CliError;

/// Current schema version; the `version` field must match exactly.
pub const SCHEMA_VERSION: u32 = 1;

/// Highest eigenvalue index solved when neither the file nor `--n` says.
pub const DEFAULT_TOP_INDEX: usize = 40;

/// A parsed and validated problem file.
pub struct LoadedProblem {
    pub problem: BoundaryValueProblem,
    pub config: SolverConfig,
    /// Highest eigenvalue index to compute (inclusive).
    pub top_index: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    version: u32,
    potential: PotentialFile,
    f: Value,
    #[serde(rename = "F")]
    big_f: Value,
    alpha: f64,
    #[serde(default)]
    solver: Option<SolverFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialFile {
    kind: String,
    value: Option<f64>,
    cos: Option<Vec<f64>>,
    sin: Option<Vec<f64>>,
    values: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverFile {
    n_eigs: Option<usize>,
    tol_ode: Option<f64>,
    tol_eig: Option<f64>,
}

impl PotentialFile {
    /// Rejects keys that do not belong to the declared kind, so a typo like
    /// `{"kind": "zero", "value": 3}` cannot silently drop data.
    fn build(&self) -> Result<Potential, CliError> {
        let forbid = |present: bool, name: &str| -> Result<(), CliError> {
            if present {
                Err(CliError::Input(format!(
                    "potential key `{name}` is not allowed for kind `{}`",
                    self.kind
                )))
            } else {
                Ok(())
            }
        };
        match self.kind.as_str() {
            "zero" => {
                forbid(self.value.is_some(), "value")?;
                forbid(self.cos.is_some(), "cos")?;
                forbid(self.sin.is_some(), "sin")?;
                forbid(self.values.is_some(), "values")?;
                Ok(Potential::zero())
            }
            "constant" => {
                forbid(self.cos.is_some(), "cos")?;
                forbid(self.sin.is_some(), "sin")?;
                forbid(self.values.is_some(), "values")?;
                let c = self.value.ok_or_else(|| {
                    CliError::Input("potential kind `constant` requires `value`".into())
                })?;
                Potential::constant(c).map_err(|e| CliError::Input(format!("potential: {e}")))
            }
            "trig" => {
                forbid(self.value.is_some(), "value")?;
                forbid(self.values.is_some(), "values")?;
                let cos = self.cos.clone().unwrap_or_default();
                let sin = self.sin.clone().unwrap_or_default();
                Potential::trig(cos, sin).map_err(|e| CliError::Input(format!("potential: {e}")))
            }
            "samples" => {
                forbid(self.value.is_some(), "value")?;
                forbid(self.cos.is_some(), "cos")?;
                forbid(self.sin.is_some(), "sin")?;
                let values = self.values.clone().ok_or_else(|| {
                    CliError::Input("potential kind `samples` requires `values`".into())
                })?;
                Potential::from_samples(values)
                    .map_err(|e| CliError::Input(format!("potential: {e}")))
            }
            other => Err(CliError::Input(format!(
                "unknown potential kind `{other}` (expected zero, constant, trig, or samples)"
            ))),
        }
    }
}

/// Parses a boundary function from one of three accepted shapes: a bare
/// number (constant), the string `"infinity"` (Dirichlet), or an object
/// `{h0, h, poles, residues}` with every key optional.
fn boundary_function(v: &Value, name: &str) -> Result<RationalBoundaryFunction, CliError> {
    let bad = |msg: String| CliError::Input(format!("boundary function `{name}`: {msg}"));
    match v {
        Value::Number(x) => {
            let c = x.as_f64().ok_or_else(|| bad("value does not fit an f64".into()))?;
            Ok(RationalBoundaryFunction::constant(c))
        }
        Value::String(s) if s == "infinity" => Ok(RationalBoundaryFunction::infinity()),
        Value::String(s) => Err(bad(format!("unknown string `{s}` (only \"infinity\" is accepted)"))),
        Value::Object(map) => {
            let mut h0 = 0.0;
            let mut h = 0.0;
            let mut poles = Vec::new();
            let mut residues = Vec::new();
            for (key, val) in map {
                match key.as_str() {
                    "h0" => h0 = number(val).map_err(&bad)?,
                    "h" => h = number(val).map_err(&bad)?,
                    "poles" => poles = number_list(val).map_err(&bad)?,
                    "residues" => residues = number_list(val).map_err(&bad)?,
                    other => return Err(bad(format!("unknown key `{other}`"))),
                }
            }
            RationalBoundaryFunction::new(h0, h, poles, residues).map_err(|e| bad(e.to_string()))
        }
        _ => Err(bad("expected a number, \"infinity\", or an object".into())),
    }
}

fn number(v: &Value) -> Result<f64, String> {
    v.as_f64().ok_or_else(|| format!("expected a number, found {v}"))
}

fn number_list(v: &Value) -> Result<Vec<f64>, String> {
    let arr = v.as_array().ok_or_else(|| format!("expected an array of numbers, found {v}"))?;
    arr.iter().map(number).collect()
}

/// Loads, validates, and assembles a problem file.
pub fn load(path: &Path) -> Result<LoadedProblem, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let file: ProblemFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("problem file {}: {e}", path.display())))?;
    if file.version != SCHEMA_VERSION {
        return Err(CliError::Input(format!(
            "unsupported schema version {} (expected {SCHEMA_VERSION})",
            file.version
        )));
    }
    let q = file.potential.build()?;
    let f = boundary_function(&file.f, "f")?;
    let big_f = boundary_function(&file.big_f, "F")?;
    let problem = BoundaryValueProblem::new(q, f, big_f, file.alpha)
        .map_err(|e| CliError::Input(e.to_string()))?;

    let mut config = SolverConfig::default();
    let mut top_index = DEFAULT_TOP_INDEX;
    if let Some(solver) = &file.solver {
        if let Some(t) = solver.tol_ode {
            config.tol_ode = positive(t, "solver.tol_ode")?;
        }
        if let Some(t) = solver.tol_eig {
            config.tol_eig = positive(t, "solver.tol_eig")?;
        }
        if let Some(n) = solver.n_eigs {
            top_index = n;
        }
    }
    Ok(LoadedProblem { problem, config, top_index })
}

pub fn positive(t: f64, name: &str) -> Result<f64, CliError> {
    if t.is_finite() && t > 0.0 {
        Ok(t)
    } else {
        Err(CliError::Input(format!("{name} must be positive and finite, got {t}")))
    }
}
