//! JSON problem configuration.
//!
//! Polynomials are strings over these variable names:
//!
//! * `model.f`: `x1..x{n_x}`, `u1..u{n_u}`, `w1..w{n_w}`
//! * `desired_set.polynomial`: `x1..x{n_x}`; the set is `{p <= 0}`
//! * `input_set.polynomial`: stacked inputs `u1..u{N_p n_u}`, step-major;
//!   the set is `{p >= 0}` intersected with the box
//! * `cost.stage`: `x1..x{n_x}`, `u1..u{n_u}`; summed over the horizon,
//!   pairing `x_{k+i}` with `u_{k+i-1}`
//!
//! Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{ProblemSpec, SemialgebraicSet, Sense, SignMode, SystemModel};
use crate::error::{Error, Result};
use crate::moments::DisturbanceSpec;
use crate::mpc::RunConfig;
use crate::poly::{parse_polynomial, var_names, Polynomial};
use crate::relaxation::RelaxationConfig;
use crate::sdp::SolverSettings;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n_x: usize,
    pub n_u: usize,
    pub n_w: usize,
    pub f: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesiredSetSection {
    pub polynomial: String,
    /// Informational.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// State box.
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSetSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polynomial: Option<String>,
    /// `n_u` intervals repeated over the horizon, or one per stacked input.
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    pub stage: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "N_p")]
    pub horizon: usize,
    pub r: u32,
    #[serde(default = "one")]
    pub omega_r: f64,
    #[serde(default)]
    pub sign_mode: SignMode,
    #[serde(default = "yes")]
    pub scale: bool,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: ModelSection,
    pub desired_set: DesiredSetSection,
    pub input_set: InputSetSection,
    pub disturbance: DisturbanceSpec,
    pub cost: CostSection,
    pub parameters: Parameters,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub solver: SolverSettings,
}

/// Everything a command needs, checked.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub relaxation: RelaxationConfig,
    pub run: RunConfig,
    pub solver: SolverSettings,
}

fn field_error(field: impl Into<String>, e: impl ToString) -> Error {
    Error::Config {
        field: field.into(),
        message: e.to_string(),
    }
}

fn parse_field<S: AsRef<str>>(field: &str, text: &str, names: &[S]) -> Result<Polynomial> {
    parse_polynomial(text, names).map_err(|e| match e {
        Error::Parse { message, .. } => field_error(field, format!("{message} in {text:?}")),
        other => field_error(field, other),
    })
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| field_error("<document>", e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn build(&self) -> Result<Problem> {
        let m = &self.model;
        let p = &self.parameters;
        let mut model_names = var_names("x", m.n_x);
        model_names.extend(var_names("u", m.n_u));
        model_names.extend(var_names("w", m.n_w));
        if self.model.f.len() != m.n_x {
            return Err(field_error(
                "model.f",
                format!("expected {} polynomials, got {}", m.n_x, m.f.len()),
            ));
        }
        let f =
            m.f.iter()
                .enumerate()
                .map(|(i, s)| parse_field(&format!("model.f[{i}]"), s, &model_names))
                .collect::<Result<Vec<_>>>()?;
        let model =
            SystemModel::new(m.n_x, m.n_u, m.n_w, f).map_err(|e| field_error("model", e))?;

        let pd = parse_field(
            "desired_set.polynomial",
            &self.desired_set.polynomial,
            &var_names("x", m.n_x),
        )?;
        let n_in = p.horizon * m.n_u;
        let bounds = match self.input_set.bounds.len() {
            n if n == n_in => self.input_set.bounds.clone(),
            n if n == m.n_u => (0..n_in)
                .map(|i| self.input_set.bounds[i % m.n_u])
                .collect(),
            n => {
                return Err(field_error(
                    "input_set.box",
                    format!("expected {} or {} intervals, got {n}", m.n_u, n_in),
                ))
            }
        };
        let input_constraints = match &self.input_set.polynomial {
            Some(s) => vec![(
                parse_field("input_set.polynomial", s, &var_names("u", n_in))?,
                Sense::NonNegative,
            )],
            None => vec![],
        };
        let mut stage_names = var_names("x", m.n_x);
        stage_names.extend(var_names("u", m.n_u));
        let stage = parse_field("cost.stage", &self.cost.stage, &stage_names)?;
        let cost = ProblemSpec::summed_stage_cost(&stage, m.n_x, m.n_u, p.horizon.max(1))
            .map_err(|e| field_error("cost.stage", e))?;

        let spec = ProblemSpec {
            model,
            desired_set: SemialgebraicSet {
                constraints: vec![(pd, Sense::NonPositive)],
                bounds: self.desired_set.bounds.clone(),
            },
            input_set: SemialgebraicSet {
                constraints: input_constraints,
                bounds,
            },
            disturbance: self.disturbance.clone(),
            cost,
            alpha: p.alpha,
            beta: p.beta,
            horizon: p.horizon,
        };
        spec.validate().map_err(|e| field_error("parameters", e))?;
        let relaxation = RelaxationConfig {
            order: p.r,
            omega_r: p.omega_r,
            sign: p.sign_mode,
            scale: p.scale,
        };
        relaxation
            .validate()
            .map_err(|e| field_error("parameters", e))?;
        self.run.validate().map_err(|e| field_error("run", e))?;
        self.solver
            .validate()
            .map_err(|e| field_error("solver", e))?;
        Ok(Problem {
            spec,
            relaxation,
            run: self.run.clone(),
            solver: self.solver.clone(),
        })
    }
}

/// Recorded inputs and disturbances, one inner vector per step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayFile {
    pub inputs: Vec<Vec<f64>>,
    pub disturbances: Vec<Vec<f64>>,
}

impl ReplayFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| field_error("<replay>", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE1: &str = r#"{
        "model": {"n_x": 2, "n_u": 1, "n_w": 1, "f": ["x2", "x1*x2 + w1 + u1"]},
        "desired_set": {"polynomial": "x1^2 + x2^2 - 0.04", "radius": 0.2, "box": [[-1, 1], [-1, 1]]},
        "input_set": {"box": [[-1, 1]]},
        "disturbance": {"kind": "uniform", "bounds": [[-0.5, 0.5]]},
        "cost": {"stage": "x1^2 + x2^2 + u1^2"},
        "parameters": {"alpha": 0.8, "beta": 0.051, "N_p": 3, "r": 5}
    }"#;

    #[test]
    fn parses_and_builds() {
        let cfg = ConfigFile::from_json(EXAMPLE1).unwrap();
        let p = cfg.build().unwrap();
        assert_eq!(p.spec.input_set.bounds.len(), 3);
        assert_eq!(p.relaxation.order, 5);
        assert_eq!(p.relaxation.omega_r, 1.0);
        assert_eq!(p.run, RunConfig::default());
        let x = p.spec.model.step(&[1.0, 1.0], &[-0.5], &[0.25]).unwrap();
        assert_eq!(x, vec![1.0, 0.75]);
    }

    #[test]
    fn round_trip_gives_the_same_spec() {
        let cfg = ConfigFile::from_json(EXAMPLE1).unwrap();
        let again = ConfigFile::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.build().unwrap(), cfg.build().unwrap());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = EXAMPLE1.replace("\"r\": 5", "\"r\": 5, \"order\": 3");
        let err = ConfigFile::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("order"), "{err}");
    }

    #[test]
    fn parse_errors_name_the_field() {
        let text = EXAMPLE1.replace("x1*x2 + w1 + u1", "x1*x3 + w1");
        let err = ConfigFile::from_json(&text).unwrap().build().unwrap_err();
        assert!(err.to_string().contains("model.f[1]"), "{err}");
    }

    #[test]
    fn bad_box_length() {
        let text = EXAMPLE1.replace("\"box\": [[-1, 1]]}", "\"box\": [[-1, 1], [-1, 1]]}");
        let err = ConfigFile::from_json(&text).unwrap().build().unwrap_err();
        assert!(err.to_string().contains("input_set.box"), "{err}");
    }
}
