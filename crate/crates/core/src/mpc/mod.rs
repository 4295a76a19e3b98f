//! Receding-horizon execution.
//!
//! A [`Controller`] maps the current state to the first input of a planned
//! sequence. [`simulate`] applies it, draws the disturbance, propagates the
//! dynamics and logs each step until the state enters the desired set or a
//! step cap is hit.

mod bounds;
mod trajectory;
mod validate;

pub use self::bounds::{
    bound_probability, bound_steps, phat_limit, reachability_bound, ReachabilityBound,
};
pub use self::trajectory::{StepRecord, Terminal, TrajectoryLog};
pub use self::validate::{
    draw_disturbance, mc_validate, McEstimate, DISTURBANCE_STREAM, MIN_SAMPLES,
};

use serde::{Deserialize, Serialize};

use crate::dynamics::{required_probability, ProblemSpec};
use crate::error::{Error, Result};
use crate::extraction::{extract_control, DEFAULT_RANK_TOL};
use crate::relaxation::{build_relaxation, RelaxationConfig};
use crate::sdp::{solve, SolverSettings, SolverStatus};

pub const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub max_steps: usize,
    /// Level set for the reachability bound reported in the log.
    pub epsilon: f64,
    /// Monte Carlo samples per step; zero disables validation.
    pub samples: usize,
    /// Abort when an estimate falls more than three halfwidths below the
    /// required probability.
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_steps: 25,
            epsilon: 0.01,
            samples: DEFAULT_SAMPLES,
            strict: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 {
            return Err(Error::InvalidParameter(
                "max_steps must be at least 1".into(),
            ));
        }
        if self.samples != 0 && self.samples < MIN_SAMPLES {
            return Err(Error::InvalidParameter(format!(
                "samples must be 0 or at least {MIN_SAMPLES}, got {}",
                self.samples
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Solver-side facts about one planned step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub status: SolverStatus,
    pub iterations: usize,
    pub objective: f64,
    /// Trace of `M_r(y_u)` in the solver's scaled input coordinates.
    pub trace: f64,
    pub rank_ratio: f64,
    pub certified: bool,
    pub consistency: f64,
    pub required_probability: f64,
    /// The whole planned input sequence, in original units.
    pub planned_inputs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepPlan {
    /// First input of the plan, `n_u` entries.
    pub input: Vec<f64>,
    pub diagnostics: Option<StepDiagnostics>,
}

/// Builds, solves and reads the relaxation at `x_k`.
///
/// Fails with [`Error::Solver`] unless the solver reports an optimum. An
/// uncertified extraction is logged and its first moments are used anyway.
pub fn step(
    spec: &ProblemSpec,
    x_k: &[f64],
    cfg: &RelaxationConfig,
    settings: &SolverSettings,
    rank_tol: f64,
) -> Result<StepPlan> {
    if !spec.desired_set.contains_box(x_k) {
        log::warn!("state {x_k:?} lies outside the declared state box");
    }
    let relax = build_relaxation(spec, x_k, cfg)?;
    let sol = solve(&relax.problem, settings)?;
    if sol.status != SolverStatus::Optimal {
        return Err(Error::Solver { status: sol.status });
    }
    let y_u = relax.input_moments(&sol.x);
    let ext = extract_control(&y_u, relax.order, rank_tol)?;
    if !ext.certified {
        log::warn!(
            "moment matrix is not rank one (ratio {:.3e}); using first moments",
            ext.rank_ratio
        );
    }
    let planned = relax.scaling.inputs_to_original(&ext.u_star);
    Ok(StepPlan {
        input: planned[..spec.model.n_u].to_vec(),
        diagnostics: Some(StepDiagnostics {
            status: sol.status,
            iterations: sol.iterations,
            objective: sol.objective,
            trace: ext.trace,
            rank_ratio: ext.rank_ratio,
            certified: ext.certified,
            consistency: ext.consistency,
            required_probability: relax.required_probability,
            planned_inputs: planned,
        }),
    })
}

/// Input policy for the closed loop. `k` counts applied steps from zero.
pub trait Controller: Send + Sync {
    fn name(&self) -> &'static str;

    /// `Ok(None)` when the controller has nothing more to apply.
    fn control(&self, spec: &ProblemSpec, k: usize, x_k: &[f64]) -> Result<Option<StepPlan>>;
}

/// Solves the moment relaxation at every step.
#[derive(Clone, Debug, Default)]
pub struct MomentController {
    pub relaxation: RelaxationConfig,
    pub solver: SolverSettings,
    pub rank_tol: f64,
}

impl MomentController {
    pub fn new(relaxation: RelaxationConfig, solver: SolverSettings) -> Self {
        Self {
            relaxation,
            solver,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

impl Controller for MomentController {
    fn name(&self) -> &'static str {
        "moment-sdp"
    }

    fn control(&self, spec: &ProblemSpec, _k: usize, x_k: &[f64]) -> Result<Option<StepPlan>> {
        step(spec, x_k, &self.relaxation, &self.solver, self.rank_tol).map(Some)
    }
}

/// Applies a recorded input sequence.
#[derive(Clone, Debug, Default)]
pub struct ReplayController {
    pub inputs: Vec<Vec<f64>>,
}

impl Controller for ReplayController {
    fn name(&self) -> &'static str {
        "replay"
    }

    fn control(&self, _spec: &ProblemSpec, k: usize, _x_k: &[f64]) -> Result<Option<StepPlan>> {
        Ok(self.inputs.get(k).map(|u| StepPlan {
            input: u.clone(),
            diagnostics: None,
        }))
    }
}

/// What a controller of a given kind is built from.
#[derive(Clone, Debug, Default)]
pub struct ControllerOptions {
    pub relaxation: RelaxationConfig,
    pub solver: SolverSettings,
    pub rank_tol: Option<f64>,
    pub inputs: Vec<Vec<f64>>,
}

type Factory = fn(&ControllerOptions) -> Box<dyn Controller>;

static CONTROLLERS: &[(&str, Factory)] = &[
    ("moment-sdp", |o| {
        Box::new(MomentController {
            relaxation: o.relaxation.clone(),
            solver: o.solver.clone(),
            rank_tol: o.rank_tol.unwrap_or(DEFAULT_RANK_TOL),
        })
    }),
    ("replay", |o| {
        Box::new(ReplayController {
            inputs: o.inputs.clone(),
        })
    }),
];

pub fn controller_kinds() -> Vec<&'static str> {
    CONTROLLERS.iter().map(|(n, _)| *n).collect()
}

pub fn build_controller(name: &str, opts: &ControllerOptions) -> Result<Box<dyn Controller>> {
    CONTROLLERS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, f)| f(opts))
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "controller",
            name: name.to_string(),
            known: controller_kinds().join(", "),
        })
}

/// Where realized disturbances come from.
#[derive(Clone, Debug, PartialEq)]
pub enum DisturbanceSource {
    /// Sample `k` of the seeded disturbance stream.
    Seeded,
    Recorded(Vec<Vec<f64>>),
}

pub fn simulate(
    spec: &ProblemSpec,
    x0: &[f64],
    run: &RunConfig,
    controller: &dyn Controller,
    source: &DisturbanceSource,
    relaxation: &RelaxationConfig,
) -> Result<TrajectoryLog> {
    spec.validate()?;
    run.validate()?;
    let n_x = spec.model.n_x;
    if x0.len() != n_x {
        return Err(Error::DimensionMismatch {
            expected: n_x,
            got: x0.len(),
        });
    }
    let p0 = spec.distance(x0)?;
    let bound = if p0 > run.epsilon {
        Some(reachability_bound(run.epsilon, spec.alpha, spec.beta, p0)?)
    } else {
        None
    };
    let mut log = TrajectoryLog {
        controller: controller.name().to_string(),
        seed: run.seed,
        n_x,
        n_u: spec.model.n_u,
        n_w: spec.model.n_w,
        steps: Vec::new(),
        final_state: x0.to_vec(),
        terminal: Terminal::StepCap,
        bound,
    };
    let mut x = x0.to_vec();
    for k in 0..run.max_steps {
        let distance = spec.distance(&x)?;
        if distance <= 0.0 {
            log.terminal = Terminal::Reached;
            break;
        }
        let plan = match controller.control(spec, k, &x) {
            Ok(Some(p)) => p,
            Ok(None) => {
                log.terminal = Terminal::Exhausted;
                break;
            }
            Err(Error::Solver { status }) => {
                log::error!("step {k}: solver returned {status:?}; aborting the run");
                log.terminal = Terminal::SolverFailure { status };
                break;
            }
            Err(e) => return Err(e),
        };
        let w = match source {
            DisturbanceSource::Seeded => {
                draw_disturbance(spec, run.seed, DISTURBANCE_STREAM, k as u64)
            }
            DisturbanceSource::Recorded(seq) => match seq.get(k) {
                Some(w) => w.clone(),
                None => {
                    log.terminal = Terminal::Exhausted;
                    break;
                }
            },
        };
        let required = required_probability(spec, &x)?;
        let estimate = if run.samples > 0 {
            Some(mc_validate(
                spec,
                &x,
                &plan.input,
                run.samples,
                run.seed,
                DISTURBANCE_STREAM + 1 + k as u64,
                relaxation.sign,
            )?)
        } else {
            None
        };
        let next = spec.model.step(&x, &plan.input, &w)?;
        let undershoot = estimate.is_some_and(|e| e.probability < required - 3.0 * e.halfwidth);
        log.steps.push(StepRecord {
            k,
            state: x.clone(),
            input: plan.input,
            disturbance: w,
            distance,
            required_probability: required,
            estimate,
            diagnostics: plan.diagnostics,
        });
        x = next;
        log.final_state = x.clone();
        if undershoot {
            log::warn!("step {k}: estimated probability below the required {required:.4}");
            if run.strict {
                log.terminal = Terminal::ValidationFailure { step: k };
                return Ok(log);
            }
        }
    }
    if log.terminal == Terminal::StepCap && spec.distance(&x)? <= 0.0 {
        log.terminal = Terminal::Reached;
    }
    Ok(log)
}
