use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{McEstimate, ReachabilityBound, StepDiagnostics};
use crate::error::{Error, Result};
use crate::sdp::SolverStatus;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Terminal {
    /// The state entered the desired set.
    Reached,
    StepCap,
    /// The recorded inputs or disturbances ran out.
    Exhausted,
    SolverFailure {
        status: SolverStatus,
    },
    /// Strict mode saw an estimate below the required probability.
    ValidationFailure {
        step: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub state: Vec<f64>,
    pub input: Vec<f64>,
    pub disturbance: Vec<f64>,
    /// `P_D` at `state`.
    pub distance: f64,
    pub required_probability: f64,
    pub estimate: Option<McEstimate>,
    /// Absent for replayed inputs.
    pub diagnostics: Option<StepDiagnostics>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub controller: String,
    pub seed: u64,
    pub n_x: usize,
    pub n_u: usize,
    pub n_w: usize,
    pub steps: Vec<StepRecord>,
    pub final_state: Vec<f64>,
    pub terminal: Terminal,
    pub bound: Option<ReachabilityBound>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl TrajectoryLog {
    /// States `x_0 .. x_T`, the last one being the final state.
    pub fn states(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = self.steps.iter().map(|s| s.state.clone()).collect();
        out.push(self.final_state.clone());
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["k".to_string()];
        h.extend((1..=self.n_x).map(|i| format!("x{i}")));
        h.extend((1..=self.n_u).map(|i| format!("u{i}")));
        h.extend((1..=self.n_w).map(|i| format!("w{i}")));
        for c in [
            "distance",
            "required_probability",
            "mc_probability",
            "mc_halfwidth",
            "objective",
            "trace",
            "rank_ratio",
            "certified",
            "status",
        ] {
            h.push(c.to_string());
        }
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.csv_header())?;
        for s in &self.steps {
            let mut row = vec![s.k.to_string()];
            row.extend(s.state.iter().map(f64::to_string));
            row.extend(s.input.iter().map(f64::to_string));
            row.extend(s.disturbance.iter().map(f64::to_string));
            row.push(s.distance.to_string());
            row.push(s.required_probability.to_string());
            row.push(opt(s.estimate.map(|e| e.probability)));
            row.push(opt(s.estimate.map(|e| e.halfwidth)));
            let d = s.diagnostics.as_ref();
            row.push(opt(d.map(|d| d.objective)));
            row.push(opt(d.map(|d| d.trace)));
            row.push(opt(d.map(|d| d.rank_ratio)));
            row.push(d.map(|d| d.certified.to_string()).unwrap_or_default());
            row.push(
                d.map(|d| {
                    serde_json::to_value(d.status)
                        .map(|v| v.as_str().unwrap_or_default().to_string())
                })
                .transpose()?
                .unwrap_or_default(),
            );
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(Error::from)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}
