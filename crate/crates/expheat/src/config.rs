//! JSON experiment configuration: a single document describing the problem,
//! initial data, time grid, solver controls, and analysis requests, with
//! validation routed through the module constructors.

use std::path::{Path, PathBuf};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::{generate, DataRecipe};
use crate::error::{Error, Result};
use crate::grid::make_grid;
use crate::nonlin::NonlinearitySpec;
use crate::semigroup::DiffusionSpec;
use crate::solver::{ProblemSpec, SolverConfig, SolverMode, TimeGrid};

/// An L^q index that serializes infinity as the string "inf".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QVal(pub f64);

impl Serialize for QVal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for QVal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(QVal(v)),
            Raw::Str(s) if s == "inf" => Ok(QVal(f64::INFINITY)),
            Raw::Str(s) => Err(D::Error::custom(format!("bad q value {s:?}; use a number or \"inf\""))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub n: usize,
    pub theta: f64,
    pub r: f64,
    /// Box half-width L.
    pub half_width: f64,
    /// Samples per axis N (power of two >= 16).
    pub points_per_axis: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t0: f64,
    #[serde(default = "default_ramp_steps")]
    pub ramp_steps: usize,
    pub rho: f64,
    pub t_final: f64,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
}

fn default_ramp_steps() -> usize {
    16
}

fn default_substeps() -> usize {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub mode: SolverMode,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub blowup_threshold: f64,
    pub boundary_mass_tol: f64,
    pub nonlinearity_enabled: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            mode: d.mode,
            picard_tol: d.picard_tol,
            picard_max_iter: d.picard_max_iter,
            blowup_threshold: d.blowup_threshold,
            boundary_mass_tol: d.boundary_mass_tol,
            nonlinearity_enabled: d.nonlinearity_enabled,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub q_list: Vec<QVal>,
    /// Fit window (t_min, t_max); defaults to [t_final/100, t_final].
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    /// L^p class of the initial datum, feeding p* for the theoretical rate.
    pub p: f64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Write binary state snapshots alongside the norm CSV.
    #[serde(default)]
    pub snapshots: bool,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            q_list: vec![QVal(1.0), QVal(2.0), QVal(4.0), QVal(f64::INFINITY)],
            window: None,
            p: 1.0,
            out_dir: None,
            snapshots: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    pub data: DataRecipe,
    pub time: TimeSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Run every module constructor once so config errors surface at load
    /// time rather than mid-run.
    pub fn validate(&self) -> Result<()> {
        let (spec, tg, solver) = self.build()?;
        let _ = (spec, tg);
        solver.validate()?;
        if let Some((lo, hi)) = self.analysis.window {
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::Config(format!("analysis.window ({lo}, {hi}) is not a valid interval")));
            }
        }
        if self.analysis.q_list.is_empty() {
            return Err(Error::Config("analysis.q_list must not be empty".into()));
        }
        Ok(())
    }

    /// Materialize the problem, time grid, and solver config.
    pub fn build(&self) -> Result<(ProblemSpec, TimeGrid, SolverConfig)> {
        let grid = make_grid(self.problem.n, self.problem.points_per_axis, self.problem.half_width)?;
        let diffusion = DiffusionSpec::new(self.problem.theta, self.problem.n)?;
        let nonlin = NonlinearitySpec::new(self.problem.r, self.problem.theta, self.problem.n)?;
        let initial = generate(&self.data, &grid)?;
        let spec = ProblemSpec::new(grid, diffusion, nonlin, initial)?;
        let tg = TimeGrid::ramp_geometric(
            self.time.t0,
            self.time.ramp_steps,
            self.time.rho,
            self.time.t_final,
            self.time.substeps,
        )?;
        let mut norm_qs: Vec<f64> = self.analysis.q_list.iter().map(|q| q.0).collect();
        // the profile diagnostics always want q = 1; cache it even if the
        // analysis section did not request it
        if !norm_qs.contains(&1.0) {
            norm_qs.insert(0, 1.0);
        }
        let solver = SolverConfig {
            mode: self.solver.mode,
            picard_tol: self.solver.picard_tol,
            picard_max_iter: self.solver.picard_max_iter,
            blowup_threshold: self.solver.blowup_threshold,
            boundary_mass_tol: self.solver.boundary_mass_tol,
            nonlinearity_enabled: self.solver.nonlinearity_enabled,
            norm_qs,
        };
        Ok((spec, tg, solver))
    }

    /// Fit window, defaulting to the last two decades.
    pub fn window(&self) -> (f64, f64) {
        self.analysis
            .window
            .unwrap_or_else(|| crate::decay::default_fit_window(self.time.t_final))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_json() -> &'static str {
        r#"{
          "problem": {"n": 1, "theta": 2.0, "r": 2.0, "half_width": 32.0, "points_per_axis": 256},
          "data": {"kind": "gaussian_bump", "amplitude": 0.05, "width": 1.0},
          "time": {"t0": 0.01, "rho": 1.15, "t_final": 10.0},
          "analysis": {"q_list": [2, 4, "inf"], "p": 1.0}
        }"#
    }

    #[test]
    fn parse_build_and_round_trip() {
        let cfg = ExperimentConfig::from_json(sample_json()).unwrap();
        assert_eq!(cfg.time.ramp_steps, 16);
        assert_eq!(cfg.time.substeps, 2);
        assert!(cfg.analysis.q_list[2].0.is_infinite());
        let (spec, tg, solver) = cfg.build().unwrap();
        assert_eq!(spec.grid.points_per_axis(), 256);
        assert!(tg.points().last().unwrap() - 10.0 < 1e-9);
        assert!(solver.norm_qs.contains(&1.0));

        // serialize -> parse identity
        let text = cfg.to_json().unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        let bad = sample_json().replace("\"t0\": 0.01", "\"t0\": 0.01, \"bogus\": 1");
        assert!(ExperimentConfig::from_json(&bad).is_err());
        let bad = sample_json().replace("\"points_per_axis\": 256", "\"points_per_axis\": 100");
        assert!(ExperimentConfig::from_json(&bad).is_err());
        let bad = sample_json().replace("\"rho\": 1.15", "\"rho\": 2.5");
        assert!(ExperimentConfig::from_json(&bad).is_err());
        assert!(ExperimentConfig::from_json("{ not json").is_err());
    }

    #[test]
    fn default_window_is_last_two_decades() {
        let cfg = ExperimentConfig::from_json(sample_json()).unwrap();
        assert_eq!(cfg.window(), (0.1, 10.0));
    }
}
