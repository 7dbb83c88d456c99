use std::path::{Path, PathBuf};

use eddy_pint::eddy::{CoaxGeometry, EddyConfig, Excitation, NewtonOptions};
use eddy_pint::time_grid::build_hierarchy;
use eddy_pint::{MgritOptions, Relaxation, TemporalHierarchy};
use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    Dahlquist,
    EddyLinear,
    EddyNonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DahlquistForcing {
    None,
    /// Source `amplitude * sin(omega t)`, entering each step as `dt * f(t_i)`.
    Sine,
    /// Source values drawn uniformly from `[-amplitude, amplitude]` per step, seeded by `seed`.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DahlquistConfig {
    pub lambda: f64,
    pub u0: f64,
    pub forcing: DahlquistForcing,
    pub amplitude: f64,
    pub omega: f64,
}

impl Default for DahlquistConfig {
    fn default() -> Self {
        Self {
            lambda: -1.0,
            u0: 1.0,
            forcing: DahlquistForcing::None,
            amplitude: 0.1,
            omega: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputPaths {
    pub dir: PathBuf,
    pub sequential_csv: String,
    pub convergence_csv: String,
    pub work_model_csv: String,
    pub summary_json: String,
    pub effective_config: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            sequential_csv: "sequential.csv".into(),
            convergence_csv: "convergence.csv".into(),
            work_model_csv: "work_model.csv".into(),
            summary_json: "summary.json".into(),
            effective_config: "effective_config.json".into(),
        }
    }
}

impl OutputPaths {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

/// One benchmark run. Every field has a default, so `{}` is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    pub t_end: f64,
    /// Number of fine time intervals.
    pub nt: usize,
    /// Coarsening factor between consecutive levels, finest first.
    pub factors: Vec<usize>,
    /// `null` picks F for two levels and FCF for deeper hierarchies.
    pub relaxation: Option<Relaxation>,
    pub halt_tol: f64,
    pub max_iters: usize,
    pub num_workers: usize,
    /// Worker counts for which the work model reports a speedup estimate.
    pub model_workers: Vec<usize>,
    /// `run-mgrit` also time-steps sequentially and reports the discrepancy.
    pub reference: bool,
    pub seed: u64,
    pub dahlquist: DahlquistConfig,
    pub mesh: CoaxGeometry,
    pub source: Excitation,
    /// Shield conductivity in S/m.
    pub sigma: f64,
    pub lz: f64,
    /// Two-column `B H` file; the built-in steel curve when absent.
    pub bh_table: Option<String>,
    pub newton: NewtonOptions,
    pub outputs: OutputPaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        let eddy = EddyConfig::default();
        Self {
            problem: Problem::EddyNonlinear,
            t_end: 0.2,
            nt: 2048,
            factors: vec![16],
            relaxation: None,
            halt_tol: 1e-8,
            max_iters: 50,
            num_workers: 1,
            model_workers: (0..=10).map(|e| 1 << e).collect(),
            reference: false,
            seed: 0,
            dahlquist: DahlquistConfig::default(),
            mesh: eddy.geometry,
            source: eddy.source,
            sigma: eddy.sigma,
            lz: eddy.lz,
            bh_table: None,
            newton: NewtonOptions::default(),
            outputs: OutputPaths::default(),
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        serde_json::from_str(text).map_err(|e| RunError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Validation(format!("cannot read config '{}': {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(w) = o.workers {
            self.num_workers = w;
        }
        if let Some(out) = &o.out {
            self.outputs.dir = out.clone();
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn eddy(&self) -> EddyConfig {
        EddyConfig {
            geometry: self.mesh.clone(),
            nonlinear: self.problem == Problem::EddyNonlinear,
            sigma: self.sigma,
            lz: self.lz,
            source: self.source,
            bh_table: self.bh_table.clone(),
        }
    }

    pub fn hierarchy(&self) -> Result<TemporalHierarchy, RunError> {
        build_hierarchy(0.0, self.t_end, self.nt, &self.factors).map_err(|e| RunError::Validation(e.to_string()))
    }

    pub fn mgrit_options(&self) -> MgritOptions {
        MgritOptions {
            relaxation: self.relaxation,
            halt_tol: self.halt_tol,
            max_iters: self.max_iters,
            num_workers: self.num_workers,
        }
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Validation(m));
        if self.nt == 0 {
            return bad("nt must be at least 1".into());
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        self.hierarchy()?;
        self.mgrit_options()
            .validate()
            .map_err(|e| RunError::Validation(e.to_string()))?;
        if self.model_workers.contains(&0) {
            return bad("model_workers entries must be positive".into());
        }
        if !(self.newton.rel_tol > 0.0) || self.newton.max_iters == 0 {
            return bad("newton needs rel_tol > 0 and max_iters >= 1".into());
        }
        match self.problem {
            Problem::Dahlquist => {
                let d = &self.dahlquist;
                if ![d.lambda, d.u0, d.amplitude, d.omega].iter().all(|v| v.is_finite()) {
                    return bad("dahlquist parameters must be finite".into());
                }
                let dt = self.t_end / self.nt as f64;
                if self
                    .factors
                    .iter()
                    .scan(dt, |h, &m| {
                        let cur = *h;
                        *h *= m as f64;
                        Some(cur)
                    })
                    .chain(std::iter::once(dt * self.factors.iter().product::<usize>() as f64))
                    .any(|h| 1.0 - d.lambda * h == 0.0)
                {
                    return bad("lambda * dt = 1 on some level makes the step singular".into());
                }
            }
            Problem::EddyLinear | Problem::EddyNonlinear => {
                self.eddy().build().map_err(|e| RunError::Validation(e.to_string()))?;
            }
        }
        Ok(())
    }
}
