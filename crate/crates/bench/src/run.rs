use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use eddy_pint::eddy::{make_propagator, DiscreteSystem, EddyPropagator, SourceHandling};
use eddy_pint::parallel::{estimate_speedup, WorkReportRow};
use eddy_pint::propagator::Counted;
use eddy_pint::{
    sequential_solve, ConvergenceRecord, Dahlquist, Forcing, Mgrit, MgritError, Propagator, SpaceTimeVector,
    TemporalHierarchy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{DahlquistForcing, Problem, RunConfig};
use crate::RunError;

/// Propagators, initial state and forcing of a configured problem.
enum Setup {
    Dahlquist { prop: Dahlquist, forcing: Forcing },
    Eddy(Box<DiscreteSystem>),
}

impl Setup {
    fn new(cfg: &RunConfig, hierarchy: &TemporalHierarchy) -> Result<Self, RunError> {
        Ok(match cfg.problem {
            Problem::Dahlquist => {
                let d = &cfg.dahlquist;
                let grid = hierarchy.finest();
                let forcing = match d.forcing {
                    DahlquistForcing::None => Forcing::Zero,
                    DahlquistForcing::Sine => {
                        Forcing::from_fn(grid, |t| vec![grid.dt * d.amplitude * (d.omega * t).sin()])
                    }
                    DahlquistForcing::Random => {
                        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                        let mut g = vec![vec![0.0]];
                        g.extend(
                            (1..grid.num_points()).map(|_| vec![grid.dt * d.amplitude * rng.gen_range(-1.0..=1.0)]),
                        );
                        Forcing::Points(g)
                    }
                };
                Setup::Dahlquist {
                    prop: Dahlquist::new(d.lambda, d.u0),
                    forcing,
                }
            }
            Problem::EddyLinear | Problem::EddyNonlinear => Setup::Eddy(Box::new(
                cfg.eddy().build().map_err(|e| RunError::Validation(e.to_string()))?,
            )),
        })
    }

    fn initial_state(&self) -> Vec<f64> {
        match self {
            Setup::Dahlquist { prop, .. } => prop.initial_state(),
            Setup::Eddy(sys) => vec![0.0; sys.n_dof()],
        }
    }

    fn forcing(&self) -> &Forcing {
        match self {
            Setup::Dahlquist { forcing, .. } => forcing,
            Setup::Eddy(_) => &Forcing::Zero,
        }
    }

    fn eddy_propagators(&self, cfg: &RunConfig, h: &TemporalHierarchy) -> Result<Vec<EddyPropagator<'_>>, RunError> {
        match self {
            Setup::Dahlquist { .. } => Ok(Vec::new()),
            Setup::Eddy(sys) => make_propagator(sys, h, cfg.newton, SourceHandling::Internal)
                .map_err(|e| RunError::Solver(e.to_string())),
        }
    }
}

/// One row of `sequential.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRow {
    pub step: usize,
    pub t: f64,
    pub l2_norm: f64,
    pub max_abs: f64,
}

fn step_rows(grid_t: impl Fn(usize) -> f64, u: &SpaceTimeVector) -> Vec<StepRow> {
    u.iter()
        .enumerate()
        .map(|(i, v)| StepRow {
            step: i,
            t: grid_t(i),
            l2_norm: v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            max_abs: v.iter().fold(0.0, |m, x| m.max(x.abs())),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequentialReport {
    pub problem: Problem,
    pub nt: usize,
    pub state_dim: usize,
    /// Propagator applications; equals `nt`.
    pub phi_count: u64,
    pub final_t: f64,
    pub final_l2_norm: f64,
    pub final_max_abs: f64,
    #[serde(skip)]
    pub rows: Vec<StepRow>,
    #[serde(skip)]
    pub solution: SpaceTimeVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MgritReport {
    pub problem: Problem,
    pub nt: usize,
    pub factors: Vec<usize>,
    pub relaxation: String,
    pub num_workers: usize,
    pub iterations: usize,
    pub converged: bool,
    pub initial_residual: f64,
    pub final_residual: f64,
    /// Per-iteration fine plus coarse propagator applications, averaged.
    pub phi_per_iteration: f64,
    /// Max over time points of the max-norm difference to sequential stepping.
    pub discrepancy: Option<f64>,
    pub speedup: Vec<WorkReportRow>,
    #[serde(skip)]
    pub record: ConvergenceRecord,
    #[serde(skip)]
    pub solution: SpaceTimeVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub sequential: SequentialReport,
    pub mgrit: MgritReport,
    pub discrepancy: f64,
    /// Largest estimated speedup over `model_workers`, with its worker count.
    pub best_speedup: f64,
    pub best_workers: usize,
    /// Smallest model worker count with estimated speedup above one.
    pub crossover_workers: Option<usize>,
}

fn sequential(cfg: &RunConfig, setup: &Setup, h: &TemporalHierarchy) -> Result<SequentialReport, RunError> {
    let grid = h.finest();
    let u0 = setup.initial_state();
    let eddy = setup.eddy_propagators(cfg, h)?;
    let inner: &dyn Propagator = match setup {
        Setup::Dahlquist { prop, .. } => prop,
        Setup::Eddy(_) => &eddy[0],
    };
    let counted = Counted::new(inner, 1);
    let solution =
        sequential_solve(&counted, grid, &u0, setup.forcing()).map_err(|e| RunError::Solver(e.to_string()))?;
    let rows = step_rows(|i| grid.time(i), &solution);
    let last = rows.last().expect("at least one point").clone();
    Ok(SequentialReport {
        problem: cfg.problem,
        nt: cfg.nt,
        state_dim: u0.len(),
        phi_count: counted.count(0),
        final_t: last.t,
        final_l2_norm: last.l2_norm,
        final_max_abs: last.max_abs,
        rows,
        solution,
    })
}

fn mgrit(cfg: &RunConfig, setup: &Setup, h: &TemporalHierarchy) -> Result<MgritReport, RunError> {
    let u0 = setup.initial_state();
    let eddy = setup.eddy_propagators(cfg, h)?;
    let props: Vec<&dyn Propagator> = match setup {
        Setup::Dahlquist { prop, .. } => vec![prop as &dyn Propagator; h.num_levels()],
        Setup::Eddy(_) => eddy.iter().map(|p| p as &dyn Propagator).collect(),
    };
    let solver = Mgrit::new(h, props, cfg.mgrit_options()).map_err(|e| RunError::Validation(e.to_string()))?;
    let (solution, record) = solver.solve(&u0, setup.forcing()).map_err(|e| match e {
        MgritError::Propagation(p) => RunError::Solver(p.to_string()),
        other => RunError::Validation(other.to_string()),
    })?;
    let k = record.iterations();
    let phi: u64 = record.fine_phi.iter().chain(&record.coarse_phi).sum();
    Ok(MgritReport {
        problem: cfg.problem,
        nt: cfg.nt,
        factors: cfg.factors.clone(),
        relaxation: format!("{:?}", solver.relaxation()),
        num_workers: cfg.num_workers,
        iterations: k,
        converged: record.converged,
        initial_residual: record.initial_residual,
        final_residual: record.final_residual(),
        phi_per_iteration: if k == 0 { 0.0 } else { phi as f64 / k as f64 },
        discrepancy: None,
        speedup: record.work.report(&cfg.model_workers),
        record,
        solution,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| RunError::Io(dir.to_path_buf(), e.to_string()))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| RunError::Io(path.to_path_buf(), e.to_string()))
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), RunError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r)
            .map_err(|e| RunError::Io(path.to_path_buf(), e.to_string()))?;
    }
    w.flush().map_err(|e| RunError::Io(path.to_path_buf(), e.to_string()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| RunError::Io(path.to_path_buf(), e.to_string()))
}

fn write_effective_config(cfg: &RunConfig) -> Result<PathBuf, RunError> {
    let path = cfg.outputs.path(&cfg.outputs.effective_config);
    create(&path)?;
    write_json(&path, cfg)?;
    Ok(path)
}

fn write_mgrit_outputs(cfg: &RunConfig, rep: &MgritReport) -> Result<(), RunError> {
    let conv = cfg.outputs.path(&cfg.outputs.convergence_csv);
    rep.record
        .write_csv(create(&conv)?)
        .map_err(|e| RunError::Io(conv.clone(), e.to_string()))?;
    let work = cfg.outputs.path(&cfg.outputs.work_model_csv);
    rep.record
        .work
        .write_csv(&cfg.model_workers, create(&work)?)
        .map_err(|e| RunError::Io(work.clone(), e.to_string()))
}

fn prepare(cfg: &RunConfig) -> Result<(TemporalHierarchy, Setup), RunError> {
    cfg.validate()?;
    let h = cfg.hierarchy()?;
    let setup = Setup::new(cfg, &h)?;
    write_effective_config(cfg)?;
    Ok((h, setup))
}

/// Time-steps sequentially and writes `sequential.csv` and the summary.
pub fn run_sequential(cfg: &RunConfig) -> Result<SequentialReport, RunError> {
    let (h, setup) = prepare(cfg)?;
    let rep = sequential(cfg, &setup, &h)?;
    write_csv_rows(&cfg.outputs.path(&cfg.outputs.sequential_csv), &rep.rows)?;
    write_json(&cfg.outputs.path(&cfg.outputs.summary_json), &rep)?;
    Ok(rep)
}

/// Runs MGRIT and writes the convergence and work-model CSVs and the summary.
/// A run that stops at `max_iters` still writes everything, then returns
/// [`RunError::NotConverged`].
pub fn run_mgrit(cfg: &RunConfig) -> Result<MgritReport, RunError> {
    let (h, setup) = prepare(cfg)?;
    let mut rep = mgrit(cfg, &setup, &h)?;
    if cfg.reference {
        let seq = sequential(cfg, &setup, &h)?;
        rep.discrepancy = Some(rep.solution.max_abs_diff(&seq.solution));
    }
    write_mgrit_outputs(cfg, &rep)?;
    write_json(&cfg.outputs.path(&cfg.outputs.summary_json), &rep)?;
    finish(rep)
}

fn finish<T: HasConvergence>(rep: T) -> Result<T, RunError> {
    let (converged, iterations, residual) = rep.convergence();
    if converged {
        Ok(rep)
    } else {
        Err(RunError::NotConverged { iterations, residual })
    }
}

trait HasConvergence {
    fn convergence(&self) -> (bool, usize, f64);
}

impl HasConvergence for MgritReport {
    fn convergence(&self) -> (bool, usize, f64) {
        (self.converged, self.iterations, self.final_residual)
    }
}

impl HasConvergence for CompareReport {
    fn convergence(&self) -> (bool, usize, f64) {
        self.mgrit.convergence()
    }
}

/// Runs both solvers and reports their discrepancy and the modelled speedup.
pub fn compare(cfg: &RunConfig) -> Result<CompareReport, RunError> {
    let (h, setup) = prepare(cfg)?;
    let seq = sequential(cfg, &setup, &h)?;
    let mut mg = mgrit(cfg, &setup, &h)?;
    let discrepancy = mg.solution.max_abs_diff(&seq.solution);
    mg.discrepancy = Some(discrepancy);
    write_csv_rows(&cfg.outputs.path(&cfg.outputs.sequential_csv), &seq.rows)?;
    write_mgrit_outputs(cfg, &mg)?;
    let iters = mg.iterations.max(1);
    let (best_workers, best_speedup) = cfg
        .model_workers
        .iter()
        .map(|&p| (p, estimate_speedup(&mg.record.work, p, iters)))
        .fold((1, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    let crossover_workers = mg
        .speedup
        .iter()
        .filter(|r| r.estimated_speedup > 1.0)
        .map(|r| r.workers)
        .min();
    let rep = CompareReport {
        sequential: seq,
        mgrit: mg,
        discrepancy,
        best_speedup,
        best_workers,
        crossover_workers,
    };
    write_json(&cfg.outputs.path(&cfg.outputs.summary_json), &rep)?;
    finish(rep)
}
