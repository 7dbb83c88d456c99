//! Multigrid reduction in time with full approximation storage, and Parareal.
//!
//! The fine problem is `u_0 = u0`, `u_i = step_0(u_{i-1}) + g_i`. Each level
//! `l` keeps every `m_l`-th point of level `l - 1` and uses the same scheme
//! with the larger step (rediscretization). Coarse equations are formed with
//! FAS so the same cycle handles nonlinear propagators.

mod ops;
mod parareal;
mod record;

pub use ops::{c_relax, f_relax, fas_coarse_forcing, residual, restrict_injection, LevelContext};
pub use parareal::parareal_iterate;
pub use record::ConvergenceRecord;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parallel::{partition, CycleWork, Executor, WorkModel};
use crate::propagator::{sequential_solve, PropagationError, Propagator};
use crate::space_time::{Forcing, SpaceTimeVector};
use crate::time_grid::TemporalHierarchy;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MgritError {
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error("{got} propagators supplied for a {levels}-level hierarchy")]
    PropagatorCount { levels: usize, got: usize },
    #[error("initial state has {got} entries, propagators expect {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid options: {0}")]
    Options(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relaxation {
    /// F-relaxation only.
    F,
    /// F-, then C-, then F-relaxation.
    FCF,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MgritOptions {
    /// `None` picks F for two-level and FCF for deeper hierarchies.
    pub relaxation: Option<Relaxation>,
    /// Halting tolerance on the 2-norm of the finest-level C-point residual.
    pub halt_tol: f64,
    pub max_iters: usize,
    pub num_workers: usize,
}

impl Default for MgritOptions {
    fn default() -> Self {
        Self {
            relaxation: None,
            halt_tol: 1e-8,
            max_iters: 50,
            num_workers: 1,
        }
    }
}

impl MgritOptions {
    pub fn validate(&self) -> Result<(), MgritError> {
        if !(self.halt_tol > 0.0) {
            return Err(MgritError::Options(format!(
                "halt_tol must be positive, got {}",
                self.halt_tol
            )));
        }
        if self.max_iters == 0 {
            return Err(MgritError::Options("max_iters must be at least 1".into()));
        }
        if self.num_workers == 0 {
            return Err(MgritError::Options("num_workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn relaxation_for(&self, num_levels: usize) -> Relaxation {
        self.relaxation.unwrap_or(if num_levels <= 2 {
            Relaxation::F
        } else {
            Relaxation::FCF
        })
    }
}

/// Wall clock that degrades to zero on targets without a monotonic clock.
struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

/// A configured multilevel solver.
pub struct Mgrit<'a> {
    hierarchy: &'a TemporalHierarchy,
    props: Vec<&'a dyn Propagator>,
    exec: Executor,
    relaxation: Relaxation,
    options: MgritOptions,
}

impl<'a> Mgrit<'a> {
    /// `props[l]` is the propagator of level `l`.
    pub fn new(
        hierarchy: &'a TemporalHierarchy,
        props: Vec<&'a dyn Propagator>,
        options: MgritOptions,
    ) -> Result<Self, MgritError> {
        options.validate()?;
        if props.len() != hierarchy.num_levels() {
            return Err(MgritError::PropagatorCount {
                levels: hierarchy.num_levels(),
                got: props.len(),
            });
        }
        let sizes: Vec<usize> = hierarchy.grids().iter().map(|g| g.num_intervals).collect();
        Ok(Self {
            exec: Executor::new(partition(&sizes, options.num_workers)),
            relaxation: options.relaxation_for(hierarchy.num_levels()),
            hierarchy,
            props,
            options,
        })
    }

    /// Same propagator object on every level.
    pub fn uniform(
        hierarchy: &'a TemporalHierarchy,
        prop: &'a dyn Propagator,
        options: MgritOptions,
    ) -> Result<Self, MgritError> {
        Self::new(hierarchy, vec![prop; hierarchy.num_levels()], options)
    }

    pub fn relaxation(&self) -> Relaxation {
        self.relaxation
    }

    pub fn executor(&self) -> &Executor {
        &self.exec
    }

    pub fn context(&self, level: usize) -> LevelContext<'a> {
        let m = if level + 1 < self.hierarchy.num_levels() {
            self.hierarchy.factor(level)
        } else {
            1
        };
        LevelContext::new(*self.hierarchy.grid(level), m, self.props[level])
    }

    fn is_coarsest(&self, level: usize) -> bool {
        level + 1 == self.hierarchy.num_levels()
    }

    fn relax(
        &self,
        level: usize,
        u: &mut SpaceTimeVector,
        g: &Forcing,
        work: &mut CycleWork,
    ) -> Result<(), MgritError> {
        let ctx = self.context(level);
        let mut n = f_relax(&self.exec, &ctx, u, g)?;
        if self.relaxation == Relaxation::FCF {
            n += c_relax(&self.exec, &ctx, u, g)?;
            n += f_relax(&self.exec, &ctx, u, g)?;
        }
        work.add_parallel(level, level, n);
        Ok(())
    }

    /// Restricts `u` and its C-point residual `r` to `level + 1`, solves the
    /// FAS coarse problem (recursively, or by time stepping on the coarsest
    /// level) and adds the coarse correction to the C-points of `u`.
    fn coarse_correct(
        &self,
        level: usize,
        u: &mut SpaceTimeVector,
        r: &SpaceTimeVector,
        work: &mut CycleWork,
    ) -> Result<(), MgritError> {
        let m = self.hierarchy.factor(level);
        let coarse_ctx = self.context(level + 1);
        let v = restrict_injection(u, m);
        let (g_c, n) = fas_coarse_forcing(&self.exec, &coarse_ctx, &v, r)?;
        work.add_parallel(level, level + 1, n);

        let w = if self.is_coarsest(level + 1) {
            work.sequential += coarse_ctx.grid.num_intervals as u64;
            sequential_solve(coarse_ctx.prop, &coarse_ctx.grid, v.get(0), &g_c)?
        } else {
            let mut w = v.clone();
            self.v_cycle(level + 1, &mut w, &g_c, work)?;
            w
        };

        for j in 1..v.len() {
            let target = u.get_mut(j * m);
            for ((x, wj), vj) in target.iter_mut().zip(w.get(j)).zip(v.get(j)) {
                *x += wj - vj;
            }
        }
        Ok(())
    }

    /// One V-cycle on `level`: relaxation, residual, restriction, coarse
    /// solve, C-point correction and a closing F-relaxation. On the coarsest
    /// level this is a sequential solve.
    pub fn v_cycle(
        &self,
        level: usize,
        u: &mut SpaceTimeVector,
        g: &Forcing,
        work: &mut CycleWork,
    ) -> Result<(), MgritError> {
        if self.is_coarsest(level) {
            let ctx = self.context(level);
            work.sequential += ctx.grid.num_intervals as u64;
            *u = sequential_solve(ctx.prop, &ctx.grid, u.get(0), g)?;
            return Ok(());
        }
        self.relax(level, u, g, work)?;
        let (r, n) = residual(&self.exec, &self.context(level), u, g)?;
        work.add_parallel(level, level, n);
        self.coarse_correct(level, u, &r, work)?;
        let n = f_relax(&self.exec, &self.context(level), u, g)?;
        work.add_parallel(level, level, n);
        Ok(())
    }

    /// Residual 2-norm of a C-point residual vector, reduced over the
    /// workers owning the coarse points.
    fn residual_norm(&self, level: usize, r: &SpaceTimeVector) -> f64 {
        let blocks: Vec<Vec<Vec<f64>>> = self
            .exec
            .partition()
            .ranges(level + 1)
            .iter()
            .map(|rg| rg.clone().map(|j| r.get(j).to_vec()).collect())
            .collect();
        crate::parallel::global_residual_norm(&blocks)
    }

    /// Iterates V-cycles from the initial guess `u_i = u0` until the finest
    /// C-point residual drops below `halt_tol` or `max_iters` is reached.
    ///
    /// The returned solution satisfies every F-point equation exactly.
    /// Non-convergence is reported through `record.converged`.
    pub fn solve(&self, u0: &[f64], forcing: &Forcing) -> Result<(SpaceTimeVector, ConvergenceRecord), MgritError> {
        self.solve_observed(u0, forcing, |_, _| {})
    }

    /// [`Mgrit::solve`], calling `observe(k, u)` with the finest-level
    /// iterate after every iteration `k = 1, 2, ...`.
    pub fn solve_observed<F>(
        &self,
        u0: &[f64],
        forcing: &Forcing,
        mut observe: F,
    ) -> Result<(SpaceTimeVector, ConvergenceRecord), MgritError>
    where
        F: FnMut(usize, &SpaceTimeVector),
    {
        let expected = self.props[0].state_dim();
        if u0.len() != expected {
            return Err(MgritError::Dimension {
                expected,
                got: u0.len(),
            });
        }
        let levels = self.hierarchy.num_levels();
        let sizes: Vec<usize> = self.hierarchy.grids().iter().map(|g| g.num_intervals).collect();
        let mut work = WorkModel::new(sizes);
        let mut u = SpaceTimeVector::constant(self.hierarchy.finest(), u0);

        if levels == 1 {
            let clock = Stopwatch::start();
            let mut cycle = CycleWork::new(1);
            self.v_cycle(0, &mut u, forcing, &mut cycle)?;
            let fine = cycle.per_level()[0];
            work.cycles.push(cycle);
            let record = ConvergenceRecord {
                initial_residual: f64::NAN,
                residual_norms: vec![0.0],
                fine_phi: vec![fine],
                coarse_phi: vec![0],
                wall_seconds: vec![clock.seconds()],
                converged: true,
                work,
            };
            return Ok((u, record));
        }

        let mut setup = CycleWork::new(levels);
        self.relax(0, &mut u, forcing, &mut setup)?;
        let (mut r, n) = residual(&self.exec, &self.context(0), &u, forcing)?;
        setup.add_parallel(0, 0, n);
        work.setup = setup;
        let initial_residual = self.residual_norm(0, &r);

        let mut record = ConvergenceRecord {
            initial_residual,
            residual_norms: Vec::new(),
            fine_phi: Vec::new(),
            coarse_phi: Vec::new(),
            wall_seconds: Vec::new(),
            converged: false,
            work: WorkModel::new(Vec::new()),
        };

        for k in 1..=self.options.max_iters {
            let clock = Stopwatch::start();
            let mut cycle = CycleWork::new(levels);
            // The closing F-relaxation of the V-cycle coincides with the
            // next cycle's first F-relaxation, so it is done once.
            self.coarse_correct(0, &mut u, &r, &mut cycle)?;
            self.relax(0, &mut u, forcing, &mut cycle)?;
            let (r_new, n) = residual(&self.exec, &self.context(0), &u, forcing)?;
            cycle.add_parallel(0, 0, n);
            r = r_new;
            let norm = self.residual_norm(0, &r);

            let per_level = cycle.per_level();
            record.residual_norms.push(norm);
            record.fine_phi.push(per_level[0]);
            record.coarse_phi.push(per_level[1..].iter().sum());
            record.wall_seconds.push(clock.seconds());
            work.cycles.push(cycle);
            observe(k, &u);
            if norm < self.options.halt_tol {
                record.converged = true;
                break;
            }
        }
        record.work = work;
        Ok((u, record))
    }
}

/// Convenience wrapper around [`Mgrit::new`] and [`Mgrit::solve`].
pub fn solve(
    hierarchy: &TemporalHierarchy,
    props: Vec<&dyn Propagator>,
    u0: &[f64],
    forcing: &Forcing,
    options: &MgritOptions,
) -> Result<(SpaceTimeVector, ConvergenceRecord), MgritError> {
    Mgrit::new(hierarchy, props, options.clone())?.solve(u0, forcing)
}
