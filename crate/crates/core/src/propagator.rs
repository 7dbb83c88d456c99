//! One-step time propagators and sequential time stepping.
//!
//! A propagator advances a state over one step of a given level:
//! `u_out = step(level, t_from, dt, u_in)`. Forcing `g_i` is added after the
//! step, so the fine problem reads `u_i = step(u_{i-1}) + g_i`.

use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::space_time::{Forcing, SpaceTimeVector};
use crate::time_grid::TemporalGrid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("singular step: {0}")]
    Singular(String),
    #[error("nonlinear iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("state has {got} entries, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

/// Failure of a propagator application at a specific point of a time grid.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("step into point {index} on level {level} failed: {source}")]
pub struct PropagationError {
    pub level: usize,
    pub index: usize,
    #[source]
    pub source: StepError,
}

/// The one-step map of a time-stepping scheme.
///
/// Implementations must be deterministic and safe to call concurrently from
/// several workers on disjoint time intervals.
pub trait Propagator: Sync {
    fn state_dim(&self) -> usize;

    fn step(&self, level: usize, t_from: f64, dt: f64, u: &[f64]) -> Result<Vec<f64>, StepError>;
}

impl<P: Propagator + ?Sized> Propagator for &P {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }

    fn step(&self, level: usize, t_from: f64, dt: f64, u: &[f64]) -> Result<Vec<f64>, StepError> {
        (**self).step(level, t_from, dt, u)
    }
}

/// Backward Euler for the scalar test equation `u' = lambda u`.
pub fn step_dahlquist_backward_euler(lambda: f64, dt: f64, u: f64) -> Result<f64, StepError> {
    let denom = 1.0 - lambda * dt;
    if denom == 0.0 {
        return Err(StepError::Singular(format!(
            "1 - lambda*dt vanishes for lambda = {lambda}, dt = {dt}"
        )));
    }
    Ok(u / denom)
}

/// Scalar linear test problem `u' = lambda u`, `u(0) = u0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dahlquist {
    pub lambda: f64,
    pub u0: f64,
}

impl Dahlquist {
    pub fn new(lambda: f64, u0: f64) -> Self {
        Self { lambda, u0 }
    }

    pub fn initial_state(&self) -> Vec<f64> {
        vec![self.u0]
    }
}

impl Propagator for Dahlquist {
    fn state_dim(&self) -> usize {
        1
    }

    fn step(&self, _level: usize, _t_from: f64, dt: f64, u: &[f64]) -> Result<Vec<f64>, StepError> {
        check_dim(1, u)?;
        Ok(vec![step_dahlquist_backward_euler(self.lambda, dt, u[0])?])
    }
}

/// Backward Euler with Newton for the scalar nonlinear problem
/// `u' = lambda u - kappa u^3`. Used to exercise the FAS code paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicDecay {
    pub lambda: f64,
    pub kappa: f64,
}

impl Propagator for CubicDecay {
    fn state_dim(&self) -> usize {
        1
    }

    fn step(&self, _level: usize, _t_from: f64, dt: f64, u: &[f64]) -> Result<Vec<f64>, StepError> {
        check_dim(1, u)?;
        let rhs = u[0];
        // v - dt (lambda v - kappa v^3) = rhs
        let mut v = rhs;
        for it in 0..50 {
            let f = v - dt * (self.lambda * v - self.kappa * v * v * v) - rhs;
            let df = 1.0 - dt * (self.lambda - 3.0 * self.kappa * v * v);
            if df == 0.0 {
                return Err(StepError::Singular("zero Newton derivative".into()));
            }
            let dv = f / df;
            v -= dv;
            if dv.abs() <= 1e-15 * v.abs().max(1e-300) {
                return Ok(vec![v]);
            }
            if it == 49 {
                return Err(StepError::NoConvergence {
                    iterations: 50,
                    residual: f.abs(),
                });
            }
        }
        unreachable!()
    }
}

pub(crate) fn check_dim(expected: usize, u: &[f64]) -> Result<(), StepError> {
    if u.len() != expected {
        return Err(StepError::Dimension { expected, got: u.len() });
    }
    Ok(())
}

/// Wraps a propagator and counts applications per level.
pub struct Counted<P> {
    inner: P,
    counts: Vec<AtomicU64>,
}

impl<P: Propagator> Counted<P> {
    pub fn new(inner: P, num_levels: usize) -> Self {
        Self {
            inner,
            counts: (0..num_levels).map(|_| AtomicU64::new(0)).collect(),
        }
    }

    pub fn count(&self, level: usize) -> u64 {
        self.counts[level].load(Ordering::Relaxed)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|c| c.load(Ordering::Relaxed)).sum()
    }

    pub fn reset(&self) {
        for c in &self.counts {
            c.store(0, Ordering::Relaxed);
        }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: Propagator> Propagator for Counted<P> {
    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }

    fn step(&self, level: usize, t_from: f64, dt: f64, u: &[f64]) -> Result<Vec<f64>, StepError> {
        if let Some(c) = self.counts.get(level) {
            c.fetch_add(1, Ordering::Relaxed);
        }
        self.inner.step(level, t_from, dt, u)
    }
}

/// Plain time stepping: `u_0 = u0`, `u_i = step(u_{i-1}) + g_i`.
pub fn sequential_solve<P: Propagator + ?Sized>(
    prop: &P,
    grid: &TemporalGrid,
    u0: &[f64],
    forcing: &Forcing,
) -> Result<SpaceTimeVector, PropagationError> {
    let level = grid.level;
    check_dim(prop.state_dim(), u0).map_err(|source| PropagationError {
        level,
        index: 0,
        source,
    })?;
    let mut values = Vec::with_capacity(grid.num_points());
    values.push(u0.to_vec());
    for i in 1..=grid.num_intervals {
        let mut next = prop
            .step(level, grid.time(i - 1), grid.dt, &values[i - 1])
            .map_err(|source| PropagationError {
                level,
                index: i,
                source,
            })?;
        forcing.add_to(i, &mut next);
        values.push(next);
    }
    Ok(SpaceTimeVector::new(level, values))
}
