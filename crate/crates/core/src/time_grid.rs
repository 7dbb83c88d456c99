//! Uniform temporal grids and the nested hierarchy used by the multilevel solvers.
//!
//! Grid sizes are counted in *intervals*: a grid with `num_intervals = n` has
//! `n + 1` points `t_start + i * dt`, `i = 0..=n`. Level 0 is the finest grid;
//! level `l + 1` is obtained from level `l` by keeping every `factors[l]`-th point.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("time interval is empty or reversed: t_start = {t_start}, t_end = {t_end}")]
    EmptyInterval { t_start: f64, t_end: f64 },
    #[error("number of time intervals must be at least 1")]
    NoIntervals,
    #[error("coarsening factor {factor} at level {level} must be at least 2")]
    FactorTooSmall { level: usize, factor: usize },
    #[error("coarsening factor {factor} does not divide the {num_intervals} intervals of level {level}")]
    NotDivisible {
        level: usize,
        factor: usize,
        num_intervals: usize,
    },
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
}

/// One uniform time grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemporalGrid {
    pub level: usize,
    pub t_start: f64,
    pub dt: f64,
    pub num_intervals: usize,
}

impl TemporalGrid {
    pub fn new(level: usize, t_start: f64, dt: f64, num_intervals: usize) -> Result<Self, GridError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(GridError::BadStep(dt));
        }
        if num_intervals == 0 {
            return Err(GridError::NoIntervals);
        }
        Ok(Self {
            level,
            t_start,
            dt,
            num_intervals,
        })
    }

    pub fn num_points(&self) -> usize {
        self.num_intervals + 1
    }

    /// Time of point `i`.
    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.num_intervals)
    }
}

/// C/F splitting of one grid for coarsening factor `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfPartition {
    pub m: usize,
    pub c_indices: Vec<usize>,
    /// Maximal runs of F-points, as inclusive `(first, last)` index pairs.
    /// Empty when `m == 1`.
    pub f_intervals: Vec<(usize, usize)>,
}

impl CfPartition {
    pub fn num_c_intervals(&self) -> usize {
        self.c_indices.len() - 1
    }

    pub fn is_c_point(&self, i: usize) -> bool {
        i.is_multiple_of(self.m)
    }

    pub fn num_f_points(&self) -> usize {
        self.f_intervals.iter().map(|(a, b)| b + 1 - a).sum()
    }
}

/// Splits `grid` into C-points (multiples of `m`) and F-points.
///
/// `m = 1` is accepted and yields a partition with every point a C-point.
pub fn cf_partition(grid: &TemporalGrid, m: usize) -> Result<CfPartition, GridError> {
    if m == 0 || !grid.num_intervals.is_multiple_of(m) {
        return Err(GridError::NotDivisible {
            level: grid.level,
            factor: m,
            num_intervals: grid.num_intervals,
        });
    }
    let nc = grid.num_intervals / m;
    let c_indices = (0..=nc).map(|j| j * m).collect();
    let f_intervals = if m > 1 {
        (0..nc).map(|j| (j * m + 1, (j + 1) * m - 1)).collect()
    } else {
        Vec::new()
    };
    Ok(CfPartition {
        m,
        c_indices,
        f_intervals,
    })
}

/// Nested uniform grids, finest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalHierarchy {
    grids: Vec<TemporalGrid>,
    factors: Vec<usize>,
}

impl TemporalHierarchy {
    pub fn grids(&self) -> &[TemporalGrid] {
        &self.grids
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn num_levels(&self) -> usize {
        self.grids.len()
    }

    pub fn grid(&self, level: usize) -> &TemporalGrid {
        &self.grids[level]
    }

    pub fn finest(&self) -> &TemporalGrid {
        &self.grids[0]
    }

    pub fn coarsest(&self) -> &TemporalGrid {
        self.grids.last().expect("hierarchy has at least one level")
    }

    /// Coarsening factor between `level` and `level + 1`.
    pub fn factor(&self, level: usize) -> usize {
        self.factors[level]
    }

    /// Number of finest-grid intervals spanned by one interval of `level`.
    pub fn stride(&self, level: usize) -> usize {
        self.factors[..level].iter().product()
    }

    /// Finest-grid index of point `index` on `level`.
    pub fn to_finest(&self, level: usize, index: usize) -> usize {
        index * self.stride(level)
    }

    /// Inverse of [`Self::to_finest`]; `None` when the fine point is not on `level`.
    pub fn from_finest(&self, level: usize, fine_index: usize) -> Option<usize> {
        let s = self.stride(level);
        fine_index.is_multiple_of(s).then_some(fine_index / s)
    }

    pub fn cf_partition(&self, level: usize) -> CfPartition {
        cf_partition(&self.grids[level], self.factors[level]).expect("hierarchy levels are divisible by construction")
    }
}

/// Builds the hierarchy for `num_intervals` uniform steps on `[t_start, t_end]`,
/// coarsening successively by each entry of `factors`.
pub fn build_hierarchy(
    t_start: f64,
    t_end: f64,
    num_intervals: usize,
    factors: &[usize],
) -> Result<TemporalHierarchy, GridError> {
    if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
        return Err(GridError::EmptyInterval { t_start, t_end });
    }
    if num_intervals == 0 {
        return Err(GridError::NoIntervals);
    }
    let dt = (t_end - t_start) / num_intervals as f64;
    let mut grids = vec![TemporalGrid::new(0, t_start, dt, num_intervals)?];
    for (level, &factor) in factors.iter().enumerate() {
        let fine = grids[level];
        if factor < 2 {
            return Err(GridError::FactorTooSmall { level, factor });
        }
        if fine.num_intervals % factor != 0 {
            return Err(GridError::NotDivisible {
                level,
                factor,
                num_intervals: fine.num_intervals,
            });
        }
        grids.push(TemporalGrid::new(
            level + 1,
            t_start,
            fine.dt * factor as f64,
            fine.num_intervals / factor,
        )?);
    }
    Ok(TemporalHierarchy {
        grids,
        factors: factors.to_vec(),
    })
}
