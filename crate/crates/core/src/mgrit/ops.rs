//! Relaxation, residual and transfer operations on one level.
//!
//! Every sweep is split into independent C-interval tasks run through the
//! [`Executor`]; interval `j` covers the points `(j-1)*m + 1 ..= j*m`.

use crate::parallel::Executor;
use crate::propagator::{PropagationError, Propagator};
use crate::space_time::{Forcing, SpaceTimeVector};
use crate::time_grid::TemporalGrid;

/// A level's grid, its coarsening factor, and its propagator.
#[derive(Clone, Copy)]
pub struct LevelContext<'a> {
    pub grid: TemporalGrid,
    pub m: usize,
    pub prop: &'a dyn Propagator,
}

impl<'a> LevelContext<'a> {
    pub fn new(grid: TemporalGrid, m: usize, prop: &'a dyn Propagator) -> Self {
        assert!(
            m >= 1 && grid.num_intervals.is_multiple_of(m),
            "coarsening factor must divide the level's interval count"
        );
        Self { grid, m, prop }
    }

    pub fn level(&self) -> usize {
        self.grid.level
    }

    pub fn num_c_intervals(&self) -> usize {
        self.grid.num_intervals / self.m
    }

    /// Point index of every C-interval's right end, `m, 2m, ..., N`.
    fn anchors(&self) -> Vec<usize> {
        (1..=self.num_c_intervals()).map(|j| j * self.m).collect()
    }

    /// `step(u_{i-1}) + g_i` for point `i`.
    pub fn advance(&self, i: usize, u_prev: &[f64], g: &Forcing) -> Result<Vec<f64>, PropagationError> {
        let mut next = self
            .prop
            .step(self.grid.level, self.grid.time(i - 1), self.grid.dt, u_prev)
            .map_err(|source| PropagationError {
                level: self.grid.level,
                index: i,
                source,
            })?;
        g.add_to(i, &mut next);
        Ok(next)
    }
}

/// Recomputes every F-point from the C-point at the left of its interval.
/// Returns the number of propagator applications.
pub fn f_relax(
    exec: &Executor,
    ctx: &LevelContext,
    u: &mut SpaceTimeVector,
    g: &Forcing,
) -> Result<u64, PropagationError> {
    let m = ctx.m;
    if m <= 1 {
        return Ok(0);
    }
    let anchors = ctx.anchors();
    let u_ref = &*u;
    let sweeps = exec.run(ctx.level(), &anchors, |k| {
        let start = k * m;
        let mut vals: Vec<Vec<f64>> = Vec::with_capacity(m - 1);
        for i in start + 1..start + m {
            let prev = vals.last().map_or(u_ref.get(start), |v| v.as_slice());
            vals.push(ctx.advance(i, prev, g)?);
        }
        Ok(vals)
    })?;
    for (k, vals) in sweeps.into_iter().enumerate() {
        for (off, v) in vals.into_iter().enumerate() {
            u.set(k * m + 1 + off, v);
        }
    }
    Ok((anchors.len() * (m - 1)) as u64)
}

/// Updates every C-point except `u_0` from the point just before it.
pub fn c_relax(
    exec: &Executor,
    ctx: &LevelContext,
    u: &mut SpaceTimeVector,
    g: &Forcing,
) -> Result<u64, PropagationError> {
    let anchors = ctx.anchors();
    let u_ref = &*u;
    let vals = exec.run(ctx.level(), &anchors, |k| {
        let i = anchors[k];
        ctx.advance(i, u_ref.get(i - 1), g)
    })?;
    for (&i, v) in anchors.iter().zip(vals) {
        u.set(i, v);
    }
    Ok(anchors.len() as u64)
}

/// Residual `r_j = g_i - u_i + step(u_{i-1})` at the C-points `i = j*m`,
/// returned indexed by C-point number `j` with `r_0 = 0`.
pub fn residual(
    exec: &Executor,
    ctx: &LevelContext,
    u: &SpaceTimeVector,
    g: &Forcing,
) -> Result<(SpaceTimeVector, u64), PropagationError> {
    let anchors = ctx.anchors();
    let dim = u.state_dim();
    let vals = exec.run(ctx.level(), &anchors, |k| {
        let i = anchors[k];
        let mut r = ctx.advance(i, u.get(i - 1), &Forcing::Zero)?;
        let gi = g.get(i);
        for (c, ri) in r.iter_mut().enumerate() {
            let gc = gi.map_or(0.0, |v| v[c]);
            *ri += gc - u.get(i)[c];
        }
        Ok(r)
    })?;
    let mut out = Vec::with_capacity(anchors.len() + 1);
    out.push(vec![0.0; dim]);
    out.extend(vals);
    Ok((SpaceTimeVector::new(ctx.level() + 1, out), anchors.len() as u64))
}

/// Coarse values by injection: coarse point `j` takes fine point `j*m`.
pub fn restrict_injection(fine: &SpaceTimeVector, m: usize) -> SpaceTimeVector {
    assert!(m >= 1);
    let n = fine.len() - 1;
    assert!(n.is_multiple_of(m), "factor must divide the fine interval count");
    SpaceTimeVector::new(
        fine.level() + 1,
        (0..=n / m).map(|j| fine.get(j * m).to_vec()).collect(),
    )
}

/// FAS right-hand side of the coarse equation `w_j - step_c(w_{j-1}) = g_j`:
/// `g_j = r_j + v_j - step_c(v_{j-1})`, so that `w = v` solves it when the
/// restricted residual vanishes. `coarse` is the coarse level (its `m` is
/// unused).
pub fn fas_coarse_forcing(
    exec: &Executor,
    coarse: &LevelContext,
    restricted_u: &SpaceTimeVector,
    restricted_residual: &SpaceTimeVector,
) -> Result<(Forcing, u64), PropagationError> {
    let n = coarse.grid.num_intervals;
    let anchors: Vec<usize> = (1..=n).collect();
    let vals = exec.run(coarse.level(), &anchors, |k| {
        let j = k + 1;
        let phi = coarse.advance(j, restricted_u.get(j - 1), &Forcing::Zero)?;
        Ok(restricted_residual
            .get(j)
            .iter()
            .zip(restricted_u.get(j))
            .zip(phi)
            .map(|((r, v), p)| r + v - p)
            .collect::<Vec<f64>>())
    })?;
    let mut g = Vec::with_capacity(n + 1);
    g.push(vec![0.0; restricted_u.state_dim()]);
    g.extend(vals);
    Ok((Forcing::Points(g), n as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::{sequential_solve, Dahlquist};

    fn ex(n: usize) -> Executor {
        Executor::serial(&[n])
    }

    #[test]
    fn f_relax_from_exact_c_points_reproduces_time_stepping() {
        let grid = TemporalGrid::new(0, 0.0, 0.1, 12).unwrap();
        let p = Dahlquist::new(-1.0, 1.0);
        let g = Forcing::from_fn(&grid, |t| vec![t.cos()]);
        let exact = sequential_solve(&p, &grid, &[1.0], &g).unwrap();
        let ctx = LevelContext::new(grid, 4, &p);
        let mut u = SpaceTimeVector::constant(&grid, &[0.0]);
        for i in [0, 4, 8, 12] {
            u.set(i, exact.get(i).to_vec());
        }
        let count = f_relax(&ex(12), &ctx, &mut u, &g).unwrap();
        assert_eq!(count, 9);
        assert!(u.max_abs_diff(&exact) < 1e-15);

        // C-relaxation is then a no-op
        let mut again = u.clone();
        c_relax(&ex(12), &ctx, &mut again, &g).unwrap();
        assert!(again.max_abs_diff(&u) < 1e-15);
    }

    #[test]
    fn f_relax_zero_data() {
        let grid = TemporalGrid::new(0, 0.0, 0.1, 8).unwrap();
        let p = Dahlquist::new(-1.0, 0.0);
        let ctx = LevelContext::new(grid, 4, &p);
        let mut u = SpaceTimeVector::constant(&grid, &[0.0]);
        f_relax(&ex(8), &ctx, &mut u, &Forcing::Zero).unwrap();
        assert!(u.iter().all(|v| v[0] == 0.0));
    }

    #[test]
    fn f_relax_single_step_interval() {
        let grid = TemporalGrid::new(0, 0.0, 0.1, 2).unwrap();
        let p = Dahlquist::new(-1.0, 1.0);
        let ctx = LevelContext::new(grid, 2, &p);
        let mut u = SpaceTimeVector::constant(&grid, &[1.0]);
        f_relax(&ex(2), &ctx, &mut u, &Forcing::Zero).unwrap();
        assert!((u.get(1)[0] - 1.0 / 1.1).abs() < 1e-15);
        assert_eq!(u.get(0)[0], 1.0);
        assert_eq!(u.get(2)[0], 1.0);
    }

    #[test]
    fn c_relax_degenerate_and_direct_evaluation() {
        let grid = TemporalGrid::new(0, 0.0, 0.1, 1).unwrap();
        let p = Dahlquist::new(-1.0, 2.0);
        let ctx = LevelContext::new(grid, 1, &p);
        let mut u = SpaceTimeVector::constant(&grid, &[2.0]);
        c_relax(&ex(1), &ctx, &mut u, &Forcing::Zero).unwrap();
        assert!((u.get(1)[0] - 2.0 / 1.1).abs() < 1e-15);

        let grid = TemporalGrid::new(0, 0.0, 0.25, 6).unwrap();
        let p = Dahlquist::new(-2.0, 0.0);
        let ctx = LevelContext::new(grid, 3, &p);
        let vals = [0.3, -1.2, 0.7, 2.5, 0.1, -0.4, 0.9];
        let mut u = SpaceTimeVector::new(0, vals.iter().map(|&v| vec![v]).collect());
        c_relax(&ex(6), &ctx, &mut u, &Forcing::Zero).unwrap();
        assert_eq!(u.get(0)[0], 0.3);
        assert!((u.get(3)[0] - 0.7 / 1.5).abs() < 1e-15);
        assert!((u.get(6)[0] - (-0.4) / 1.5).abs() < 1e-15);
        assert_eq!(u.get(4)[0], 0.1);
    }

    #[test]
    fn residual_examples() {
        let grid = TemporalGrid::new(0, 0.0, 0.1, 4).unwrap();
        let p = Dahlquist::new(-1.0, 1.0);
        let ctx = LevelContext::new(grid, 1, &p);
        let u = SpaceTimeVector::constant(&grid, &[1.0]);
        let (r, n) = residual(&ex(4), &ctx, &u, &Forcing::Zero).unwrap();
        assert_eq!(n, 4);
        assert_eq!(r.get(0)[0], 0.0);
        for j in 1..=4 {
            assert!((r.get(j)[0] - (1.0 / 1.1 - 1.0)).abs() < 1e-15);
        }

        let exact = sequential_solve(&p, &grid, &[1.0], &Forcing::Zero).unwrap();
        let ctx = LevelContext::new(grid, 2, &p);
        let (r, _) = residual(&ex(4), &ctx, &exact, &Forcing::Zero).unwrap();
        assert!(r.iter().all(|v| v[0].abs() < 1e-14));

        let zero = SpaceTimeVector::constant(&grid, &[0.0]);
        let (r, _) = residual(&ex(4), &ctx, &zero, &Forcing::Zero).unwrap();
        assert!(r.iter().all(|v| v[0] == 0.0));
    }

    #[test]
    fn injection() {
        let fine = SpaceTimeVector::new(0, (0..5).map(|i| vec![i as f64 * 1.5]).collect());
        let c = restrict_injection(&fine, 4);
        assert_eq!(c.into_values(), vec![vec![0.0], vec![6.0]]);
        let same = restrict_injection(&fine, 1);
        assert_eq!(same.into_values(), fine.clone().into_values());
        let big = SpaceTimeVector::zeros(0, 32769, 1);
        assert_eq!(restrict_injection(&big, 256).len(), 129);
    }

    #[test]
    fn fas_forcing_properties() {
        let grid = TemporalGrid::new(1, 0.0, 0.2, 3).unwrap();
        let p = Dahlquist::new(-1.5, 0.0);
        let ctx = LevelContext::new(grid, 1, &p);
        let v = SpaceTimeVector::new(1, vec![vec![1.0], vec![0.4], vec![-0.3], vec![2.0]]);
        let zero_r = SpaceTimeVector::zeros(1, 4, 1);
        let (g, count) = fas_coarse_forcing(&ex(3), &ctx, &v, &zero_r).unwrap();
        assert_eq!(count, 3);
        let w = sequential_solve(&p, &grid, v.get(0), &g).unwrap();
        assert!(w.max_abs_diff(&v) < 1e-15);

        let r = SpaceTimeVector::new(1, vec![vec![0.0], vec![0.1], vec![0.2], vec![0.3]]);
        let (g, _) = fas_coarse_forcing(&ex(3), &ctx, &SpaceTimeVector::zeros(1, 4, 1), &r).unwrap();
        for j in 1..=3 {
            assert_eq!(g.get(j).unwrap()[0], r.get(j)[0]);
        }
    }
}
