use crate::parallel::Executor;
use crate::propagator::{PropagationError, Propagator};
use crate::space_time::{Forcing, SpaceTimeVector};
use crate::time_grid::TemporalGrid;

/// One Parareal update of the coarse-point values
///
/// `U'_{j+1} = G(U'_j) + F(U_j) - G(U_j)`,
///
/// where `F` is `m` fine steps (with the fine forcing) across coarse interval
/// `j` and `G` one unforced coarse step. The `F(U_j)` and `G(U_j)`
/// evaluations run concurrently on the executor; the update itself is
/// sequential. `coarse_grid` must be the fine grid coarsened by `m`.
pub fn parareal_iterate(
    exec: &Executor,
    fine_prop: &dyn Propagator,
    fine_grid: &TemporalGrid,
    coarse_prop: &dyn Propagator,
    coarse_grid: &TemporalGrid,
    u_k: &SpaceTimeVector,
    forcing: &Forcing,
) -> Result<SpaceTimeVector, PropagationError> {
    let nc = coarse_grid.num_intervals;
    assert_eq!(fine_grid.num_intervals % nc, 0);
    assert_eq!(u_k.len(), nc + 1);
    let m = fine_grid.num_intervals / nc;
    let cl = coarse_grid.level;
    let fl = fine_grid.level;

    let coarse_step = |j: usize, u: &[f64]| {
        coarse_prop
            .step(cl, coarse_grid.time(j), coarse_grid.dt, u)
            .map_err(|source| PropagationError {
                level: cl,
                index: j + 1,
                source,
            })
    };

    let anchors: Vec<usize> = (1..=nc).collect();
    let jumps = exec.run(cl, &anchors, |j| {
        let mut v = u_k.get(j).to_vec();
        for i in j * m + 1..=(j + 1) * m {
            v = fine_prop
                .step(fl, fine_grid.time(i - 1), fine_grid.dt, &v)
                .map_err(|source| PropagationError {
                    level: fl,
                    index: i,
                    source,
                })?;
            forcing.add_to(i, &mut v);
        }
        let g_old = coarse_step(j, u_k.get(j))?;
        Ok(v.iter().zip(&g_old).map(|(f, g)| f - g).collect::<Vec<f64>>())
    })?;

    let mut next = Vec::with_capacity(nc + 1);
    next.push(u_k.get(0).to_vec());
    for (j, jump) in jumps.iter().enumerate() {
        let mut g_new = coarse_step(j, &next[j])?;
        for (a, d) in g_new.iter_mut().zip(jump) {
            *a += d;
        }
        next.push(g_new);
    }
    Ok(SpaceTimeVector::new(cl, next))
}
