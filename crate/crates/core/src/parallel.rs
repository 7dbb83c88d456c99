//! In-process time-parallel runtime.
//!
//! Time points are block-partitioned across workers. Each relaxation sweep is
//! a set of independent interval tasks: a task only needs the value at the
//! left C-point of its interval (the ghost value when that point belongs to
//! the left neighbour). Workers run on scoped threads and never share mutable
//! state; results are merged in task order so the iterates do not depend on
//! the worker count.

use std::ops::Range;

use serde::Serialize;

use crate::space_time::SpaceTimeVector;

/// Contiguous ownership of time points per worker, on every level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimePartition {
    num_workers: usize,
    /// `ranges[level][worker]`, point index ranges (possibly empty).
    ranges: Vec<Vec<Range<usize>>>,
}

impl TimePartition {
    pub fn num_workers(&self) -> usize {
        self.num_workers
    }

    pub fn num_levels(&self) -> usize {
        self.ranges.len()
    }

    pub fn range(&self, level: usize, worker: usize) -> Range<usize> {
        self.ranges[level][worker].clone()
    }

    pub fn ranges(&self, level: usize) -> &[Range<usize>] {
        &self.ranges[level]
    }

    pub fn owner(&self, level: usize, point: usize) -> usize {
        let r = &self.ranges[level];
        // ranges are sorted; empty ones are skipped by the search
        r.partition_point(|rg| rg.end <= point).min(self.num_workers - 1)
    }

    /// Splits a vector that owns the whole level into one block per worker.
    pub fn split(&self, u: &SpaceTimeVector) -> Vec<SpaceTimeVector> {
        self.ranges[u.level()].iter().map(|r| u.slice(r.clone())).collect()
    }
}

/// Balanced contiguous partition of time points.
///
/// `level_intervals[l]` is the interval count of level `l` (finest first); each
/// coarser count must divide the finest one. Worker `w` owns the finest
/// intervals `(w*N/P, (w+1)*N/P]` (identified by their right end point) and
/// worker 0 also owns point 0. A coarse point belongs to whoever owns the
/// coincident finest point, so coarse blocks may be empty when there are more
/// workers than coarse points.
pub fn partition(level_intervals: &[usize], num_workers: usize) -> TimePartition {
    assert!(num_workers >= 1, "at least one worker is required");
    assert!(!level_intervals.is_empty());
    let n = level_intervals[0];
    let bounds: Vec<usize> = (0..=num_workers).map(|w| w * n / num_workers).collect();
    let ranges = level_intervals
        .iter()
        .map(|&nl| {
            assert!(
                nl >= 1 && n.is_multiple_of(nl),
                "coarse grids must nest in the finest grid"
            );
            let stride = n / nl;
            (0..num_workers)
                .map(|w| {
                    let lo = if w == 0 { 0 } else { bounds[w] / stride + 1 };
                    let hi = bounds[w + 1] / stride + 1;
                    lo..hi.max(lo)
                })
                .collect()
        })
        .collect();
    TimePartition { num_workers, ranges }
}

/// Ghost value of every block: the last owned value of the nearest non-empty
/// block to its left. Worker 0 (and any block with nothing to its left) gets `None`.
pub fn exchange_left_boundary(blocks: &[SpaceTimeVector]) -> Vec<Option<Vec<f64>>> {
    let mut ghosts = Vec::with_capacity(blocks.len());
    let mut carry: Option<Vec<f64>> = None;
    for b in blocks {
        ghosts.push(carry.clone());
        if let Some(last) = b.iter().last() {
            carry = Some(last.clone());
        }
    }
    ghosts
}

/// Local contribution of one worker: sum of squares of its residual entries.
pub fn local_sum_of_squares(block: &[Vec<f64>]) -> f64 {
    block.iter().flatten().map(|x| x * x).sum()
}

/// Euclidean norm over all residual blocks, reduced in worker order.
pub fn global_residual_norm(local_blocks: &[Vec<Vec<f64>>]) -> f64 {
    local_blocks.iter().map(|b| local_sum_of_squares(b)).sum::<f64>().sqrt()
}

/// Executes interval tasks on the workers of a [`TimePartition`].
#[derive(Debug, Clone)]
pub struct Executor {
    partition: TimePartition,
}

impl Executor {
    pub fn new(partition: TimePartition) -> Self {
        Self { partition }
    }

    /// Executor for a single worker; never spawns threads.
    pub fn serial(level_intervals: &[usize]) -> Self {
        Self::new(partition(level_intervals, 1))
    }

    pub fn partition(&self) -> &TimePartition {
        &self.partition
    }

    pub fn num_workers(&self) -> usize {
        self.partition.num_workers
    }

    /// Runs `task(k)` for every `k` in `0..anchors.len()`. Task `k` is executed
    /// by the owner of point `anchors[k]` on `level`; each worker processes
    /// its tasks in order. Results come back in task order. On failure the
    /// error of the lowest failing task index is returned.
    pub fn run<T, E, F>(&self, level: usize, anchors: &[usize], task: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync,
    {
        let p = self.partition.num_workers;
        if p == 1 {
            return (0..anchors.len()).map(&task).collect();
        }
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); p];
        for (k, &a) in anchors.iter().enumerate() {
            groups[self.partition.owner(level, a)].push(k);
        }
        let busy = groups.iter().filter(|g| !g.is_empty()).count();
        if busy <= 1 {
            return (0..anchors.len()).map(&task).collect();
        }

        let mut results: Vec<Option<Result<T, E>>> = (0..anchors.len()).map(|_| None).collect();
        let task = &task;
        let outputs: Vec<Vec<(usize, Result<T, E>)>> = std::thread::scope(|s| {
            let handles: Vec<_> = groups
                .iter()
                .filter(|g| !g.is_empty())
                .map(|g| {
                    s.spawn(move || {
                        let mut out = Vec::with_capacity(g.len());
                        for &k in g {
                            let r = task(k);
                            let failed = r.is_err();
                            out.push((k, r));
                            if failed {
                                break;
                            }
                        }
                        out
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker thread panicked"))
                .collect()
        });
        for out in outputs {
            for (k, r) in out {
                results[k] = Some(r);
            }
        }
        let mut collected = Vec::with_capacity(results.len());
        for r in results {
            match r {
                Some(Ok(v)) => collected.push(v),
                Some(Err(e)) => return Err(e),
                // a worker stopped after an earlier failure of its own; that
                // failure has a lower index and was already returned
                None => unreachable!("task skipped without an earlier failure"),
            }
        }
        Ok(collected)
    }
}

/// Propagator work of one cycle, in applications per propagator level.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CycleWork {
    /// `parallel[l][q]`: applications of the level-`q` propagator inside the
    /// interval-parallel sweeps of level `l`.
    pub parallel: Vec<Vec<u64>>,
    /// Applications of the coarsest propagator in the sequential coarsest solve.
    pub sequential: u64,
}

impl CycleWork {
    pub fn new(num_levels: usize) -> Self {
        Self {
            parallel: vec![vec![0; num_levels]; num_levels],
            sequential: 0,
        }
    }

    pub fn add_parallel(&mut self, sweep_level: usize, prop_level: usize, count: u64) {
        self.parallel[sweep_level][prop_level] += count;
    }

    /// Total applications per propagator level.
    pub fn per_level(&self) -> Vec<u64> {
        let n = self.parallel.len();
        let mut out = vec![0; n];
        for row in &self.parallel {
            for (q, c) in row.iter().enumerate() {
                out[q] += c;
            }
        }
        if let Some(last) = out.last_mut() {
            *last += self.sequential;
        }
        out
    }

    pub fn total(&self) -> u64 {
        self.per_level().iter().sum()
    }
}

/// Counted-work model of a time-parallel run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkModel {
    /// Intervals per level, finest first.
    pub level_intervals: Vec<usize>,
    /// Cost units of one propagator application per level.
    pub unit_costs: Vec<f64>,
    /// Work of every recorded cycle.
    pub cycles: Vec<CycleWork>,
    /// Work done before the first cycle (initial relaxation and residual).
    pub setup: CycleWork,
}

impl WorkModel {
    pub fn new(level_intervals: Vec<usize>) -> Self {
        let n = level_intervals.len();
        Self {
            unit_costs: vec![1.0; n],
            setup: CycleWork::new(n),
            cycles: Vec::new(),
            level_intervals,
        }
    }

    pub fn num_levels(&self) -> usize {
        self.level_intervals.len()
    }

    /// Cost of time stepping across the finest grid.
    pub fn sequential_cost(&self) -> f64 {
        self.level_intervals[0] as f64 * self.unit_costs[0]
    }

    fn weighted(&self, counts: &[u64]) -> f64 {
        counts.iter().zip(&self.unit_costs).map(|(&c, &w)| c as f64 * w).sum()
    }

    /// Total cost of one cycle regardless of distribution.
    pub fn total_cost(&self, cycle: &CycleWork) -> f64 {
        self.weighted(&cycle.per_level())
    }

    /// Critical-path cost of one cycle on `num_workers` workers.
    ///
    /// The sweeps of level `l` consist of `N_{l+1}` equally expensive interval
    /// tasks; the busiest worker owns `ceil(N_{l+1} / P)` of them. The coarsest
    /// solve runs sequentially and is counted once.
    pub fn critical_path(&self, cycle: &CycleWork, num_workers: usize) -> f64 {
        let p = num_workers.max(1);
        let last = self.num_levels() - 1;
        let mut cost = cycle.sequential as f64 * self.unit_costs[last];
        for (l, row) in cycle.parallel.iter().enumerate() {
            let level_cost = self.weighted(row);
            if level_cost == 0.0 {
                continue;
            }
            let tasks = if l < last {
                self.level_intervals[l + 1]
            } else {
                self.level_intervals[l]
            };
            let per_worker = tasks.div_ceil(p);
            cost += level_cost * per_worker as f64 / tasks as f64;
        }
        cost
    }

    pub fn mean_cycle(&self) -> CycleWork {
        let n = self.num_levels();
        let mut acc = vec![vec![0.0f64; n]; n];
        let mut seq = 0.0;
        for c in &self.cycles {
            for (l, row) in c.parallel.iter().enumerate() {
                for (q, &v) in row.iter().enumerate() {
                    acc[l][q] += v as f64;
                }
            }
            seq += c.sequential as f64;
        }
        let k = self.cycles.len().max(1) as f64;
        CycleWork {
            parallel: acc
                .into_iter()
                .map(|row| row.into_iter().map(|v| (v / k).round() as u64).collect())
                .collect(),
            sequential: (seq / k).round() as u64,
        }
    }

    /// Critical-path cost of `iters` cycles on `num_workers` workers, including setup.
    /// Recorded cycles are used as-is; beyond them the mean recorded cycle is repeated.
    pub fn parallel_cost(&self, num_workers: usize, iters: usize) -> f64 {
        let mean = self.mean_cycle();
        let mut cost = self.critical_path(&self.setup, num_workers);
        for k in 0..iters {
            let c = self.cycles.get(k).unwrap_or(&mean);
            cost += self.critical_path(c, num_workers);
        }
        cost
    }
}

/// Ratio of sequential time-stepping cost to the critical-path cost of the
/// parallel run on `num_workers` workers with `iters` cycles.
pub fn estimate_speedup(work: &WorkModel, num_workers: usize, iters: usize) -> f64 {
    work.sequential_cost() / work.parallel_cost(num_workers, iters.max(1))
}

/// One row of the work-model report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkReportRow {
    pub workers: usize,
    pub phi_per_level: Vec<u64>,
    pub critical_path_cost: f64,
    pub estimated_speedup: f64,
}

impl WorkModel {
    pub fn report(&self, worker_counts: &[usize]) -> Vec<WorkReportRow> {
        let iters = self.cycles.len().max(1);
        let mut totals = self.setup.per_level();
        for c in &self.cycles {
            for (t, v) in totals.iter_mut().zip(c.per_level()) {
                *t += v;
            }
        }
        worker_counts
            .iter()
            .map(|&p| WorkReportRow {
                workers: p,
                phi_per_level: totals.clone(),
                critical_path_cost: self.parallel_cost(p, iters),
                estimated_speedup: estimate_speedup(self, p, iters),
            })
            .collect()
    }

    /// CSV with columns `workers, phi_level_0..phi_level_{L-1}, critical_path_cost, estimated_speedup`.
    pub fn write_csv<W: std::io::Write>(&self, worker_counts: &[usize], out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["workers".to_string()];
        header.extend((0..self.num_levels()).map(|l| format!("phi_level_{l}")));
        header.push("critical_path_cost".into());
        header.push("estimated_speedup".into());
        w.write_record(&header)?;
        for row in self.report(worker_counts) {
            let mut rec = vec![row.workers.to_string()];
            rec.extend(row.phi_per_level.iter().map(u64::to_string));
            rec.push(format!("{}", row.critical_path_cost));
            rec.push(format!("{}", row.estimated_speedup));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn partition_examples() {
        let p = partition(&[8], 2);
        assert_eq!(p.ranges(0), &[0..5, 5..9]);

        let p = partition(&[8, 2], 1);
        assert_eq!(p.ranges(0), std::slice::from_ref(&(0..9)));
        assert_eq!(p.ranges(1), std::slice::from_ref(&(0..3)));

        let p = partition(&[32768], 64);
        for w in 0..64 {
            let r = p.range(0, w);
            let intervals = if w == 0 { r.len() - 1 } else { r.len() };
            assert_eq!(intervals, 512);
        }
    }

    #[test]
    fn more_workers_than_coarse_points() {
        let p = partition(&[16, 2], 8);
        let coarse: Vec<_> = p.ranges(1).iter().map(|r| r.len()).collect();
        assert_eq!(coarse.iter().sum::<usize>(), 3);
        assert!(coarse.contains(&0));
        for w in 0..8 {
            for j in p.range(1, w) {
                assert!(p.range(0, w).contains(&(j * 8)));
            }
        }
    }

    #[test]
    fn ghost_exchange() {
        let u = SpaceTimeVector::new(0, (0..9).map(|i| vec![i as f64]).collect());
        let one = partition(&[8], 1);
        assert_eq!(exchange_left_boundary(&one.split(&u)), vec![None]);

        let two = partition(&[8], 2);
        let ghosts = exchange_left_boundary(&two.split(&u));
        assert_eq!(ghosts, vec![None, Some(vec![4.0])]);
    }

    #[test]
    fn residual_norm_reduction() {
        assert_eq!(global_residual_norm(&[vec![vec![0.0; 3]; 4]]), 0.0);
        let mut blocks = vec![vec![vec![0.0; 2]; 3]; 2];
        blocks[1][2][1] = -2.5;
        assert_eq!(global_residual_norm(&blocks), 2.5);
    }

    #[test]
    fn executor_returns_results_in_task_order() {
        let ex = Executor::new(partition(&[12, 4], 3));
        let anchors: Vec<usize> = (1..=4).collect();
        let out: Result<Vec<usize>, ()> = ex.run(1, &anchors, |k| Ok(k * 10));
        assert_eq!(out.unwrap(), vec![0, 10, 20, 30]);
        let err: Result<Vec<usize>, usize> = ex.run(1, &anchors, |k| if k >= 1 { Err(k) } else { Ok(k) });
        assert_eq!(err.unwrap_err(), 1);
    }

    fn two_level_cycle(nt: usize, m: usize) -> CycleWork {
        let nc = nt / m;
        let mut c = CycleWork::new(2);
        c.add_parallel(0, 0, nt as u64);
        c.add_parallel(0, 1, nc as u64);
        c.sequential = nc as u64;
        c
    }

    #[test]
    fn single_worker_is_slower_than_time_stepping() {
        let mut w = WorkModel::new(vec![1024, 256]);
        w.cycles.push(two_level_cycle(1024, 4));
        assert!(estimate_speedup(&w, 1, 1) < 1.0);
    }

    #[test]
    fn full_scale_two_level_formula() {
        let nt = 32768;
        let mut w = WorkModel::new(vec![nt, nt / 256]);
        let k = 7;
        for _ in 0..k {
            w.cycles.push(two_level_cycle(nt, 256));
        }
        let s = estimate_speedup(&w, 128, k);
        // per cycle: Nt/128 fine + 1 coarse per worker, Nt/256 sequential coarse steps
        let expected = nt as f64 / (k as f64 * (nt as f64 / 128.0 + 1.0 + nt as f64 / 256.0));
        assert!((s - expected).abs() < 1e-12 * expected);
        let rough = nt as f64 / (k as f64 * (nt as f64 / 128.0 + nt as f64 / 256.0));
        assert!((s - rough).abs() < 0.01 * rough);
    }

    proptest! {
        #[test]
        fn partition_is_a_balanced_cover(n_coarse in 1usize..40, m in 1usize..6, p in 1usize..20) {
            let n = n_coarse * m;
            let part = partition(&[n, n_coarse], p);
            for level in 0..2 {
                let ranges = part.ranges(level);
                let mut next = 0;
                for r in ranges {
                    if !r.is_empty() {
                        prop_assert_eq!(r.start, next);
                        next = r.end;
                    }
                }
                let npts = if level == 0 { n + 1 } else { n_coarse + 1 };
                prop_assert_eq!(next, npts);
            }
            let sizes: Vec<usize> = (0..p).map(|w| {
                let r = part.range(0, w);
                if w == 0 { r.len() - 1 } else { r.len() }
            }).collect();
            let lo = *sizes.iter().min().unwrap();
            let hi = *sizes.iter().max().unwrap();
            prop_assert!(hi - lo <= 1);
            for j in 0..=n_coarse {
                prop_assert_eq!(part.owner(1, j), part.owner(0, j * m));
            }
        }

        #[test]
        fn speedup_is_monotone_in_workers(nc in 1usize..64, m in 2usize..32, iters in 1usize..10) {
            let nt = nc * m;
            let mut w = WorkModel::new(vec![nt, nc]);
            for _ in 0..iters {
                w.cycles.push(two_level_cycle(nt, m));
            }
            let mut last = 0.0;
            for p in 1..(2 * nc + 2) {
                let s = estimate_speedup(&w, p, iters);
                prop_assert!(s >= last - 1e-12);
                last = s;
            }
        }

        #[test]
        fn norm_is_partition_invariant(values in proptest::collection::vec(-1e3f64..1e3, 1..200), cut in 0usize..200) {
            let cut = cut % values.len();
            let whole = global_residual_norm(&[values.iter().map(|&v| vec![v]).collect()]);
            let a: Vec<Vec<f64>> = values[..cut].iter().map(|&v| vec![v]).collect();
            let b: Vec<Vec<f64>> = values[cut..].iter().map(|&v| vec![v]).collect();
            let split = global_residual_norm(&[a, b]);
            prop_assert!((whole - split).abs() <= 1e-13 * whole.max(1e-300));
        }
    }
}
