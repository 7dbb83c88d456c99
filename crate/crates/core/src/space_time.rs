use std::ops::Range;

use crate::time_grid::TemporalGrid;

/// State vectors for a contiguous range of time points on one level.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeVector {
    level: usize,
    first: usize,
    values: Vec<Vec<f64>>,
}

impl SpaceTimeVector {
    /// Vector owning points `0..values.len()`.
    pub fn new(level: usize, values: Vec<Vec<f64>>) -> Self {
        Self::with_offset(level, 0, values)
    }

    /// Vector owning points `first..first + values.len()`.
    pub fn with_offset(level: usize, first: usize, values: Vec<Vec<f64>>) -> Self {
        if let Some(v0) = values.first() {
            let dim = v0.len();
            assert!(
                values.iter().all(|v| v.len() == dim),
                "state dimension must be uniform across time points"
            );
        }
        Self { level, first, values }
    }

    /// Every point of `grid` set to a copy of `u0`.
    pub fn constant(grid: &TemporalGrid, u0: &[f64]) -> Self {
        Self::new(grid.level, vec![u0.to_vec(); grid.num_points()])
    }

    pub fn zeros(level: usize, num_points: usize, dim: usize) -> Self {
        Self::new(level, vec![vec![0.0; dim]; num_points])
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn owned(&self) -> Range<usize> {
        self.first..self.first + self.values.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.values[i - self.first]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut Vec<f64> {
        &mut self.values[i - self.first]
    }

    pub fn set(&mut self, i: usize, v: Vec<f64>) {
        debug_assert_eq!(v.len(), self.state_dim());
        self.values[i - self.first] = v;
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.values.iter()
    }

    pub fn into_values(self) -> Vec<Vec<f64>> {
        self.values
    }

    /// Copy of the points in `range` (global indices).
    pub fn slice(&self, range: Range<usize>) -> SpaceTimeVector {
        let vals = self.values[range.start - self.first..range.end - self.first].to_vec();
        SpaceTimeVector::with_offset(self.level, range.start, vals)
    }

    /// Largest componentwise difference over the points both vectors own.
    pub fn max_abs_diff(&self, other: &SpaceTimeVector) -> f64 {
        let lo = self.first.max(other.first);
        let hi = self.owned().end.min(other.owned().end);
        (lo..hi)
            .flat_map(|i| self.get(i).iter().zip(other.get(i)).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

/// Additive forcing `g_i` attached to the points of one level.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Forcing {
    #[default]
    Zero,
    /// One vector per point, indexed by global point index. Entry 0 is unused.
    Points(Vec<Vec<f64>>),
}

impl Forcing {
    pub fn from_fn(grid: &TemporalGrid, f: impl Fn(f64) -> Vec<f64>) -> Self {
        Forcing::Points((0..grid.num_points()).map(|i| f(grid.time(i))).collect())
    }

    pub fn add_to(&self, i: usize, u: &mut [f64]) {
        if let Forcing::Points(g) = self {
            for (a, b) in u.iter_mut().zip(&g[i]) {
                *a += b;
            }
        }
    }

    pub fn get(&self, i: usize) -> Option<&[f64]> {
        match self {
            Forcing::Zero => None,
            Forcing::Points(g) => Some(&g[i]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offset_indexing_and_slices() {
        let v = SpaceTimeVector::new(0, (0..6).map(|i| vec![i as f64, -(i as f64)]).collect());
        let s = v.slice(2..5);
        assert_eq!(s.owned(), 2..5);
        assert_eq!(s.get(4), &[4.0, -4.0]);
        assert_eq!(s.state_dim(), 2);
        assert_eq!(v.max_abs_diff(&s), 0.0);
    }

    #[test]
    #[should_panic]
    fn rejects_ragged_states() {
        SpaceTimeVector::new(0, vec![vec![1.0], vec![1.0, 2.0]]);
    }
}
