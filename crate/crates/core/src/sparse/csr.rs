use std::io::{self, Write};

use super::SparseError;

/// Compressed-row sparse matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_unstable_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (r, c, v) = triplets[k];
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    /// Storage index of entry `(i, j)` if it is part of the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (cols, _) = self.row(i);
        cols.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same sparsity pattern with new stored values.
    pub fn with_values(&self, values: Vec<f64>) -> SparseMatrix {
        assert_eq!(values.len(), self.values.len());
        SparseMatrix {
            values,
            ..self.clone_pattern()
        }
    }

    fn clone_pattern(&self) -> SparseMatrix {
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: Vec::new(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        if x.len() != self.ncols {
            return Err(SparseError::Dimension {
                expected: self.ncols,
                got: x.len(),
            });
        }
        Ok((0..self.nrows)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, a)| a * x[j]).sum()
            })
            .collect())
    }

    /// `alpha * self + beta * other` for matrices of equal shape.
    pub fn add_scaled(&self, alpha: f64, other: &SparseMatrix, beta: f64) -> SparseMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let trip: Vec<_> = self
            .iter()
            .map(|(i, j, v)| (i, j, alpha * v))
            .chain(other.iter().map(|(i, j, v)| (i, j, beta * v)))
            .collect();
        SparseMatrix::from_triplets(self.nrows, self.ncols, &trip)
    }

    /// Symmetric elimination of homogeneous Dirichlet unknowns: the rows and
    /// columns of `fixed` are cleared and their diagonal set to one.
    pub fn with_dirichlet(&self, fixed: &[bool]) -> SparseMatrix {
        assert_eq!(fixed.len(), self.nrows);
        let mut trip: Vec<_> = self.iter().filter(|&(i, j, _)| !fixed[i] && !fixed[j]).collect();
        trip.extend((0..self.nrows).filter(|&i| fixed[i]).map(|i| (i, i, 1.0)));
        SparseMatrix::from_triplets(self.nrows, self.ncols, &trip)
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        self.iter()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// MatrixMarket `coordinate real general` text, 1-based indices.
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.iter() {
            writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_sorted_and_summed() {
        let a = SparseMatrix::from_triplets(2, 3, &[(1, 2, 1.0), (0, 1, 2.0), (1, 0, 3.0), (1, 2, 4.0)]);
        assert_eq!(a.row(1), (&[0usize, 2][..], &[3.0, 5.0][..]));
        assert_eq!(a.get(0, 1), 2.0);
        assert_eq!(a.get(0, 0), 0.0);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn spmv_examples() {
        let x = [1.5, -2.0, 0.25];
        assert_eq!(SparseMatrix::identity(3).spmv(&x).unwrap(), x.to_vec());
        assert_eq!(SparseMatrix::zeros(3, 3).spmv(&x).unwrap(), vec![0.0; 3]);
        assert!(matches!(
            SparseMatrix::identity(2).spmv(&x),
            Err(SparseError::Dimension { expected: 2, got: 3 })
        ));

        let dense = [[2.0, -1.0, 0.5], [0.0, 3.0, 1.0], [4.0, 0.0, -2.0]];
        let trip: Vec<_> = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j, dense[i][j])))
            .filter(|t| t.2 != 0.0)
            .collect();
        let a = SparseMatrix::from_triplets(3, 3, &trip);
        let y = a.spmv(&x).unwrap();
        for i in 0..3 {
            let oracle: f64 = (0..3).map(|j| dense[i][j] * x[j]).sum();
            assert!((y[i] - oracle).abs() <= 1e-15);
        }
    }

    #[test]
    fn dirichlet_elimination_keeps_symmetry() {
        let a = SparseMatrix::from_triplets(
            3,
            3,
            &[
                (0, 0, 2.0),
                (0, 1, -1.0),
                (1, 0, -1.0),
                (1, 1, 2.0),
                (1, 2, -1.0),
                (2, 1, -1.0),
                (2, 2, 2.0),
            ],
        );
        let b = a.with_dirichlet(&[false, false, true]);
        assert_eq!(b.get(2, 2), 1.0);
        assert_eq!(b.get(1, 2), 0.0);
        assert_eq!(b.get(2, 1), 0.0);
        assert_eq!(b.asymmetry(), 0.0);
    }

    #[test]
    fn pattern_reuse() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, -0.5)]);
        let k = a.position(1, 0).unwrap();
        assert_eq!(a.values()[k], -0.5);
        assert_eq!(a.position(0, 1), None);
        let b = a.with_values(vec![2.0, 3.0]);
        assert_eq!((b.get(0, 0), b.get(1, 0)), (2.0, 3.0));
    }

    #[test]
    fn matrix_market_export() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, -0.5)]);
        let mut buf = Vec::new();
        a.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "%%MatrixMarket matrix coordinate real general");
        assert_eq!(lines[1], "2 2 2");
        assert!(lines[3].starts_with("2 1 -5.0"));
    }
}
