//! Envelope (skyline) LU factorization without pivoting.
//!
//! Fill-in of an LU factorization without row exchanges stays inside the
//! envelope of the matrix, so each row of `L` and each column of `U` is stored
//! densely from its first structural nonzero up to the diagonal. The systems
//! assembled in this crate are symmetric positive definite after boundary
//! elimination, where skipping pivoting is safe.

use super::{SparseError, SparseMatrix};

/// Pivots smaller than this fraction of the largest matrix entry are treated as zero.
const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct Factorization {
    n: usize,
    first: Vec<usize>,
    /// `lower[i][k - first[i]] = L[i][k]` for `first[i] <= k < i`; unit diagonal implied.
    lower: Vec<Vec<f64>>,
    /// `upper[i][k - first[i]] = U[k][i]` for `first[i] <= k < i`.
    upper: Vec<Vec<f64>>,
    diag: Vec<f64>,
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Diagonal of `U`; all positive for a symmetric positive definite matrix.
    pub fn pivots(&self) -> &[f64] {
        &self.diag
    }

    /// Number of stored off-diagonal entries of `L` and `U`.
    pub fn envelope_size(&self) -> usize {
        self.lower.iter().map(Vec::len).sum::<usize>() * 2
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SparseError> {
        if b.len() != self.n {
            return Err(SparseError::Dimension {
                expected: self.n,
                got: b.len(),
            });
        }
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let f = self.first[i];
            let s: f64 = self.lower[i].iter().zip(&x[f..i]).map(|(l, y)| l * y).sum();
            x[i] -= s;
        }
        for i in (0..self.n).rev() {
            x[i] /= self.diag[i];
            let xi = x[i];
            let f = self.first[i];
            for (xk, u) in x[f..i].iter_mut().zip(&self.upper[i]) {
                *xk -= u * xi;
            }
        }
    }
}

/// Dot product over the common length, with four partial sums.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn factorize(a: &SparseMatrix) -> Result<Factorization, SparseError> {
    if !a.is_square() {
        return Err(SparseError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let n = a.nrows();
    let mut first: Vec<usize> = (0..n).collect();
    for (i, j, _) in a.iter() {
        if j < i {
            first[i] = first[i].min(j);
        } else if i < j {
            first[j] = first[j].min(i);
        }
    }
    let mut lower: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; i - first[i]]).collect();
    let mut upper: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; i - first[i]]).collect();
    let mut diag = vec![0.0; n];
    for (i, j, v) in a.iter() {
        match j.cmp(&i) {
            std::cmp::Ordering::Less => lower[i][j - first[i]] = v,
            std::cmp::Ordering::Greater => upper[j][i - first[j]] = v,
            std::cmp::Ordering::Equal => diag[i] = v,
        }
    }
    let threshold = PIVOT_TOL * a.max_abs();

    for i in 0..n {
        let fi = first[i];
        let (lower_done, lower_rest) = lower.split_at_mut(i);
        let (upper_done, upper_rest) = upper.split_at_mut(i);
        let (li, ui) = (&mut lower_rest[0], &mut upper_rest[0]);
        for j in fi..i {
            let fj = first[j];
            let k0 = fi.max(fj);
            let s_l = dot(&li[k0 - fi..j - fi], &upper_done[j][k0 - fj..]);
            let s_u = dot(&lower_done[j][k0 - fj..], &ui[k0 - fi..j - fi]);
            li[j - fi] = (li[j - fi] - s_l) / diag[j];
            ui[j - fi] -= s_u;
        }
        diag[i] -= dot(li, ui);
        if !(diag[i].abs() > threshold) || !diag[i].is_finite() {
            return Err(SparseError::Singular {
                pivot: i,
                value: diag[i],
            });
        }
    }
    Ok(Factorization {
        n,
        first,
        lower,
        upper,
        diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Gaussian elimination with partial pivoting on a dense copy.
    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a
            .iter()
            .zip(b)
            .map(|(r, &bi)| {
                let mut row = r.clone();
                row.push(bi);
                row
            })
            .collect();
        for c in 0..n {
            let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
            m.swap(c, p);
            for r in c + 1..n {
                let f = m[r][c] / m[c][c];
                for k in c..=n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
            x[r] = (m[r][n] - s) / m[r][r];
        }
        x
    }

    fn random_banded(n: usize, band: usize, seed: u64) -> (SparseMatrix, Vec<Vec<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dense = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for j in i.saturating_sub(band)..i {
                if rng.gen_bool(0.6) {
                    dense[i][j] = rng.gen_range(-1.0..1.0);
                    dense[j][i] = rng.gen_range(-1.0..1.0);
                }
            }
        }
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| dense[i][j].abs()).sum();
            dense[i][i] = off + rng.gen_range(0.5..2.0);
        }
        let trip: Vec<_> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| dense[i][j] != 0.0)
            .map(|(i, j)| (i, j, dense[i][j]))
            .collect();
        (SparseMatrix::from_triplets(n, n, &trip), dense)
    }

    #[test]
    fn diagonal_solve_is_division() {
        let a = SparseMatrix::from_triplets(3, 3, &[(0, 0, 2.0), (1, 1, -4.0), (2, 2, 0.5)]);
        let f = factorize(&a).unwrap();
        assert_eq!(f.solve(&[1.0, 1.0, 1.0]).unwrap(), vec![0.5, -0.25, 2.0]);
    }

    #[test]
    fn zero_matrix_is_singular() {
        let err = factorize(&SparseMatrix::zeros(4, 4)).unwrap_err();
        assert!(matches!(err, SparseError::Singular { pivot: 0, .. }));
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(factorize(&a), Err(SparseError::Singular { pivot: 1, .. })));
    }

    #[test]
    fn rejects_shape_errors() {
        assert!(matches!(
            factorize(&SparseMatrix::zeros(2, 3)),
            Err(SparseError::NotSquare { .. })
        ));
        let f = factorize(&SparseMatrix::identity(3)).unwrap();
        assert!(matches!(f.solve(&[1.0]), Err(SparseError::Dimension { .. })));
    }

    #[test]
    fn zero_rhs_and_ones() {
        let (a, _) = random_banded(40, 5, 7);
        let f = factorize(&a).unwrap();
        assert!(f.solve(&vec![0.0; 40]).unwrap().iter().all(|&x| x == 0.0));
        let b = a.spmv(&vec![1.0; 40]).unwrap();
        let x = f.solve(&b).unwrap();
        assert!(x.iter().all(|v: &f64| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for (n, band, seed) in [(10, 3, 1), (50, 8, 2), (50, 49, 3), (33, 1, 4)] {
            let (a, dense) = random_banded(n, band, seed);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let x = factorize(&a).unwrap().solve(&b).unwrap();
            let oracle = dense_solve(&dense, &b);
            let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (xi, oi) in x.iter().zip(&oracle) {
                assert!((xi - oi).abs() <= 1e-10 * scale, "n={n} band={band}");
            }
            let r = a.spmv(&x).unwrap();
            let res: f64 = r.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(res <= 1e-10 * nb);
        }
    }
}
