//! Compressed sparse column storage for the system matrix.
//!
//! Only what the solver needs: construction from triplets, products with
//! dense blocks (plain and transposed), diagonal shifts and densification.

use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Builds from (row, col, value) triplets. Duplicates are summed,
    /// explicit zeros are kept (they only cost storage).
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Option<Self> {
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return None;
            }
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_unstable_by_key(|&k| (triplets[k].1, triplets[k].0));

        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for &k in &order {
            let (i, j, v) = triplets[k];
            if last == Some((j, i)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(i);
                values.push(v);
                col_ptr[j + 1] += 1;
                last = Some((j, i));
            }
        }
        for j in 0..ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        Some(CscMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        })
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

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for j in 0..self.ncols {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                out.push((self.row_idx[k], j, self.values[k]));
            }
        }
        out
    }

    /// `self - gamma * I` (square matrices only).
    pub fn shift_diagonal(&self, gamma: f64) -> CscMatrix {
        assert_eq!(self.nrows, self.ncols);
        let mut trips = self.triplets();
        for i in 0..self.nrows {
            trips.push((i, i, -gamma));
        }
        CscMatrix::from_triplets(self.nrows, self.ncols, &trips).unwrap()
    }

    /// `out = self * x` for a dense block `x`.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(self.ncols, x.nrows());
        let mut out = DMatrix::zeros(self.nrows, x.ncols());
        for col in 0..x.ncols() {
            for j in 0..self.ncols {
                let xj = x[(j, col)];
                if xj == 0.0 {
                    continue;
                }
                for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                    out[(self.row_idx[k], col)] += self.values[k] * xj;
                }
            }
        }
        out
    }

    /// `out = self^T * x` for a dense block `x`.
    pub fn mul_transpose_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(self.nrows, x.nrows());
        let mut out = DMatrix::zeros(self.ncols, x.ncols());
        for col in 0..x.ncols() {
            for j in 0..self.ncols {
                let mut acc = 0.0;
                for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                    acc += self.values[k] * x[(self.row_idx[k], col)];
                }
                out[(j, col)] = acc;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for j in 0..self.ncols {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                out[(self.row_idx[k], j)] += self.values[k];
            }
        }
        out
    }

    pub fn values_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_round_trip_and_sum_duplicates() {
        let m = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0)]).unwrap();
        assert_eq!(m.nnz(), 2);
        let d = m.to_dense();
        assert_eq!(d[(0, 0)], 4.0);
        assert_eq!(d[(1, 1)], 2.0);
        assert_eq!(d[(0, 1)], 0.0);
    }

    #[test]
    fn out_of_bounds_rejected() {
        assert!(CscMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_none());
    }

    #[test]
    fn products_match_dense() {
        let trips = [
            (0, 0, 2.0),
            (0, 2, -1.0),
            (1, 1, 3.0),
            (2, 0, 0.5),
            (2, 2, 4.0),
        ];
        let m = CscMatrix::from_triplets(3, 3, &trips).unwrap();
        let d = m.to_dense();
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.0, 3.0, 1.0]);
        assert_eq!(m.mul_dense(&x), &d * &x);
        assert_eq!(m.mul_transpose_dense(&x), d.transpose() * &x);
    }

    #[test]
    fn diagonal_shift() {
        let m = CscMatrix::from_triplets(2, 2, &[(0, 1, 1.0)]).unwrap();
        let s = m.shift_diagonal(0.5).to_dense();
        assert_eq!(s[(0, 0)], -0.5);
        assert_eq!(s[(1, 1)], -0.5);
        assert_eq!(s[(0, 1)], 1.0);
    }
}
