use nalgebra::DMatrix;

use crate::{par, Error, Result};

/// Compressed sparse row matrix over `f64`.
///
/// Column indices are sorted within each row and explicit zeros are never
/// stored. All operations are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed; entries that end up exactly zero are dropped.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        if let Some(&(r, c, _)) = entries.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(Error::shape(
                "csr_from_triplets",
                format!("entry ({r},{c}) outside {rows}x{cols}"),
            ));
        }
        entries.sort_by_key(|e| (e.0, e.1));

        let mut offsets = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut i = 0;
        while i < entries.len() {
            let (r, c, mut v) = entries[i];
            i += 1;
            while i < entries.len() && entries[i].0 == r && entries[i].1 == c {
                v += entries[i].2;
                i += 1;
            }
            if v != 0.0 {
                offsets[r + 1] += 1;
                indices.push(c);
                values.push(v);
            }
        }
        for r in 0..rows {
            offsets[r + 1] += offsets[r];
        }
        Ok(Self {
            rows,
            cols,
            offsets,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            offsets: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let trip = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, m[(i, j)]));
        Self::from_triplets(m.nrows(), m.ncols(), trip).expect("indices in range")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Column indices and values stored in row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.row(i);
        match idx.binary_search(&j) {
            Ok(k) => val[k],
            Err(_) => 0.0,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn transpose(&self) -> Self {
        let trip = (0..self.rows).flat_map(|i| {
            let (idx, val) = self.row(i);
            idx.iter().zip(val).map(move |(&j, &v)| (j, i, v))
        });
        Self::from_triplets(self.cols, self.rows, trip).expect("indices in range")
    }

    /// Multiplies row `i` by `scale[i]`.
    pub fn scale_rows(&self, scale: &[f64]) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows {
            let (a, b) = (self.offsets[i], self.offsets[i + 1]);
            out.values[a..b].iter_mut().for_each(|v| *v *= scale[i]);
        }
        out.drop_zeros()
    }

    fn drop_zeros(self) -> Self {
        if self.values.iter().all(|&v| v != 0.0) {
            return self;
        }
        let trip = (0..self.rows).flat_map(|i| {
            let (idx, val) = self.row(i);
            idx.iter().zip(val).map(move |(&j, &v)| (i, j, v))
        });
        Self::from_triplets(self.rows, self.cols, trip.collect::<Vec<_>>()).expect("in range")
    }

    /// `self * x` for a vector.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::shape(
                "csr_mul_vec",
                format!("{}x{} times vector of length {}", self.rows, self.cols, x.len()),
            ));
        }
        Ok((0..self.rows)
            .map(|i| {
                let (idx, val) = self.row(i);
                idx.iter().zip(val).map(|(&j, &v)| v * x[j]).sum()
            })
            .collect())
    }

    /// `self * x` for a dense matrix; parallel over the columns of `x`.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.cols {
            return Err(Error::shape(
                "csr_mul_dense",
                format!(
                    "{}x{} times {}x{}",
                    self.rows,
                    self.cols,
                    x.nrows(),
                    x.ncols()
                ),
            ));
        }
        let mut out = DMatrix::<f64>::zeros(self.rows, x.ncols());
        if self.rows == 0 {
            return Ok(out);
        }
        let rows = self.rows;
        par::for_each_chunk_mut(out.as_mut_slice(), rows, |c, col| {
            let xc = x.column(c);
            for (i, o) in col.iter_mut().enumerate() {
                let (idx, val) = self.row(i);
                *o = idx.iter().zip(val).map(|(&j, &v)| v * xc[j]).sum();
            }
        });
        Ok(out)
    }

    /// `selfᵀ * x` without materializing the transpose.
    pub fn tr_mul_dense(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.nrows() != self.rows {
            return Err(Error::shape(
                "csr_tr_mul_dense",
                format!(
                    "({}x{})^T times {}x{}",
                    self.rows,
                    self.cols,
                    x.nrows(),
                    x.ncols()
                ),
            ));
        }
        let mut out = DMatrix::<f64>::zeros(self.cols, x.ncols());
        if self.cols == 0 {
            return Ok(out);
        }
        let cols = self.cols;
        par::for_each_chunk_mut(out.as_mut_slice(), cols, |c, col| {
            let xc = x.column(c);
            for i in 0..self.rows {
                let xi = xc[i];
                if xi == 0.0 {
                    continue;
                }
                let (idx, val) = self.row(i);
                for (&j, &v) in idx.iter().zip(val) {
                    col[j] += v * xi;
                }
            }
        });
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Symmetry check with absolute tolerance `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                let (idx, val) = self.row(i);
                idx.iter()
                    .zip(val)
                    .all(|(&j, &v)| (v - self.get(j, i)).abs() <= tol)
            })
    }
}
