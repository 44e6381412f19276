use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::CsrMatrix;
use crate::{Error, Result};

/// Largest matrix handed to the dense eigensolver by default.
pub const DEFAULT_N_MAX: usize = 2000;

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
///
/// Each eigenvector is signed so that its largest-magnitude entry (first one
/// on ties) is positive.
#[derive(Debug, Clone)]
pub struct SymmetricEig {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn eig_small(m: &CsrMatrix, n_max: usize) -> Result<SymmetricEig> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::shape("eig_small", format!("{}x{} is not square", n, m.cols())));
    }
    if n > n_max {
        return Err(Error::Config(format!(
            "eig_small: {n} rows exceeds n_max = {n_max}"
        )));
    }
    let dense = m.to_dense();
    let scale = dense.amax().max(1.0);
    if (&dense - dense.transpose()).amax() > 1e-12 * scale {
        return Err(Error::Validation("eig_small: matrix is not symmetric".into()));
    }
    if n == 0 {
        return Ok(SymmetricEig {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(dense);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(dst, &(col * sign));
    }
    Ok(SymmetricEig { values, vectors })
}

/// Exact `U g(Λ) Uᵀ`.
pub fn dense_filter(eig: &SymmetricEig, g: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let u = &eig.vectors;
    let scaled = DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] * g(eig.values[j]));
    scaled * u.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{normalized_laplacian, IsolatedNodes};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_matrix() {
        let m = CsrMatrix::from_triplets(2, 2, [(0, 0, 3.0), (1, 1, 1.0)]).unwrap();
        let e = eig_small(&m, 10).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 3.0]);
        assert_eq!(e.vectors.as_slice(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn two_node_laplacian() {
        let a = CsrMatrix::from_triplets(2, 2, [(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let e = eig_small(&normalized_laplacian(&a, IsolatedNodes::UnitDiagonal), 10).unwrap();
        assert!((e.values[0]).abs() < 1e-12 && (e.values[1] - 2.0).abs() < 1e-12);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [r, r, r, -r];
        for (x, y) in e.vectors.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn random_symmetric_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20;
        let mut d = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        d = &d + d.transpose();
        let e = eig_small(&CsrMatrix::from_dense(&d), 100).unwrap();
        let ortho = e.vectors.transpose() * &e.vectors - DMatrix::identity(n, n);
        assert!(ortho.amax() < 1e-8);
        let rec = dense_filter(&e, |x| x);
        assert!((rec - &d).norm() / d.norm() <= 1e-6);
    }

    #[test]
    fn rejects_asymmetric_and_oversized() {
        let m = CsrMatrix::from_triplets(2, 2, [(0, 1, 1.0)]).unwrap();
        assert!(matches!(eig_small(&m, 10), Err(Error::Validation(_))));
        assert!(eig_small(&CsrMatrix::identity(5), 4).is_err());
    }
}
