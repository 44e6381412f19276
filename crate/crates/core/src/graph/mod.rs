//! Sparse-graph linear algebra shared by the local and global embedders.
//!
//! Two routes compute spectral filters `g(L)`: an exact dense
//! eigendecomposition for small graphs ([`eig_small`]), and a Chebyshev
//! three-term recurrence that only ever multiplies by the sparse Laplacian
//! ([`cheb_apply`]).

mod chebyshev;
mod eigen;
mod laplacian;
mod sparse;

pub use chebyshev::{cheb_apply, cheb_fit, cheb_fit_heat, ChebFilter, DEFAULT_CHEB_ORDER};
pub use eigen::{eig_small, dense_filter, SymmetricEig, DEFAULT_N_MAX};
pub use laplacian::{normalized_laplacian, IsolatedNodes};
pub use sparse::CsrMatrix;

/// Spectral interval of every normalized Laplacian.
pub const NORMALIZED_SPECTRUM: (f64, f64) = (0.0, 2.0);
