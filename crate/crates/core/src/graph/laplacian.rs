use super::CsrMatrix;

/// Diagonal convention for nodes without neighbours.
///
/// With `UnitDiagonal` the `D^{-1/2}` factor of an isolated node is taken as
/// zero, leaving `L_ii = 1`. `ZeroDiagonal` removes the node from the
/// operator entirely (`L_ii = 0`), so any spectral filter acts on it as
/// `g(0)`; the local embedder uses this so an isolated user keeps `Ψ = e_a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IsolatedNodes {
    #[default]
    UnitDiagonal,
    ZeroDiagonal,
}

/// `L = I - D^{-1/2} A D^{-1/2}` for a symmetric adjacency matrix.
pub fn normalized_laplacian(adjacency: &CsrMatrix, isolated: IsolatedNodes) -> CsrMatrix {
    let n = adjacency.rows();
    let inv_sqrt: Vec<f64> = adjacency
        .row_sums()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let mut trip = Vec::with_capacity(adjacency.nnz() + n);
    for i in 0..n {
        let diag = if inv_sqrt[i] == 0.0 && isolated == IsolatedNodes::ZeroDiagonal {
            0.0
        } else {
            1.0
        };
        trip.push((i, i, diag));
        let (idx, val) = adjacency.row(i);
        for (&j, &a) in idx.iter().zip(val) {
            trip.push((i, j, -a * inv_sqrt[i] * inv_sqrt[j]));
        }
    }
    CsrMatrix::from_triplets(n, n, trip).expect("square by construction")
}
