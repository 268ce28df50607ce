use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

use super::InducedSubgraph;

/// Kemeny constant of the simple random walk on the subgraph (transitions
/// uniform over neighbors): the sum of `1/(1 - lambda)` over the non-unit
/// eigenvalues of the transition operator. Returns `+inf` for disconnected
/// subgraphs; a singleton is a domain error.
///
/// The transition matrix `P = D^-1 A` shares its spectrum with the
/// symmetric normalization `D^-1/2 A D^-1/2`, which is what gets
/// decomposed here.
pub fn kemeny_constant(sub: &InducedSubgraph<'_>) -> Result<f64> {
    let n = sub.node_count();
    if n < 2 {
        return Err(Error::Domain(
            "kemeny constant needs at least two nodes".into(),
        ));
    }
    if !sub.is_connected() {
        return Ok(f64::INFINITY);
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for &(u, v, _) in sub.edges() {
        let w = 1.0 / ((sub.degree(u) as f64) * (sub.degree(v) as f64)).sqrt();
        m[(u, v)] = w;
        m[(v, u)] = w;
    }
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    // The largest eigenvalue is the simple unit Perron root; the rest
    // contribute 1/(1 - lambda).
    Ok(eigenvalues[1..].iter().map(|l| 1.0 / (1.0 - l)).sum())
}
