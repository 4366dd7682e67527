#![allow(dead_code)]

use firemap::graph::{Edge, NodeParams, SpreadGraph};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random directed graph: every ordered pair is an edge with probability
/// `density`, rates and costs drawn uniformly.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, density: f64) -> SpreadGraph {
    let nodes = (0..n)
        .map(|_| NodeParams::new(rng.random_range(0.1..0.6), rng.random_range(0.05..1.0)))
        .collect();
    let mut edges = Vec::new();
    for src in 0..n {
        for dst in 0..n {
            if src != dst && rng.random_bool(density.min(1.0)) {
                edges.push(Edge::new(src, dst, rng.random_range(0.05..1.0)));
            }
        }
    }
    SpreadGraph::new(nodes, edges).unwrap()
}

pub fn dense(rows: Vec<Vec<f64>>) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// `(rI - A)^{-T} C^T` by dense LU.
pub fn dense_priorities(a: &DMatrix<f64>, c: &[f64], r: f64) -> Vec<f64> {
    let n = a.nrows();
    let m = (DMatrix::identity(n, n) * r - a).transpose();
    let rhs = nalgebra::DVector::from_column_slice(c);
    m.lu()
        .solve(&rhs)
        .expect("nonsingular")
        .iter()
        .copied()
        .collect()
}

/// Largest real part over all eigenvalues.
pub fn dense_abscissa(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}
