//! Spreading graphs and their linearized dynamics.
//!
//! Edge convention used throughout the crate: an edge `src -> dst` with rate
//! `beta` is the rate at which a burning `src` ignites `dst`. In the dynamics
//! matrix it lives at row `dst`, column `src`, so that `dx_dst/dt` picks up
//! `beta * x_src`.

mod fixtures;
pub mod format;
mod spectral;

use std::collections::HashSet;

pub use fixtures::grid16_fixture;
pub use spectral::{spectral_abscissa, SpectralOptions};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeParams {
    /// Recovery rate, 1/time.
    pub delta: f64,
    /// Cost weight of the node burning.
    pub cost: f64,
}

impl NodeParams {
    pub fn new(delta: f64, cost: f64) -> Self {
        Self { delta, cost }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    /// Spreading rate, 1/time.
    pub beta: f64,
}

impl Edge {
    pub fn new(src: NodeId, dst: NodeId, beta: f64) -> Self {
        Self { src, dst, beta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridShape {
    pub rows: usize,
    pub cols: usize,
}

/// Node positions in grid units. `grid` is set when node ids are the
/// row-major cells of a `rows x cols` raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub positions: Vec<[f64; 2]>,
    pub grid: Option<GridShape>,
}

/// Directed weighted graph with per-node recovery rates and costs.
///
/// Construction validates: rates and costs are finite and nonnegative, node
/// ids are in range, there are no self-loops and no duplicate `(src, dst)`
/// pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadGraph {
    nodes: Vec<NodeParams>,
    edges: Vec<Edge>,
    geometry: Option<Geometry>,
}

impl SpreadGraph {
    pub fn new(nodes: Vec<NodeParams>, edges: Vec<Edge>) -> Result<Self> {
        let graph = Self {
            nodes,
            edges,
            geometry: None,
        };
        graph.validate()?;
        Ok(graph)
    }

    pub fn with_geometry(mut self, geometry: Geometry) -> Result<Self> {
        if geometry.positions.len() != self.n() {
            return Err(Error::InvalidGraph(format!(
                "geometry has {} positions for {} nodes",
                geometry.positions.len(),
                self.n()
            )));
        }
        if geometry
            .positions
            .iter()
            .any(|p| !p[0].is_finite() || !p[1].is_finite())
        {
            return Err(Error::InvalidGraph("non-finite node position".into()));
        }
        if let Some(shape) = geometry.grid {
            if shape.rows * shape.cols != self.n() {
                return Err(Error::InvalidGraph(format!(
                    "grid shape {}x{} does not match {} nodes",
                    shape.rows,
                    shape.cols,
                    self.n()
                )));
            }
        }
        self.geometry = Some(geometry);
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        for (i, node) in self.nodes.iter().enumerate() {
            if !(node.delta.is_finite() && node.delta >= 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "node {i}: recovery rate {} must be >= 0",
                    node.delta
                )));
            }
            if !(node.cost.is_finite() && node.cost >= 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "node {i}: cost {} must be >= 0",
                    node.cost
                )));
            }
        }
        let n = self.n();
        let mut seen = HashSet::with_capacity(self.edges.len());
        for e in &self.edges {
            if e.src >= n || e.dst >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {} -> {} references a node outside [0, {n})",
                    e.src, e.dst
                )));
            }
            if e.src == e.dst {
                return Err(Error::InvalidGraph(format!("self-loop on node {}", e.src)));
            }
            if !(e.beta.is_finite() && e.beta >= 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge {} -> {}: spreading rate {} must be >= 0",
                    e.src, e.dst, e.beta
                )));
            }
            if !seen.insert((e.src, e.dst)) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge {} -> {}",
                    e.src, e.dst
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[NodeParams] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn geometry(&self) -> Option<&Geometry> {
        self.geometry.as_ref()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.cost).collect()
    }

    /// Same topology and rates with a replaced cost vector.
    pub fn with_costs(&self, costs: &[f64]) -> Result<Self> {
        if costs.len() != self.n() {
            return Err(Error::InvalidGraph(format!(
                "cost vector has {} entries for {} nodes",
                costs.len(),
                self.n()
            )));
        }
        let mut g = self.clone();
        for (node, &c) in g.nodes.iter_mut().zip(costs) {
            node.cost = c;
        }
        g.validate()?;
        Ok(g)
    }

    /// Nodes adjacent to `i` in either direction, sorted.
    pub fn neighbors(&self, i: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .edges
            .iter()
            .filter_map(|e| {
                if e.src == i {
                    Some(e.dst)
                } else if e.dst == i {
                    Some(e.src)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Outgoing `(dst, beta)` lists per node, in edge order.
    pub fn out_adjacency(&self) -> Vec<Vec<(NodeId, f64)>> {
        let mut adj = vec![Vec::new(); self.n()];
        for e in &self.edges {
            adj[e.src].push((e.dst, e.beta));
        }
        adj
    }
}

/// Sparse Metzler matrix of the linearized spreading dynamics.
///
/// Entry `(i, i)` is `-delta_i` and entry `(i, j)`, `i != j`, is the rate of
/// the edge `j -> i`. Off-diagonal entries are nonnegative and the diagonal is
/// nonpositive.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsMatrix {
    csr: CsrMatrix,
}

impl DynamicsMatrix {
    /// Wraps a sparse matrix after checking the Metzler sign pattern.
    pub fn from_csr(csr: CsrMatrix) -> Result<Self> {
        for (i, j, v) in csr.triplets() {
            if !v.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "non-finite entry at ({i}, {j})"
                )));
            }
            if i == j && v > 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "diagonal entry ({i}, {i}) = {v} must be <= 0"
                )));
            }
            if i != j && v < 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "off-diagonal entry ({i}, {j}) = {v} must be >= 0"
                )));
            }
        }
        Ok(Self { csr })
    }

    pub fn from_triplets(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let triplets: Vec<_> = triplets.into_iter().collect();
        if let Some(&(i, j, _)) = triplets.iter().find(|t| t.0 >= n || t.1 >= n) {
            return Err(Error::InvalidGraph(format!(
                "entry ({i}, {j}) out of range for n = {n}"
            )));
        }
        Self::from_csr(CsrMatrix::from_triplets(n, triplets))
    }

    pub fn n(&self) -> usize {
        self.csr.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.csr.get(i, j)
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.csr
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.csr.get(i, i)).collect()
    }

    /// Stored off-diagonal entries `(row, col, value)`, row-major.
    pub fn off_diagonal(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.csr.triplets().filter(|&(i, j, _)| i != j)
    }

    pub fn is_metzler(&self) -> bool {
        self.off_diagonal().all(|(_, _, v)| v >= 0.0)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.csr.mul_vec(x)
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.csr.mul_vec_into(x, y)
    }

    /// Gershgorin bound on the modulus of every eigenvalue.
    pub fn eigenvalue_bound(&self) -> f64 {
        self.csr.norm_inf()
    }

    /// `A - K` for a control matrix given as triplets.
    ///
    /// Errors when the result is no longer Metzler.
    pub fn minus(&self, control: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let n = self.n();
        Self::from_triplets(
            n,
            self.csr
                .triplets()
                .chain(control.into_iter().map(|(i, j, k)| (i, j, -k))),
        )
        .map(|m| m.clamp_round_off())
    }

    // Differences like beta - beta can land at -1e-17; snap those to zero.
    fn clamp_round_off(mut self) -> Self {
        let trip: Vec<_> = self
            .csr
            .triplets()
            .map(|(i, j, v)| (i, j, if i != j && v.abs() < 1e-15 { 0.0 } else { v }))
            .collect();
        self.csr = CsrMatrix::from_triplets(self.n(), trip);
        self
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.csr.to_dense()
    }
}

/// Linearized dynamics `A` of a graph: `A[i][i] = -delta_i`, `A[i][j] = beta(j -> i)`.
pub fn build_dynamics(graph: &SpreadGraph) -> Result<DynamicsMatrix> {
    graph.validate()?;
    let n = graph.n();
    let diag = graph
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, node)| (i, i, -node.delta));
    let off = graph.edges().iter().map(|e| (e.dst, e.src, e.beta));
    DynamicsMatrix::from_triplets(n, diag.chain(off))
}
