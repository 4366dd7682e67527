use super::{Edge, Geometry, GridShape, NodeParams, SpreadGraph};

/// The 16-node example graph: a city (node 16) reachable only through node 11.
///
/// Nodes 1..=16 (ids 0..=15) sit row-major on a 4x4 grid. Nodes 1..=15 are
/// linked to their horizontal and vertical neighbors; the diagonal links 6-11
/// and 11-16 lead to the city, which has no other neighbor. All links are
/// bidirectional with beta = 0.5, every node has delta = 0.2, and the cost is
/// 1.0 on the city and 0.1 elsewhere.
///
/// The topology is traced from the published figure, which is the only
/// source for it.
pub fn grid16_fixture() -> SpreadGraph {
    const SIDE: usize = 4;
    const BETA: f64 = 0.5;
    const DELTA: f64 = 0.2;
    const CITY: usize = 15;

    let id = |r: usize, c: usize| r * SIDE + c;
    let mut pairs = Vec::new();
    for r in 0..SIDE {
        for c in 0..SIDE {
            if c + 1 < SIDE {
                pairs.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < SIDE {
                pairs.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    pairs.retain(|&(a, b)| a != CITY && b != CITY);
    // node 6 - node 11, node 11 - node 16
    pairs.push((id(1, 1), id(2, 2)));
    pairs.push((id(2, 2), CITY));

    let edges = pairs
        .into_iter()
        .flat_map(|(a, b)| [Edge::new(a, b, BETA), Edge::new(b, a, BETA)])
        .collect();
    let nodes = (0..SIDE * SIDE)
        .map(|i| NodeParams::new(DELTA, if i == CITY { 1.0 } else { 0.1 }))
        .collect();
    let positions = (0..SIDE * SIDE)
        .map(|i| [(i % SIDE) as f64, (i / SIDE) as f64])
        .collect();

    SpreadGraph::new(nodes, edges)
        .and_then(|g| {
            g.with_geometry(Geometry {
                positions,
                grid: Some(GridShape {
                    rows: SIDE,
                    cols: SIDE,
                }),
            })
        })
        .expect("fixture is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_costs() {
        let g = grid16_fixture();
        assert_eq!(g.n(), 16);
        let costs = g.costs();
        assert_eq!(costs[15], 1.0);
        assert!(costs[..15].iter().all(|&c| c == 0.1));
        assert!(g.nodes().iter().all(|n| n.delta == 0.2));
        assert!(g.edges().iter().all(|e| e.beta == 0.5));
    }

    #[test]
    fn city_only_touches_node_11() {
        let g = grid16_fixture();
        assert_eq!(g.neighbors(15), vec![10]);
        // node 6 leads diagonally to node 11
        assert!(g.neighbors(5).contains(&10));
    }

    #[test]
    fn links_are_bidirectional() {
        let g = grid16_fixture();
        for e in g.edges() {
            assert!(g.edges().iter().any(|f| f.src == e.dst && f.dst == e.src));
        }
    }
}
