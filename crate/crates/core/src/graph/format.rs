//! Plain-text graph interchange format.
//!
//! ```text
//! # comment lines and blank lines are ignored
//! grid <rows> <cols>            (optional; node ids are row-major cells)
//! nodes <count>
//! <id> <delta> <cost> [<x> <y>] (ids 0..count in order; x y on all or none)
//! edges <count>
//! <src> <dst> <beta>
//! ```
//!
//! Fields are separated by ASCII whitespace. Numbers are written with Rust's
//! shortest round-trip formatting, so `write_graph` followed by `parse_graph`
//! reproduces the graph exactly.

use std::fmt::Write as _;
use std::str::FromStr;

use super::{Edge, Geometry, GridShape, NodeParams, SpreadGraph};
use crate::error::{Error, Result};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_fields(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (idx, raw) in self.inner.by_ref() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            return Some((idx + 1, line.split_ascii_whitespace().collect()));
        }
        None
    }
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn num<T: FromStr>(line: usize, field: &str, what: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| err(line, format!("invalid {what} '{field}'")))
}

fn header(lines: &mut Lines<'_>, keyword: &str) -> Result<(usize, Vec<String>)> {
    match lines.next_fields() {
        Some((line, fields)) if fields.first() == Some(&keyword) => {
            Ok((line, fields[1..].iter().map(|s| s.to_string()).collect()))
        }
        Some((line, fields)) => Err(err(
            line,
            format!("expected '{keyword}' section, found '{}'", fields[0]),
        )),
        None => Err(err(0, format!("missing '{keyword}' section"))),
    }
}

pub fn parse_graph(text: &str) -> Result<SpreadGraph> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };

    let (mut line, mut fields) = lines
        .next_fields()
        .ok_or_else(|| err(0, "empty graph file"))?;
    let mut grid = None;
    if fields[0] == "grid" {
        if fields.len() != 3 {
            return Err(err(line, "expected 'grid <rows> <cols>'"));
        }
        grid = Some(GridShape {
            rows: num(line, fields[1], "row count")?,
            cols: num(line, fields[2], "column count")?,
        });
        (line, fields) = lines
            .next_fields()
            .ok_or_else(|| err(line, "missing 'nodes' section"))?;
    }
    if fields[0] != "nodes" || fields.len() != 2 {
        return Err(err(line, "expected 'nodes <count>'"));
    }
    let n: usize = num(line, fields[1], "node count")?;

    let mut nodes = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n);
    for expected in 0..n {
        let (line, f) = lines
            .next_fields()
            .ok_or_else(|| err(line, format!("expected {n} node lines")))?;
        if f.len() != 3 && f.len() != 5 {
            return Err(err(
                line,
                "node line must be '<id> <delta> <cost> [<x> <y>]'",
            ));
        }
        let id: usize = num(line, f[0], "node id")?;
        if id != expected {
            return Err(err(
                line,
                format!("node id {id} out of order, expected {expected}"),
            ));
        }
        nodes.push(NodeParams::new(
            num(line, f[1], "delta")?,
            num(line, f[2], "cost")?,
        ));
        if f.len() == 5 {
            positions.push([num(line, f[3], "x")?, num(line, f[4], "y")?]);
        }
        if !positions.is_empty() && positions.len() != nodes.len() {
            return Err(err(line, "positions must be given for all nodes or none"));
        }
    }

    let (line, rest) = header(&mut lines, "edges")?;
    if rest.len() != 1 {
        return Err(err(line, "expected 'edges <count>'"));
    }
    let m: usize = num(line, &rest[0], "edge count")?;
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (line, f) = lines
            .next_fields()
            .ok_or_else(|| err(line, format!("expected {m} edge lines")))?;
        if f.len() != 3 {
            return Err(err(line, "edge line must be '<src> <dst> <beta>'"));
        }
        edges.push(Edge::new(
            num(line, f[0], "source id")?,
            num(line, f[1], "destination id")?,
            num(line, f[2], "beta")?,
        ));
    }
    if let Some((line, _)) = lines.next_fields() {
        return Err(err(line, "trailing content after edges"));
    }

    let graph = SpreadGraph::new(nodes, edges)?;
    if positions.is_empty() {
        if grid.is_some() {
            return Err(err(0, "'grid' requires node positions"));
        }
        Ok(graph)
    } else {
        graph.with_geometry(Geometry { positions, grid })
    }
}

pub fn write_graph(graph: &SpreadGraph) -> String {
    let mut out = String::new();
    let geometry = graph.geometry();
    if let Some(shape) = geometry.and_then(|g| g.grid) {
        let _ = writeln!(out, "grid {} {}", shape.rows, shape.cols);
    }
    let _ = writeln!(out, "nodes {}", graph.n());
    for (i, node) in graph.nodes().iter().enumerate() {
        let _ = write!(out, "{i} {} {}", node.delta, node.cost);
        if let Some(g) = geometry {
            let [x, y] = g.positions[i];
            let _ = write!(out, " {x} {y}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "edges {}", graph.edges().len());
    for e in graph.edges() {
        let _ = writeln!(out, "{} {} {}", e.src, e.dst, e.beta);
    }
    out
}
