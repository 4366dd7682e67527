//! Closed tours over intervention targets.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::intervention::{Target, TargetKind};

/// Largest instance the subset dynamic program accepts.
pub const MAX_EXACT_WAYPOINTS: usize = 18;

#[derive(Debug, Clone, PartialEq)]
pub struct Waypoint {
    pub id: usize,
    pub position: [f64; 2],
    /// Targets served at this position.
    pub payload: Vec<Target>,
}

impl Waypoint {
    pub fn amount(&self) -> f64 {
        self.payload.iter().fold(0.0, |s, t| s + t.amount)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    /// Waypoint ids in visiting order, starting at the depot; the closing leg
    /// back to the first entry is implied.
    pub order: Vec<usize>,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TspMethod {
    Exact,
    Heuristic,
}

impl std::str::FromStr for TspMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(TspMethod::Exact),
            "heuristic" => Ok(TspMethod::Heuristic),
            other => Err(Error::Config(format!(
                "unknown method '{other}' (exact, heuristic)"
            ))),
        }
    }
}

/// Edge targets sit at the midpoint of their endpoints, node targets at the
/// node. Targets landing on the same position share one waypoint; ids follow
/// first appearance in `targets`.
pub fn targets_to_waypoints(
    targets: &[Target],
    position: impl Fn(usize) -> Option<[f64; 2]>,
) -> Result<Vec<Waypoint>> {
    let mut waypoints: Vec<Waypoint> = Vec::new();
    for t in targets {
        let at = |i| position(i).ok_or(Error::MissingGeometry);
        let p = match t.kind {
            TargetKind::Edge { src, dst } => {
                let (a, b) = (at(src)?, at(dst)?);
                [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
            }
            TargetKind::Node(i) => at(i)?,
        };
        match waypoints.iter_mut().find(|w| w.position == p) {
            Some(w) => w.payload.push(*t),
            None => waypoints.push(Waypoint {
                id: waypoints.len(),
                position: p,
                payload: vec![*t],
            }),
        }
    }
    Ok(waypoints)
}

/// Prepends a payload-free depot as waypoint 0 and renumbers the rest.
pub fn with_depot(waypoints: &[Waypoint], depot: [f64; 2]) -> Vec<Waypoint> {
    let mut out = vec![Waypoint {
        id: 0,
        position: depot,
        payload: Vec::new(),
    }];
    out.extend(waypoints.iter().map(|w| Waypoint {
        id: w.id + 1,
        ..w.clone()
    }));
    out
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Closed length of visiting `order` (indices into `points`).
pub fn tour_length(points: &[[f64; 2]], order: &[usize]) -> f64 {
    if order.len() < 2 {
        return 0.0;
    }
    let mut len = 0.0;
    for k in 0..order.len() {
        len += distance(points[order[k]], points[order[(k + 1) % order.len()]]);
    }
    len
}

fn held_karp(d: &[Vec<f64>]) -> Vec<usize> {
    let n = d.len();
    // paths from 0 through `mask` (over nodes 1..n) ending at `last`
    let m = n - 1;
    let full = 1usize << m;
    let mut cost = vec![f64::INFINITY; full * m];
    let mut parent = vec![usize::MAX; full * m];
    for j in 0..m {
        cost[(1 << j) * m + j] = d[0][j + 1];
    }
    for mask in 1..full {
        for last in 0..m {
            if mask & (1 << last) == 0 {
                continue;
            }
            let here = cost[mask * m + last];
            if !here.is_finite() {
                continue;
            }
            for next in 0..m {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let nm = mask | (1 << next);
                let c = here + d[last + 1][next + 1];
                if c < cost[nm * m + next] {
                    cost[nm * m + next] = c;
                    parent[nm * m + next] = last;
                }
            }
        }
    }
    let mask = full - 1;
    let mut last = (0..m)
        .min_by(|&a, &b| {
            (cost[mask * m + a] + d[a + 1][0]).total_cmp(&(cost[mask * m + b] + d[b + 1][0]))
        })
        .expect("at least two waypoints");
    let mut order = Vec::with_capacity(n);
    let mut mask = mask;
    while last != usize::MAX {
        order.push(last + 1);
        let prev = parent[mask * m + last];
        mask &= !(1 << last);
        last = prev;
    }
    order.push(0);
    order.reverse();
    order
}

fn nearest_neighbor(d: &[Vec<f64>]) -> Vec<usize> {
    let n = d.len();
    let mut visited = vec![false; n];
    let mut order = vec![0];
    visited[0] = true;
    for _ in 1..n {
        let cur = *order.last().expect("nonempty");
        let next = (0..n)
            .filter(|&j| !visited[j])
            .min_by(|&a, &b| d[cur][a].total_cmp(&d[cur][b]))
            .expect("unvisited node");
        visited[next] = true;
        order.push(next);
    }
    order
}

fn two_opt(d: &[Vec<f64>], order: &mut [usize]) {
    let n = order.len();
    loop {
        let mut improved = false;
        for i in 0..n.saturating_sub(1) {
            for j in i + 2..n {
                let (a, b) = (order[i], order[i + 1]);
                let (c, e) = (order[j], order[(j + 1) % n]);
                if a == e {
                    continue;
                }
                let delta = d[a][c] + d[b][e] - d[a][b] - d[c][e];
                if delta < -1e-12 {
                    order[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// Closed tour starting at the first waypoint. `Exact` solves the subset
/// dynamic program; `Heuristic` is nearest neighbor followed by 2-opt.
pub fn solve_tsp(waypoints: &[Waypoint], method: TspMethod) -> Result<Tour> {
    let n = waypoints.len();
    if n == 0 {
        return Err(Error::Config("tour needs at least one waypoint".into()));
    }
    if method == TspMethod::Exact && n > MAX_EXACT_WAYPOINTS {
        return Err(Error::TooManyWaypoints {
            n,
            max: MAX_EXACT_WAYPOINTS,
        });
    }
    let points: Vec<[f64; 2]> = waypoints.iter().map(|w| w.position).collect();
    if points
        .iter()
        .any(|p| !p[0].is_finite() || !p[1].is_finite())
    {
        return Err(Error::Config("waypoint coordinates must be finite".into()));
    }
    let idx = if n <= 2 {
        (0..n).collect()
    } else {
        let d: Vec<Vec<f64>> = points
            .iter()
            .map(|&a| points.iter().map(|&b| distance(a, b)).collect())
            .collect();
        match method {
            TspMethod::Exact => held_karp(&d),
            TspMethod::Heuristic => {
                let mut order = nearest_neighbor(&d);
                two_opt(&d, &mut order);
                order
            }
        }
    };
    Ok(Tour {
        length: tour_length(&points, &idx),
        order: idx.into_iter().map(|k| waypoints[k].id).collect(),
    })
}

/// CSV `order,waypoint_id,x,y,payload_amount` followed by a length line.
pub fn write_tour(tour: &Tour, waypoints: &[Waypoint]) -> String {
    let mut out = String::from("order,waypoint_id,x,y,payload_amount\n");
    for (k, id) in tour.order.iter().enumerate() {
        let w = waypoints
            .iter()
            .find(|w| w.id == *id)
            .expect("tour ids come from the waypoint list");
        let _ = writeln!(
            out,
            "{k},{id},{},{},{:.6}",
            w.position[0],
            w.position[1],
            w.amount()
        );
    }
    let _ = writeln!(out, "# length {:.9}", tour.length);
    out
}
