//! Budget-constrained intervention: allocate rate reductions `K` so that the
//! closed loop `x' = (A - K) x` has the smallest total discounted cost-to-go.
//!
//! The bilinear term `p^T K` is linearized with `Q = diag(p) K` and the
//! resulting LP is solved repeatedly:
//!
//! ```text
//! minimize    sum_i p_i
//! subject to  p >= 0, Q >= 0, q_ij = 0 outside the allowed pattern
//!             1 (P A - r P - Q) <= -C          (one row per column j)
//!             q_ij <= a_ij p_i                 (K <= A, off-diagonal entries)
//!             sum_ij q_ij / p0_i <= Gamma      (budget, linearized at p0)
//! ```
//!
//! starting from `p0` = the surveillance map and setting `p0 <- p` until the
//! relative change of `p` is below the tolerance. The final control is
//! `K = P^{-1} Q`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{DynamicsMatrix, Geometry};
use crate::lp::{LinearProgram, LpBackend, LpError, RowKind};
use crate::surveillance::{clamp_nonnegative, priority_direct};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    gamma: f64,
}

impl Budget {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::Config(format!("budget {gamma} must be >= 0")));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Where control resources may be placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMode {
    /// Off-diagonal entries on the edge pattern: slow down spreading links.
    Edges,
    /// Diagonal entries: speed up recovery of nodes.
    Nodes,
    /// Both, sharing one budget.
    Both,
}

impl ControlMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ControlMode::Edges => "edges",
            ControlMode::Nodes => "nodes",
            ControlMode::Both => "both",
        }
    }
}

impl std::str::FromStr for ControlMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edges" => Ok(ControlMode::Edges),
            "nodes" => Ok(ControlMode::Nodes),
            "both" => Ok(ControlMode::Both),
            other => Err(Error::Config(format!(
                "unknown control mode '{other}' (edges, nodes, both)"
            ))),
        }
    }
}

/// Sparse nonnegative control matrix; entry `(i, j)`, `i != j`, reduces the
/// rate of edge `j -> i`, entry `(i, i)` adds to the recovery rate of `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlMatrix {
    n: usize,
    mode: ControlMode,
    /// sorted by `(i, j)`, strictly positive values
    entries: Vec<(usize, usize, f64)>,
}

impl ControlMatrix {
    pub fn zero(n: usize, mode: ControlMode) -> Self {
        Self {
            n,
            mode,
            entries: Vec::new(),
        }
    }

    /// Validated against the dynamics: support must match the mode and
    /// off-diagonal entries must not exceed the corresponding rate.
    pub fn new(
        a: &DynamicsMatrix,
        mode: ControlMode,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let n = a.n();
        let mut list: Vec<(usize, usize, f64)> =
            entries.into_iter().filter(|e| e.2 != 0.0).collect();
        list.sort_by_key(|e| (e.0, e.1));
        for w in list.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::Config(format!(
                    "duplicate control entry ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        for &(i, j, k) in &list {
            if i >= n || j >= n {
                return Err(Error::Config(format!(
                    "control entry ({i}, {j}) out of range"
                )));
            }
            if !(k.is_finite() && k >= 0.0) {
                return Err(Error::Config(format!(
                    "control entry ({i}, {j}) = {k} must be >= 0"
                )));
            }
            let diagonal = i == j;
            let allowed = match mode {
                ControlMode::Edges => !diagonal,
                ControlMode::Nodes => diagonal,
                ControlMode::Both => true,
            };
            if !allowed {
                return Err(Error::Config(format!(
                    "control entry ({i}, {j}) not allowed in {} mode",
                    mode.as_str()
                )));
            }
            if !diagonal {
                let rate = a.get(i, j);
                if rate <= 0.0 {
                    return Err(Error::Config(format!(
                        "control entry ({i}, {j}) is not on an edge"
                    )));
                }
                if k > rate * (1.0 + 1e-9) {
                    return Err(Error::Config(format!(
                        "control entry ({i}, {j}) = {k} exceeds the rate {rate}"
                    )));
                }
            }
        }
        Ok(Self {
            n,
            mode,
            entries: list,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> ControlMode {
        self.mode
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&(i, j)))
            .map(|k| self.entries[k].2)
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().fold(0.0, |s, e| s + e.2)
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().map(|e| e.2).fold(0.0, f64::max)
    }

    /// Closed-loop dynamics `A - K`.
    pub fn closed_loop(&self, a: &DynamicsMatrix) -> Result<DynamicsMatrix> {
        a.minus(self.entries.iter().copied())
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            mode: self.mode,
            entries: self
                .entries
                .iter()
                .map(|&(i, j, k)| (i, j, k * factor))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct InterventionOptions {
    /// Relative infinity-norm change of `p` that counts as converged.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InterventionOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InterventionResult {
    /// Cost-to-go certificate: `(rI - (A - K))^T p >= C^T` holds for the
    /// returned `k`.
    pub p: Vec<f64>,
    pub k: ControlMatrix,
    pub iterations: usize,
    /// `sum_i p_i` after each LP solve.
    pub trace: Vec<f64>,
    /// `sum_i p_i` of the uncontrolled map the iteration started from.
    pub surveillance_total: f64,
    pub budget_used: f64,
    pub converged: bool,
    /// The exact budget of `P^{-1} Q` exceeded the limit by more than 1e-4
    /// and `K` was scaled back; `p` is then the exact closed-loop map.
    pub rescaled: bool,
}

impl InterventionResult {
    pub fn total(&self) -> f64 {
        self.p.iter().fold(0.0, |s, v| s + v)
    }
}

/// One allowed control position.
#[derive(Debug, Clone, Copy)]
struct Slot {
    row: usize,
    col: usize,
    /// rate bound `a_ij` for off-diagonal slots
    cap: Option<f64>,
}

fn control_pattern(a: &DynamicsMatrix, mode: ControlMode) -> Vec<Slot> {
    let mut slots = Vec::new();
    for i in 0..a.n() {
        for (j, v) in a.csr().row(i) {
            let edge = i != j && v > 0.0;
            let node = i == j;
            let take = match mode {
                ControlMode::Edges => edge,
                ControlMode::Nodes => node,
                ControlMode::Both => edge || node,
            };
            if take {
                slots.push(Slot {
                    row: i,
                    col: j,
                    cap: (i != j).then_some(v),
                });
            }
        }
        if matches!(mode, ControlMode::Nodes | ControlMode::Both)
            && a.csr().get(i, i) == 0.0
            && !slots.iter().any(|s| s.row == i && s.col == i)
        {
            slots.push(Slot {
                row: i,
                col: i,
                cap: None,
            });
        }
    }
    slots
}

struct Iterate {
    /// linearization point of the budget row
    p0: Vec<f64>,
    p: Vec<f64>,
    /// `(slot, q)` for slots used in this LP
    q: Vec<(Slot, f64)>,
}

fn solve_linearized(
    a: &DynamicsMatrix,
    costs: &[f64],
    r: f64,
    gamma: f64,
    slots: &[Slot],
    p0: &[f64],
    backend: &dyn LpBackend,
) -> Result<Iterate> {
    let n = a.n();
    // Solved in units of p0: p_i = s_i u_i and q_ij = s_i w_ij, so w is
    // the control itself when p = p0. Keeps coefficients O(1) where p0 spans
    // many orders of magnitude.
    let scale: Vec<f64> = p0.iter().map(|&v| if v > 0.0 { v } else { 1.0 }).collect();
    let mut lp = LinearProgram::new();
    for &s in &scale {
        lp.add_var(s, 0.0, f64::INFINITY);
    }
    // A node with zero cost-to-go cannot carry resources: Q row stays zero.
    let active: Vec<Slot> = slots.iter().copied().filter(|s| p0[s.row] > 0.0).collect();
    let q_vars: Vec<usize> = active
        .iter()
        .map(|_| lp.add_var(0.0, 0.0, f64::INFINITY))
        .collect();

    let mut column_q: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (s, &v) in active.iter().zip(&q_vars) {
        column_q[s.col].push((s.row, v));
    }
    let at = a.csr().transpose();
    for j in 0..n {
        // column j of P A - r P - Q, divided by s_j
        let mut terms: Vec<(usize, f64)> = at
            .row(j)
            .map(|(i, v)| (i, (if i == j { v - r } else { v }) * scale[i] / scale[j]))
            .collect();
        if !terms.iter().any(|&(i, _)| i == j) {
            terms.push((j, -r));
        }
        terms.extend(column_q[j].iter().map(|&(i, v)| (v, -scale[i] / scale[j])));
        lp.add_row(terms, RowKind::Le, -costs[j] / scale[j]);
    }
    if !active.is_empty() {
        let budget_terms = q_vars.iter().map(|&v| (v, 1.0)).collect();
        lp.add_row(budget_terms, RowKind::Le, gamma);
    }
    for (s, &v) in active.iter().zip(&q_vars) {
        if let Some(cap) = s.cap {
            lp.add_row(vec![(v, 1.0), (s.row, -cap)], RowKind::Le, 0.0);
        }
    }

    let solution = match backend.solve(&lp) {
        Ok(s) => s,
        Err(LpError::Infeasible) => return Err(Error::Lp(LpError::Infeasible)),
        Err(e) => return Err(e.into()),
    };
    let mut p: Vec<f64> = solution.x[..n]
        .iter()
        .zip(&scale)
        .map(|(u, s)| u * s)
        .collect();
    clamp_nonnegative(&mut p)?;
    let q = active
        .iter()
        .zip(&q_vars)
        .map(|(s, &v)| (*s, solution.x[v].max(0.0) * scale[s.row]))
        .collect();
    Ok(Iterate {
        p0: p0.to_vec(),
        p,
        q,
    })
}

struct Finalized {
    p: Vec<f64>,
    k: ControlMatrix,
    rescaled: bool,
}

fn finalize(
    a: &DynamicsMatrix,
    costs: &[f64],
    r: f64,
    gamma: f64,
    mode: ControlMode,
    it: &Iterate,
) -> Result<Finalized> {
    let q_scale = it.q.iter().map(|e| e.1).fold(0.0, f64::max).max(1e-300);
    let mut entries = Vec::new();
    for &(slot, q) in &it.q {
        // LP round-off dust
        if q <= 1e-12 * q_scale.max(1.0) {
            continue;
        }
        let p_row = it.p[slot.row];
        if p_row <= 0.0 {
            return Err(Error::DegenerateControl { row: slot.row });
        }
        let mut k = q / p_row;
        if let Some(cap) = slot.cap {
            // q <= a p holds to solver tolerance
            k = k.min(cap);
        }
        entries.push((slot.row, slot.col, k));
    }
    let mut k = ControlMatrix::new(a, mode, entries)?;
    let used = k.total();
    if used > gamma * (1.0 + 1e-6) {
        let rescaled = used - gamma > 1e-4;
        k = k.scaled(gamma / used);
        let p = priority_direct(&k.closed_loop(a)?, costs, r)?.p;
        return Ok(Finalized { p, k, rescaled });
    }
    Ok(Finalized {
        p: it.p.clone(),
        k,
        rescaled: false,
    })
}

/// `K = P0^{-1} Q` meets the linearized budget exactly and is defined even
/// where the new `p` vanishes.
fn at_linearization(a: &DynamicsMatrix, mode: ControlMode, it: &Iterate) -> Result<ControlMatrix> {
    let entries = it.q.iter().filter(|e| e.1 > 0.0).map(|&(slot, q)| {
        let k = q / it.p0[slot.row];
        (slot.row, slot.col, slot.cap.map_or(k, |cap| k.min(cap)))
    });
    ControlMatrix::new(a, mode, entries)
}

/// Lowest exact closed-loop cost over budget-feasible readings of every
/// iterate. The returned `p` is the exact map of the chosen control.
fn best_iterate(
    a: &DynamicsMatrix,
    costs: &[f64],
    r: f64,
    gamma: f64,
    mode: ControlMode,
    iterates: &[Iterate],
) -> Result<Finalized> {
    let mut best: Option<(f64, Finalized)> = None;
    for it in iterates {
        let mut candidates = vec![(at_linearization(a, mode, it)?, false)];
        match finalize(a, costs, r, gamma, mode, it) {
            Ok(f) => candidates.push((f.k, f.rescaled)),
            Err(Error::DegenerateControl { .. }) => {}
            Err(e) => return Err(e),
        }
        for (k, rescaled) in candidates {
            let map = priority_direct(&k.closed_loop(a)?, costs, r)?;
            let total = map.total();
            if best.as_ref().is_none_or(|(v, _)| total < *v) {
                best = Some((
                    total,
                    Finalized {
                        p: map.p,
                        k,
                        rescaled,
                    },
                ));
            }
        }
    }
    Ok(best.expect("at least one iterate").1)
}

/// Iterative LP for the budget-constrained intervention problem.
pub fn solve_intervention(
    a: &DynamicsMatrix,
    costs: &[f64],
    r: f64,
    budget: Budget,
    mode: ControlMode,
    opts: InterventionOptions,
    backend: &dyn LpBackend,
) -> Result<InterventionResult> {
    if opts.max_iter == 0 || !(opts.tol > 0.0) {
        return Err(Error::Config("need max_iter >= 1 and tol > 0".into()));
    }
    let start = priority_direct(a, costs, r)?;
    let surveillance_total = start.total();
    let slots = control_pattern(a, mode);
    let gamma = budget.gamma();

    let mut p0 = start.p;
    let mut trace = Vec::new();
    let mut iterates = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let it = solve_linearized(a, costs, r, gamma, &slots, &p0, backend)?;
        trace.push(it.p.iter().sum());
        let prev_norm = p0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let change =
            it.p.iter()
                .zip(&p0)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
        p0 = it.p.clone();
        iterates.push(it);
        if change <= opts.tol * (1.0 + prev_norm) {
            converged = true;
            break;
        }
    }

    let iterations = iterates.len();
    let last = finalize(
        a,
        costs,
        r,
        gamma,
        mode,
        iterates.last().expect("at least one iterate"),
    );
    let chosen = match last {
        Ok(f) if converged => f,
        Err(Error::DegenerateControl { .. }) | Ok(_) => {
            // the fixed point is unusable or was never reached
            converged = false;
            best_iterate(a, costs, r, gamma, mode, &iterates)?
        }
        Err(e) => return Err(e),
    };

    Ok(InterventionResult {
        budget_used: chosen.k.total(),
        p: chosen.p,
        k: chosen.k,
        iterations,
        trace,
        surveillance_total,
        converged,
        rescaled: chosen.rescaled,
    })
}

/// What a target acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TargetKind {
    /// Reduce the rate of `src -> dst`.
    Edge { src: usize, dst: usize },
    /// Raise the recovery rate of a node.
    Node(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub kind: TargetKind,
    pub amount: f64,
}

impl Target {
    /// `(row, col)` position in the control matrix.
    fn position(&self) -> (usize, usize) {
        match self.kind {
            TargetKind::Edge { src, dst } => (dst, src),
            TargetKind::Node(i) => (i, i),
        }
    }
}

/// Entries of at least `threshold * max entry`, largest first; equal amounts
/// are ordered by matrix position `(i, j)`.
pub fn extract_targets(k: &ControlMatrix, threshold: f64) -> Vec<Target> {
    let max = k.max_entry();
    if max <= 0.0 {
        return Vec::new();
    }
    let mut targets: Vec<Target> = k
        .entries()
        .iter()
        .filter(|e| e.2 >= threshold * max)
        .map(|&(i, j, amount)| Target {
            kind: if i == j {
                TargetKind::Node(i)
            } else {
                TargetKind::Edge { src: j, dst: i }
            },
            amount,
        })
        .collect();
    targets.sort_by(|a, b| {
        b.amount
            .total_cmp(&a.amount)
            .then(a.position().cmp(&b.position()))
    });
    targets
}

/// Intervention report as written by the CLI and read back by routing.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionReport {
    pub r: f64,
    pub gamma: f64,
    pub mode: ControlMode,
    pub converged: bool,
    pub iterations: usize,
    pub sum_p: f64,
    pub budget_used: f64,
    pub targets: Vec<Target>,
    /// positions of the nodes touched by targets
    pub positions: Vec<(usize, [f64; 2])>,
}

impl InterventionReport {
    pub fn new(
        result: &InterventionResult,
        r: f64,
        gamma: f64,
        geometry: Option<&Geometry>,
    ) -> Self {
        let targets = extract_targets(&result.k, 0.0);
        let mut touched: Vec<usize> = targets
            .iter()
            .flat_map(|t| match t.kind {
                TargetKind::Edge { src, dst } => vec![src, dst],
                TargetKind::Node(i) => vec![i],
            })
            .collect();
        touched.sort_unstable();
        touched.dedup();
        let positions = geometry
            .map(|g| touched.iter().map(|&i| (i, g.positions[i])).collect())
            .unwrap_or_default();
        Self {
            r,
            gamma,
            mode: result.k.mode(),
            converged: result.converged,
            iterations: result.iterations,
            sum_p: result.total(),
            budget_used: result.budget_used,
            targets,
            positions,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# intervention report\n");
        let _ = writeln!(out, "r {}", self.r);
        let _ = writeln!(out, "gamma {}", self.gamma);
        let _ = writeln!(out, "mode {}", self.mode.as_str());
        let _ = writeln!(out, "converged {}", self.converged);
        let _ = writeln!(out, "iterations {}", self.iterations);
        let _ = writeln!(out, "sum_p {:.6}", self.sum_p);
        let _ = writeln!(out, "budget_used {:.6}", self.budget_used);
        let _ = writeln!(out, "targets {}", self.targets.len());
        for t in &self.targets {
            match t.kind {
                TargetKind::Edge { src, dst } => {
                    let _ = writeln!(out, "edge {src} {dst} {:.6}", t.amount);
                }
                TargetKind::Node(i) => {
                    let _ = writeln!(out, "node {i} {:.6}", t.amount);
                }
            }
        }
        let _ = writeln!(out, "positions {}", self.positions.len());
        for (i, [x, y]) in &self.positions {
            let _ = writeln!(out, "{i} {x} {y}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut next = |key: &str| -> Result<(usize, Vec<String>)> {
            let (line, text) = lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("missing '{key}'"),
            })?;
            let fields: Vec<String> = text.split_ascii_whitespace().map(String::from).collect();
            if fields[0] != key {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected '{key}', found '{}'", fields[0]),
                });
            }
            Ok((line, fields[1..].to_vec()))
        };
        fn one<T: std::str::FromStr>(line: usize, f: &[String]) -> Result<T> {
            f.first()
                .filter(|_| f.len() == 1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse {
                    line,
                    msg: "malformed value".into(),
                })
        }
        let (l, f) = next("r")?;
        let r = one(l, &f)?;
        let (l, f) = next("gamma")?;
        let gamma = one(l, &f)?;
        let (l, f) = next("mode")?;
        let mode: String = one(l, &f)?;
        let mode = mode.parse()?;
        let (l, f) = next("converged")?;
        let converged = one(l, &f)?;
        let (l, f) = next("iterations")?;
        let iterations = one(l, &f)?;
        let (l, f) = next("sum_p")?;
        let sum_p = one(l, &f)?;
        let (l, f) = next("budget_used")?;
        let budget_used = one(l, &f)?;
        let (l, f) = next("targets")?;
        let count: usize = one(l, &f)?;

        let mut targets = Vec::with_capacity(count);
        for _ in 0..count {
            let (line, text) = lines.next().ok_or_else(|| Error::Parse {
                line: l,
                msg: format!("expected {count} target lines"),
            })?;
            let f: Vec<&str> = text.split_ascii_whitespace().collect();
            let bad = || Error::Parse {
                line,
                msg: "target must be 'edge <src> <dst> <amount>' or 'node <id> <amount>'".into(),
            };
            let target = match f.as_slice() {
                ["edge", s, d, a] => Target {
                    kind: TargetKind::Edge {
                        src: s.parse().map_err(|_| bad())?,
                        dst: d.parse().map_err(|_| bad())?,
                    },
                    amount: a.parse().map_err(|_| bad())?,
                },
                ["node", i, a] => Target {
                    kind: TargetKind::Node(i.parse().map_err(|_| bad())?),
                    amount: a.parse().map_err(|_| bad())?,
                },
                _ => return Err(bad()),
            };
            targets.push(target);
        }

        let (l, f) = {
            let (line, text) = lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                msg: "missing 'positions'".into(),
            })?;
            let f: Vec<String> = text.split_ascii_whitespace().map(String::from).collect();
            if f[0] != "positions" {
                return Err(Error::Parse {
                    line,
                    msg: "expected 'positions'".into(),
                });
            }
            (line, f[1..].to_vec())
        };
        let count: usize = one(l, &f)?;
        let mut positions = Vec::with_capacity(count);
        for _ in 0..count {
            let (line, text) = lines.next().ok_or_else(|| Error::Parse {
                line: l,
                msg: format!("expected {count} position lines"),
            })?;
            let f: Vec<&str> = text.split_ascii_whitespace().collect();
            let parsed = match f.as_slice() {
                [i, x, y] => i
                    .parse()
                    .ok()
                    .zip(x.parse().ok())
                    .zip(y.parse().ok())
                    .map(|((i, x), y)| (i, [x, y])),
                _ => None,
            };
            positions.push(parsed.ok_or_else(|| Error::Parse {
                line,
                msg: "position must be '<id> <x> <y>'".into(),
            })?);
        }
        if let Some((line, _)) = lines.next() {
            return Err(Error::Parse {
                line,
                msg: "trailing content".into(),
            });
        }
        Ok(Self {
            r,
            gamma,
            mode,
            converged,
            iterations,
            sum_p,
            budget_used,
            targets,
            positions,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_dynamics, grid16_fixture};
    use crate::lp::MicroLp;

    fn pair() -> DynamicsMatrix {
        DynamicsMatrix::from_triplets(2, [(0, 0, -0.2), (1, 1, -0.2), (0, 1, 0.5), (1, 0, 0.5)])
            .unwrap()
    }

    fn solve(a: &DynamicsMatrix, c: &[f64], gamma: f64, mode: ControlMode) -> InterventionResult {
        solve_intervention(
            a,
            c,
            2.0,
            Budget::new(gamma).unwrap(),
            mode,
            InterventionOptions::default(),
            &MicroLp,
        )
        .unwrap()
    }

    #[test]
    fn zero_budget_is_surveillance() {
        let res = solve(&pair(), &[0.1, 1.0], 0.0, ControlMode::Edges);
        assert!(res.k.entries().is_empty());
        assert!(res.converged);
        let direct = priority_direct(&pair(), &[0.1, 1.0], 2.0).unwrap();
        for (x, y) in res.p.iter().zip(&direct.p) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn pair_protects_the_city_link() {
        // cutting 0 -> 1 (matrix entry (1, 0)) keeps fire away from the
        // expensive node
        let res = solve(&pair(), &[0.1, 1.0], 0.2, ControlMode::Edges);
        assert!(res.converged);
        assert!((res.k.get(1, 0) - 0.2).abs() < 1e-6, "{:?}", res.k);
        assert!(res.budget_used <= 0.2 * (1.0 + 1e-6));
    }

    #[test]
    fn node_mode_is_diagonal() {
        let res = solve(&pair(), &[0.1, 1.0], 0.3, ControlMode::Nodes);
        assert!(res.k.entries().iter().all(|e| e.0 == e.1));
        assert!(res.total() < res.surveillance_total);
    }

    #[test]
    fn grid16_half_budget_goes_to_the_city_link() {
        let g = grid16_fixture();
        let a = build_dynamics(&g).unwrap();
        let res = solve(&a, &g.costs(), 0.5, ControlMode::Edges);
        let on_link = res.k.get(15, 10) + res.k.get(10, 15);
        assert!(on_link >= 0.95 * res.budget_used, "{:?}", res.k);
    }

    #[test]
    fn control_matrix_validation() {
        let a = pair();
        assert!(ControlMatrix::new(&a, ControlMode::Edges, [(0, 0, 0.1)]).is_err());
        assert!(ControlMatrix::new(&a, ControlMode::Nodes, [(0, 1, 0.1)]).is_err());
        assert!(ControlMatrix::new(&a, ControlMode::Edges, [(0, 1, 0.6)]).is_err());
        assert!(ControlMatrix::new(&a, ControlMode::Edges, [(0, 1, -0.1)]).is_err());
        let k = ControlMatrix::new(&a, ControlMode::Both, [(0, 1, 0.5), (1, 1, 3.0)]).unwrap();
        assert_eq!(k.total(), 3.5);
        let cl = k.closed_loop(&a).unwrap();
        assert_eq!(cl.get(0, 1), 0.0);
        assert_eq!(cl.get(1, 1), -3.2);
    }

    #[test]
    fn targets_empty_and_single() {
        let a = pair();
        assert!(extract_targets(&ControlMatrix::zero(2, ControlMode::Edges), 0.05).is_empty());
        let k = ControlMatrix::new(&a, ControlMode::Edges, [(1, 0, 0.5)]).unwrap();
        let t = extract_targets(&k, 0.05);
        assert_eq!(
            t,
            vec![Target {
                kind: TargetKind::Edge { src: 0, dst: 1 },
                amount: 0.5
            }]
        );
    }

    #[test]
    fn targets_sorted_with_ties_by_position() {
        let a = pair();
        let k = ControlMatrix::new(
            &a,
            ControlMode::Both,
            [(1, 0, 0.2), (0, 1, 0.2), (0, 0, 0.5), (1, 1, 0.001)],
        )
        .unwrap();
        let t = extract_targets(&k, 0.05);
        let kinds: Vec<_> = t.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![
                TargetKind::Node(0),
                TargetKind::Edge { src: 1, dst: 0 },
                TargetKind::Edge { src: 0, dst: 1 },
            ]
        );
    }

    #[test]
    fn report_round_trip() {
        let g = grid16_fixture();
        let a = build_dynamics(&g).unwrap();
        let res = solve(&a, &g.costs(), 1.0, ControlMode::Edges);
        let report = InterventionReport::new(&res, 2.0, 1.0, g.geometry());
        let text = report.to_text();
        let back = InterventionReport::parse(&text).unwrap();
        assert_eq!(back.targets.len(), report.targets.len());
        assert_eq!(back.positions, report.positions);
        assert_eq!(back.to_text(), text);
        assert!(InterventionReport::parse("r 2\n").is_err());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("nodes".parse::<ControlMode>().unwrap(), ControlMode::Nodes);
        assert!("diag".parse::<ControlMode>().is_err());
    }
}
