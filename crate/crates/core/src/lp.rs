//! Solver-agnostic linear program description and the bundled backend.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub terms: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

/// `minimize c^T x` subject to row constraints and variable bounds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable with objective coefficient and `[lower, upper]`
    /// bounds (use `f64::INFINITY` for no upper bound). Returns its index.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.bounds.push((lower, upper));
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, terms: Vec<(usize, f64)>, kind: RowKind, rhs: f64) {
        debug_assert!(terms.iter().all(|&(v, _)| v < self.objective.len()));
        self.rows.push(Row { terms, kind, rhs });
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (xi, &(lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - xi).max(xi - hi);
        }
        for row in &self.rows {
            let lhs: f64 = row.terms.iter().map(|&(v, a)| a * x[v]).sum();
            let v = match row.kind {
                RowKind::Le => lhs - row.rhs,
                RowKind::Ge => row.rhs - lhs,
                RowKind::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("infeasible")]
    Infeasible,
    #[error("unbounded")]
    Unbounded,
    #[error("solver failure: {0}")]
    Failed(String),
}

pub trait LpBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError>;
}

/// Sparse revised simplex from the `microlp` crate.
#[derive(Debug, Clone, Copy, Default)]
pub struct MicroLp;

impl LpBackend for MicroLp {
    fn name(&self) -> &'static str {
        "microlp"
    }

    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        use microlp::{ComparisonOp, OptimizationDirection, Problem};

        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = lp
            .objective
            .iter()
            .zip(&lp.bounds)
            .map(|(&c, &bounds)| problem.add_var(c, bounds))
            .collect();
        for row in &lp.rows {
            let expr: Vec<_> = row.terms.iter().map(|&(v, a)| (vars[v], a)).collect();
            let op = match row.kind {
                RowKind::Le => ComparisonOp::Le,
                RowKind::Ge => ComparisonOp::Ge,
                RowKind::Eq => ComparisonOp::Eq,
            };
            problem.add_constraint(expr.as_slice(), op, row.rhs);
        }
        let outcome = problem.solve().map_err(|e| match e {
            microlp::Error::Infeasible => LpError::Infeasible,
            microlp::Error::Unbounded => LpError::Unbounded,
            other => LpError::Failed(other.to_string()),
        })?;
        let solution = outcome
            .into_solution()
            .map_err(|_| LpError::Failed("solve interrupted before a solution".into()))?;
        let x = vars.iter().map(|&v| solution.var_value(v)).collect();
        Ok(LpSolution {
            x,
            objective: solution.objective(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // min -x - 2y  s.t. x + y <= 4, x - y >= -2, 0 <= x <= 3, y >= 0
        let mut lp = LinearProgram::new();
        let x = lp.add_var(-1.0, 0.0, 3.0);
        let y = lp.add_var(-2.0, 0.0, f64::INFINITY);
        lp.add_row(vec![(x, 1.0), (y, 1.0)], RowKind::Le, 4.0);
        lp.add_row(vec![(x, 1.0), (y, -1.0)], RowKind::Ge, -2.0);
        let sol = MicroLp.solve(&lp).unwrap();
        assert!((sol.x[x] - 1.0).abs() < 1e-9);
        assert!((sol.x[y] - 3.0).abs() < 1e-9);
        assert!((sol.objective + 7.0).abs() < 1e-9);
        assert!(lp.max_violation(&sol.x) < 1e-9);
    }

    #[test]
    fn infeasible_is_reported() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0, 0.0, f64::INFINITY);
        lp.add_row(vec![(x, 1.0)], RowKind::Le, -1.0);
        assert_eq!(MicroLp.solve(&lp), Err(LpError::Infeasible));
    }
}
