//! Surveillance priorities: the discounted cost-to-go of an outbreak at each
//! node under the uncontrolled linear dynamics.
//!
//! With `x' = A x` and cost `J = int_0^inf e^{-rt} C x(t) dt`, the cost is
//! separable, `J = sum_i p_i x_i(0)`, where `p` solves `(rI - A)^T p = C^T`.
//! For `r` above the spectral abscissa `rI - A` is a nonsingular M-matrix and
//! `p >= 0`. The same `p` is the unique optimum of
//! `min |p|_1  s.t.  p >= 0,  (A - rI)^T p <= -C^T`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{spectral_abscissa, DynamicsMatrix, GridShape, SpectralOptions};
use crate::lp::{LinearProgram, LpBackend, LpError, RowKind};
use crate::mmatrix::{solve_m_matrix, FactorError};
use crate::sparse::CsrMatrix;

/// Negative round-off below this magnitude is clamped to zero; anything more
/// negative means the solve broke down.
pub const CLAMP_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PriorityMap {
    pub p: Vec<f64>,
    /// Discount rate the map was computed under.
    pub r: f64,
    pub normalized: bool,
}

impl PriorityMap {
    pub fn total(&self) -> f64 {
        self.p.iter().fold(0.0, |s, v| s + v)
    }

    /// Node ids sorted by decreasing priority, ties by increasing id.
    pub fn ranking(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.p.len()).collect();
        ids.sort_by(|&a, &b| self.p[b].total_cmp(&self.p[a]).then(a.cmp(&b)));
        ids
    }
}

fn check_inputs(a: &DynamicsMatrix, costs: &[f64], r: f64) -> Result<()> {
    if costs.len() != a.n() {
        return Err(Error::Config(format!(
            "cost vector has {} entries for a {}-node system",
            costs.len(),
            a.n()
        )));
    }
    if costs.iter().any(|&c| !(c.is_finite() && c >= 0.0)) {
        return Err(Error::Config("costs must be finite and >= 0".into()));
    }
    if !r.is_finite() {
        return Err(Error::Config(format!("discount rate {r} is not finite")));
    }
    Ok(())
}

fn too_small(a: &DynamicsMatrix, r: f64) -> Error {
    match spectral_abscissa(a, SpectralOptions::default()) {
        Ok(abscissa) => Error::DiscountTooSmall { r, abscissa },
        Err(e) => e,
    }
}

/// `(rI - A)^T`
fn discounted_transpose(a: &DynamicsMatrix, r: f64) -> CsrMatrix {
    a.csr().transpose().scaled_shift(r, -1.0)
}

pub(crate) fn clamp_nonnegative(p: &mut [f64]) -> Result<()> {
    for (i, v) in p.iter_mut().enumerate() {
        if *v < -CLAMP_THRESHOLD {
            return Err(Error::SolveBreakdown(format!(
                "priority of node {i} is {v}; inverse positivity violated"
            )));
        }
        *v = v.max(0.0);
    }
    Ok(())
}

/// Sparse direct solve of `(rI - A)^T p = C^T`.
pub fn priority_direct(a: &DynamicsMatrix, costs: &[f64], r: f64) -> Result<PriorityMap> {
    check_inputs(a, costs, r)?;
    let m = discounted_transpose(a, r);
    let mut p = match solve_m_matrix(&m, costs) {
        Ok(p) => p,
        Err(FactorError::NonPositivePivot { .. }) => return Err(too_small(a, r)),
        Err(FactorError::NotZMatrix { row, col }) => {
            return Err(Error::InvalidGraph(format!(
                "dynamics entry ({col}, {row}) is negative; matrix is not Metzler"
            )))
        }
    };
    let mp = m.mul_vec(&p);
    let residual = mp
        .iter()
        .zip(costs)
        .map(|(x, c)| (x - c).abs())
        .fold(0.0, f64::max);
    let c_norm = costs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if !(residual <= 1e-8 * (1.0 + c_norm)) {
        return Err(Error::SolveBreakdown(format!(
            "residual {residual:e} exceeds tolerance"
        )));
    }
    clamp_nonnegative(&mut p)?;
    Ok(PriorityMap {
        p,
        r,
        normalized: false,
    })
}

/// Same map from the equivalent linear program.
pub fn priority_lp(
    a: &DynamicsMatrix,
    costs: &[f64],
    r: f64,
    backend: &dyn LpBackend,
) -> Result<PriorityMap> {
    check_inputs(a, costs, r)?;
    let n = a.n();
    let mut lp = LinearProgram::new();
    for _ in 0..n {
        lp.add_var(1.0, 0.0, f64::INFINITY);
    }
    // column j of A: sum_i p_i a_ij - r p_j <= -c_j
    let at = a.csr().transpose();
    for (j, &c) in costs.iter().enumerate() {
        let mut terms: Vec<(usize, f64)> = at
            .row(j)
            .map(|(i, v)| (i, if i == j { v - r } else { v }))
            .collect();
        if !terms.iter().any(|&(i, _)| i == j) {
            terms.push((j, -r));
        }
        lp.add_row(terms, RowKind::Le, -c);
    }
    let solution = match backend.solve(&lp) {
        Ok(s) => s,
        // rI - A not an M-matrix: no nonnegative p certifies the cost
        Err(LpError::Infeasible) | Err(LpError::Unbounded) => return Err(too_small(a, r)),
        Err(e) => return Err(e.into()),
    };
    let mut p = solution.x;
    clamp_nonnegative(&mut p)?;
    Ok(PriorityMap {
        p,
        r,
        normalized: false,
    })
}

/// Smallest admissible discount rate: the spectral abscissa of `A`.
///
/// `priority_direct` succeeds for any `r` above the returned value plus the
/// eigen tolerance and fails at or below it.
pub fn min_discount(a: &DynamicsMatrix) -> Result<f64> {
    spectral_abscissa(a, SpectralOptions::default())
}

/// Scales a map so that its largest entry is 1. All-zero maps are returned
/// unchanged, apart from the flag.
pub fn normalize(map: &PriorityMap) -> PriorityMap {
    let max = map.p.iter().copied().fold(0.0, f64::max);
    let p = if max > 0.0 {
        map.p.iter().map(|v| v / max).collect()
    } else {
        map.p.clone()
    };
    PriorityMap {
        p,
        r: map.r,
        normalized: true,
    }
}

/// Raster CSV: one line per grid row, values normalized to `[0, 1]` with six
/// decimals. Without a grid shape, lines are `node_id,priority`.
pub fn write_raster(values: &[f64], grid: Option<GridShape>) -> String {
    let max = values.iter().copied().fold(0.0, f64::max);
    let scaled: Vec<f64> = values
        .iter()
        .map(|&v| if max > 0.0 { v / max } else { v })
        .collect();
    write_values(&scaled, grid, "priority")
}

/// Same layout as [`write_raster`] without normalization; `label` names the
/// value column of the list form.
pub fn write_values(values: &[f64], grid: Option<GridShape>, label: &str) -> String {
    let mut out = String::new();
    match grid {
        Some(shape) => {
            for row in values.chunks(shape.cols) {
                let line: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
                out.push_str(&line.join(","));
                out.push('\n');
            }
        }
        None => {
            let _ = writeln!(out, "node_id,{label}");
            for (i, v) in values.iter().enumerate() {
                let _ = writeln!(out, "{i},{v:.6}");
            }
        }
    }
    out
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

    // Cramer's rule on [[2.2, -0.5], [-0.5, 2.2]] p = [0.1, 1]
    const PAIR_P: [f64; 2] = [0.72 / 4.59, 2.25 / 4.59];

    #[test]
    fn scalar_closed_form() {
        let a = DynamicsMatrix::from_triplets(1, [(0, 0, -0.2)]).unwrap();
        let map = priority_direct(&a, &[1.0], 2.0).unwrap();
        assert!((map.p[0] - 1.0 / 2.2).abs() < 1e-14);
        let lp = priority_lp(&a, &[1.0], 2.0, &MicroLp).unwrap();
        assert!((lp.p[0] - 1.0 / 2.2).abs() < 1e-9);
    }

    #[test]
    fn pair_matches_cramer() {
        let map = priority_direct(&pair(), &[0.1, 1.0], 2.0).unwrap();
        let lp = priority_lp(&pair(), &[0.1, 1.0], 2.0, &MicroLp).unwrap();
        for i in 0..2 {
            assert!((map.p[i] - PAIR_P[i]).abs() < 1e-14);
            assert!((lp.p[i] - PAIR_P[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn grid16_diagonal_leads_the_ranking() {
        let g = grid16_fixture();
        let a = build_dynamics(&g).unwrap();
        let map = priority_direct(&a, &g.costs(), 2.0).unwrap();
        let non_city: Vec<usize> = map.ranking().into_iter().filter(|&i| i != 15).collect();
        assert_eq!(&non_city[..2], &[10, 5]);
    }

    #[test]
    fn below_abscissa_reports_the_rate() {
        let err = priority_direct(&pair(), &[0.1, 1.0], 0.25).unwrap_err();
        match err {
            Error::DiscountTooSmall { abscissa, .. } => assert!((abscissa - 0.3).abs() < 1e-7),
            other => panic!("unexpected {other}"),
        }
        assert!(matches!(
            priority_lp(&pair(), &[0.1, 1.0], 0.25, &MicroLp),
            Err(Error::DiscountTooSmall { .. })
        ));
    }

    #[test]
    fn min_discount_pair() {
        assert!((min_discount(&pair()).unwrap() - 0.3).abs() < 1e-8);
    }

    #[test]
    fn normalize_cases() {
        let m = PriorityMap {
            p: vec![2.0, 4.0],
            r: 1.0,
            normalized: false,
        };
        assert_eq!(normalize(&m).p, vec![0.5, 1.0]);
        assert!(normalize(&m).normalized);
        let z = PriorityMap {
            p: vec![0.0, 0.0],
            r: 1.0,
            normalized: false,
        };
        assert_eq!(normalize(&z).p, vec![0.0, 0.0]);
    }

    #[test]
    fn ranking_breaks_ties_by_id() {
        let m = PriorityMap {
            p: vec![1.0, 3.0, 1.0, 3.0],
            r: 1.0,
            normalized: false,
        };
        assert_eq!(m.ranking(), vec![1, 3, 0, 2]);
    }

    #[test]
    fn raster_formats() {
        let grid = write_raster(&[1.0, 2.0, 0.0, 4.0], Some(GridShape { rows: 2, cols: 2 }));
        assert_eq!(grid, "0.250000,0.500000\n0.000000,1.000000\n");
        let list = write_raster(&[1.0, 2.0], None);
        assert_eq!(list, "node_id,priority\n0,0.500000\n1,1.000000\n");
    }

    #[test]
    fn rejects_negative_costs() {
        assert!(priority_direct(&pair(), &[-0.1, 1.0], 2.0).is_err());
        assert!(priority_direct(&pair(), &[0.1], 2.0).is_err());
    }
}
