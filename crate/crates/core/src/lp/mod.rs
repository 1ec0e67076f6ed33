//! Sparse linear programs and a two-phase primal simplex solver.
//!
//! Columns are either nonnegative or free; every upper bound is `+∞`.
//! Dual values are reported as shadow prices: `dual[i]` is the rate of
//! change of the optimal objective with respect to `rows[i].rhs`, in the
//! problem's own sense.

mod dump;
mod lu;
mod simplex;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use dump::parse_dump;
pub use simplex::SimplexOptions;

/// Feasibility tolerance on primal and dual residuals.
pub const FEAS_TOL: f64 = 1e-9;
/// Smallest admissible pivot magnitude.
pub const PIVOT_TOL: f64 = 1e-10;
/// Strong-duality tolerance.
pub const GAP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    /// `true` for a lower bound of `-∞`, `false` for `0`.
    pub free: bool,
    pub obj: f64,
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub tag: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("row {row} references column {col}, but there are {n} columns")]
    ColumnOutOfRange { row: usize, col: usize, n: usize },
    #[error("row {row} has two coefficients for column {col}")]
    DuplicateCoefficient { row: usize, col: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("dump line {line}: {message}")]
    Dump { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The solver gave up (iteration limit or failed optimality certificate).
    Numerical,
}

/// Residuals of an optimal basis, measured on the original data.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Certificate {
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub duality_gap: f64,
    pub slackness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    pub iterations: usize,
    pub certificate: Certificate,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            columns: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_column(&mut self, obj: f64, free: bool, tag: impl Into<String>) -> usize {
        self.columns.push(Column {
            free,
            obj,
            tag: tag.into(),
        });
        self.columns.len() - 1
    }

    pub fn add_row(
        &mut self,
        coeffs: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
        tag: impl Into<String>,
    ) -> usize {
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
            tag: tag.into(),
        });
        self.rows.len() - 1
    }

    /// Index ranges, duplicate coefficients, finiteness.
    pub fn check(&self) -> Result<(), LpError> {
        let n = self.columns.len();
        for (j, c) in self.columns.iter().enumerate() {
            if !c.obj.is_finite() {
                return Err(LpError::NonFinite(format!("objective of column {j}")));
            }
        }
        let mut seen = vec![usize::MAX; n];
        for (i, r) in self.rows.iter().enumerate() {
            if !r.rhs.is_finite() {
                return Err(LpError::NonFinite(format!("rhs of row {i}")));
            }
            for &(j, a) in &r.coeffs {
                if j >= n {
                    return Err(LpError::ColumnOutOfRange { row: i, col: j, n });
                }
                if seen[j] == i {
                    return Err(LpError::DuplicateCoefficient { row: i, col: j });
                }
                seen[j] = i;
                if !a.is_finite() {
                    return Err(LpError::NonFinite(format!("coefficient ({i},{j})")));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.columns.iter().zip(x).map(|(c, v)| c.obj * v).sum()
    }

    pub fn activity(&self, row: usize, x: &[f64]) -> f64 {
        self.rows[row].coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.solve_with(&SimplexOptions::default())
    }

    pub fn solve_with(&self, opts: &SimplexOptions) -> Result<LpSolution, LpError> {
        self.check()?;
        Ok(simplex::solve(self, opts))
    }

    /// Residuals of `(x, y)` against this program. `y` uses the shadow-price
    /// convention of [`LpSolution::dual`].
    pub fn certificate(&self, x: &[f64], y: &[f64]) -> Certificate {
        // work in minimization form: c' = ±c, y' = ±y
        let sgn = match self.sense {
            Sense::Min => 1.0,
            Sense::Max => -1.0,
        };
        let scale = 1.0 + self.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        let mut primal: f64 = 0.0;
        let mut slackness: f64 = 0.0;
        let mut dual: f64 = 0.0;
        let mut reduced: Vec<f64> = self.columns.iter().map(|c| sgn * c.obj).collect();
        for (i, r) in self.rows.iter().enumerate() {
            let act = self.activity(i, x);
            let slack = r.rhs - act;
            let viol = match r.relation {
                Relation::Eq => slack.abs(),
                Relation::Le => (-slack).max(0.0),
                Relation::Ge => slack.max(0.0),
            };
            primal = primal.max(viol);
            let yi = sgn * y[i];
            let sign_viol = match r.relation {
                Relation::Eq => 0.0,
                Relation::Le => yi.max(0.0),
                Relation::Ge => (-yi).max(0.0),
            };
            dual = dual.max(sign_viol);
            let norm = r.coeffs.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt().max(1.0);
            if r.relation != Relation::Eq {
                slackness = slackness.max(yi.abs() * slack.abs() / norm);
            }
            for &(j, a) in &r.coeffs {
                reduced[j] -= yi * a;
            }
        }
        for (j, c) in self.columns.iter().enumerate() {
            if c.free {
                dual = dual.max(reduced[j].abs());
            } else {
                primal = primal.max((-x[j]).max(0.0));
                dual = dual.max((-reduced[j]).max(0.0));
                slackness = slackness.max((x[j] * reduced[j]).abs());
            }
        }
        let pobj = sgn * self.objective_value(x);
        let dobj: f64 = self.rows.iter().zip(y).map(|(r, yi)| r.rhs * sgn * yi).sum();
        Certificate {
            primal_residual: primal / scale,
            dual_residual: dual,
            duality_gap: (pobj - dobj).abs(),
            slackness,
        }
    }

    /// Line-oriented text form: `max|min`, then `col <id> <lb> <ub> <obj>`
    /// per column, then `row <rel> <rhs> <idx:coef>...` per row. Floats use
    /// 17 significant digits so the dump replays bit-exactly.
    pub fn to_dump(&self) -> String {
        dump::write(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_var(sense: Sense, rows: &[(Relation, f64)]) -> LinearProgram {
        let mut lp = LinearProgram::new(sense);
        lp.add_column(1.0, false, "x");
        for (k, &(rel, b)) in rows.iter().enumerate() {
            lp.add_row(vec![(0, 1.0)], rel, b, format!("r{k}"));
        }
        lp
    }

    #[test]
    fn bounded_max() {
        let s = one_var(Sense::Max, &[(Relation::Le, 3.0)]).solve().unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert!((s.dual[0] - 1.0).abs() < 1e-12);
        assert!((s.primal[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_max() {
        let s = one_var(Sense::Max, &[]).solve().unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
        let s = one_var(Sense::Max, &[(Relation::Ge, 1.0)]).solve().unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn contradictory_equalities() {
        let mut lp = one_var(Sense::Min, &[(Relation::Eq, 1.0), (Relation::Eq, 2.0)]);
        lp.columns[0].obj = 0.0;
        assert_eq!(lp.solve().unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn empty_row_handling() {
        let mut lp = one_var(Sense::Max, &[(Relation::Le, 2.0)]);
        lp.add_row(vec![], Relation::Le, -1.0, "bad");
        assert_eq!(lp.solve().unwrap().status, LpStatus::Infeasible);
        let mut lp = one_var(Sense::Max, &[(Relation::Le, 2.0)]);
        lp.add_row(vec![(0, 0.0)], Relation::Eq, 0.0, "zero");
        let s = lp.solve().unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.dual[1], 0.0);
    }

    #[test]
    fn textbook_min_with_ge_rows() {
        // min 2a + 3b  s.t. a + b >= 4, a + 3b >= 6  -> a = 3, b = 1, obj 9
        let mut lp = LinearProgram::new(Sense::Min);
        lp.add_column(2.0, false, "a");
        lp.add_column(3.0, false, "b");
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Relation::Ge, 4.0, "r0");
        lp.add_row(vec![(0, 1.0), (1, 3.0)], Relation::Ge, 6.0, "r1");
        let s = lp.solve().unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 9.0).abs() < 1e-12);
        assert!((s.primal[0] - 3.0).abs() < 1e-12 && (s.primal[1] - 1.0).abs() < 1e-12);
        // duals solve y0 + y1 = 2, y0 + 3 y1 = 3
        assert!((s.dual[0] - 1.5).abs() < 1e-12 && (s.dual[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn free_variable_goes_negative() {
        // min x s.t. x >= -5 with x free
        let mut lp = LinearProgram::new(Sense::Min);
        lp.add_column(1.0, true, "x");
        lp.add_row(vec![(0, 1.0)], Relation::Ge, -5.0, "lb");
        let s = lp.solve().unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.primal[0] + 5.0).abs() < 1e-12);
        assert!((s.dual[0] - 1.0).abs() < 1e-12);
        let mut lp = LinearProgram::new(Sense::Min);
        lp.add_column(1.0, true, "x");
        assert_eq!(lp.solve().unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn malformed_programs() {
        let mut lp = LinearProgram::new(Sense::Min);
        lp.add_column(1.0, false, "x");
        lp.add_row(vec![(0, 1.0), (0, 2.0)], Relation::Le, 1.0, "dup");
        assert_eq!(
            lp.solve().unwrap_err(),
            LpError::DuplicateCoefficient { row: 0, col: 0 }
        );
        lp.rows[0].coeffs = vec![(3, 1.0)];
        assert!(matches!(lp.check(), Err(LpError::ColumnOutOfRange { .. })));
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's classic cycling LP; Dantzig pivoting without safeguards cycles.
        let mut lp = LinearProgram::new(Sense::Min);
        for (k, c) in [-0.75, 150.0, -0.02, 6.0].into_iter().enumerate() {
            lp.add_column(c, false, format!("x{k}"));
        }
        lp.add_row(
            vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)],
            Relation::Le,
            0.0,
            "a",
        );
        lp.add_row(vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Relation::Le, 0.0, "b");
        lp.add_row(vec![(2, 1.0)], Relation::Le, 1.0, "c");
        let s = lp.solve().unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-12, "{}", s.objective);
    }

    fn brute_force_2d(lp: &LinearProgram) -> Option<f64> {
        // vertices of a 2-variable LP with nonnegative columns and <= rows
        let mut lines: Vec<(f64, f64, f64)> = lp
            .rows
            .iter()
            .map(|r| {
                let a = r.coeffs.iter().find(|e| e.0 == 0).map_or(0.0, |e| e.1);
                let b = r.coeffs.iter().find(|e| e.0 == 1).map_or(0.0, |e| e.1);
                (a, b, r.rhs)
            })
            .collect();
        lines.push((1.0, 0.0, 0.0));
        lines.push((0.0, 1.0, 0.0));
        let feasible = |x: f64, y: f64| {
            x >= -1e-9
                && y >= -1e-9
                && lp
                    .rows
                    .iter()
                    .enumerate()
                    .all(|(i, r)| lp.activity(i, &[x, y]) <= r.rhs + 1e-9)
        };
        let mut best: Option<f64> = None;
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                let (a1, b1, c1) = lines[i];
                let (a2, b2, c2) = lines[j];
                let det = a1 * b2 - a2 * b1;
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = (c1 * b2 - c2 * b1) / det;
                let y = (a1 * c2 - a2 * c1) / det;
                if feasible(x, y) {
                    let v = lp.objective_value(&[x, y]);
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
            }
        }
        best
    }

    proptest! {
        #[test]
        fn bounded_2d_matches_vertex_enumeration(
            c in prop::array::uniform2(0.1f64..5.0),
            rows in prop::collection::vec((0.1f64..3.0, 0.1f64..3.0, 0.5f64..10.0), 1..6)
        ) {
            let mut lp = LinearProgram::new(Sense::Max);
            lp.add_column(c[0], false, "x");
            lp.add_column(c[1], false, "y");
            for (k, (a, b, r)) in rows.iter().enumerate() {
                lp.add_row(vec![(0, *a), (1, *b)], Relation::Le, *r, format!("r{k}"));
            }
            let s = lp.solve().unwrap();
            prop_assert_eq!(s.status, LpStatus::Optimal);
            let want = brute_force_2d(&lp).unwrap();
            prop_assert!((s.objective - want).abs() <= 1e-9 * (1.0 + want.abs()));
            let cert = lp.certificate(&s.primal, &s.dual);
            prop_assert!(cert.primal_residual <= FEAS_TOL);
            prop_assert!(cert.dual_residual <= FEAS_TOL);
            prop_assert!(cert.duality_gap <= GAP_TOL);
            prop_assert!(cert.slackness <= GAP_TOL);
        }

        #[test]
        fn dump_round_trips(
            rows in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -10.0f64..10.0, 0usize..3), 0..6),
            free in any::<bool>(),
        ) {
            let mut lp = LinearProgram::new(if free { Sense::Min } else { Sense::Max });
            lp.add_column(1.0 / 3.0, free, "x");
            lp.add_column(-0.1, false, "y");
            for (a, b, r, rel) in rows {
                let rel = [Relation::Le, Relation::Eq, Relation::Ge][rel];
                lp.add_row(vec![(0, a), (1, b)], rel, r, "");
            }
            let back = parse_dump(&lp.to_dump()).unwrap();
            prop_assert_eq!(back.sense, lp.sense);
            prop_assert_eq!(back.columns.len(), 2);
            for (x, y) in back.columns.iter().zip(&lp.columns) {
                prop_assert_eq!(x.obj.to_bits(), y.obj.to_bits());
                prop_assert_eq!(x.free, y.free);
            }
            for (x, y) in back.rows.iter().zip(&lp.rows) {
                prop_assert_eq!(&x.coeffs, &y.coeffs);
                prop_assert_eq!(x.rhs.to_bits(), y.rhs.to_bits());
                prop_assert_eq!(x.relation, y.relation);
            }
        }
    }
}
