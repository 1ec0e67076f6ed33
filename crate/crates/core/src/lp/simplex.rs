//! Two-phase revised primal simplex.
//!
//! Rows are brought to `A x (+ slack) = b` with `b ≥ 0`; every row owns a
//! unit column (its slack when the slack enters with `+1`, an artificial
//! otherwise), and these columns form the starting basis. The basis is
//! kept as a sparse LU factorization with eta updates, refreshed every
//! `refactor_every` pivots and always before optimality is declared.
//! Dantzig pricing with a Harris ratio test runs first; after
//! `bland_after` pivots the solver switches permanently to Bland's rule,
//! which cannot cycle.

use super::lu::Factor;
use super::{Certificate, LinearProgram, LpSolution, LpStatus, Relation, Sense, FEAS_TOL, GAP_TOL, PIVOT_TOL};

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub pivot_tol: f64,
    pub feas_tol: f64,
    /// Reduced-cost threshold for entering candidates.
    pub opt_tol: f64,
    /// Pivots before Bland's rule takes over; `None` means `5·(rows+cols)`.
    pub bland_after: Option<usize>,
    /// Hard pivot limit; `None` means `bland_after + 50·(rows+cols)`.
    pub max_iterations: Option<usize>,
    /// Eta updates allowed before the basis is factorized again.
    pub refactor_every: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            pivot_tol: PIVOT_TOL,
            feas_tol: FEAS_TOL,
            opt_tol: FEAS_TOL,
            bland_after: None,
            max_iterations: None,
            refactor_every: 64,
        }
    }
}

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
    Singular,
}

struct Revised<'a> {
    st: &'a Standard,
    m: usize,
    basis: Vec<usize>,
    pos_of: Vec<usize>,
    xb: Vec<f64>,
    lu: Factor,
    iterations: usize,
    bland_after: usize,
    max_iterations: usize,
    refactor_every: usize,
}

impl<'a> Revised<'a> {
    fn new(st: &'a Standard, opts: &SimplexOptions) -> Option<Revised<'a>> {
        let m = st.b.len();
        let n = st.cols.len();
        let mut pos_of = vec![NONE; n];
        for (i, &u) in st.unit.iter().enumerate() {
            pos_of[u] = i;
        }
        let size = m + n;
        let bland_after = opts.bland_after.unwrap_or(5 * size);
        let refs: Vec<&[(usize, f64)]> = st.unit.iter().map(|&j| st.cols[j].as_slice()).collect();
        let lu = Factor::new(m, &refs).ok()?;
        Some(Revised {
            st,
            m,
            basis: st.unit.clone(),
            pos_of,
            xb: st.b.clone(),
            lu,
            iterations: 0,
            bland_after,
            max_iterations: opts.max_iterations.unwrap_or(bland_after + 50 * size),
            refactor_every: opts.refactor_every.max(1),
        })
    }

    /// Fresh factorization of the current basis and its basic solution.
    fn refactor(&mut self) -> bool {
        let refs: Vec<&[(usize, f64)]> = self.basis.iter().map(|&j| self.st.cols[j].as_slice()).collect();
        match Factor::new(self.m, &refs) {
            Ok(f) => {
                self.lu = f;
                self.xb = self.lu.ftran(&mut self.st.b.clone());
                true
            }
            Err(_) => false,
        }
    }

    /// Row prices `y = B⁻ᵀ c_B` in the internal row space.
    fn prices(&self, cost: &[f64]) -> Vec<f64> {
        let mut cb: Vec<f64> = self.basis.iter().map(|&j| cost[j]).collect();
        self.lu.btran(&mut cb)
    }

    fn reduced_cost(&self, j: usize, y: &[f64], cost: &[f64]) -> f64 {
        cost[j] - self.st.cols[j].iter().map(|&(i, a)| y[i] * a).sum::<f64>()
    }

    /// Entering column and direction (`+1` increase, `-1` decrease).
    fn price(&self, y: &[f64], cost: &[f64], bland: bool, opt_tol: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.st.artificial_from {
            if self.pos_of[j] != NONE {
                continue;
            }
            let dj = self.reduced_cost(j, y, cost);
            let (score, dir) = if dj < -opt_tol {
                (-dj, 1.0)
            } else if self.st.free[j] && dj > opt_tol {
                (dj, -1.0)
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if best.map_or(true, |(_, s, _)| score > s) {
                best = Some((j, score, dir));
            }
        }
        best.map(|(j, _, dir)| (j, dir))
    }

    /// `B⁻¹ A_q` by basis position.
    fn column(&self, q: usize) -> Vec<f64> {
        let mut a = vec![0.0; self.m];
        for &(i, v) in &self.st.cols[q] {
            a[i] = v;
        }
        self.lu.ftran(&mut a)
    }

    /// Leaving position for an entering column with representation `alpha`
    /// moving in direction `dir`.
    fn ratio(&self, alpha: &[f64], dir: f64, bland: bool, pivot_tol: f64, harris_tol: f64) -> Option<usize> {
        let eligible = |i: usize| -> Option<f64> {
            if self.st.free[self.basis[i]] {
                return None;
            }
            let a = dir * alpha[i];
            (a > pivot_tol).then_some(a)
        };
        if bland {
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.m {
                if let Some(a) = eligible(i) {
                    let ratio = self.xb[i].max(0.0) / a;
                    match best {
                        None => best = Some((i, ratio)),
                        Some((bi, br)) => {
                            let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br);
                            if (!tie && ratio < br) || (tie && self.basis[i] < self.basis[bi]) {
                                best = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            return best.map(|(i, _)| i);
        }
        // Harris two-pass: bound with relaxed feasibility, then take the
        // largest pivot among positions within the bound.
        let mut bound = f64::INFINITY;
        for i in 0..self.m {
            if let Some(a) = eligible(i) {
                bound = bound.min((self.xb[i].max(0.0) + harris_tol) / a);
            }
        }
        if !bound.is_finite() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            if let Some(a) = eligible(i) {
                if self.xb[i].max(0.0) / a <= bound {
                    let better = match best {
                        None => true,
                        Some((bi, ba)) => a > ba || (a == ba && self.basis[i] < self.basis[bi]),
                    };
                    if better {
                        best = Some((i, a));
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) -> bool {
        let step = self.xb[r].max(0.0) / alpha[r];
        if step != 0.0 {
            for (x, a) in self.xb.iter_mut().zip(alpha) {
                *x -= step * a;
            }
        }
        self.xb[r] = step;
        let leaving = self.basis[r];
        self.pos_of[leaving] = NONE;
        self.pos_of[q] = r;
        self.basis[r] = q;
        self.lu.update(r, alpha);
        self.iterations += 1;
        if self.lu.n_updates() >= self.refactor_every || self.lu.eta_nnz() > 4 * self.lu.nnz() + 8 * self.m {
            return self.refactor();
        }
        true
    }

    fn run(&mut self, cost: &[f64], opts: &SimplexOptions) -> Outcome {
        let harris_tol = opts.feas_tol * 1e-2;
        loop {
            let bland = self.iterations >= self.bland_after;
            let y = self.prices(cost);
            let Some((q, dir)) = self.price(&y, cost, bland, opts.opt_tol) else {
                // confirm on a fresh factorization
                if self.lu.n_updates() > 0 {
                    if !self.refactor() {
                        return Outcome::Singular;
                    }
                    continue;
                }
                return Outcome::Optimal;
            };
            let alpha = self.column(q);
            let Some(r) = self.ratio(&alpha, dir, bland, opts.pivot_tol, harris_tol) else {
                if self.lu.n_updates() > 0 {
                    if !self.refactor() {
                        return Outcome::Singular;
                    }
                    continue;
                }
                return Outcome::Unbounded;
            };
            if self.iterations >= self.max_iterations {
                return Outcome::IterationLimit;
            }
            if !self.pivot(r, q, &alpha) {
                return Outcome::Singular;
            }
        }
    }

    /// Pivot basic artificials out against any structural or slack column
    /// with a nonzero entry in their row; rows where none exists are
    /// redundant and keep their artificial at zero.
    fn drive_out_artificials(&mut self, pivot_tol: f64) -> bool {
        for r in 0..self.m {
            if self.basis[r] < self.st.artificial_from {
                continue;
            }
            let mut e = vec![0.0; self.m];
            e[r] = 1.0;
            let rho = self.lu.btran(&mut e);
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.st.artificial_from {
                if self.pos_of[j] != NONE {
                    continue;
                }
                let a = self.st.cols[j].iter().map(|&(i, v)| rho[i] * v).sum::<f64>().abs();
                if a > pivot_tol && best.map_or(true, |(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            if let Some((q, _)) = best {
                let alpha = self.column(q);
                if alpha[r].abs() <= pivot_tol {
                    continue;
                }
                // degenerate step: the artificial sits at zero
                self.xb[r] = 0.0;
                if !self.pivot(r, q, &alpha) {
                    return false;
                }
            }
        }
        true
    }
}

/// Internal standard form built from the reduced program.
struct Standard {
    /// Column-wise copy of the sign-normalized constraint matrix.
    cols: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    cost: Vec<f64>,
    free: Vec<bool>,
    unit: Vec<usize>,
    row_sign: Vec<f64>,
    n_struct: usize,
    artificial_from: usize,
}

fn standardize(lp: &LinearProgram, rows: &[usize], cols: &[usize], sgn: f64) -> Standard {
    let mut col_pos = vec![NONE; lp.n_cols()];
    for (k, &j) in cols.iter().enumerate() {
        col_pos[j] = k;
    }
    let m = rows.len();
    let n_struct = cols.len();
    let mut mat: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_struct];
    let mut b = Vec::with_capacity(m);
    let mut row_sign = Vec::with_capacity(m);
    let mut slack_cols: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut unit = vec![NONE; m];
    let mut needs_art = Vec::new();
    for (i, &ri) in rows.iter().enumerate() {
        let r = &lp.rows[ri];
        let s = if r.rhs < 0.0 { -1.0 } else { 1.0 };
        row_sign.push(s);
        b.push(s * r.rhs);
        for &(j, a) in &r.coeffs {
            if a != 0.0 && col_pos[j] != NONE {
                mat[col_pos[j]].push((i, s * a));
            }
        }
        let slack = match r.relation {
            Relation::Le => Some(1.0),
            Relation::Ge => Some(-1.0),
            Relation::Eq => None,
        };
        match slack {
            Some(c) => {
                let k = n_struct + slack_cols.len();
                slack_cols.push(vec![(i, s * c)]);
                if s * c > 0.0 {
                    unit[i] = k;
                } else {
                    needs_art.push(i);
                }
            }
            None => needs_art.push(i),
        }
    }
    let artificial_from = n_struct + slack_cols.len();
    let mut all = mat;
    all.extend(slack_cols);
    for (k, &i) in needs_art.iter().enumerate() {
        unit[i] = artificial_from + k;
        all.push(vec![(i, 1.0)]);
    }
    let n = all.len();
    let mut cost = vec![0.0; n];
    let mut free = vec![false; n];
    for (k, &j) in cols.iter().enumerate() {
        cost[k] = sgn * lp.columns[j].obj;
        free[k] = lp.columns[j].free;
    }
    Standard {
        cols: all,
        b,
        cost,
        free,
        unit,
        row_sign,
        n_struct,
        artificial_from,
    }
}

fn empty_solution(lp: &LinearProgram, status: LpStatus, iterations: usize) -> LpSolution {
    LpSolution {
        status,
        objective: f64::NAN,
        primal: vec![0.0; lp.n_cols()],
        dual: vec![0.0; lp.n_rows()],
        iterations,
        certificate: Certificate::default(),
    }
}

pub(super) fn solve(lp: &LinearProgram, opts: &SimplexOptions) -> LpSolution {
    let sgn = match lp.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    // presolve: drop empty rows and columns
    let mut rows = Vec::new();
    for (i, r) in lp.rows.iter().enumerate() {
        if r.coeffs.iter().any(|e| e.1 != 0.0) {
            rows.push(i);
            continue;
        }
        let ok = match r.relation {
            Relation::Le => r.rhs >= -opts.feas_tol,
            Relation::Ge => r.rhs <= opts.feas_tol,
            Relation::Eq => r.rhs.abs() <= opts.feas_tol,
        };
        if !ok {
            return empty_solution(lp, LpStatus::Infeasible, 0);
        }
    }
    let mut used = vec![false; lp.n_cols()];
    for &i in &rows {
        for &(j, a) in &lp.rows[i].coeffs {
            if a != 0.0 {
                used[j] = true;
            }
        }
    }
    let mut unbounded_empty = false;
    let mut cols = Vec::new();
    for (j, c) in lp.columns.iter().enumerate() {
        if used[j] {
            cols.push(j);
        } else {
            let c = sgn * c.obj;
            if c < 0.0 || (lp.columns[j].free && c != 0.0) {
                unbounded_empty = true;
            }
        }
    }

    let st = standardize(lp, &rows, &cols, sgn);
    let m = rows.len();
    let n = st.cols.len();
    let Some(mut rs) = Revised::new(&st, opts) else {
        return empty_solution(lp, LpStatus::Numerical, 0);
    };

    // phase 1
    if st.artificial_from < n {
        let phase1: Vec<f64> = (0..n)
            .map(|j| if j >= st.artificial_from { 1.0 } else { 0.0 })
            .collect();
        match rs.run(&phase1, opts) {
            Outcome::Optimal => {}
            Outcome::Unbounded | Outcome::IterationLimit | Outcome::Singular => {
                return empty_solution(lp, LpStatus::Numerical, rs.iterations);
            }
        }
        let infeas: f64 = (0..m)
            .filter(|&i| rs.basis[i] >= st.artificial_from)
            .map(|i| rs.xb[i].max(0.0))
            .sum();
        let bscale = 1.0 + st.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if infeas > opts.feas_tol * bscale {
            return empty_solution(lp, LpStatus::Infeasible, rs.iterations);
        }
        if !rs.drive_out_artificials(opts.pivot_tol) {
            return empty_solution(lp, LpStatus::Numerical, rs.iterations);
        }
    }

    // phase 2
    match rs.run(&st.cost, opts) {
        Outcome::Optimal => {}
        Outcome::Unbounded => {
            return empty_solution(lp, LpStatus::Unbounded, rs.iterations);
        }
        Outcome::IterationLimit | Outcome::Singular => {
            return empty_solution(lp, LpStatus::Numerical, rs.iterations);
        }
    }
    if unbounded_empty {
        return empty_solution(lp, LpStatus::Unbounded, rs.iterations);
    }

    let mut xb = vec![0.0; n];
    for i in 0..m {
        xb[rs.basis[i]] = rs.xb[i];
    }
    let yhat = rs.prices(&st.cost);
    let (x, y) = map_back(lp, &rows, &cols, &st, &xb, &yhat, sgn);
    let cert = lp.certificate(&x, &y);
    let status = if acceptable(&cert) {
        LpStatus::Optimal
    } else {
        LpStatus::Numerical
    };
    LpSolution {
        status,
        objective: lp.objective_value(&x),
        primal: x,
        dual: y,
        iterations: rs.iterations,
        certificate: cert,
    }
}

fn acceptable(c: &Certificate) -> bool {
    c.primal_residual <= FEAS_TOL && c.dual_residual <= FEAS_TOL && c.duality_gap <= GAP_TOL && c.slackness <= GAP_TOL
}

fn map_back(
    lp: &LinearProgram,
    rows: &[usize],
    cols: &[usize],
    st: &Standard,
    xb: &[f64],
    yhat: &[f64],
    sgn: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; lp.n_cols()];
    for (k, &j) in cols.iter().enumerate() {
        let v = xb[k];
        x[j] = if !st.free[k] && v < 0.0 && v > -FEAS_TOL {
            0.0
        } else {
            v
        };
    }
    let mut y = vec![0.0; lp.n_rows()];
    for (i, &ri) in rows.iter().enumerate() {
        // internal row = sign · original row; shadow price flips with the sense
        y[ri] = sgn * st.row_sign[i] * yhat[i];
    }
    debug_assert_eq!(st.n_struct, cols.len());
    (x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bland_only_still_terminates() {
        let mut lp = LinearProgram::new(Sense::Max);
        for k in 0..4 {
            lp.add_column(1.0 + k as f64, false, "");
        }
        for k in 0..4 {
            lp.add_row(vec![(k, 1.0), ((k + 1) % 4, 1.0)], Relation::Le, 1.0, "");
        }
        let opts = SimplexOptions {
            bland_after: Some(0),
            ..Default::default()
        };
        let s = lp.solve_with(&opts).unwrap();
        let d = lp.solve().unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - d.objective).abs() < 1e-12);
    }

    #[test]
    fn iteration_limit_reports_numerical() {
        let mut lp = LinearProgram::new(Sense::Max);
        lp.add_column(1.0, false, "");
        lp.add_column(1.0, false, "");
        lp.add_row(vec![(0, 1.0), (1, 2.0)], Relation::Le, 4.0, "");
        lp.add_row(vec![(0, 3.0), (1, 1.0)], Relation::Le, 6.0, "");
        let opts = SimplexOptions {
            max_iterations: Some(0),
            ..Default::default()
        };
        assert_eq!(lp.solve_with(&opts).unwrap().status, LpStatus::Numerical);
    }
}
