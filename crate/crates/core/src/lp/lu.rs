//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! Left-looking elimination: columns are taken in order of increasing
//! count, each is reduced against the `L` columns built so far, and the
//! pivot row is the sparsest row among entries within a factor
//! [`THRESHOLD`] of the largest magnitude. Between refactorizations the
//! basis is updated by eta columns, `B_k = B_0 E_1 ⋯ E_k`.

/// Relative threshold for pivot candidates.
const THRESHOLD: f64 = 0.1;
/// Pivots below this magnitude mark the basis as singular.
const SINGULAR_TOL: f64 = 1e-11;

#[derive(Debug)]
pub(super) struct Singular;

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    /// Off-pivot entries `(position, α_i)`.
    rest: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub(super) struct Factor {
    m: usize,
    /// Pivot row of each elimination step.
    prow: Vec<usize>,
    /// Basis position eliminated at each step.
    pcol: Vec<usize>,
    /// Strictly-lower `L` entries per step, keyed by original row.
    l: Vec<Vec<(usize, f64)>>,
    /// Strictly-upper `U` entries per step, keyed by earlier step.
    u: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
    etas: Vec<Eta>,
    eta_nnz: usize,
}

impl Factor {
    /// Factor the `m × m` matrix whose column `k` is `cols[k]` (row, value).
    pub(super) fn new(m: usize, cols: &[&[(usize, f64)]]) -> Result<Factor, Singular> {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&k| (cols[k].len(), k));

        // row counts of the original matrix guide the sparsity tie-break
        let mut row_count = vec![0usize; m];
        for c in cols {
            for &(i, _) in c.iter() {
                row_count[i] += 1;
            }
        }
        let mut step_of_row = vec![usize::MAX; m];
        let mut prow = Vec::with_capacity(m);
        let mut pcol = Vec::with_capacity(m);
        let mut l: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        let mut u: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        let mut diag = Vec::with_capacity(m);

        let mut work = vec![0.0f64; m];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; m];
        // steps whose pivot row became nonzero in the current column
        let mut pending: Vec<usize> = Vec::new();
        let mut in_pending = vec![false; m];

        for &k in &order {
            for &(i, v) in cols[k] {
                work[i] += v;
                if !mark[i] {
                    mark[i] = true;
                    touched.push(i);
                }
                let s = step_of_row[i];
                if s != usize::MAX && !in_pending[s] {
                    in_pending[s] = true;
                    pending.push(s);
                }
            }
            // eliminate with earlier steps in step order; new nonzeros can
            // only appear at later steps, so a min-heap order is enough
            let mut ucol: Vec<(usize, f64)> = Vec::new();
            let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<usize>> =
                pending.drain(..).map(std::cmp::Reverse).collect();
            while let Some(std::cmp::Reverse(s)) = heap.pop() {
                in_pending[s] = false;
                let t = work[prow[s]];
                if t == 0.0 {
                    continue;
                }
                ucol.push((s, t));
                for &(i, lv) in &l[s] {
                    work[i] -= lv * t;
                    if !mark[i] {
                        mark[i] = true;
                        touched.push(i);
                    }
                    let s2 = step_of_row[i];
                    if s2 != usize::MAX && !in_pending[s2] {
                        in_pending[s2] = true;
                        heap.push(std::cmp::Reverse(s2));
                    }
                }
            }
            // pivot among rows not yet used
            let mut big = 0.0f64;
            for &i in &touched {
                if step_of_row[i] == usize::MAX {
                    big = big.max(work[i].abs());
                }
            }
            if big < SINGULAR_TOL {
                return Err(Singular);
            }
            let mut piv = usize::MAX;
            for &i in &touched {
                if step_of_row[i] == usize::MAX && work[i].abs() >= THRESHOLD * big {
                    let better = piv == usize::MAX
                        || row_count[i] < row_count[piv]
                        || (row_count[i] == row_count[piv] && i < piv);
                    if better {
                        piv = i;
                    }
                }
            }
            let d = work[piv];
            let step = prow.len();
            let mut lcol = Vec::new();
            for &i in &touched {
                if step_of_row[i] == usize::MAX && i != piv && work[i] != 0.0 {
                    lcol.push((i, work[i] / d));
                }
            }
            for &i in &touched {
                work[i] = 0.0;
                mark[i] = false;
            }
            touched.clear();
            step_of_row[piv] = step;
            prow.push(piv);
            pcol.push(k);
            l.push(lcol);
            u.push(ucol);
            diag.push(d);
        }
        Ok(Factor {
            m,
            prow,
            pcol,
            l,
            u,
            diag,
            etas: Vec::new(),
            eta_nnz: 0,
        })
    }

    pub(super) fn nnz(&self) -> usize {
        self.l.iter().map(Vec::len).sum::<usize>() + self.u.iter().map(Vec::len).sum::<usize>() + self.m
    }

    pub(super) fn n_updates(&self) -> usize {
        self.etas.len()
    }

    pub(super) fn eta_nnz(&self) -> usize {
        self.eta_nnz
    }

    /// Solve `B z = a` where `a` is indexed by row; returns `z` by basis position.
    pub(super) fn ftran(&self, a: &mut [f64]) -> Vec<f64> {
        for k in 0..self.m {
            let t = a[self.prow[k]];
            if t != 0.0 {
                for &(i, lv) in &self.l[k] {
                    a[i] -= lv * t;
                }
            }
        }
        let mut w: Vec<f64> = self.prow.iter().map(|&p| a[p]).collect();
        for k in (0..self.m).rev() {
            if w[k] == 0.0 {
                continue;
            }
            let z = w[k] / self.diag[k];
            w[k] = z;
            for &(s, uv) in &self.u[k] {
                w[s] -= uv * z;
            }
        }
        let mut z = vec![0.0; self.m];
        for k in 0..self.m {
            z[self.pcol[k]] = w[k];
        }
        for e in &self.etas {
            let zr = z[e.pos] / e.pivot;
            if zr != 0.0 {
                for &(i, v) in &e.rest {
                    z[i] -= v * zr;
                }
            }
            z[e.pos] = zr;
        }
        z
    }

    /// Solve `Bᵀ y = c` where `c` is indexed by basis position; returns `y` by row.
    pub(super) fn btran(&self, c: &mut [f64]) -> Vec<f64> {
        for e in self.etas.iter().rev() {
            let s: f64 = e.rest.iter().map(|&(i, v)| v * c[i]).sum();
            c[e.pos] = (c[e.pos] - s) / e.pivot;
        }
        let mut g: Vec<f64> = self.pcol.iter().map(|&p| c[p]).collect();
        for k in 0..self.m {
            let s: f64 = self.u[k].iter().map(|&(s, uv)| uv * g[s]).sum();
            g[k] = (g[k] - s) / self.diag[k];
        }
        let mut y = vec![0.0; self.m];
        for k in (0..self.m).rev() {
            let s: f64 = self.l[k].iter().map(|&(i, lv)| lv * y[i]).sum();
            y[self.prow[k]] = g[k] - s;
        }
        y
    }

    /// Record that the column at basis position `pos` was replaced by one
    /// whose representation in the current basis is `alpha`.
    pub(super) fn update(&mut self, pos: usize, alpha: &[f64]) {
        let rest: Vec<(usize, f64)> = alpha
            .iter()
            .enumerate()
            .filter(|&(i, v)| i != pos && *v != 0.0)
            .map(|(i, v)| (i, *v))
            .collect();
        self.eta_nnz += rest.len() + 1;
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            rest,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_cols(a: &[&[f64]]) -> Vec<Vec<(usize, f64)>> {
        let m = a.len();
        (0..m)
            .map(|j| (0..m).filter(|&i| a[i][j] != 0.0).map(|i| (i, a[i][j])).collect())
            .collect()
    }

    fn mul(a: &[&[f64]], x: &[f64]) -> Vec<f64> {
        a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
    }

    #[test]
    fn solves_both_orientations() {
        let a: [&[f64]; 4] = [
            &[0.0, 2.0, 1.0, 0.0],
            &[1.0, 1.0, 0.0, 0.0],
            &[3.0, 0.0, 1.0, -1.0],
            &[0.0, 0.0, 0.5, 2.0],
        ];
        let cols = dense_cols(&a);
        let refs: Vec<&[(usize, f64)]> = cols.iter().map(|c| c.as_slice()).collect();
        let f = Factor::new(4, &refs).unwrap();
        let b = [3.0, 2.0, 4.0, -1.0];
        let z = f.ftran(&mut b.clone());
        let back = mul(&a, &z);
        for i in 0..4 {
            assert!((back[i] - b[i]).abs() < 1e-12);
        }
        let c = [1.0, -1.0, 2.0, 0.5];
        let y = f.btran(&mut c.clone());
        for j in 0..4 {
            let s: f64 = (0..4).map(|i| a[i][j] * y[i]).sum();
            assert!((s - c[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_updates_track_column_replacement() {
        let a: [&[f64]; 3] = [&[2.0, 0.0, 1.0], &[1.0, 3.0, 0.0], &[0.0, 1.0, 4.0]];
        let cols = dense_cols(&a);
        let refs: Vec<&[(usize, f64)]> = cols.iter().map(|c| c.as_slice()).collect();
        let mut f = Factor::new(3, &refs).unwrap();
        // replace column 1 with (1, 1, 1)
        let newcol = [1.0, 1.0, 1.0];
        let alpha = f.ftran(&mut newcol.clone());
        f.update(1, &alpha);
        let a2: [&[f64]; 3] = [&[2.0, 1.0, 1.0], &[1.0, 1.0, 0.0], &[0.0, 1.0, 4.0]];
        let b = [1.0, 2.0, 3.0];
        let z = f.ftran(&mut b.clone());
        let back = mul(&a2, &z);
        for i in 0..3 {
            assert!((back[i] - b[i]).abs() < 1e-12);
        }
        let y = f.btran(&mut b.clone());
        for j in 0..3 {
            let s: f64 = (0..3).map(|i| a2[i][j] * y[i]).sum();
            assert!((s - b[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_detected() {
        let a: [&[f64]; 2] = [&[1.0, 2.0], &[2.0, 4.0]];
        let cols = dense_cols(&a);
        let refs: Vec<&[(usize, f64)]> = cols.iter().map(|c| c.as_slice()).collect();
        assert!(Factor::new(2, &refs).is_err());
    }
}
