//! Dense two-phase simplex for `min cᵀx  s.t.  Ax = b, x ≥ 0`.
//!
//! Bland's rule is used for both entering and leaving variables, so the
//! method terminates on degenerate problems and its output is a deterministic
//! function of the input. With rational scalars every decision is exact.

use std::cmp::Ordering;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { x: Vec<T>, value: T },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy)]
pub struct LpTolerance {
    /// Magnitude below which a float tableau entry counts as zero.
    pub pivot: f64,
    /// Phase-one objective above this means the constraints are infeasible.
    pub feasibility: f64,
}

impl Default for LpTolerance {
    fn default() -> Self {
        LpTolerance { pivot: 1e-12, feasibility: 1e-9 }
    }
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    basis: Vec<usize>,
    width: usize,
}

impl<T: Scalar> Tableau<T> {
    fn rhs(&self, r: usize) -> &T {
        &self.rows[r][self.width]
    }

    fn pivot(&mut self, obj: &mut [T], r: usize, col: usize) {
        let p = self.rows[r][col].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row, &pivot_row, col);
            }
        }
        eliminate(obj, &pivot_row, col);
        self.basis[r] = col;
    }

    /// Runs simplex iterations on `obj` (reduced costs, last entry = −value).
    /// Only columns `< enterable` may enter the basis.
    fn optimize(&mut self, obj: &mut [T], enterable: usize, tol: &LpTolerance) -> bool {
        loop {
            let entering = (0..enterable).find(|&j| obj[j].sign_tol(tol.pivot) == Ordering::Less);
            let Some(col) = entering else { return true };
            let mut best: Option<(usize, T)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][col];
                if a.sign_tol(tol.pivot) != Ordering::Greater {
                    continue;
                }
                let ratio = self.rhs(r).clone() / a.clone();
                best = match best {
                    None => Some((r, ratio)),
                    Some((br, bv)) => {
                        let ord = (ratio.clone() - bv.clone()).sign_tol(tol.pivot);
                        if ord == Ordering::Less || (ord == Ordering::Equal && self.basis[r] < self.basis[br]) {
                            Some((r, ratio))
                        } else {
                            Some((br, bv))
                        }
                    }
                };
            }
            match best {
                None => return false,
                Some((r, _)) => self.pivot(obj, r, col),
            }
        }
    }
}

fn eliminate<T: Scalar>(row: &mut [T], pivot_row: &[T], col: usize) {
    let factor = row[col].clone();
    if factor == T::zero() {
        return;
    }
    for (v, p) in row.iter_mut().zip(pivot_row) {
        *v = v.clone() - factor.clone() * p.clone();
    }
}

/// Solves `min cᵀx` subject to `Ax = b`, `x ≥ 0`.
pub fn minimize<T: Scalar>(a: &[Vec<T>], b: &[T], c: &[T], tol: &LpTolerance) -> LpOutcome<T> {
    let m = a.len();
    let n = c.len();
    assert_eq!(b.len(), m, "rhs length must match row count");
    assert!(a.iter().all(|row| row.len() == n), "every row needs {n} columns");

    let width = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, (row, bi)) in a.iter().zip(b).enumerate() {
        let flip = *bi < T::zero();
        let mut r: Vec<T> = row.iter().map(|v| if flip { -v.clone() } else { v.clone() }).collect();
        r.extend((0..m).map(|k| if k == i { T::one() } else { T::zero() }));
        r.push(if flip { -bi.clone() } else { bi.clone() });
        rows.push(r);
    }
    let mut t = Tableau { rows, basis: (n..n + m).collect(), width };

    // Phase one: minimise the sum of artificials.
    let mut obj: Vec<T> = vec![T::zero(); width + 1];
    for o in &mut obj[n..width] {
        *o = T::one();
    }
    for r in 0..m {
        let row = t.rows[r].clone();
        for (o, v) in obj.iter_mut().zip(&row) {
            *o = o.clone() - v.clone();
        }
    }
    t.optimize(&mut obj, width, tol);
    let phase_one = -obj[width].clone();
    if phase_one.sign_tol(tol.feasibility) == Ordering::Greater {
        return LpOutcome::Infeasible;
    }

    // Drive remaining artificials out of the basis, dropping redundant rows.
    let mut r = 0;
    while r < t.rows.len() {
        if t.basis[r] >= n {
            match (0..n).find(|&j| !t.rows[r][j].is_zero_tol(tol.pivot)) {
                Some(col) => {
                    t.pivot(&mut obj, r, col);
                    r += 1;
                }
                None => {
                    t.rows.remove(r);
                    t.basis.remove(r);
                }
            }
        } else {
            r += 1;
        }
    }

    // Phase two on the original columns.
    let mut obj: Vec<T> = (0..=width).map(|j| if j < n { c[j].clone() } else { T::zero() }).collect();
    for r in 0..t.rows.len() {
        let cb = c[t.basis[r]].clone();
        if cb == T::zero() {
            continue;
        }
        let row = t.rows[r].clone();
        for (o, v) in obj.iter_mut().zip(&row) {
            *o = o.clone() - cb.clone() * v.clone();
        }
    }
    if !t.optimize(&mut obj, n, tol) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![T::zero(); n];
    for (r, &j) in t.basis.iter().enumerate() {
        let v = t.rhs(r).clone();
        x[j] = if v < T::zero() { T::zero() } else { v };
    }
    LpOutcome::Optimal { x, value: -obj[width].clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_i64(n)
    }

    #[test]
    fn small_exact_problem() {
        // min x0 + 2 x1 + 3 x2  s.t. x0 + x1 + x2 = 1, x1 - x2 = 0
        let a = vec![vec![q(1), q(1), q(1)], vec![q(0), q(1), q(-1)]];
        let out = minimize(&a, &[q(1), q(0)], &[q(1), q(2), q(3)], &LpTolerance::default());
        assert_eq!(out, LpOutcome::Optimal { x: vec![q(1), q(0), q(0)], value: q(1) });
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let a = vec![vec![q(1), q(1)], vec![q(1), q(1)]];
        let tol = LpTolerance::default();
        assert_eq!(minimize(&a, &[q(1), q(2)], &[q(0), q(0)], &tol), LpOutcome::Infeasible);
        let a = vec![vec![q(1), q(-1)]];
        assert_eq!(minimize(&a, &[q(1)], &[q(0), q(-1)], &tol), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let a = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![1.0, -1.0]];
        match minimize(&a, &[1.0, 2.0, 0.0], &[1.0, 1.0], &LpTolerance::default()) {
            LpOutcome::Optimal { x, value } => {
                assert!((x[0] - 0.5).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12);
                assert!((value - 1.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_rhs_rows_are_flipped() {
        let a = vec![vec![q(-1), q(-1)]];
        match minimize(&a, &[q(-2)], &[q(0), q(1)], &LpTolerance::default()) {
            LpOutcome::Optimal { x, .. } => assert_eq!(x, vec![q(2), q(0)]),
            other => panic!("unexpected {other:?}"),
        }
    }
}
