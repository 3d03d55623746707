//! Revised simplex method for equality-form linear programs.
//!
//! Solves `min c.x  s.t.  A x = b, x >= 0` with a two-phase method and an
//! explicit dense basis inverse. The scalar type is generic: `f64` with a
//! pivot tolerance, or `BigRational` for exact arithmetic on small problems.
//!
//! Pricing is deterministic Dantzig (most negative reduced cost, lowest
//! index on ties) and switches to Bland's rule during long degenerate runs,
//! which keeps the method finite on the highly degenerate grid complexes
//! the filling problems produce. Redundant equality rows, which boundary
//! matrices generate in bulk, are detected at the end of phase one and
//! removed before phase two.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

pub trait LpScalar:
    Clone + std::fmt::Debug + PartialOrd + Signed + std::ops::Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn approx(&self) -> f64;
    /// Magnitudes at or below this count as zero for pivoting.
    fn tol() -> Self;
    fn is_small(&self) -> bool {
        self.abs() <= Self::tol()
    }
    /// Tiny distinct right-hand-side offsets that break ratio-test ties on
    /// massively degenerate problems (the classical perturbation method).
    /// The basic solution is recomputed from the true right-hand side at the
    /// final basis, so the returned optimum is unaffected. Exact arithmetic
    /// opts out and relies on Bland's rule alone.
    fn rhs_jitter(row: usize) -> Self;
}

impl LpScalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn approx(&self) -> f64 {
        *self
    }
    fn tol() -> Self {
        1e-9
    }
    fn rhs_jitter(row: usize) -> Self {
        let h = (row as u64 + 1).wrapping_mul(0x9e3779b97f4a7c15);
        1e-13 + 1e-12 * ((h >> 11) as f64 / (1u64 << 53) as f64)
    }
}

impl LpScalar for BigRational {
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite weight")
    }
    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
    fn tol() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }
    fn rhs_jitter(_row: usize) -> Self {
        BigRational::from_integer(BigInt::from(0))
    }
}

/// Column-major sparse matrix.
#[derive(Debug, Clone)]
pub struct SparseMatrix<T> {
    pub rows: usize,
    pub cols: Vec<Vec<(usize, T)>>,
}

impl<T: LpScalar> SparseMatrix<T> {
    pub fn new(rows: usize, ncols: usize) -> Self {
        SparseMatrix {
            rows,
            cols: vec![Vec::new(); ncols],
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: T) {
        debug_assert!(row < self.rows);
        self.cols[col].push((row, value));
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }
}

#[derive(Debug)]
pub enum LpOutcome<T> {
    Optimal { x: Vec<T>, value: T },
    /// Phase one certifies infeasibility; `row` indexes the offending
    /// equality in the caller's row numbering.
    Infeasible { row: usize },
}

const DEGENERATE_SWITCH: usize = 40;

struct Tableau<T> {
    n: usize,
    cols: Vec<Vec<(usize, T)>>,
    binv: Vec<Vec<T>>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    xb: Vec<T>,
    /// Sign-normalized right-hand side without the anti-degeneracy jitter.
    rhs_true: Vec<T>,
    orig_row: Vec<usize>,
    bland: bool,
    degenerate_run: usize,
    iterations: usize,
}

impl<T: LpScalar> Tableau<T> {
    fn m(&self) -> usize {
        self.basis.len()
    }

    /// `B^{-1} * A_j` for an original column.
    fn direction(&self, j: usize) -> Vec<T> {
        let m = self.m();
        let mut d = vec![T::zero(); m];
        for (r, v) in &self.cols[j] {
            for i in 0..m {
                let add = self.binv[i][*r].clone() * v.clone();
                if !add.is_zero() {
                    d[i] = d[i].clone() + add;
                }
            }
        }
        d
    }

    fn price(&self, cost: &[T]) -> Option<usize> {
        let m = self.m();
        // y = c_B * B^{-1}
        let mut y = vec![T::zero(); m];
        for i in 0..m {
            let cb = basis_cost(cost, self.basis[i], self.n);
            if cb.is_zero() {
                continue;
            }
            for r in 0..m {
                let add = cb.clone() * self.binv[i][r].clone();
                if !add.is_zero() {
                    y[r] = y[r].clone() + add;
                }
            }
        }
        let mut best: Option<(usize, T)> = None;
        for j in 0..self.n {
            if self.in_basis[j] {
                continue;
            }
            let mut rc = cost[j].clone();
            for (r, v) in &self.cols[j] {
                rc = rc - y[*r].clone() * v.clone();
            }
            if rc < -T::tol() {
                if self.bland {
                    return Some(j);
                }
                match &best {
                    Some((_, b)) if rc >= *b => {}
                    _ => best = Some((j, rc)),
                }
            }
        }
        best.map(|(j, _)| j)
    }

    /// Bland-safe leaving rule: minimal ratio, ties to the smallest basis id.
    fn leaving(&self, d: &[T]) -> Option<usize> {
        let mut out: Option<(usize, T)> = None;
        for i in 0..self.m() {
            if d[i] <= T::tol() {
                continue;
            }
            let mut num = self.xb[i].clone();
            if num < T::zero() {
                num = T::zero();
            }
            let ratio = num / d[i].clone();
            let better = match &out {
                None => true,
                Some((r, best)) => {
                    ratio < *best || (ratio == *best && self.basis[i] < self.basis[*r])
                }
            };
            if better {
                out = Some((i, ratio));
            }
        }
        out.map(|(i, _)| i)
    }

    fn pivot(&mut self, enter: usize, leave: usize, d: &[T]) {
        let m = self.m();
        let theta = {
            let mut num = self.xb[leave].clone();
            if num < T::zero() {
                num = T::zero();
            }
            num / d[leave].clone()
        };
        for i in 0..m {
            if i != leave {
                self.xb[i] = self.xb[i].clone() - theta.clone() * d[i].clone();
                if self.xb[i] < T::zero() && self.xb[i].abs() <= T::tol() {
                    self.xb[i] = T::zero();
                }
            }
        }
        self.xb[leave] = theta.clone();
        self.bland = self.degenerate_run_update(theta.is_small());
        let old = self.basis[leave];
        if old < self.n {
            self.in_basis[old] = false;
        }
        self.basis[leave] = enter;
        self.in_basis[enter] = true;
        // eta update of the basis inverse
        let piv = d[leave].clone();
        for r in 0..m {
            self.binv[leave][r] = self.binv[leave][r].clone() / piv.clone();
        }
        for i in 0..m {
            if i == leave || d[i].is_zero() {
                continue;
            }
            let f = d[i].clone();
            for r in 0..m {
                let delta = f.clone() * self.binv[leave][r].clone();
                if !delta.is_zero() {
                    self.binv[i][r] = self.binv[i][r].clone() - delta;
                }
            }
        }
        self.iterations += 1;
    }

    fn degenerate_run_update(&mut self, degenerate: bool) -> bool {
        if degenerate {
            self.degenerate_run += 1;
        } else {
            self.degenerate_run = 0;
        }
        self.degenerate_run >= DEGENERATE_SWITCH
    }

    fn run_phase(&mut self, cost: &[T], limit: usize) -> Result<()> {
        let trace = std::env::var_os("CATFILL_LP_TRACE").is_some();
        let start = std::time::Instant::now();
        while let Some(enter) = self.price(cost) {
            let d = self.direction(enter);
            let Some(leave) = self.leaving(&d) else {
                return Err(Error::Domain(
                    "linear program is unbounded (weights must be positive)".into(),
                ));
            };
            self.pivot(enter, leave, &d);
            if trace && self.iterations % 500 == 0 {
                eprintln!(
                    "lp trace: iter {} m {} n {} bland {} elapsed {:?}",
                    self.iterations,
                    self.m(),
                    self.n,
                    self.bland,
                    start.elapsed()
                );
            }
            if self.iterations > limit {
                return Err(Error::Domain(format!(
                    "simplex iteration limit {limit} exceeded"
                )));
            }
        }
        Ok(())
    }
}

fn basis_cost<T: LpScalar>(cost: &[T], id: usize, n: usize) -> T {
    if id < n {
        cost[id].clone()
    } else {
        // artificial costs are supplied by the caller through `cost[n..]`
        cost[n + (id - n)].clone()
    }
}

/// Minimizes `c.x` over `A x = b, x >= 0`.
pub fn solve_min<T: LpScalar>(c: &[T], a: &SparseMatrix<T>, b: &[T]) -> Result<LpOutcome<T>> {
    let m = a.rows;
    let n = a.ncols();
    if c.len() != n || b.len() != m {
        return Err(Error::Dimension("lp shape mismatch".into()));
    }

    // Normalize b >= 0 by flipping row signs.
    let mut flip = vec![false; m];
    let mut rhs: Vec<T> = b.to_vec();
    for (i, v) in rhs.iter_mut().enumerate() {
        if *v < T::zero() {
            flip[i] = true;
            *v = -v.clone();
        }
    }
    let cols: Vec<Vec<(usize, T)>> = a
        .cols
        .iter()
        .map(|col| {
            col.iter()
                .map(|(r, v)| (*r, if flip[*r] { -v.clone() } else { v.clone() }))
                .collect()
        })
        .collect();

    let jittered: Vec<T> = rhs
        .iter()
        .enumerate()
        .map(|(i, v)| v.clone() + T::rhs_jitter(i))
        .collect();
    let mut t = Tableau {
        n,
        cols,
        binv: (0..m)
            .map(|i| {
                let mut row = vec![T::zero(); m];
                row[i] = T::one();
                row
            })
            .collect(),
        basis: (n..n + m).collect(),
        in_basis: vec![false; n],
        xb: jittered,
        rhs_true: rhs,
        orig_row: (0..m).collect(),
        bland: false,
        degenerate_run: 0,
        iterations: 0,
    };
    let limit = 400 * (m + n) + 20_000;

    // Phase one: minimize the artificial sum. The jitter keeps the optimum
    // of a feasible system at jitter scale, far below genuine infeasibility.
    let mut phase1_cost = vec![T::zero(); n];
    phase1_cost.extend((0..m).map(|_| T::one()));
    t.run_phase(&phase1_cost, limit)?;
    let infeasibility: T = (0..t.m())
        .filter(|&i| t.basis[i] >= n)
        .fold(T::zero(), |acc, i| acc + t.xb[i].clone());
    let infeasible_above = if T::tol().is_zero() {
        T::zero()
    } else {
        T::from_f64(1e-6)
    };
    if infeasibility > infeasible_above {
        let row = (0..t.m())
            .find(|&i| t.basis[i] >= n && t.xb[i] > infeasible_above)
            .map(|i| t.orig_row[t.basis[i] - n])
            .unwrap_or(0);
        return Ok(LpOutcome::Infeasible { row });
    }

    drive_out_artificials(&mut t)?;

    // Phase two on the original costs (artificials are gone).
    let mut phase2_cost = c.to_vec();
    phase2_cost.extend((0..t.m()).map(|_| T::zero()));
    t.bland = false;
    t.degenerate_run = 0;
    t.run_phase(&phase2_cost, limit)?;

    // Optimality (the pricing condition) does not involve the right-hand
    // side, so the final basis is optimal for the true system: recompute the
    // basic values from it.
    let m2 = t.m();
    let mut exact = vec![T::zero(); m2];
    for i in 0..m2 {
        let mut acc = T::zero();
        for r in 0..m2 {
            if !t.rhs_true[r].is_zero() {
                acc = acc + t.binv[i][r].clone() * t.rhs_true[r].clone();
            }
        }
        exact[i] = acc;
    }
    let feasibility_slack = T::from_f64(1e-7);
    let mut x = vec![T::zero(); n];
    for i in 0..m2 {
        if exact[i] < -feasibility_slack.clone() {
            return Err(Error::Domain(
                "perturbed basis is infeasible for the true right-hand side".into(),
            ));
        }
        if t.basis[i] < n {
            x[t.basis[i]] = if exact[i] < T::zero() {
                T::zero()
            } else {
                exact[i].clone()
            };
        }
    }
    let value = c
        .iter()
        .zip(&x)
        .fold(T::zero(), |acc, (ci, xi)| acc + ci.clone() * xi.clone());
    Ok(LpOutcome::Optimal { x, value })
}

/// Pivots zero-valued artificials out of the basis; rows whose artificial
/// cannot leave are redundant equalities and are dropped, after which the
/// basis inverse is rebuilt on the reduced system.
fn drive_out_artificials<T: LpScalar>(t: &mut Tableau<T>) -> Result<()> {
    let n = t.n;
    let mut redundant: Vec<usize> = Vec::new();
    for i in 0..t.m() {
        if t.basis[i] < n {
            continue;
        }
        let row_i = t.binv[i].clone();
        let mut entering = None;
        for j in 0..n {
            if t.in_basis[j] {
                continue;
            }
            let mut dij = T::zero();
            for (r, v) in &t.cols[j] {
                dij = dij + row_i[*r].clone() * v.clone();
            }
            if !dij.is_small() {
                entering = Some(j);
                break;
            }
        }
        match entering {
            Some(j) => {
                let d = t.direction(j);
                // theta = 0 pivot: feasibility is untouched
                t.xb[i] = T::zero();
                t.pivot(j, i, &d);
            }
            None => redundant.push(i),
        }
    }
    if redundant.is_empty() {
        return Ok(());
    }

    let drop_rows: std::collections::BTreeSet<usize> = redundant
        .iter()
        .map(|&i| t.basis[i] - n)
        .collect();
    let keep_rows: Vec<usize> = (0..t.m()).filter(|r| !drop_rows.contains(r)).collect();
    let row_map: std::collections::HashMap<usize, usize> = keep_rows
        .iter()
        .enumerate()
        .map(|(new, &old)| (old, new))
        .collect();
    let m2 = keep_rows.len();

    let new_cols: Vec<Vec<(usize, T)>> = t
        .cols
        .iter()
        .map(|col| {
            col.iter()
                .filter_map(|(r, v)| row_map.get(r).map(|&nr| (nr, v.clone())))
                .collect()
        })
        .collect();
    let new_basis: Vec<usize> = t
        .basis
        .iter()
        .copied()
        .filter(|&id| id < n)
        .collect();
    debug_assert_eq!(new_basis.len(), m2);
    let new_orig_row: Vec<usize> = keep_rows.iter().map(|&r| t.orig_row[r]).collect();
    let new_rhs_true: Vec<T> = keep_rows.iter().map(|&r| t.rhs_true[r].clone()).collect();

    // Rebuild the dense inverse of the reduced basis.
    let mut bmat = vec![vec![T::zero(); m2]; m2];
    for (bi, &col_id) in new_basis.iter().enumerate() {
        for (r, v) in &new_cols[col_id] {
            bmat[*r][bi] = v.clone();
        }
    }
    let binv = invert(&bmat)?;

    // xb on the reduced system: previous basic values at the kept positions.
    let mut xb = vec![T::zero(); m2];
    let mut next = 0;
    for i in 0..t.m() {
        if t.basis[i] < n {
            xb[next] = if t.xb[i] < T::zero() {
                T::zero()
            } else {
                t.xb[i].clone()
            };
            next += 1;
        }
    }

    t.cols = new_cols;
    t.binv = binv;
    t.basis = new_basis;
    t.xb = xb;
    t.orig_row = new_orig_row;
    t.rhs_true = new_rhs_true;
    Ok(())
}

fn invert<T: LpScalar>(mat: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let m = mat.len();
    let mut a: Vec<Vec<T>> = mat.to_vec();
    let mut inv: Vec<Vec<T>> = (0..m)
        .map(|i| {
            let mut row = vec![T::zero(); m];
            row[i] = T::one();
            row
        })
        .collect();
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| {
                a[i][col]
                    .abs()
                    .partial_cmp(&a[j][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .ok_or_else(|| Error::Domain("empty basis".into()))?;
        if a[pivot][col].is_small() {
            return Err(Error::Domain("singular reduced basis".into()));
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let piv = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x = x.clone() / piv.clone();
        }
        for x in inv[col].iter_mut() {
            *x = x.clone() / piv.clone();
        }
        for i in 0..m {
            if i == col || a[i][col].is_zero() {
                continue;
            }
            let f = a[i][col].clone();
            for cidx in 0..m {
                let d1 = f.clone() * a[col][cidx].clone();
                a[i][cidx] = a[i][cidx].clone() - d1;
                let d2 = f.clone() * inv[col][cidx].clone();
                inv[i][cidx] = inv[i][cidx].clone() - d2;
            }
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn tiny_equality_lp() {
        // min x + 2y  s.t.  x + y = 3
        let mut a = SparseMatrix::new(1, 2);
        a.push(0, 0, 1.0);
        a.push(0, 1, 1.0);
        match solve_min(&[1.0, 2.0], &a, &[3.0]).unwrap() {
            LpOutcome::Optimal { x, value } => {
                assert!((value - 3.0).abs() < 1e-9);
                assert!((x[0] - 3.0).abs() < 1e-9);
                assert!(x[1].abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_rhs_rows_are_flipped() {
        // min x  s.t.  -x = -2  => x = 2
        let mut a = SparseMatrix::new(1, 1);
        a.push(0, 0, -1.0);
        match solve_min(&[1.0], &a, &[-2.0]).unwrap() {
            LpOutcome::Optimal { x, value } => {
                assert!((x[0] - 2.0).abs() < 1e-9);
                assert!((value - 2.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_reports_a_row() {
        // x >= 0 with x = 1 and x = 2 cannot both hold
        let mut a = SparseMatrix::new(2, 1);
        a.push(0, 0, 1.0);
        a.push(1, 0, 1.0);
        match solve_min(&[1.0], &a, &[1.0, 2.0]).unwrap() {
            LpOutcome::Infeasible { row } => assert!(row < 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn redundant_rows_are_removed() {
        // duplicated constraint; still solvable
        let mut a = SparseMatrix::new(2, 2);
        a.push(0, 0, 1.0);
        a.push(0, 1, 1.0);
        a.push(1, 0, 1.0);
        a.push(1, 1, 1.0);
        match solve_min(&[1.0, 3.0], &a, &[5.0, 5.0]).unwrap() {
            LpOutcome::Optimal { x, value } => {
                assert!((value - 5.0).abs() < 1e-9);
                assert!((x[0] - 5.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rational_solution_is_exact() {
        // min x + y  s.t.  2x + y = 1, x - y = 0  => x = y = 1/3, value 2/3
        let mut a = SparseMatrix::new(2, 2);
        a.push(0, 0, rat(2, 1));
        a.push(0, 1, rat(1, 1));
        a.push(1, 0, rat(1, 1));
        a.push(1, 1, rat(-1, 1));
        match solve_min(&[rat(1, 1), rat(1, 1)], &a, &[rat(1, 1), rat(0, 1)]).unwrap() {
            LpOutcome::Optimal { x, value } => {
                assert_eq!(value, rat(2, 3));
                assert_eq!(x[0], rat(1, 3));
                assert_eq!(x[1], rat(1, 3));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_problem_terminates() {
        // several columns tie at zero; exercises the Bland switch path
        let mut a = SparseMatrix::new(3, 6);
        for j in 0..6 {
            for i in 0..3 {
                let v = ((i + j) % 3) as f64 - 1.0;
                if v != 0.0 {
                    a.push(i, j, v);
                }
            }
        }
        let b = [0.0, 0.0, 0.0];
        match solve_min(&[1.0; 6], &a, &b).unwrap() {
            LpOutcome::Optimal { value, .. } => assert!(value.abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }
}
