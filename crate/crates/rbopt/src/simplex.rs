//! Two-phase revised simplex solver for equality-form linear programs
//!
//!     minimize c.x   subject to   A x = b,  x >= 0.
//!
//! The basis inverse is maintained explicitly and refactorized
//! periodically; this is adequate because the basis dimension equals the
//! number of constraints, which stays at the model parameter count even
//! when the column count is large.

use crate::linalg::{invert_any, DenseMatrix};
use thiserror::Error;

/// Optimality / reduced-cost tolerance.
const OPT_TOL: f64 = 1e-9;
/// Smallest pivot magnitude accepted in the ratio test.
const RATIO_PIVOT_TOL: f64 = 1e-12;
/// Phase-1 feasibility tolerance, scaled by (1 + |b|_inf).
const FEAS_TOL: f64 = 1e-9;
/// Pivots between refactorizations of the basis inverse.
const REFACTOR_EVERY: usize = 50;
/// Hard cap on total simplex iterations.
const ITERATION_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum SimplexError {
    #[error("iteration limit of {ITERATION_CAP} reached")]
    IterationLimit,
    #[error("malformed LP: {0}")]
    Malformed(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
}

#[derive(Debug, Clone)]
pub struct LpStandardForm {
    pub objective: Vec<f64>,
    pub constraints: DenseMatrix,
    pub rhs: Vec<f64>,
}

impl LpStandardForm {
    pub fn new(
        objective: Vec<f64>,
        constraints: DenseMatrix,
        rhs: Vec<f64>,
    ) -> Result<Self, SimplexError> {
        let (m, n) = (constraints.rows(), constraints.cols());
        if objective.len() != n || rhs.len() != m {
            return Err(SimplexError::Malformed(format!(
                "shape mismatch: A is {m}x{n}, c has {}, b has {}",
                objective.len(),
                rhs.len()
            )));
        }
        if m > n {
            return Err(SimplexError::Malformed(format!(
                "more constraints ({m}) than variables ({n})"
            )));
        }
        if objective.iter().chain(rhs.iter()).any(|x| !x.is_finite()) {
            return Err(SimplexError::Malformed("non-finite objective or rhs".into()));
        }
        Ok(Self { objective, constraints, rhs })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal solution; empty unless status is Optimal.
    pub x: Vec<f64>,
    pub objective_value: f64,
    /// Column indices of the final basis. Indices >= n denote artificial
    /// variables left in the basis by redundant constraints.
    pub basis: Vec<usize>,
}

struct Tableau<'a> {
    a: &'a DenseMatrix,
    b: Vec<f64>,
    /// Sign flips applied per row so that b >= 0.
    row_sign: Vec<f64>,
    m: usize,
    n: usize,
    basis: Vec<usize>,
    binv: DenseMatrix,
    xb: Vec<f64>,
    pivots_since_refactor: usize,
}

impl<'a> Tableau<'a> {
    fn new(a: &'a DenseMatrix, b_in: &[f64]) -> Self {
        let m = a.rows();
        let n = a.cols();
        let mut b = b_in.to_vec();
        let mut row_sign = vec![1.0; m];
        for i in 0..m {
            if b[i] < 0.0 {
                b[i] = -b[i];
                row_sign[i] = -1.0;
            }
        }
        let basis: Vec<usize> = (n..n + m).collect();
        Tableau {
            a,
            b: b.clone(),
            row_sign,
            m,
            n,
            basis,
            binv: DenseMatrix::identity(m),
            xb: b,
            pivots_since_refactor: 0,
        }
    }

    /// Column j of the (sign-flipped) constraint matrix; artificials are
    /// unit columns.
    fn column(&self, j: usize, out: &mut [f64]) {
        if j >= self.n {
            out.fill(0.0);
            out[j - self.n] = 1.0;
        } else {
            for i in 0..self.m {
                out[i] = self.row_sign[i] * self.a[(i, j)];
            }
        }
    }

    fn is_basic(&self, j: usize) -> bool {
        self.basis.contains(&j)
    }

    /// y = c_B^T B^{-1}
    fn dual(&self, cost: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (i, &bj) in self.basis.iter().enumerate() {
            let cb = cost(bj);
            if cb != 0.0 {
                for k in 0..self.m {
                    y[k] += cb * self.binv[(i, k)];
                }
            }
        }
        y
    }

    fn ftran(&self, col: &[f64]) -> Vec<f64> {
        self.binv.matvec(col)
    }

    fn refactorize(&mut self) -> Result<(), SimplexError> {
        let mut bmat = DenseMatrix::zeros(self.m, self.m);
        let mut col = vec![0.0; self.m];
        for (k, &bj) in self.basis.iter().enumerate() {
            self.column(bj, &mut col);
            for i in 0..self.m {
                bmat[(i, k)] = col[i];
            }
        }
        self.binv = invert_any(&bmat)
            .map_err(|e| SimplexError::NumericalBreakdown(format!("refactorization: {e}")))?;
        self.xb = self.binv.matvec(&self.b);
        self.pivots_since_refactor = 0;
        Ok(())
    }

    fn pivot(&mut self, row: usize, entering: usize, d: &[f64]) -> Result<(), SimplexError> {
        let dr = d[row];
        let theta = self.xb[row] / dr;
        for i in 0..self.m {
            if i != row {
                let f = d[i] / dr;
                if f != 0.0 {
                    for k in 0..self.m {
                        let v = self.binv[(row, k)];
                        self.binv[(i, k)] -= f * v;
                    }
                    self.xb[i] -= theta * d[i];
                    if self.xb[i] < 0.0 && self.xb[i] > -1e-11 {
                        self.xb[i] = 0.0;
                    }
                }
            }
        }
        for k in 0..self.m {
            self.binv[(row, k)] /= dr;
        }
        self.xb[row] = theta;
        self.basis[row] = entering;
        self.pivots_since_refactor += 1;
        if self.pivots_since_refactor >= REFACTOR_EVERY {
            self.refactorize()?;
        }
        Ok(())
    }
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

/// Run simplex iterations on the current basis for the given cost vector.
/// Artificial variables (index >= n) never enter the basis.
fn run_phase(
    t: &mut Tableau,
    cost: &dyn Fn(usize) -> f64,
    iters_used: &mut usize,
) -> Result<PhaseOutcome, SimplexError> {
    let bland_after = 2 * (t.m + t.n);
    let mut phase_iters = 0usize;
    let mut col = vec![0.0; t.m];
    loop {
        if *iters_used >= ITERATION_CAP {
            return Err(SimplexError::IterationLimit);
        }
        *iters_used += 1;
        phase_iters += 1;
        let bland = phase_iters > bland_after;

        let y = t.dual(cost);
        // Pricing over original columns only.
        let mut entering: Option<(usize, f64)> = None;
        for j in 0..t.n {
            if t.is_basic(j) {
                continue;
            }
            let mut rc = cost(j);
            for i in 0..t.m {
                rc -= y[i] * t.row_sign[i] * t.a[(i, j)];
            }
            if rc < -OPT_TOL {
                if bland {
                    entering = Some((j, rc));
                    break;
                }
                match entering {
                    Some((_, best)) if rc >= best => {}
                    _ => entering = Some((j, rc)),
                }
            }
        }
        let Some((e, _)) = entering else {
            return Ok(PhaseOutcome::Optimal);
        };

        t.column(e, &mut col);
        let d = t.ftran(&col);
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..t.m {
            if d[i] > RATIO_PIVOT_TOL {
                let ratio = t.xb[i] / d[i];
                let better = match leave {
                    None => true,
                    Some((r, best)) => {
                        if ratio < best - 1e-12 {
                            true
                        } else if ratio <= best + 1e-12 {
                            if bland {
                                // lowest basis column index wins
                                t.basis[i] < t.basis[r]
                            } else {
                                // prefer the larger pivot for stability
                                d[i].abs() > d[r].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some((i, ratio.max(0.0)));
                }
            }
        }
        let Some((r, _)) = leave else {
            return Ok(PhaseOutcome::Unbounded);
        };
        t.pivot(r, e, &d)?;
    }
}

/// Solve the LP by the two-phase revised simplex method.
pub fn simplex_solve(lp: &LpStandardForm) -> Result<LpSolution, SimplexError> {
    let m = lp.constraints.rows();
    let n = lp.constraints.cols();
    let mut t = Tableau::new(&lp.constraints, &lp.rhs);
    let mut iters = 0usize;

    // Phase 1: minimize the sum of artificials.
    let phase1_cost = |j: usize| if j >= n { 1.0 } else { 0.0 };
    match run_phase(&mut t, &phase1_cost, &mut iters)? {
        PhaseOutcome::Unbounded => {
            return Err(SimplexError::NumericalBreakdown(
                "phase 1 reported unbounded".into(),
            ));
        }
        PhaseOutcome::Optimal => {}
    }
    let bscale = lp.rhs.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let artificial_sum: f64 = t
        .basis
        .iter()
        .zip(&t.xb)
        .filter(|(&bj, _)| bj >= n)
        .map(|(_, &v)| v)
        .sum();
    if artificial_sum > FEAS_TOL * (1.0 + bscale) {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: Vec::new(),
            objective_value: f64::NAN,
            basis: t.basis.clone(),
        });
    }

    // Drive out artificials that remain basic at level zero. A row where
    // no original column can pivot is a redundant constraint; its
    // artificial stays basic at zero and is harmless in phase 2.
    let mut col = vec![0.0; m];
    for row in 0..m {
        if t.basis[row] < n {
            continue;
        }
        let mut pivot_col = None;
        for j in 0..n {
            if t.is_basic(j) {
                continue;
            }
            t.column(j, &mut col);
            let d = t.ftran(&col);
            if d[row].abs() > 1e-7 {
                pivot_col = Some((j, d));
                break;
            }
        }
        if let Some((j, d)) = pivot_col {
            t.pivot(row, j, &d)?;
        }
    }

    // Phase 2: the real objective (artificials cost zero and never enter).
    let c = lp.objective.clone();
    let phase2_cost = move |j: usize| if j < n { c[j] } else { 0.0 };
    match run_phase(&mut t, &phase2_cost, &mut iters)? {
        PhaseOutcome::Unbounded => Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: Vec::new(),
            objective_value: f64::NEG_INFINITY,
            basis: t.basis.clone(),
        }),
        PhaseOutcome::Optimal => {
            let mut x = vec![0.0; n];
            for (i, &bj) in t.basis.iter().enumerate() {
                if bj < n {
                    x[bj] = t.xb[i];
                }
            }
            let objective_value = lp.objective.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
            Ok(LpSolution {
                status: LpStatus::Optimal,
                x,
                objective_value,
                basis: t.basis.clone(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn lp(c: Vec<f64>, a_rows: Vec<Vec<f64>>, b: Vec<f64>) -> LpStandardForm {
        let m = a_rows.len();
        let n = c.len();
        let entries: Vec<f64> = a_rows.into_iter().flatten().collect();
        LpStandardForm::new(c, DenseMatrix::new(m, n, entries).unwrap(), b).unwrap()
    }

    #[test]
    fn trivial_equality() {
        let sol = simplex_solve(&lp(vec![1.0, 1.0], vec![vec![1.0, 1.0]], vec![1.0])).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn picks_cheaper_vertex() {
        let sol = simplex_solve(&lp(vec![2.0, 1.0], vec![vec![1.0, 1.0]], vec![1.0])).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value - 1.0).abs() < 1e-9);
        assert!((sol.x[0]).abs() < 1e-9);
        assert!((sol.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_detected() {
        // min -x1 with a vacuous constraint row
        let sol = simplex_solve(&lp(vec![-1.0, 0.0], vec![vec![0.0, 1.0]], vec![0.0])).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn infeasible_detected() {
        // x1 + x2 = -1 with x >= 0
        let sol = simplex_solve(&lp(vec![1.0, 1.0], vec![vec![1.0, 1.0]], vec![-1.0])).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn redundant_row_handled() {
        let sol = simplex_solve(&lp(
            vec![1.0, 2.0],
            vec![vec![1.0, 1.0], vec![2.0, 2.0]],
            vec![1.0, 2.0],
        ))
        .unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value - 1.0).abs() < 1e-8);
    }

    fn brute_force_vertex_min(
        c: &[f64],
        a: &DenseMatrix,
        b: &[f64],
    ) -> Option<f64> {
        let m = a.rows();
        let n = a.cols();
        let idx: Vec<usize> = (0..n).collect();
        let mut best: Option<f64> = None;
        let mut subset = vec![0usize; m];
        fn rec(
            idx: &[usize],
            k: usize,
            start: usize,
            subset: &mut Vec<usize>,
            f: &mut dyn FnMut(&[usize]),
        ) {
            if k == 0 {
                f(subset);
                return;
            }
            for i in start..=idx.len().saturating_sub(k) {
                let pos = subset.len() - k;
                subset[pos] = idx[i];
                rec(idx, k - 1, i + 1, subset, f);
            }
        }
        let mut visit = |cols: &[usize]| {
            let mut bm = DenseMatrix::zeros(m, m);
            for (k, &j) in cols.iter().enumerate() {
                for i in 0..m {
                    bm[(i, k)] = a[(i, j)];
                }
            }
            if let Ok(xb) = crate::linalg::solve_linear_system(&bm, b) {
                if xb.iter().all(|&v| v >= -1e-9) {
                    let obj: f64 = cols.iter().zip(&xb).map(|(&j, &v)| c[j] * v).sum();
                    best = Some(match best {
                        None => obj,
                        Some(cur) => cur.min(obj),
                    });
                }
            }
        };
        rec(&idx, m, 0, &mut subset, &mut visit);
        best
    }

    // 200 random feasible LPs against the vertex-enumeration oracle.
    #[test]
    fn matches_vertex_enumeration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut checked = 0;
        while checked < 200 {
            let m = rng.random_range(1..=6usize);
            let max_n = if m <= 3 { 40 } else { 14 };
            let n = rng.random_range(m..=max_n);
            let mut a = DenseMatrix::zeros(m, n);
            for i in 0..m {
                for j in 0..n {
                    a[(i, j)] = rng.random_range(-1.0..1.0);
                }
            }
            // Feasible by construction; positive costs keep it bounded.
            let x0: Vec<f64> = (0..n)
                .map(|_| if rng.random_bool(0.5) { rng.random_range(0.0..2.0) } else { 0.0 })
                .collect();
            let b = a.matvec(&x0);
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
            let lp = LpStandardForm::new(c.clone(), a.clone(), b.clone()).unwrap();
            let sol = simplex_solve(&lp).unwrap();
            assert_eq!(sol.status, LpStatus::Optimal, "constructed LP must be feasible");
            let oracle = brute_force_vertex_min(&c, &a, &b)
                .expect("oracle must find a feasible vertex");
            assert!(
                (sol.objective_value - oracle).abs() <= 1e-7 * (1.0 + oracle.abs()),
                "simplex {} vs oracle {} (m={m}, n={n})",
                sol.objective_value,
                oracle
            );
            checked += 1;
        }
    }

    // Strong duality: reconstruct y from the final basis and compare
    // objective values.
    #[test]
    fn duality_gap_closed() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let m = rng.random_range(1..=4usize);
            let n = rng.random_range(m..=12usize);
            let mut a = DenseMatrix::zeros(m, n);
            for i in 0..m {
                for j in 0..n {
                    a[(i, j)] = rng.random_range(-1.0..1.0);
                }
            }
            let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let b = a.matvec(&x0);
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
            let lp = LpStandardForm::new(c.clone(), a.clone(), b.clone()).unwrap();
            let sol = simplex_solve(&lp).unwrap();
            if sol.status != LpStatus::Optimal {
                continue;
            }
            if sol.basis.iter().any(|&j| j >= n) {
                continue; // redundant rows make the dual reconstruction ambiguous
            }
            // Solve B^T y = c_B on the original columns.
            let mut bt = DenseMatrix::zeros(m, m);
            let mut cb = vec![0.0; m];
            for (k, &j) in sol.basis.iter().enumerate() {
                for i in 0..m {
                    bt[(k, i)] = a[(i, j)];
                }
                cb[k] = c[j];
            }
            let y = crate::linalg::solve_linear_system(&bt, &cb).unwrap();
            let dual: f64 = y.iter().zip(&b).map(|(yi, bi)| yi * bi).sum();
            assert!(
                (dual - sol.objective_value).abs() <= 1e-7 * (1.0 + dual.abs()),
                "duality gap: primal {} dual {}",
                sol.objective_value,
                dual
            );
        }
    }
}
