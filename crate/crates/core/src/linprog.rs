//! Dense two-phase simplex for the small linear programs used by the fluid
//! and optimality modules.
//!
//! Every program has the form
//!
//! ```text
//! minimize    c . x
//! subject to  A_eq x  = b_eq
//!             A_ub x <= b_ub
//!             x >= 0
//! ```
//!
//! Pivoting follows Bland's rule (lowest-index entering column, lowest-index
//! leaving basic variable on ratio ties), so the solver never cycles and the
//! vertex reported on a degenerate optimal face is a deterministic function
//! of the input.

use crate::error::LpError;
use crate::model::TOL;

/// Entries smaller than this are never used as pivots.
pub const PIVOT_TOL: f64 = 1e-10;

const FACE_SLACK: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self { coeffs, rhs }
    }

    fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub n_vars: usize,
    /// Minimized.
    pub objective: Vec<f64>,
    pub eq_constraints: Vec<Constraint>,
    pub ub_constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    /// Empty unless `status == Optimal`.
    pub x: Vec<f64>,
    /// `NaN` unless `status == Optimal`.
    pub value: f64,
}

impl LpResult {
    fn without_solution(status: LpStatus) -> Self {
        Self {
            status,
            x: Vec::new(),
            value: f64::NAN,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

impl LinearProgram {
    pub fn new(n_vars: usize, objective: Vec<f64>) -> Self {
        Self {
            n_vars,
            objective,
            eq_constraints: Vec::new(),
            ub_constraints: Vec::new(),
        }
    }

    pub fn eq(mut self, coeffs: Vec<f64>, rhs: f64) -> Self {
        self.eq_constraints.push(Constraint::new(coeffs, rhs));
        self
    }

    pub fn ub(mut self, coeffs: Vec<f64>, rhs: f64) -> Self {
        self.ub_constraints.push(Constraint::new(coeffs, rhs));
        self
    }

    pub fn constraint_count(&self) -> usize {
        self.eq_constraints.len() + self.ub_constraints.len()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any constraint (including `x >= 0`) at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let eq = self
            .eq_constraints
            .iter()
            .map(|c| (c.lhs(x) - c.rhs).abs());
        let ub = self
            .ub_constraints
            .iter()
            .map(|c| (c.lhs(x) - c.rhs).max(0.0));
        let sign = x.iter().map(|v| (-v).max(0.0));
        eq.chain(ub).chain(sign).fold(0.0, f64::max)
    }

    fn check_shape(&self) -> Result<(), LpError> {
        if self.objective.len() != self.n_vars {
            return Err(LpError::Malformed(format!(
                "objective has {} coefficients, expected {}",
                self.objective.len(),
                self.n_vars
            )));
        }
        let all = self.eq_constraints.iter().chain(&self.ub_constraints);
        for (k, c) in all.enumerate() {
            if c.coeffs.len() != self.n_vars {
                return Err(LpError::Malformed(format!(
                    "constraint {k} has {} coefficients, expected {}",
                    c.coeffs.len(),
                    self.n_vars
                )));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(LpError::Malformed(format!("constraint {k} is not finite")));
            }
        }
        Ok(())
    }
}

/// Solves `lp`. Infeasibility and unboundedness are reported through the
/// status; only a stalled pivot sequence is an error.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpResult, LpError> {
    lp.check_shape()?;
    let cap = 50 * (lp.n_vars + lp.constraint_count()).max(1);
    Tableau::build(lp).solve(lp, cap)
}

/// Minimum and maximum of `x[var]` over the optimal face of `lp`, whose
/// optimum is `opt_value`.
///
/// The face is the feasible set intersected with `c . x <= opt_value + slack`
/// where the slack is `FACE_SLACK * (1 + |opt_value|)`; for a minimization
/// that is the same set as pinning `c . x = opt_value`, but it cannot turn
/// infeasible through rounding.
pub fn optimal_range(lp: &LinearProgram, var: usize, opt_value: f64) -> Result<(f64, f64), LpError> {
    if var >= lp.n_vars {
        return Err(LpError::Malformed(format!(
            "variable {var} out of range for {} variables",
            lp.n_vars
        )));
    }
    let mut face = lp.clone();
    face.ub_constraints.push(Constraint::new(
        lp.objective.clone(),
        opt_value + FACE_SLACK * (1.0 + opt_value.abs()),
    ));
    let mut unit = vec![0.0; lp.n_vars];
    unit[var] = 1.0;

    face.objective = unit.clone();
    let lo = solve_lp(&face)?;
    face.objective = unit.iter().map(|v| -v).collect();
    let hi = solve_lp(&face)?;
    match (lo.status, hi.status) {
        (LpStatus::Optimal, LpStatus::Optimal) => Ok((lo.x[var], hi.x[var])),
        (LpStatus::Optimal, LpStatus::Unbounded) => Ok((lo.x[var], f64::INFINITY)),
        _ => Err(LpError::NumericalFailure { iterations: 0 }),
    }
}

struct Tableau {
    /// `rows[r]` holds the constraint coefficients followed by the rhs.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_struct: usize,
    /// Columns at or beyond this index are artificial.
    first_artificial: usize,
    n_cols: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.n_vars;
        let n_slack = lp.ub_constraints.len();
        let m = lp.constraint_count();

        // Rows that cannot start with their own slack in the basis need an
        // artificial column.
        let needs_artificial: Vec<bool> = lp
            .eq_constraints
            .iter()
            .map(|_| true)
            .chain(lp.ub_constraints.iter().map(|c| c.rhs < 0.0))
            .collect();
        let n_art = needs_artificial.iter().filter(|&&b| b).count();
        let first_artificial = n + n_slack;
        let n_cols = first_artificial + n_art;

        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut next_art = first_artificial;
        let sources = lp
            .eq_constraints
            .iter()
            .map(|c| (c, None))
            .chain(lp.ub_constraints.iter().enumerate().map(|(k, c)| (c, Some(n + k))));
        for (r, (c, slack)) in sources.enumerate() {
            let mut row = vec![0.0; n_cols + 1];
            row[..n].copy_from_slice(&c.coeffs);
            if let Some(s) = slack {
                row[s] = 1.0;
            }
            row[n_cols] = c.rhs;
            if c.rhs < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
            if needs_artificial[r] {
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            } else {
                basis.push(slack.expect("slack row"));
            }
            rows.push(row);
        }

        Self {
            rows,
            basis,
            n_struct: n,
            first_artificial,
            n_cols,
        }
    }

    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.n_cols]
    }

    /// Reduced-cost row for `cost` (indexed by column) given the current basis.
    fn pricing_row(&self, cost: &[f64]) -> Vec<f64> {
        let mut obj = vec![0.0; self.n_cols + 1];
        obj[..self.n_cols].copy_from_slice(cost);
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (o, v) in obj.iter_mut().zip(&self.rows[r]) {
                    *o -= cb * v;
                }
            }
        }
        obj
    }

    fn pivot(&mut self, obj: &mut [f64], r: usize, col: usize) {
        let p = self.rows[r][col];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        self.rows[r][col] = 1.0;
        let pivot_row = self.rows[r].clone();
        for (k, row) in self.rows.iter_mut().enumerate() {
            if k == r {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[col] = 0.0;
            }
        }
        let f = obj[col];
        if f != 0.0 {
            for (v, pv) in obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            obj[col] = 0.0;
        }
        self.basis[r] = col;
    }

    /// Runs simplex iterations on `obj` over columns `< allowed`.
    /// Returns `Ok(true)` at optimality and `Ok(false)` when unbounded.
    fn iterate(
        &mut self,
        obj: &mut [f64],
        allowed: usize,
        pivots: &mut usize,
        cap: usize,
    ) -> Result<bool, LpError> {
        loop {
            let entering = (0..allowed).find(|&j| obj[j] < -TOL && !self.basis.contains(&j));
            let Some(col) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][col];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((br, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                        if ratio < best && !tie || tie && self.basis[r] < self.basis[br] {
                            Some((r, ratio))
                        } else {
                            Some((br, best))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            *pivots += 1;
            if *pivots > cap {
                return Err(LpError::NumericalFailure { iterations: *pivots });
            }
            self.pivot(obj, r, col);
        }
    }

    fn solve(mut self, lp: &LinearProgram, cap: usize) -> Result<LpResult, LpError> {
        let mut pivots = 0;

        if self.first_artificial < self.n_cols {
            let mut cost = vec![0.0; self.n_cols];
            cost[self.first_artificial..].iter_mut().for_each(|c| *c = 1.0);
            let mut obj = self.pricing_row(&cost);
            self.iterate(&mut obj, self.n_cols, &mut pivots, cap)?;
            let scale = 1.0
                + self
                    .rows
                    .iter()
                    .map(|r| r[self.n_cols].abs())
                    .fold(0.0, f64::max);
            let infeasibility: f64 = self
                .basis
                .iter()
                .enumerate()
                .filter(|(_, &b)| b >= self.first_artificial)
                .map(|(r, _)| self.rhs(r).abs())
                .sum();
            if infeasibility > TOL * scale {
                return Ok(LpResult::without_solution(LpStatus::Infeasible));
            }
            // Drive remaining (zero-level) artificials out of the basis; rows
            // where that is impossible are redundant and dropped.
            let mut r = 0;
            while r < self.rows.len() {
                if self.basis[r] >= self.first_artificial {
                    let col = (0..self.first_artificial)
                        .find(|&j| self.rows[r][j].abs() > PIVOT_TOL && !self.basis.contains(&j));
                    match col {
                        Some(col) => {
                            self.pivot(&mut obj, r, col);
                            r += 1;
                        }
                        None => {
                            self.rows.remove(r);
                            self.basis.remove(r);
                        }
                    }
                } else {
                    r += 1;
                }
            }
        }

        let mut cost = vec![0.0; self.n_cols];
        cost[..self.n_struct].copy_from_slice(&lp.objective);
        let mut obj = self.pricing_row(&cost);
        if !self.iterate(&mut obj, self.first_artificial, &mut pivots, cap)? {
            return Ok(LpResult::without_solution(LpStatus::Unbounded));
        }

        let mut x = vec![0.0; self.n_struct];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                x[b] = self.rhs(r);
            }
        }
        for v in &mut x {
            if *v < 0.0 && *v > -TOL {
                *v = 0.0;
            }
        }
        let value = lp.objective_value(&x);
        Ok(LpResult {
            status: LpStatus::Optimal,
            x,
            value,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_lower_bound() {
        let lp = LinearProgram::new(1, vec![1.0]).ub(vec![-1.0], -3.0);
        let res = solve_lp(&lp).unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.value - 3.0).abs() < TOL);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp = LinearProgram::new(1, vec![1.0])
            .ub(vec![1.0], 1.0)
            .ub(vec![-1.0], -2.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
        let lp = LinearProgram::new(2, vec![-1.0, 0.0]).ub(vec![0.0, 1.0], 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
        let lp = LinearProgram::new(1, vec![0.0]).eq(vec![1.0], -1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let lp = LinearProgram::new(2, vec![1.0, 2.0])
            .eq(vec![1.0, 1.0], 1.0)
            .eq(vec![2.0, 2.0], 2.0);
        let res = solve_lp(&lp).unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.value - 1.0).abs() < TOL);
        assert!((res.x[0] - 1.0).abs() < TOL);
    }

    #[test]
    fn malformed_rejected() {
        let lp = LinearProgram::new(2, vec![1.0]);
        assert!(matches!(solve_lp(&lp), Err(LpError::Malformed(_))));
    }

    #[test]
    fn ranges_on_unique_and_degenerate_faces() {
        let lp = LinearProgram::new(1, vec![1.0]).ub(vec![-1.0], -3.0);
        let (lo, hi) = optimal_range(&lp, 0, 3.0).unwrap();
        assert!(hi - lo <= 2.0 * TOL);
        assert!((lo - 3.0).abs() < TOL);

        let lp = LinearProgram::new(2, vec![0.0, 0.0]).eq(vec![1.0, 1.0], 1.0);
        let (lo, hi) = optimal_range(&lp, 0, 0.0).unwrap();
        assert!(lo.abs() < TOL && (hi - 1.0).abs() < TOL);
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // Classic instance on which textbook Dantzig pivoting cycles.
        let lp = LinearProgram::new(4, vec![-0.75, 150.0, -0.02, 6.0])
            .ub(vec![0.25, -60.0, -0.04, 9.0], 0.0)
            .ub(vec![0.5, -90.0, -0.02, 3.0], 0.0)
            .ub(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        let res = solve_lp(&lp).unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert!((res.value + 0.05).abs() < 1e-9);
    }
}
