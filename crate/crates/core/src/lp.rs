//! Dense bounded-variable primal simplex.
//!
//! Solves `min c'x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  l <= x <= u` with
//! finite bounds. Two phases: phase 1 minimizes the sum of artificials, phase 2
//! the real objective. Entering and leaving choices follow Bland's
//! smallest-index rule, so the solver terminates and is deterministic.

use thiserror::Error;

pub const PIVOT_TOL: f64 = 1e-10;
pub const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("variable {var}: invalid bounds [{lower}, {upper}]")]
    InvalidBounds { var: usize, lower: f64, upper: f64 },
    #[error("simplex iteration limit {0} exceeded")]
    IterationLimit(usize),
}

/// A linear program with dense rows and finite box bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub eq_rows: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub ub_rows: Vec<Vec<f64>>,
    pub ub_rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// An LP over `objective.len()` variables bounded to `[0, 1]`.
    pub fn unit_box(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self::with_bounds(objective, vec![0.0; n], vec![1.0; n])
    }

    pub fn with_bounds(objective: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            objective,
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            ub_rows: Vec::new(),
            ub_rhs: Vec::new(),
            lower,
            upper,
        }
    }

    pub fn var_count(&self) -> usize {
        self.objective.len()
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        self.ub_rows.push(row);
        self.ub_rhs.push(rhs);
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.var_count();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::DimensionMismatch(format!(
                "{n} objective coefficients but {} lower and {} upper bounds",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.eq_rows.len() != self.eq_rhs.len() || self.ub_rows.len() != self.ub_rhs.len() {
            return Err(LpError::DimensionMismatch(
                "row count differs from right-hand-side length".into(),
            ));
        }
        for (kind, rows) in [("equality", &self.eq_rows), ("inequality", &self.ub_rows)] {
            if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != n) {
                return Err(LpError::DimensionMismatch(format!(
                    "{kind} row {r} has {} entries, expected {n}",
                    row.len()
                )));
            }
        }
        for var in 0..n {
            let (lower, upper) = (self.lower[var], self.upper[var]);
            if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
                return Err(LpError::InvalidBounds { var, lower, upper });
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Largest constraint or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let eq = self
            .eq_rows
            .iter()
            .zip(&self.eq_rhs)
            .map(|(row, &b)| (dot(row, x) - b).abs());
        let ub = self
            .ub_rows
            .iter()
            .zip(&self.ub_rhs)
            .map(|(row, &b)| (dot(row, x) - b).max(0.0));
        let bounds = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&l, &u))| (l - v).max(v - u).max(0.0));
        eq.chain(ub).chain(bounds).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn objective(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { objective, .. } => Some(*objective),
            _ => None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    lp.validate()?;
    Simplex::new(lp).run(lp)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Step {
    Optimal,
    Unbounded,
    Moved,
}

/// Tableau over shifted variables `x' = x - l`, so every column lives in
/// `[0, upper[j]]`. Columns: structurals, then one slack per inequality row,
/// then artificials.
struct Simplex {
    rows: usize,
    cols: usize,
    n_struct: usize,
    first_artificial: usize,
    /// `B^-1 A`, row-major, `rows x cols`.
    tab: Vec<f64>,
    upper: Vec<f64>,
    value: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// Reduced costs of the current phase.
    reduced: Vec<f64>,
    cost: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
}

impl Simplex {
    fn new(lp: &LinearProgram) -> Self {
        let n = lp.var_count();
        let n_eq = lp.eq_rows.len();
        let n_ub = lp.ub_rows.len();
        let rows = n_eq + n_ub;

        // Right-hand sides after shifting x to x' = x - l.
        let shifted = |row: &[f64], b: f64| b - dot(row, &lp.lower);
        let mut rhs: Vec<f64> = lp
            .eq_rows
            .iter()
            .zip(&lp.eq_rhs)
            .chain(lp.ub_rows.iter().zip(&lp.ub_rhs))
            .map(|(row, &b)| shifted(row, b))
            .collect();

        // Inequality rows with non-negative rhs start with their slack basic;
        // every other row gets an artificial.
        let needs_artificial: Vec<bool> = (0..rows).map(|r| r < n_eq || rhs[r] < 0.0).collect();
        let n_art = needs_artificial.iter().filter(|&&a| a).count();
        let first_artificial = n + n_ub;
        let cols = first_artificial + n_art;

        let mut tab = vec![0.0; rows * cols];
        let mut upper = vec![f64::INFINITY; cols];
        for (u, (hi, lo)) in upper.iter_mut().zip(lp.upper.iter().zip(&lp.lower)) {
            *u = hi - lo;
        }
        let mut basis = vec![0; rows];
        let mut next_art = first_artificial;
        for r in 0..rows {
            let (coeffs, slack) = if r < n_eq {
                (&lp.eq_rows[r], None)
            } else {
                (&lp.ub_rows[r - n_eq], Some(n + r - n_eq))
            };
            let sign = if rhs[r] < 0.0 { -1.0 } else { 1.0 };
            let line = &mut tab[r * cols..(r + 1) * cols];
            for (j, &a) in coeffs.iter().enumerate() {
                line[j] = sign * a;
            }
            if let Some(s) = slack {
                line[s] = sign;
            }
            rhs[r] *= sign;
            if needs_artificial[r] {
                line[next_art] = 1.0;
                basis[r] = next_art;
                next_art += 1;
            } else {
                basis[r] = slack.expect("inequality row");
            }
        }

        let mut value = vec![0.0; cols];
        let mut is_basic = vec![false; cols];
        for (r, &b) in basis.iter().enumerate() {
            value[b] = rhs[r];
            is_basic[b] = true;
        }

        Self {
            rows,
            cols,
            n_struct: n,
            first_artificial,
            tab,
            upper,
            value,
            basis,
            is_basic,
            reduced: vec![0.0; cols],
            cost: vec![0.0; cols],
            iterations: 0,
            max_iterations: 1000 + 50 * (rows + cols),
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpOutcome, LpError> {
        if self.first_artificial < self.cols {
            let phase1: Vec<f64> = (0..self.cols)
                .map(|j| if j >= self.first_artificial { 1.0 } else { 0.0 })
                .collect();
            self.set_cost(phase1);
            self.optimize(self.cols)?;
            let infeasibility: f64 = self.value[self.first_artificial..].iter().sum();
            if infeasibility > FEAS_TOL {
                return Ok(LpOutcome::Infeasible);
            }
            self.drive_out_artificials();
        }

        let mut phase2 = vec![0.0; self.cols];
        phase2[..self.n_struct].copy_from_slice(&lp.objective);
        self.set_cost(phase2);
        if self.optimize(self.first_artificial)? == Step::Unbounded {
            return Ok(LpOutcome::Unbounded);
        }

        let x: Vec<f64> = (0..self.n_struct)
            .map(|j| (lp.lower[j] + self.value[j]).clamp(lp.lower[j], lp.upper[j]))
            .collect();
        let objective = lp.objective_value(&x);
        Ok(LpOutcome::Optimal { x, objective })
    }

    fn set_cost(&mut self, cost: Vec<f64>) {
        for j in 0..self.cols {
            let mut d = cost[j];
            for r in 0..self.rows {
                d -= cost[self.basis[r]] * self.tab[r * self.cols + j];
            }
            self.reduced[j] = if self.is_basic[j] { 0.0 } else { d };
        }
        self.cost = cost;
    }

    /// Iterates until optimal over columns `0..enterable`.
    fn optimize(&mut self, enterable: usize) -> Result<Step, LpError> {
        loop {
            match self.step(enterable) {
                Step::Moved => {
                    self.iterations += 1;
                    if self.iterations > self.max_iterations {
                        return Err(LpError::IterationLimit(self.max_iterations));
                    }
                }
                done => return Ok(done),
            }
        }
    }

    fn at_upper(&self, j: usize) -> bool {
        self.upper[j].is_finite() && self.value[j] >= self.upper[j] - FEAS_TOL
    }

    fn step(&mut self, enterable: usize) -> Step {
        // Bland: first column whose move away from its bound improves the cost.
        let entering = (0..enterable).find_map(|j| {
            if self.is_basic[j] || self.upper[j] <= 0.0 {
                return None;
            }
            let d = self.reduced[j];
            if self.at_upper(j) {
                (d > FEAS_TOL).then_some((j, -1.0))
            } else {
                (d < -FEAS_TOL).then_some((j, 1.0))
            }
        });
        let Some((enter, dir)) = entering else {
            return Step::Optimal;
        };

        // Ratio test; ties go to the smallest basic variable index.
        let mut best: Option<(f64, usize, bool)> = None;
        for r in 0..self.rows {
            let alpha = self.tab[r * self.cols + enter] * dir;
            let b = self.basis[r];
            let limit = if alpha > PIVOT_TOL {
                Some(((self.value[b] / alpha).max(0.0), false))
            } else if alpha < -PIVOT_TOL && self.upper[b].is_finite() {
                Some((((self.upper[b] - self.value[b]) / -alpha).max(0.0), true))
            } else {
                None
            };
            if let Some((t, to_upper)) = limit {
                let better = match best {
                    None => true,
                    Some((bt, br, _)) => {
                        t < bt - PIVOT_TOL || (t <= bt + PIVOT_TOL && b < self.basis[br])
                    }
                };
                if better {
                    best = Some((t, r, to_upper));
                }
            }
        }

        let flip = self.upper[enter];
        match best {
            Some((t, r, to_upper)) if t < flip => {
                self.shift(enter, dir * t);
                let leaving = self.basis[r];
                self.value[leaving] = if to_upper { self.upper[leaving] } else { 0.0 };
                self.pivot(r, enter);
            }
            _ if flip.is_finite() => {
                self.shift(enter, dir * flip);
                self.value[enter] = if dir > 0.0 { self.upper[enter] } else { 0.0 };
            }
            _ => return Step::Unbounded,
        }
        Step::Moved
    }

    /// Moves nonbasic `j` by `delta` and updates the basic values.
    fn shift(&mut self, j: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        self.value[j] += delta;
        for r in 0..self.rows {
            let b = self.basis[r];
            let v = self.value[b] - self.tab[r * self.cols + j] * delta;
            self.value[b] = if v.abs() < PIVOT_TOL * 1e-2 { 0.0 } else { v };
        }
    }

    fn pivot(&mut self, r: usize, enter: usize) {
        let cols = self.cols;
        let p = self.tab[r * cols + enter];
        for j in 0..cols {
            self.tab[r * cols + j] /= p;
        }
        let pivot_row: Vec<f64> = self.tab[r * cols..(r + 1) * cols].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.tab[i * cols + enter];
            if f != 0.0 {
                let line = &mut self.tab[i * cols..(i + 1) * cols];
                for (x, &pr) in line.iter_mut().zip(&pivot_row) {
                    *x -= f * pr;
                }
                line[enter] = 0.0;
            }
        }
        let d = self.reduced[enter];
        if d != 0.0 {
            for (x, &pr) in self.reduced.iter_mut().zip(&pivot_row) {
                *x -= d * pr;
            }
        }
        self.reduced[enter] = 0.0;

        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[enter] = true;
        self.basis[r] = enter;
    }

    /// Pivots zero-valued artificials out of the basis where possible and pins
    /// every artificial to zero for phase 2.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.rows {
            if self.basis[r] < self.first_artificial {
                continue;
            }
            let candidate = (0..self.first_artificial)
                .find(|&j| !self.is_basic[j] && self.tab[r * self.cols + j].abs() > 1e-7);
            if let Some(j) = candidate {
                let leaving = self.basis[r];
                self.value[leaving] = 0.0;
                self.pivot(r, j);
            }
        }
        for j in self.first_artificial..self.cols {
            self.upper[j] = 0.0;
            if !self.is_basic[j] {
                self.value[j] = 0.0;
            }
        }
    }
}
