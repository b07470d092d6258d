use std::fmt::Write as _;

use crate::error::SolverError;

/// Optimization direction of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

/// Row sense. `Range(lo)` means `lo <= a.x <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
    Range(f64),
}

/// A linear program in sparse triplet form.
///
/// Rows are `a_i . x (sense) rhs_i`, columns carry box bounds that may be
/// infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub direction: Direction,
    pub objective: Vec<f64>,
    pub col_lower: Vec<f64>,
    pub col_upper: Vec<f64>,
    pub triplets: Vec<(usize, usize, f64)>,
    pub senses: Vec<RowSense>,
    pub rhs: Vec<f64>,
    pub col_names: Vec<String>,
    pub row_names: Vec<String>,
}

impl LinearProgram {
    pub fn new(direction: Direction) -> Self {
        LinearProgram {
            direction,
            objective: Vec::new(),
            col_lower: Vec::new(),
            col_upper: Vec::new(),
            triplets: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            col_names: Vec::new(),
            row_names: Vec::new(),
        }
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    /// Adds a column and returns its index.
    pub fn add_col(&mut self, name: impl Into<String>, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.col_lower.push(lower);
        self.col_upper.push(upper);
        self.col_names.push(name.into());
        self.objective.len() - 1
    }

    /// Adds a row and returns its index. Zero coefficients are dropped.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: &[(usize, f64)],
        sense: RowSense,
        rhs: f64,
    ) -> usize {
        let r = self.rhs.len();
        for &(c, v) in coeffs {
            if v != 0.0 {
                self.triplets.push((r, c, v));
            }
        }
        self.senses.push(sense);
        self.rhs.push(rhs);
        self.row_names.push(name.into());
        r
    }

    /// Lower and upper activity bounds of row `i`.
    pub fn row_bounds(&self, i: usize) -> (f64, f64) {
        let b = self.rhs[i];
        match self.senses[i] {
            RowSense::Le => (f64::NEG_INFINITY, b),
            RowSense::Ge => (b, f64::INFINITY),
            RowSense::Eq => (b, b),
            RowSense::Range(lo) => (lo, b),
        }
    }

    /// Checks dimensions, finiteness and bound ordering.
    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.num_cols();
        let m = self.num_rows();
        if self.col_lower.len() != n || self.col_upper.len() != n {
            return Err(SolverError::Malformed("column bound length mismatch".into()));
        }
        if self.senses.len() != m {
            return Err(SolverError::Malformed("row sense length mismatch".into()));
        }
        for (j, (&l, &u)) in self.col_lower.iter().zip(&self.col_upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(SolverError::Malformed(format!("bad bounds on column {j}: [{l}, {u}]")));
            }
        }
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(SolverError::Malformed(format!("non-finite cost on column {j}")));
            }
        }
        for i in 0..m {
            let (lo, hi) = self.row_bounds(i);
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(SolverError::Malformed(format!("bad bounds on row {i}: [{lo}, {hi}]")));
            }
        }
        for &(r, c, v) in &self.triplets {
            if r >= m || c >= n {
                return Err(SolverError::Malformed(format!("triplet ({r}, {c}) out of range")));
            }
            if !v.is_finite() {
                return Err(SolverError::Malformed(format!("non-finite coefficient at ({r}, {c})")));
            }
        }
        Ok(())
    }

    /// Row activities `A x`.
    pub fn activities(&self, x: &[f64]) -> Vec<f64> {
        let mut act = vec![0.0; self.num_rows()];
        for &(r, c, v) in &self.triplets {
            act[r] += v * x[c];
        }
        act
    }

    /// Objective value `c . x`.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.num_cols() {
            worst = worst.max(self.col_lower[j] - x[j]).max(x[j] - self.col_upper[j]);
        }
        let act = self.activities(x);
        for (i, a) in act.iter().enumerate() {
            let (lo, hi) = self.row_bounds(i);
            worst = worst.max(lo - a).max(a - hi);
        }
        worst
    }

    /// Lagrangian bound on the optimum implied by row multipliers `y`.
    ///
    /// For a maximization problem the returned value is an upper bound on
    /// every feasible objective, for minimization a lower bound. Infinite
    /// values mean `y` certifies nothing.
    pub fn dual_bound(&self, y: &[f64]) -> f64 {
        let sign = match self.direction {
            Direction::Maximize => 1.0,
            Direction::Minimize => -1.0,
        };
        // sup over the box of (sign*c - A^T y) x + y . z
        let mut red: Vec<f64> = self.objective.iter().map(|c| sign * c).collect();
        for &(r, c, v) in &self.triplets {
            red[c] -= y[r] * v;
        }
        let mut total = 0.0;
        for j in 0..self.num_cols() {
            total += sup_linear(red[j], self.col_lower[j], self.col_upper[j]);
        }
        for (i, &yi) in y.iter().enumerate() {
            let (lo, hi) = self.row_bounds(i);
            total += sup_linear(yi, lo, hi);
        }
        sign * total
    }

    /// Writes the model in CPLEX LP text format.
    pub fn to_lp_format(&self, binaries: &[usize]) -> String {
        let mut out = String::new();
        let name = |j: usize| -> String {
            match self.col_names.get(j) {
                Some(s) if !s.is_empty() => sanitize(s),
                _ => format!("x{j}"),
            }
        };
        out.push_str(match self.direction {
            Direction::Maximize => "Maximize\n",
            Direction::Minimize => "Minimize\n",
        });
        out.push_str(" obj:");
        let mut any = false;
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                write_term(&mut out, c, &name(j));
                any = true;
            }
        }
        if !any {
            out.push_str(" 0 ");
            out.push_str(&name(0));
        }
        out.push_str("\nSubject To\n");
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.num_rows()];
        for &(r, c, v) in &self.triplets {
            rows[r].push((c, v));
        }
        for (i, row) in rows.iter().enumerate() {
            let rname = match self.row_names.get(i) {
                Some(s) if !s.is_empty() => sanitize(s),
                _ => format!("r{i}"),
            };
            let mut expr = String::new();
            for &(c, v) in row {
                write_term(&mut expr, v, &name(c));
            }
            if row.is_empty() {
                expr.push_str(" 0 ");
                expr.push_str(&name(0));
            }
            match self.senses[i] {
                RowSense::Le => writeln!(out, " {rname}:{expr} <= {}", self.rhs[i]).unwrap(),
                RowSense::Ge => writeln!(out, " {rname}:{expr} >= {}", self.rhs[i]).unwrap(),
                RowSense::Eq => writeln!(out, " {rname}:{expr} = {}", self.rhs[i]).unwrap(),
                RowSense::Range(lo) => {
                    writeln!(out, " {rname}_lo:{expr} >= {lo}").unwrap();
                    writeln!(out, " {rname}_hi:{expr} <= {}", self.rhs[i]).unwrap();
                }
            }
        }
        out.push_str("Bounds\n");
        for j in 0..self.num_cols() {
            let (l, u) = (self.col_lower[j], self.col_upper[j]);
            let nm = name(j);
            if l == f64::NEG_INFINITY && u == f64::INFINITY {
                writeln!(out, " {nm} free").unwrap();
            } else if l == f64::NEG_INFINITY {
                writeln!(out, " -inf <= {nm} <= {u}").unwrap();
            } else if u == f64::INFINITY {
                writeln!(out, " {nm} >= {l}").unwrap();
            } else {
                writeln!(out, " {l} <= {nm} <= {u}").unwrap();
            }
        }
        if !binaries.is_empty() {
            out.push_str("Binaries\n");
            for &j in binaries {
                writeln!(out, " {}", name(j)).unwrap();
            }
        }
        out.push_str("End\n");
        out
    }
}

fn sup_linear(coef: f64, lo: f64, hi: f64) -> f64 {
    // Reduced costs below this magnitude are treated as zero.
    if coef.abs() <= 1e-9 {
        let anchor = if lo.is_finite() { lo } else if hi.is_finite() { hi } else { 0.0 };
        return coef * anchor;
    }
    if coef > 0.0 {
        coef * hi
    } else {
        coef * lo
    }
}

fn write_term(out: &mut String, v: f64, name: &str) {
    if v < 0.0 {
        write!(out, " - {} {}", -v, name).unwrap();
    } else {
        write!(out, " + {} {}", v, name).unwrap();
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

/// A linear program with a subset of columns restricted to {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedIntegerProgram {
    pub lp: LinearProgram,
    pub binaries: Vec<usize>,
}

impl MixedIntegerProgram {
    pub fn validate(&self) -> Result<(), SolverError> {
        self.lp.validate()?;
        for &j in &self.binaries {
            if j >= self.lp.num_cols() {
                return Err(SolverError::Malformed(format!("binary index {j} out of range")));
            }
            if self.lp.col_lower[j] < 0.0 || self.lp.col_upper[j] > 1.0 {
                return Err(SolverError::Malformed(format!("binary column {j} has bounds outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn to_lp_format(&self) -> String {
        self.lp.to_lp_format(&self.binaries)
    }
}
