use crate::error::SolverError;
use crate::model::{LinearProgram, RowSense};
use crate::simplex::{Engine, Termination, VarState};

/// Optimal primal-dual pair in the user's objective sense.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub row_activity: Vec<f64>,
    /// Row multipliers, consistent with [`LinearProgram::dual_bound`].
    pub duals: Vec<f64>,
    /// `c_j - (A^T y)_j` for each structural column.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    /// `certificate` is a row multiplier vector `y` with
    /// `sup { y.(A x - z) : x, z within their boxes } < 0`.
    Infeasible { certificate: Vec<f64> },
    /// `ray` is an improving direction of the structural columns.
    Unbounded { ray: Vec<f64> },
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<&LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

/// Solves an LP from the slack basis. A numerical breakdown triggers one
/// restart on an equilibrated copy of the model.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome, SolverError> {
    lp.validate()?;
    let mut engine = Engine::new(lp);
    match engine.solve() {
        Ok(t) => Ok(extract(&engine, t)),
        Err(SolverError::Numerical(_)) => solve_scaled(lp),
        Err(e) => Err(e),
    }
}

fn solve_scaled(lp: &LinearProgram) -> Result<LpOutcome, SolverError> {
    let (scaled, sc) = equilibrate(lp);
    let mut engine = Engine::new(&scaled);
    let t = engine.solve()?;
    Ok(sc.unscale(lp, extract(&engine, t)))
}

/// Checks a Farkas certificate against the model.
pub fn certificate_gap(lp: &LinearProgram, y: &[f64]) -> f64 {
    // sup over boxes of sum_j (A^T y)_j x_j - sum_i y_i z_i
    let mut aty = vec![0.0; lp.num_cols()];
    for &(r, c, v) in &lp.triplets {
        aty[c] += y[r] * v;
    }
    let sup = |coef: f64, lo: f64, hi: f64| -> f64 {
        if coef.abs() <= 1e-12 {
            0.0
        } else if coef > 0.0 {
            coef * hi
        } else {
            coef * lo
        }
    };
    let mut total = 0.0;
    for j in 0..lp.num_cols() {
        total += sup(aty[j], lp.col_lower[j], lp.col_upper[j]);
    }
    for (i, &yi) in y.iter().enumerate() {
        let (lo, hi) = lp.row_bounds(i);
        total += sup(-yi, lo, hi);
    }
    total
}

pub(crate) fn extract(engine: &Engine, t: Termination) -> LpOutcome {
    let n = engine.n;
    match t {
        Termination::Optimal => {
            let y = engine.internal_duals();
            let duals: Vec<f64> = y.iter().map(|v| -v).collect();
            let reduced_costs = (0..n).map(|j| -engine.reduced_cost(j, &y)).collect();
            LpOutcome::Optimal(LpSolution {
                x: engine.x[..n].to_vec(),
                objective: engine.objective(),
                row_activity: engine.x[n..].to_vec(),
                duals,
                reduced_costs,
                iterations: engine.iterations,
            })
        }
        Termination::Infeasible(y) => LpOutcome::Infeasible { certificate: y },
        Termination::Unbounded(ray) => LpOutcome::Unbounded { ray },
    }
}

struct Scaling {
    row: Vec<f64>,
    col: Vec<f64>,
}

impl Scaling {
    fn unscale(&self, lp: &LinearProgram, out: LpOutcome) -> LpOutcome {
        match out {
            LpOutcome::Optimal(mut s) => {
                for (v, c) in s.x.iter_mut().zip(&self.col) {
                    *v *= c;
                }
                for (v, r) in s.row_activity.iter_mut().zip(&self.row) {
                    *v /= r;
                }
                for (v, r) in s.duals.iter_mut().zip(&self.row) {
                    *v *= r;
                }
                for (v, c) in s.reduced_costs.iter_mut().zip(&self.col) {
                    *v /= c;
                }
                s.objective = lp.objective_value(&s.x);
                LpOutcome::Optimal(s)
            }
            LpOutcome::Infeasible { certificate } => LpOutcome::Infeasible {
                certificate: certificate.iter().zip(&self.row).map(|(y, r)| y * r).collect(),
            },
            LpOutcome::Unbounded { ray } => LpOutcome::Unbounded {
                ray: ray.iter().zip(&self.col).map(|(d, c)| d * c).collect(),
            },
        }
    }
}

/// Geometric-mean equilibration with power-of-two factors.
fn equilibrate(lp: &LinearProgram) -> (LinearProgram, Scaling) {
    let m = lp.num_rows();
    let n = lp.num_cols();
    let mut row = vec![1.0; m];
    let mut col = vec![1.0; n];
    for _ in 0..6 {
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![0.0f64; m];
        for &(r, c, v) in &lp.triplets {
            let a = (v * row[r] * col[c]).abs();
            if a > 0.0 {
                lo[r] = lo[r].min(a);
                hi[r] = hi[r].max(a);
            }
        }
        for i in 0..m {
            if hi[i] > 0.0 {
                row[i] *= pow2(1.0 / (lo[i] * hi[i]).sqrt());
            }
        }
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![0.0f64; n];
        for &(r, c, v) in &lp.triplets {
            let a = (v * row[r] * col[c]).abs();
            if a > 0.0 {
                lo[c] = lo[c].min(a);
                hi[c] = hi[c].max(a);
            }
        }
        for j in 0..n {
            if hi[j] > 0.0 {
                col[j] *= pow2(1.0 / (lo[j] * hi[j]).sqrt());
            }
        }
    }
    let mut s = lp.clone();
    for t in &mut s.triplets {
        t.2 *= row[t.0] * col[t.1];
    }
    for j in 0..n {
        s.objective[j] *= col[j];
        s.col_lower[j] /= col[j];
        s.col_upper[j] /= col[j];
    }
    for i in 0..m {
        s.rhs[i] *= row[i];
        if let RowSense::Range(lo) = s.senses[i] {
            s.senses[i] = RowSense::Range(lo * row[i]);
        }
    }
    (s, Scaling { row, col })
}

fn pow2(v: f64) -> f64 {
    2f64.powi(v.log2().round() as i32)
}

/// An LP kept in memory with its basis, for warm-started re-solves after
/// cuts are added or bounds change.
#[derive(Debug, Clone)]
pub struct LpSession {
    lp: LinearProgram,
    engine: Engine,
}

impl LpSession {
    pub fn new(lp: LinearProgram) -> Result<Self, SolverError> {
        lp.validate()?;
        let engine = Engine::new(&lp);
        Ok(LpSession { lp, engine })
    }

    pub fn lp(&self) -> &LinearProgram {
        &self.lp
    }

    /// Total simplex pivots performed by this session.
    pub fn iterations(&self) -> usize {
        self.engine.iterations
    }

    pub fn solve(&mut self) -> Result<LpOutcome, SolverError> {
        match self.engine.solve() {
            Ok(t) => Ok(extract(&self.engine, t)),
            Err(SolverError::Numerical(_)) => {
                let its = self.engine.iterations;
                self.engine = Engine::new(&self.lp);
                self.engine.iterations = its;
                match self.engine.solve() {
                    Ok(t) => Ok(extract(&self.engine, t)),
                    Err(SolverError::Numerical(_)) => solve_scaled(&self.lp),
                    Err(e) => Err(e),
                }
            }
            Err(e) => Err(e),
        }
    }

    /// Appends a row; the current basis stays valid with the new logical basic.
    pub fn add_cut(&mut self, coeffs: &[(usize, f64)], sense: RowSense, rhs: f64) -> usize {
        let r = self.lp.add_row(format!("cut{}", self.lp.num_rows()), coeffs, sense, rhs);
        let (lo, hi) = self.lp.row_bounds(r);
        self.engine.add_row(coeffs, lo, hi);
        r
    }

    pub fn set_col_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lp.col_lower[j] = lo;
        self.lp.col_upper[j] = hi;
        self.engine.set_bounds(j, lo, hi);
    }

    /// Per-variable basis states (structurals then logicals).
    pub fn basis(&self) -> Vec<VarState> {
        self.engine.state.clone()
    }

    pub fn load_basis(&mut self, states: &[VarState]) -> Result<(), SolverError> {
        self.engine.load_states(states)
    }
}
