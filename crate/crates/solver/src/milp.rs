//! Best-first branch and bound over binary columns.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::SolverError;
use crate::model::{Direction, MixedIntegerProgram};
use crate::simplex::{Engine, Termination, VarState};
use crate::tolerances as tol;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilpOptions {
    pub relative_gap: f64,
    pub node_limit: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions { relative_gap: 1e-6, node_limit: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    /// Node limit hit; the incumbent (if any) is returned with its gap.
    NodeLimit,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpResult {
    pub status: MilpStatus,
    pub x: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Best proven bound on the optimum, in the objective's own sense.
    pub bound: f64,
    pub nodes: usize,
    /// Global bound after each processed node; never loosens.
    pub bound_history: Vec<f64>,
    pub lp_iterations: usize,
}

impl MilpResult {
    pub fn gap(&self) -> f64 {
        match self.objective {
            Some(obj) => (self.bound - obj).abs() / obj.abs().max(1.0),
            None => f64::INFINITY,
        }
    }
}

struct Node {
    bound: f64,
    id: u64,
    fixings: Vec<(usize, f64)>,
    states: Vec<VarState>,
    values: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then(self.id.cmp(&other.id))
    }
}

/// Solves a MILP by best-first branch and bound, branching on the most
/// fractional binary. Both children of a node are solved by dual simplex
/// from the parent's basis.
pub fn solve_milp(mip: &MixedIntegerProgram, opts: &MilpOptions) -> Result<MilpResult, SolverError> {
    mip.validate()?;
    let lp = &mip.lp;
    let sense = match lp.direction {
        Direction::Maximize => 1.0,
        Direction::Minimize => -1.0,
    };
    let mut engine = Engine::new(lp);
    let root = engine.solve()?;
    let mut result = MilpResult {
        status: MilpStatus::Infeasible,
        x: None,
        objective: None,
        bound: f64::NEG_INFINITY * sense,
        nodes: 1,
        bound_history: Vec::new(),
        lp_iterations: 0,
    };
    match root {
        Termination::Infeasible(_) => {
            result.lp_iterations = engine.iterations;
            return Ok(result);
        }
        Termination::Unbounded(_) => {
            result.status = MilpStatus::Unbounded;
            result.bound = f64::INFINITY * sense;
            result.lp_iterations = engine.iterations;
            return Ok(result);
        }
        Termination::Optimal => {}
    }
    let bin = &mip.binaries;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut next_id = 0u64;
    let mut heap = BinaryHeap::new();
    let root_score = sense * engine.objective();
    consider(&engine, bin, root_score, Vec::new(), &mut incumbent, &mut heap, &mut next_id);
    let mut global = root_score;
    result.bound_history.push(sense * global);
    let mut status = MilpStatus::Optimal;
    while let Some(node) = heap.pop() {
        let inc = incumbent.as_ref().map(|(s, _)| *s);
        global = global.min(node.bound.max(inc.unwrap_or(f64::NEG_INFINITY)));
        if let Some(s) = inc {
            if global - s <= opts.relative_gap * s.abs().max(1.0) {
                heap.push(node);
                break;
            }
            if node.bound <= s {
                continue;
            }
        }
        if result.nodes >= opts.node_limit {
            heap.push(node);
            status = MilpStatus::NodeLimit;
            break;
        }
        // Most fractional binary; ties go to the lowest index.
        let mut branch = usize::MAX;
        let mut best = -1.0;
        for (k, &v) in node.values.iter().enumerate() {
            let f = (v - v.floor()).min(v.ceil() - v);
            if f > tol::INTEGRALITY && f > best + 1e-12 {
                best = f;
                branch = k;
            }
        }
        let var = bin[branch];
        for &j in bin {
            engine.set_bounds(j, 0.0, 1.0);
        }
        for &(j, v) in &node.fixings {
            engine.set_bounds(j, v, v);
        }
        engine.load_states(&node.states)?;
        let snap = engine.snapshot();
        let first = if node.values[branch] >= 0.5 { 1.0 } else { 0.0 };
        for (c, val) in [first, 1.0 - first].into_iter().enumerate() {
            if c > 0 {
                engine.restore(&snap);
            }
            engine.set_bounds(var, val, val);
            result.nodes += 1;
            if let Termination::Optimal = engine.solve()? {
                let score = sense * engine.objective();
                let mut fix = node.fixings.clone();
                fix.push((var, val));
                consider(&engine, bin, score, fix, &mut incumbent, &mut heap, &mut next_id);
            }
        }
        result.bound_history.push(sense * global);
    }
    let open_best = heap.iter().map(|n| n.bound).fold(f64::NEG_INFINITY, f64::max);
    result.lp_iterations = engine.iterations;
    match incumbent {
        Some((s, x)) => {
            let b = if status == MilpStatus::Optimal && heap.is_empty() { s } else { global.min(open_best.max(s)) };
            result.bound = sense * b;
            result.objective = Some(lp.objective_value(&x));
            result.x = Some(x);
            result.status = status;
        }
        None => {
            result.status = if status == MilpStatus::NodeLimit { MilpStatus::NodeLimit } else { MilpStatus::Infeasible };
            result.bound = sense * if heap.is_empty() { f64::NEG_INFINITY } else { open_best };
        }
    }
    if let Some(last) = result.bound_history.last().copied() {
        if result.bound != last {
            result.bound_history.push(result.bound);
        }
    }
    Ok(result)
}

fn consider(
    engine: &Engine,
    bin: &[usize],
    score: f64,
    fixings: Vec<(usize, f64)>,
    incumbent: &mut Option<(f64, Vec<f64>)>,
    heap: &mut BinaryHeap<Node>,
    next_id: &mut u64,
) {
    if let Some((s, _)) = incumbent {
        if score <= *s {
            return;
        }
    }
    let values: Vec<f64> = bin.iter().map(|&j| engine.x[j]).collect();
    let integral = values.iter().all(|v| (v - v.round()).abs() <= tol::INTEGRALITY);
    if integral {
        let mut x = engine.x[..engine.n].to_vec();
        for &j in bin {
            x[j] = x[j].round();
        }
        *incumbent = Some((score, x));
        return;
    }
    *next_id += 1;
    heap.push(Node { bound: score, id: *next_id, fixings, states: engine.state.clone(), values });
}
