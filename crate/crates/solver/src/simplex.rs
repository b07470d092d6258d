//! Bounded revised simplex on the computational form `A x - z = 0`.
//!
//! Structural columns are indexed `0..n`, the logical of row `i` is `n + i`
//! with column `-e_i` and the row activity bounds as its box. The basis
//! inverse is held explicitly and updated by rank-one pivots.

use crate::error::SolverError;
use crate::model::{Direction, LinearProgram};
use crate::tolerances as tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarState {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable resting at zero.
    Zero,
}

#[derive(Debug, Clone)]
pub(crate) enum Termination {
    Optimal,
    /// Multipliers `y` with `sup_box y.(A x - z) < 0`.
    Infeasible(Vec<f64>),
    /// Improving direction over the structural columns.
    Unbounded(Vec<f64>),
}

enum DualEnd {
    Optimal,
    Infeasible(Vec<f64>),
    LostDualFeasibility,
}

/// Saved basis and primal point, used to restore the engine cheaply.
#[derive(Debug, Clone)]
pub(crate) struct BasisSnapshot {
    state: Vec<VarState>,
    head: Vec<usize>,
    binv: Vec<f64>,
    x: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    since_refactor: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Engine {
    pub(crate) n: usize,
    pub(crate) m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    rows: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    pub(crate) lower: Vec<f64>,
    pub(crate) upper: Vec<f64>,
    pub(crate) x: Vec<f64>,
    pub(crate) state: Vec<VarState>,
    head: Vec<usize>,
    binv: Vec<f64>,
    since_refactor: usize,
    degenerate_run: usize,
    bland: bool,
    pub(crate) iterations: usize,
    /// `cost = sign * c`; `-1` for maximization.
    pub(crate) sign: f64,
    primal_dirty: bool,
}

impl Engine {
    pub(crate) fn new(lp: &LinearProgram) -> Engine {
        let n = lp.num_cols();
        let m = lp.num_rows();
        let sign = match lp.direction {
            Direction::Minimize => 1.0,
            Direction::Maximize => -1.0,
        };
        let mut cols = vec![Vec::new(); n];
        let mut rows = vec![Vec::new(); m];
        // Merge duplicate triplets.
        let mut trip = lp.triplets.clone();
        trip.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(trip.len());
        for (r, c, v) in trip {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        for (r, c, v) in merged {
            if v != 0.0 {
                cols[c].push((r, v));
                rows[r].push((c, v));
            }
        }
        let mut cost: Vec<f64> = lp.objective.iter().map(|c| sign * c).collect();
        cost.resize(n + m, 0.0);
        let mut lower = lp.col_lower.clone();
        let mut upper = lp.col_upper.clone();
        for i in 0..m {
            let (lo, hi) = lp.row_bounds(i);
            lower.push(lo);
            upper.push(hi);
        }
        let mut state = Vec::with_capacity(n + m);
        let mut x = Vec::with_capacity(n + m);
        for j in 0..n {
            let (s, v) = resting(lower[j], upper[j]);
            state.push(s);
            x.push(v);
        }
        for _ in 0..m {
            state.push(VarState::Basic);
            x.push(0.0);
        }
        let head: Vec<usize> = (n..n + m).collect();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = -1.0;
        }
        let mut e = Engine {
            n,
            m,
            cols,
            rows,
            cost,
            lower,
            upper,
            x,
            state,
            head,
            binv,
            since_refactor: 0,
            degenerate_run: 0,
            bland: false,
            iterations: 0,
            sign,
            primal_dirty: true,
        };
        e.compute_primal();
        e
    }

    fn col_dot(&self, j: usize, v: &[f64]) -> f64 {
        if j < self.n {
            self.cols[j].iter().map(|&(i, a)| v[i] * a).sum()
        } else {
            -v[j - self.n]
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        if j < self.n {
            for &(i, a) in &self.cols[j] {
                for (p, al) in alpha.iter_mut().enumerate() {
                    *al += self.binv[p * m + i] * a;
                }
            }
        } else {
            let i = j - self.n;
            for (p, al) in alpha.iter_mut().enumerate() {
                *al = -self.binv[p * m + i];
            }
        }
        alpha
    }

    fn btran(&self, cb: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (p, &c) in cb.iter().enumerate() {
            if c != 0.0 {
                let row = &self.binv[p * m..(p + 1) * m];
                for (yi, &b) in y.iter_mut().zip(row) {
                    *yi += c * b;
                }
            }
        }
        y
    }

    /// Recomputes basic values from the nonbasic ones.
    pub(crate) fn compute_primal(&mut self) {
        let m = self.m;
        let mut r = vec![0.0; m];
        for j in 0..self.n + m {
            if self.state[j] == VarState::Basic {
                continue;
            }
            let v = self.x[j];
            if v == 0.0 {
                continue;
            }
            if j < self.n {
                for &(i, a) in &self.cols[j] {
                    r[i] += a * v;
                }
            } else {
                r[j - self.n] -= v;
            }
        }
        for p in 0..m {
            let row = &self.binv[p * m..(p + 1) * m];
            let s: f64 = row.iter().zip(&r).map(|(b, ri)| b * ri).sum();
            self.x[self.head[p]] = -s;
        }
        self.primal_dirty = false;
    }

    /// Rebuilds the basis inverse. Structural columns that make the basis
    /// singular are swapped out for logicals.
    pub(crate) fn refactor(&mut self) -> Result<(), SolverError> {
        for _attempt in 0..self.m + 2 {
            match self.try_refactor() {
                Ok(()) => {
                    self.since_refactor = 0;
                    return Ok(());
                }
                Err(swaps) => {
                    for (p, row) in swaps {
                        let j = self.head[p];
                        let (s, v) = resting(self.lower[j], self.upper[j]);
                        self.state[j] = s;
                        self.x[j] = v;
                        let logical = self.n + row;
                        self.head[p] = logical;
                        self.state[logical] = VarState::Basic;
                    }
                    self.primal_dirty = true;
                }
            }
        }
        Err(SolverError::Numerical("basis repair did not converge".into()))
    }

    fn try_refactor(&mut self) -> Result<(), Vec<(usize, usize)>> {
        let m = self.m;
        let n = self.n;
        let mut covered = vec![false; m];
        let mut struct_pos = Vec::new();
        for (p, &j) in self.head.iter().enumerate() {
            if j >= n {
                covered[j - n] = true;
            } else {
                struct_pos.push(p);
            }
        }
        let r2: Vec<usize> = (0..m).filter(|&i| !covered[i]).collect();
        let k = struct_pos.len();
        debug_assert_eq!(k, r2.len());
        let mut row_map = vec![usize::MAX; m];
        for (a, &i) in r2.iter().enumerate() {
            row_map[i] = a;
        }
        // Dense M = A[R2, S], column b holds basis position struct_pos[b].
        let mut mat = vec![0.0; k * k];
        for (b, &p) in struct_pos.iter().enumerate() {
            for &(i, v) in &self.cols[self.head[p]] {
                let a = row_map[i];
                if a != usize::MAX {
                    mat[a * k + b] = v;
                }
            }
        }
        let minv = match invert_dense(&mut mat, k) {
            Ok(inv) => inv,
            Err((bad_cols, free_rows)) => {
                let swaps = bad_cols
                    .into_iter()
                    .zip(free_rows)
                    .map(|(b, a)| (struct_pos[b], r2[a]))
                    .collect();
                return Err(swaps);
            }
        };
        let binv = &mut self.binv;
        binv.iter_mut().for_each(|v| *v = 0.0);
        for (b, &p) in struct_pos.iter().enumerate() {
            for (a, &i) in r2.iter().enumerate() {
                binv[p * m + i] = minv[b * k + a];
            }
        }
        let mut pos_of = vec![usize::MAX; n];
        for (b, &p) in struct_pos.iter().enumerate() {
            pos_of[self.head[p]] = b;
        }
        for p in 0..m {
            let j = self.head[p];
            if j < n {
                continue;
            }
            let i = j - n;
            for &(c, v) in &self.rows[i] {
                let b = pos_of[c];
                if b == usize::MAX {
                    continue;
                }
                for (a, &ii) in r2.iter().enumerate() {
                    binv[p * m + ii] += v * minv[b * k + a];
                }
            }
            binv[p * m + i] = -1.0;
        }
        Ok(())
    }

    fn pivot_update(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (prow, after) = rest.split_at_mut(m);
        for v in prow.iter_mut() {
            *v /= piv;
        }
        for (p, chunk) in before.chunks_mut(m).enumerate() {
            let f = alpha[p];
            if f != 0.0 {
                for (v, &w) in chunk.iter_mut().zip(prow.iter()) {
                    *v -= f * w;
                }
            }
        }
        for (q, chunk) in after.chunks_mut(m).enumerate() {
            let f = alpha[r + 1 + q];
            if f != 0.0 {
                for (v, &w) in chunk.iter_mut().zip(prow.iter()) {
                    *v -= f * w;
                }
            }
        }
        self.since_refactor += 1;
    }

    fn maybe_refactor(&mut self) -> Result<(), SolverError> {
        if self.since_refactor >= tol::REFACTOR_INTERVAL {
            self.refactor()?;
            self.compute_primal();
        } else if self.primal_dirty {
            self.compute_primal();
        }
        Ok(())
    }

    fn basic_infeasibility(&self, p: usize) -> f64 {
        let j = self.head[p];
        let v = self.x[j];
        if v < self.lower[j] - tol::FEASIBILITY {
            self.lower[j] - v
        } else if v > self.upper[j] + tol::FEASIBILITY {
            v - self.upper[j]
        } else {
            0.0
        }
    }

    pub(crate) fn max_infeasibility(&self) -> f64 {
        (0..self.m).map(|p| self.basic_infeasibility(p)).fold(0.0, f64::max)
    }

    fn iteration_cap(&self) -> usize {
        50 * (self.n + self.m) + 10_000
    }

    /// Primal simplex, phase 1 then phase 2.
    pub(crate) fn primal(&mut self) -> Result<Termination, SolverError> {
        let m = self.m;
        let cap = self.iteration_cap();
        let mut local = 0usize;
        self.degenerate_run = 0;
        self.bland = false;
        loop {
            self.maybe_refactor()?;
            local += 1;
            if local > cap {
                return Err(SolverError::IterationLimit(cap));
            }
            // Phase-1 costs on infeasible basics.
            let mut flags = vec![0.0; m];
            let mut phase1 = false;
            for (p, f) in flags.iter_mut().enumerate() {
                let j = self.head[p];
                if self.x[j] < self.lower[j] - tol::FEASIBILITY {
                    *f = -1.0;
                    phase1 = true;
                } else if self.x[j] > self.upper[j] + tol::FEASIBILITY {
                    *f = 1.0;
                    phase1 = true;
                }
            }
            let cb: Vec<f64> = if phase1 {
                flags.clone()
            } else {
                self.head.iter().map(|&j| self.cost[j]).collect()
            };
            let y = self.btran(&cb);
            let mut best: Option<(usize, f64, f64)> = None;
            for j in 0..self.n + m {
                let st = self.state[j];
                if st == VarState::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let cj = if phase1 { 0.0 } else { self.cost[j] };
                let d = cj - self.col_dot(j, &y);
                let dir = match st {
                    VarState::Lower if d < -tol::OPTIMALITY => 1.0,
                    VarState::Upper if d > tol::OPTIMALITY => -1.0,
                    VarState::Zero if d.abs() > tol::OPTIMALITY => -d.signum(),
                    _ => continue,
                };
                if self.bland {
                    best = Some((j, dir, d.abs()));
                    break;
                }
                match best {
                    Some((_, _, bd)) if bd >= d.abs() => {}
                    _ => best = Some((j, dir, d.abs())),
                }
            }
            let Some((q, dir, _)) = best else {
                if phase1 {
                    return Ok(Termination::Infeasible(y));
                }
                return Ok(Termination::Optimal);
            };
            let alpha = self.ftran(q);
            // Effective bounds of basics.
            let eff = |p: usize| -> (f64, f64) {
                let j = self.head[p];
                match flags[p] {
                    f if f < 0.0 => (f64::NEG_INFINITY, self.lower[j]),
                    f if f > 0.0 => (self.upper[j], f64::INFINITY),
                    _ => (self.lower[j], self.upper[j]),
                }
            };
            let ratio = |p: usize, slack_tol: f64| -> Option<f64> {
                let a = alpha[p];
                if a.abs() <= tol::PIVOT {
                    return None;
                }
                let rate = -dir * a;
                let (l, u) = eff(p);
                let v = self.x[self.head[p]];
                if rate > 0.0 && u.is_finite() {
                    Some(((u - v + slack_tol) / rate).max(0.0))
                } else if rate < 0.0 && l.is_finite() {
                    Some(((v - l + slack_tol) / -rate).max(0.0))
                } else {
                    None
                }
            };
            let mut leave: Option<(usize, f64)> = None;
            if self.bland {
                for p in 0..m {
                    if let Some(t) = ratio(p, 0.0) {
                        let better = match leave {
                            None => true,
                            Some((lp, lt)) => t < lt - 1e-12 || (t <= lt + 1e-12 && self.head[p] < self.head[lp]),
                        };
                        if better {
                            leave = Some((p, t));
                        }
                    }
                }
            } else {
                let mut tmax = f64::INFINITY;
                for p in 0..m {
                    if let Some(t) = ratio(p, tol::FEASIBILITY) {
                        tmax = tmax.min(t);
                    }
                }
                if tmax.is_finite() {
                    let mut best_a = 0.0;
                    for p in 0..m {
                        if let Some(t) = ratio(p, 0.0) {
                            if t <= tmax && alpha[p].abs() > best_a {
                                best_a = alpha[p].abs();
                                leave = Some((p, t));
                            }
                        }
                    }
                }
            }
            let flip = self.upper[q] - self.lower[q];
            let step = match leave {
                Some((_, t)) if t < flip => t,
                _ if flip.is_finite() => flip,
                _ => {
                    if phase1 {
                        return Err(SolverError::Numerical("phase one ray".into()));
                    }
                    let mut ray = vec![0.0; self.n];
                    if q < self.n {
                        ray[q] = dir;
                    }
                    for p in 0..m {
                        let j = self.head[p];
                        if j < self.n {
                            ray[j] = -dir * alpha[p];
                        }
                    }
                    return Ok(Termination::Unbounded(ray));
                }
            };
            self.iterations += 1;
            if step <= 1e-12 {
                self.degenerate_run += 1;
                if self.degenerate_run > tol::BLAND_TRIGGER {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
            }
            for p in 0..m {
                if alpha[p] != 0.0 {
                    self.x[self.head[p]] -= dir * step * alpha[p];
                }
            }
            let bound_flip = match leave {
                Some((_, t)) => !(t < flip),
                None => true,
            };
            if bound_flip {
                if dir > 0.0 {
                    self.x[q] = self.upper[q];
                    self.state[q] = VarState::Upper;
                } else {
                    self.x[q] = self.lower[q];
                    self.state[q] = VarState::Lower;
                }
                continue;
            }
            let (r, _) = leave.unwrap();
            self.x[q] += dir * step;
            let j = self.head[r];
            let rate = -dir * alpha[r];
            let (l, u) = eff(r);
            let (val, st) = if rate > 0.0 {
                (u, if u == self.upper[j] { VarState::Upper } else { VarState::Lower })
            } else {
                (l, if l == self.lower[j] { VarState::Lower } else { VarState::Upper })
            };
            self.x[j] = val;
            self.state[j] = st;
            self.state[q] = VarState::Basic;
            self.head[r] = q;
            self.pivot_update(r, &alpha);
            if alpha[r].abs() < 1e-11 {
                self.refactor()?;
                self.compute_primal();
            }
        }
    }

    fn dual(&mut self) -> Result<DualEnd, SolverError> {
        let m = self.m;
        let cap = self.iteration_cap();
        let mut local = 0usize;
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            self.maybe_refactor()?;
            local += 1;
            if local > cap {
                return Ok(DualEnd::LostDualFeasibility);
            }
            let cb: Vec<f64> = self.head.iter().map(|&j| self.cost[j]).collect();
            let y = self.btran(&cb);
            let mut d = vec![0.0; self.n + m];
            let mut flipped = false;
            for j in 0..self.n + m {
                if self.state[j] == VarState::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let dj = self.cost[j] - self.col_dot(j, &y);
                d[j] = dj;
                match self.state[j] {
                    VarState::Lower if dj < -1e-7 => {
                        if self.upper[j].is_finite() {
                            self.state[j] = VarState::Upper;
                            self.x[j] = self.upper[j];
                            flipped = true;
                            self.primal_dirty = true;
                        } else {
                            return Ok(DualEnd::LostDualFeasibility);
                        }
                    }
                    VarState::Upper if dj > 1e-7 => {
                        if self.lower[j].is_finite() {
                            self.state[j] = VarState::Lower;
                            self.x[j] = self.lower[j];
                            flipped = true;
                            self.primal_dirty = true;
                        } else {
                            return Ok(DualEnd::LostDualFeasibility);
                        }
                    }
                    VarState::Zero if dj.abs() > 1e-7 => return Ok(DualEnd::LostDualFeasibility),
                    _ => {}
                }
            }
            if flipped {
                self.compute_primal();
            }
            // Leaving row: largest bound violation.
            let mut r = usize::MAX;
            let mut worst = 0.0;
            for p in 0..m {
                let v = self.basic_infeasibility(p);
                if v <= 0.0 {
                    continue;
                }
                let take = if bland {
                    r == usize::MAX || self.head[p] < self.head[r]
                } else {
                    v > worst
                };
                if take {
                    worst = v;
                    r = p;
                }
            }
            if r == usize::MAX {
                return Ok(DualEnd::Optimal);
            }
            let jr = self.head[r];
            let below = self.x[jr] < self.lower[jr];
            let target = if below { self.lower[jr] } else { self.upper[jr] };
            let rho: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
            let mut cand: Vec<(usize, f64, f64)> = Vec::new();
            for j in 0..self.n + m {
                let st = self.state[j];
                if st == VarState::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let a = self.col_dot(j, &rho);
                if a.abs() <= tol::PIVOT {
                    continue;
                }
                let ok = match (st, below) {
                    (VarState::Lower, true) => a < 0.0,
                    (VarState::Upper, true) => a > 0.0,
                    (VarState::Lower, false) => a > 0.0,
                    (VarState::Upper, false) => a < 0.0,
                    (VarState::Zero, _) => true,
                    _ => false,
                };
                if ok {
                    let dj = match st {
                        VarState::Lower => d[j].max(0.0),
                        VarState::Upper => (-d[j]).max(0.0),
                        _ => d[j].abs(),
                    };
                    cand.push((j, dj, a));
                }
            }
            if cand.is_empty() {
                let cert = if below { rho.iter().map(|v| -v).collect() } else { rho };
                return Ok(DualEnd::Infeasible(cert));
            }
            let q = if bland {
                let mut best = cand[0];
                for &c in &cand[1..] {
                    let (t, bt) = (c.1 / c.2.abs(), best.1 / best.2.abs());
                    if t < bt - 1e-12 || (t <= bt + 1e-12 && c.0 < best.0) {
                        best = c;
                    }
                }
                best.0
            } else {
                let tmax = cand
                    .iter()
                    .map(|c| (c.1 + tol::OPTIMALITY) / c.2.abs())
                    .fold(f64::INFINITY, f64::min);
                let mut best = None;
                let mut best_a = 0.0;
                for &(j, dj, a) in &cand {
                    if dj / a.abs() <= tmax && a.abs() > best_a {
                        best_a = a.abs();
                        best = Some(j);
                    }
                }
                best.unwrap()
            };
            let alpha = self.ftran(q);
            if alpha[r].abs() <= tol::PIVOT {
                self.refactor()?;
                self.compute_primal();
                continue;
            }
            let delta = (self.x[jr] - target) / alpha[r];
            for p in 0..m {
                if alpha[p] != 0.0 {
                    self.x[self.head[p]] -= delta * alpha[p];
                }
            }
            self.x[q] += delta;
            self.x[jr] = target;
            self.state[jr] = if below { VarState::Lower } else { VarState::Upper };
            self.state[q] = VarState::Basic;
            self.head[r] = q;
            self.pivot_update(r, &alpha);
            self.iterations += 1;
            if delta.abs() <= 1e-12 {
                degenerate += 1;
                if degenerate > tol::BLAND_TRIGGER {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
        }
    }

    /// Solves from the current basis, preferring the dual simplex when the
    /// basis is primal infeasible.
    pub(crate) fn solve(&mut self) -> Result<Termination, SolverError> {
        if self.primal_dirty {
            self.compute_primal();
        }
        if self.max_infeasibility() > 0.0 {
            match self.dual()? {
                DualEnd::Infeasible(c) => return Ok(Termination::Infeasible(c)),
                DualEnd::Optimal | DualEnd::LostDualFeasibility => {}
            }
        }
        let mut term = self.primal()?;
        for attempt in 0..3 {
            if !matches!(term, Termination::Optimal) {
                break;
            }
            self.compute_primal();
            if self.max_infeasibility() <= 1e-7 {
                break;
            }
            if attempt == 2 {
                return Err(SolverError::Numerical("primal drift after refactorization".into()));
            }
            self.refactor()?;
            self.compute_primal();
            term = self.primal()?;
        }
        Ok(term)
    }

    /// Row multipliers of the current basis in the internal minimization sense.
    pub(crate) fn internal_duals(&self) -> Vec<f64> {
        let cb: Vec<f64> = self.head.iter().map(|&j| self.cost[j]).collect();
        self.btran(&cb)
    }

    pub(crate) fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        self.cost[j] - self.col_dot(j, y)
    }

    pub(crate) fn objective(&self) -> f64 {
        (0..self.n).map(|j| self.cost[j] * self.x[j]).sum::<f64>() * self.sign
    }

    /// Appends row `lo <= a.x <= hi` with its logical basic.
    pub(crate) fn add_row(&mut self, coeffs: &[(usize, f64)], lo: f64, hi: f64) {
        let m = self.m;
        let n = self.n;
        let mut merged: Vec<(usize, f64)> = coeffs.iter().copied().filter(|c| c.1 != 0.0).collect();
        merged.sort_by_key(|c| c.0);
        merged.dedup_by(|a, b| {
            if a.0 == b.0 {
                b.1 += a.1;
                true
            } else {
                false
            }
        });
        let mut pos_of = vec![usize::MAX; n];
        for (p, &j) in self.head.iter().enumerate() {
            if j < n {
                pos_of[j] = p;
            }
        }
        let mut w = vec![0.0; m];
        let mut act = 0.0;
        for &(j, v) in &merged {
            act += v * self.x[j];
            let p = pos_of[j];
            if p != usize::MAX {
                let row = &self.binv[p * m..(p + 1) * m];
                for (wi, &b) in w.iter_mut().zip(row) {
                    *wi += v * b;
                }
            }
        }
        let m1 = m + 1;
        let mut binv = vec![0.0; m1 * m1];
        for p in 0..m {
            binv[p * m1..p * m1 + m].copy_from_slice(&self.binv[p * m..(p + 1) * m]);
        }
        binv[m * m1..m * m1 + m].copy_from_slice(&w);
        binv[m * m1 + m] = -1.0;
        self.binv = binv;
        for &(j, v) in &merged {
            self.cols[j].push((m, v));
        }
        self.rows.push(merged);
        self.cost.push(0.0);
        self.lower.push(lo);
        self.upper.push(hi);
        self.x.push(act);
        self.state.push(VarState::Basic);
        self.head.push(n + m);
        self.m = m1;
    }

    /// Changes the box of variable `j`; nonbasic variables move to the new bound.
    pub(crate) fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lower[j] = lo;
        self.upper[j] = hi;
        if self.state[j] != VarState::Basic {
            let keep_upper = self.state[j] == VarState::Upper && hi.is_finite();
            let (s, v) = if keep_upper { (VarState::Upper, hi) } else { resting(lo, hi) };
            if self.x[j] != v {
                self.primal_dirty = true;
            }
            self.state[j] = s;
            self.x[j] = v;
        }
    }

    pub(crate) fn snapshot(&self) -> BasisSnapshot {
        BasisSnapshot {
            state: self.state.clone(),
            head: self.head.clone(),
            binv: self.binv.clone(),
            x: self.x.clone(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            since_refactor: self.since_refactor,
        }
    }

    pub(crate) fn restore(&mut self, s: &BasisSnapshot) {
        self.state.clone_from(&s.state);
        self.head.clone_from(&s.head);
        self.binv.clone_from(&s.binv);
        self.x.clone_from(&s.x);
        self.lower.clone_from(&s.lower);
        self.upper.clone_from(&s.upper);
        self.since_refactor = s.since_refactor;
        self.primal_dirty = false;
    }

    /// Installs a basis given as per-variable states, then refactors.
    pub(crate) fn load_states(&mut self, states: &[VarState]) -> Result<(), SolverError> {
        let total = self.n + self.m;
        let mut head = Vec::with_capacity(self.m);
        for j in 0..total {
            let st = states.get(j).copied().unwrap_or(VarState::Basic);
            if st == VarState::Basic && head.len() < self.m {
                head.push(j);
                self.state[j] = VarState::Basic;
            } else {
                let st = if st == VarState::Basic { VarState::Lower } else { st };
                let (s, v) = match st {
                    VarState::Upper if self.upper[j].is_finite() => (VarState::Upper, self.upper[j]),
                    VarState::Lower if self.lower[j].is_finite() => (VarState::Lower, self.lower[j]),
                    _ => resting(self.lower[j], self.upper[j]),
                };
                self.state[j] = s;
                self.x[j] = v;
            }
        }
        // Fill missing basis positions with logicals.
        let mut i = 0;
        while head.len() < self.m {
            let j = self.n + i;
            if self.state[j] != VarState::Basic {
                self.state[j] = VarState::Basic;
                head.push(j);
            }
            i += 1;
        }
        self.head = head;
        self.refactor()?;
        self.compute_primal();
        Ok(())
    }
}

fn resting(l: f64, u: f64) -> (VarState, f64) {
    if l.is_finite() {
        (VarState::Lower, l)
    } else if u.is_finite() {
        (VarState::Upper, u)
    } else {
        (VarState::Zero, 0.0)
    }
}

/// Gauss-Jordan inversion with partial pivoting. On failure returns the
/// columns without a usable pivot and unpivoted rows to pair them with.
fn invert_dense(mat: &mut [f64], k: usize) -> Result<Vec<f64>, (Vec<usize>, Vec<usize>)> {
    let mut inv = vec![0.0; k * k];
    for i in 0..k {
        inv[i * k + i] = 1.0;
    }
    let mut row_of_col = vec![usize::MAX; k];
    let mut used = vec![false; k];
    let mut bad = Vec::new();
    for c in 0..k {
        let mut best = usize::MAX;
        let mut bv = 1e-11;
        for r in 0..k {
            if !used[r] && mat[r * k + c].abs() > bv {
                bv = mat[r * k + c].abs();
                best = r;
            }
        }
        if best == usize::MAX {
            bad.push(c);
            continue;
        }
        used[best] = true;
        row_of_col[c] = best;
        let piv = mat[best * k + c];
        for v in &mut mat[best * k..(best + 1) * k] {
            *v /= piv;
        }
        for v in &mut inv[best * k..(best + 1) * k] {
            *v /= piv;
        }
        for r in 0..k {
            if r == best {
                continue;
            }
            let f = mat[r * k + c];
            if f == 0.0 {
                continue;
            }
            for cc in 0..k {
                mat[r * k + cc] -= f * mat[best * k + cc];
                inv[r * k + cc] -= f * inv[best * k + cc];
            }
        }
    }
    if !bad.is_empty() {
        let free: Vec<usize> = (0..k).filter(|&r| !used[r]).collect();
        return Err((bad, free));
    }
    // Row `row_of_col[c]` of the reduced system holds x_c; permute.
    let mut out = vec![0.0; k * k];
    for c in 0..k {
        let r = row_of_col[c];
        out[c * k..(c + 1) * k].copy_from_slice(&inv[r * k..(r + 1) * k]);
    }
    Ok(out)
}
