//! Dense two-phase tableau simplex with Bland's rule. Test oracle only:
//! slow, simple and independent of the library's revised simplex.

#![allow(dead_code)]

#[derive(Debug, Clone, PartialEq)]
pub enum OracleResult {
    Optimal { objective: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

/// Generic LP: optimize `c.x` subject to `row_lo <= A x <= row_hi`,
/// `col_lo <= x <= col_hi`. `a` is dense row-major.
pub struct DenseLp {
    pub maximize: bool,
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub row_lo: Vec<f64>,
    pub row_hi: Vec<f64>,
    pub col_lo: Vec<f64>,
    pub col_hi: Vec<f64>,
}

const EPS: f64 = 1e-10;

enum Sub {
    // x = lo + v
    Shift(usize, f64),
    // x = hi - v
    Flip(usize, f64),
    // x = v1 - v2
    Split(usize, usize),
}

pub fn solve(lp: &DenseLp) -> OracleResult {
    let n = lp.c.len();
    let mut subs = Vec::with_capacity(n);
    let mut nv = 0usize;
    // Extra rows from finite upper bounds: v <= hi - lo.
    let mut rows: Vec<(Vec<(usize, f64)>, f64, f64)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = (lp.col_lo[j], lp.col_hi[j]);
        if lo.is_finite() {
            subs.push(Sub::Shift(nv, lo));
            if hi.is_finite() {
                rows.push((vec![(nv, 1.0)], f64::NEG_INFINITY, hi - lo));
            }
            nv += 1;
        } else if hi.is_finite() {
            subs.push(Sub::Flip(nv, hi));
            nv += 1;
        } else {
            subs.push(Sub::Split(nv, nv + 1));
            nv += 2;
        }
    }
    // Objective over v (minimize form) plus constant.
    let sign = if lp.maximize { -1.0 } else { 1.0 };
    let mut cv = vec![0.0; nv];
    for j in 0..n {
        let cj = sign * lp.c[j];
        match subs[j] {
            Sub::Shift(v, _) => cv[v] += cj,
            Sub::Flip(v, _) => cv[v] -= cj,
            Sub::Split(a, b) => {
                cv[a] += cj;
                cv[b] -= cj;
            }
        }
    }
    for (i, row) in lp.a.iter().enumerate() {
        let mut coeffs = Vec::new();
        let mut shift = 0.0;
        for j in 0..n {
            let a = row[j];
            if a == 0.0 {
                continue;
            }
            match subs[j] {
                Sub::Shift(v, lo) => {
                    coeffs.push((v, a));
                    shift += a * lo;
                }
                Sub::Flip(v, hi) => {
                    coeffs.push((v, -a));
                    shift += a * hi;
                }
                Sub::Split(p, q) => {
                    coeffs.push((p, a));
                    coeffs.push((q, -a));
                }
            }
        }
        rows.push((coeffs, lp.row_lo[i] - shift, lp.row_hi[i] - shift));
    }
    // Standard form rows: (coeffs, slack coefficient or none, rhs).
    let mut std_rows: Vec<(Vec<(usize, f64)>, Option<f64>, f64)> = Vec::new();
    for (coeffs, lo, hi) in rows {
        if lo.is_finite() && hi.is_finite() && (hi - lo).abs() <= 0.0 {
            std_rows.push((coeffs, None, hi));
            continue;
        }
        if hi.is_finite() {
            std_rows.push((coeffs.clone(), Some(1.0), hi));
        }
        if lo.is_finite() {
            std_rows.push((coeffs, Some(-1.0), lo));
        }
    }
    let m = std_rows.len();
    let n_slack = std_rows.iter().filter(|r| r.1.is_some()).count();
    let ncols = nv + n_slack + m; // + artificials
    let width = ncols + 1;
    let mut t = vec![vec![0.0; width]; m];
    let mut basis = vec![0usize; m];
    let mut s = nv;
    for (i, (coeffs, slack, rhs)) in std_rows.iter().enumerate() {
        for &(v, a) in coeffs {
            t[i][v] += a;
        }
        if let Some(sc) = slack {
            t[i][s] = *sc;
            s += 1;
        }
        t[i][ncols] = *rhs;
        if t[i][ncols] < 0.0 {
            for v in t[i].iter_mut() {
                *v = -*v;
            }
        }
        t[i][nv + n_slack + i] = 1.0;
        basis[i] = nv + n_slack + i;
    }
    // Phase 1: minimize sum of artificials.
    let mut cost1 = vec![0.0; ncols];
    for i in 0..m {
        cost1[nv + n_slack + i] = 1.0;
    }
    let allowed: Vec<bool> = vec![true; ncols];
    if run(&mut t, &mut basis, &cost1, &allowed) == Run::Unbounded {
        unreachable!("phase one is bounded");
    }
    let infeas: f64 = (0..m).filter(|&i| basis[i] >= nv + n_slack).map(|i| t[i][ncols]).sum();
    let scale = 1.0 + std_rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
    if infeas > 1e-9 * scale {
        return OracleResult::Infeasible;
    }
    // Drive artificials out of the basis where possible.
    for i in 0..m {
        if basis[i] >= nv + n_slack {
            if let Some(j) = (0..nv + n_slack).find(|&j| t[i][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }
    let mut cost2 = vec![0.0; ncols];
    cost2[..nv].copy_from_slice(&cv);
    let mut allowed2 = vec![true; ncols];
    for a in allowed2.iter_mut().skip(nv + n_slack) {
        *a = false;
    }
    if run(&mut t, &mut basis, &cost2, &allowed2) == Run::Unbounded {
        return OracleResult::Unbounded;
    }
    let mut v = vec![0.0; ncols];
    for i in 0..m {
        v[basis[i]] = t[i][ncols];
    }
    let mut x = vec![0.0; n];
    for j in 0..n {
        x[j] = match subs[j] {
            Sub::Shift(k, lo) => lo + v[k],
            Sub::Flip(k, hi) => hi - v[k],
            Sub::Split(a, b) => v[a] - v[b],
        };
    }
    let objective = lp.c.iter().zip(&x).map(|(c, x)| c * x).sum();
    OracleResult::Optimal { objective, x }
}

#[derive(PartialEq)]
enum Run {
    Optimal,
    Unbounded,
}

fn run(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], allowed: &[bool]) -> Run {
    let m = t.len();
    let ncols = cost.len();
    loop {
        // Reduced costs, Bland: first improving column.
        let mut enter = None;
        for j in 0..ncols {
            if !allowed[j] || basis.contains(&j) {
                continue;
            }
            let mut d = cost[j];
            for i in 0..m {
                d -= cost[basis[i]] * t[i][j];
            }
            if d < -EPS {
                enter = Some(j);
                break;
            }
        }
        let Some(q) = enter else { return Run::Optimal };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][q] > EPS {
                let r = t[i][ncols] / t[i][q];
                let better = match leave {
                    None => true,
                    Some((li, lr)) => r < lr - 1e-12 || (r <= lr + 1e-12 && basis[i] < basis[li]),
                };
                if better {
                    leave = Some((i, r));
                }
            }
        }
        let Some((r, _)) = leave else { return Run::Unbounded };
        pivot(t, basis, r, q);
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, q: usize) {
    let p = t[r][q];
    for v in t[r].iter_mut() {
        *v /= p;
    }
    let prow = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r {
            let f = row[q];
            if f != 0.0 {
                for (v, w) in row.iter_mut().zip(&prow) {
                    *v -= f * w;
                }
            }
        }
    }
    basis[r] = q;
}
