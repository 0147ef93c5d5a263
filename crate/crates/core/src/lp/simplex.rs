//! Dense two-phase primal simplex.
//!
//! Pricing is Dantzig's rule; after a run of degenerate pivots the solver
//! switches to Bland's rule until the objective moves again, which rules out
//! cycling. The ratio test is Harris' two-pass test.

use super::problem::{LpProblem, LpSolution, LpStatus, Sense};

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 50;

enum ColMap {
    /// `x = offset + col`
    Shift(usize, f64),
    /// `x = offset - col`
    Neg(usize, f64),
    /// `x = pos - neg`
    Split(usize, usize),
}

struct Tableau {
    rows: usize,
    width: usize,
    /// `rows x width`, the last column holds the right-hand side.
    data: Vec<f64>,
    basis: Vec<usize>,
    /// Reduced costs, the last entry is minus the objective value.
    cost_row: Vec<f64>,
    /// Columns that may never enter the basis.
    barred: Vec<bool>,
    /// Rows found to be redundant after phase one.
    dead: Vec<bool>,
    iterations: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn set_costs(&mut self, costs: &[f64]) {
        let w = self.width;
        self.cost_row = costs.to_vec();
        self.cost_row.push(0.0);
        for r in 0..self.rows {
            if self.dead[r] {
                continue;
            }
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                let row = &self.data[r * w..(r + 1) * w];
                for (d, a) in self.cost_row.iter_mut().zip(row) {
                    *d -= cb * a;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(r, q);
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v *= inv;
        }
        self.data[r * w + q] = 1.0;
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[q];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
                row[q] = 0.0;
            }
        };
        before.chunks_exact_mut(w).for_each(eliminate);
        after.chunks_exact_mut(w).for_each(eliminate);
        let f = self.cost_row[q];
        if f != 0.0 {
            for (v, p) in self.cost_row.iter_mut().zip(prow.iter()) {
                *v -= f * p;
            }
            self.cost_row[q] = 0.0;
        }
        self.basis[r] = q;
        self.iterations += 1;
    }

    fn choose_entering(&self, tol: f64, bland: bool) -> Option<usize> {
        let candidates = self.cost_row[..self.width - 1]
            .iter()
            .enumerate()
            .filter(|(j, d)| !self.barred[*j] && **d < -tol);
        if bland {
            candidates.map(|(j, _)| j).next()
        } else {
            candidates
                .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
                .map(|(j, _)| j)
        }
    }

    fn choose_leaving(&self, q: usize, tol: f64, bland: bool) -> Option<usize> {
        let col = |r: usize| self.at(r, q);
        let live = (0..self.rows).filter(|&r| !self.dead[r] && col(r) > PIVOT_TOL);
        if bland {
            return live
                .map(|r| (r, self.rhs(r).max(0.0) / col(r)))
                .min_by(|a, b| {
                    a.1.total_cmp(&b.1)
                        .then(self.basis[a.0].cmp(&self.basis[b.0]))
                })
                .map(|(r, _)| r);
        }
        // Harris: relaxed bound first, then the largest pivot within it.
        let theta = live
            .clone()
            .map(|r| (self.rhs(r).max(0.0) + tol) / col(r))
            .fold(f64::INFINITY, f64::min);
        if !theta.is_finite() {
            return None;
        }
        live.filter(|&r| self.rhs(r).max(0.0) / col(r) <= theta)
            .max_by(|&a, &b| {
                col(a)
                    .total_cmp(&col(b))
                    .then(self.basis[b].cmp(&self.basis[a]))
            })
    }

    /// Runs simplex iterations on the current cost row.
    fn optimize(&mut self, tol: f64, limit: usize) -> LpStatus {
        let mut streak = 0;
        let mut bland = false;
        loop {
            if self.iterations >= limit {
                return LpStatus::IterationLimit;
            }
            let Some(q) = self.choose_entering(tol, bland) else {
                return LpStatus::Optimal;
            };
            let Some(r) = self.choose_leaving(q, tol, bland) else {
                return LpStatus::Unbounded;
            };
            let step = self.rhs(r).max(0.0) / self.at(r, q);
            if step * -self.cost_row[q] <= f64::EPSILON {
                streak += 1;
                if streak >= DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                streak = 0;
                bland = false;
            }
            self.pivot(r, q);
        }
    }
}

pub(crate) fn solve(problem: &LpProblem, tol: f64) -> LpSolution {
    // Column layout: structural (after bound transformation), then slacks and
    // surpluses, then artificials.
    let mut maps = Vec::with_capacity(problem.vars.len());
    let mut n_struct = 0;
    let mut extra_rows: Vec<(Vec<(usize, f64)>, Sense, f64)> = Vec::new();
    for v in &problem.vars {
        let map = match (v.lower.is_finite(), v.upper.is_finite()) {
            (true, up) => {
                let c = n_struct;
                n_struct += 1;
                if up {
                    extra_rows.push((vec![(c, 1.0)], Sense::Le, v.upper - v.lower));
                }
                ColMap::Shift(c, v.lower)
            }
            (false, true) => {
                n_struct += 1;
                ColMap::Neg(n_struct - 1, v.upper)
            }
            (false, false) => {
                n_struct += 2;
                ColMap::Split(n_struct - 2, n_struct - 1)
            }
        };
        maps.push(map);
    }

    let mut std_rows: Vec<(Vec<(usize, f64)>, Sense, f64)> = problem
        .rows
        .iter()
        .map(|row| {
            let mut coeffs = Vec::with_capacity(row.coeffs.len());
            let mut rhs = row.rhs;
            for &(v, a) in &row.coeffs {
                match maps[v.0] {
                    ColMap::Shift(c, off) => {
                        coeffs.push((c, a));
                        rhs -= a * off;
                    }
                    ColMap::Neg(c, off) => {
                        coeffs.push((c, -a));
                        rhs -= a * off;
                    }
                    ColMap::Split(p, n) => {
                        coeffs.push((p, a));
                        coeffs.push((n, -a));
                    }
                }
            }
            (coeffs, row.sense, rhs)
        })
        .collect();
    std_rows.extend(extra_rows);

    let mut costs = vec![0.0; n_struct];
    let mut obj_offset = 0.0;
    for (map, c) in maps.iter().zip(&problem.objective) {
        match *map {
            ColMap::Shift(col, off) => {
                costs[col] += c;
                obj_offset += c * off;
            }
            ColMap::Neg(col, off) => {
                costs[col] -= c;
                obj_offset += c * off;
            }
            ColMap::Split(p, n) => {
                costs[p] += c;
                costs[n] -= c;
            }
        }
    }

    for row in &mut std_rows {
        if row.2 < 0.0 {
            row.2 = -row.2;
            for (_, a) in &mut row.0 {
                *a = -*a;
            }
            row.1 = match row.1 {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }

    let m = std_rows.len();
    let n_slack = std_rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = std_rows.iter().filter(|r| r.1 != Sense::Le).count();
    let n_cols = n_struct + n_slack + n_art;
    let width = n_cols + 1;
    let mut t = Tableau {
        rows: m,
        width,
        data: vec![0.0; m * width],
        basis: vec![0; m],
        cost_row: Vec::new(),
        barred: vec![false; n_cols],
        dead: vec![false; m],
        iterations: 0,
    };
    let (mut next_slack, mut next_art) = (n_struct, n_struct + n_slack);
    for (r, (coeffs, sense, rhs)) in std_rows.iter().enumerate() {
        let base = r * width;
        for &(c, a) in coeffs {
            t.data[base + c] += a;
        }
        t.data[base + n_cols] = *rhs;
        match sense {
            Sense::Le => {
                t.data[base + next_slack] = 1.0;
                t.basis[r] = next_slack;
                next_slack += 1;
            }
            Sense::Ge => {
                t.data[base + next_slack] = -1.0;
                next_slack += 1;
                t.data[base + next_art] = 1.0;
                t.basis[r] = next_art;
                next_art += 1;
            }
            Sense::Eq => {
                t.data[base + next_art] = 1.0;
                t.basis[r] = next_art;
                next_art += 1;
            }
        }
    }

    let limit = 50_000 + 50 * (m + n_cols);
    let art_start = n_struct + n_slack;
    let finish = |t: &Tableau, status: LpStatus| LpSolution {
        status,
        values: vec![f64::NAN; problem.vars.len()],
        objective: f64::NAN,
        iterations: t.iterations,
    };

    if n_art > 0 {
        let mut phase1 = vec![0.0; n_cols];
        for c in &mut phase1[art_start..] {
            *c = 1.0;
        }
        t.set_costs(&phase1);
        match t.optimize(tol, limit) {
            LpStatus::Optimal => {}
            // phase one is bounded below by zero
            LpStatus::Unbounded => return finish(&t, LpStatus::Inaccurate),
            other => return finish(&t, other),
        }
        let infeasibility: f64 = (0..m)
            .filter(|&r| t.basis[r] >= art_start)
            .map(|r| t.rhs(r).abs())
            .sum();
        let scale = 1.0 + std_rows.iter().map(|r| r.2).fold(0.0, f64::max);
        if infeasibility > tol * scale {
            return finish(&t, LpStatus::Infeasible);
        }
        for c in t.barred[art_start..].iter_mut() {
            *c = true;
        }
        // Drive remaining zero-level artificials out of the basis.
        for r in 0..m {
            if t.basis[r] < art_start {
                continue;
            }
            let q = (0..art_start)
                .filter(|&c| t.at(r, c).abs() > 1e-7)
                .max_by(|&a, &b| t.at(r, a).abs().total_cmp(&t.at(r, b).abs()));
            match q {
                Some(q) => t.pivot(r, q),
                None => t.dead[r] = true,
            }
        }
    }

    let mut phase2 = costs;
    phase2.resize(n_cols, 0.0);
    t.set_costs(&phase2);
    let status = t.optimize(tol, limit);
    if status != LpStatus::Optimal {
        return finish(&t, status);
    }

    let mut std_values = vec![0.0; n_cols];
    for r in 0..m {
        if !t.dead[r] {
            std_values[t.basis[r]] = t.rhs(r).max(0.0);
        }
    }
    let values: Vec<f64> = maps
        .iter()
        .map(|map| match *map {
            ColMap::Shift(c, off) => off + std_values[c],
            ColMap::Neg(c, off) => off - std_values[c],
            ColMap::Split(p, n) => std_values[p] - std_values[n],
        })
        .collect();
    let objective = problem.objective_value(&values);
    debug_assert!((objective - (obj_offset - t.cost_row[n_cols])).abs() <= 1e-6 * (1.0 + objective.abs()));
    LpSolution {
        status: LpStatus::Optimal,
        values,
        objective,
        iterations: t.iterations,
    }
}
