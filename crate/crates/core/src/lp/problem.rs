use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::simplex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    /// The solver reported optimality but the point violates the constraints
    /// beyond the reporting tolerance.
    Inaccurate,
}

#[derive(Debug, Clone)]
pub(crate) struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Constraint {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A linear program `min c.x` subject to linear rows and variable bounds.
#[derive(Debug, Clone, Default)]
pub struct LpProblem {
    pub(crate) vars: Vec<Variable>,
    pub(crate) rows: Vec<Constraint>,
    pub(crate) objective: Vec<f64>,
    pub(crate) name: String,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.0]
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solver tolerances.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Primal feasibility and optimality tolerance inside the simplex.
    pub solve: f64,
    /// Constraint residual accepted when certifying a returned solution.
    pub report: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solve: 1e-7,
            report: 1e-6,
        }
    }
}

impl LpProblem {
    pub fn new(name: impl Into<String>) -> Self {
        LpProblem {
            name: name.into(),
            ..Default::default()
        }
    }

    /// Adds a variable with bounds `[lower, upper]` (either may be infinite)
    /// and objective coefficient `cost`.
    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> VarId {
        assert!(lower <= upper, "empty variable domain");
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        self.objective.push(cost);
        VarId(self.vars.len() - 1)
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: impl IntoIterator<Item = (VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        let coeffs: Vec<_> = coeffs.into_iter().filter(|(_, a)| *a != 0.0).collect();
        debug_assert!(coeffs.iter().all(|(v, _)| v.0 < self.vars.len()));
        self.rows.push(Constraint {
            name: name.into(),
            coeffs,
            sense,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn solve(&self) -> LpSolution {
        self.solve_with(Tolerances::default())
    }

    pub fn solve_with(&self, tol: Tolerances) -> LpSolution {
        let mut sol = simplex::solve(self, tol.solve);
        if sol.status == LpStatus::Optimal && self.max_violation(&sol.values) > tol.report {
            sol.status = LpStatus::Inaccurate;
        }
        sol
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest absolute violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, val) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - val).max(val - v.upper);
        }
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|(v, a)| a * x[v.0]).sum();
            let viol = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Renders the problem in CPLEX LP text format.
    pub fn to_lp_format(&self) -> String {
        let name = |v: VarId| sanitize(&self.vars[v.0].name, v.0, 'x');
        let term_list = |terms: &mut dyn Iterator<Item = (VarId, f64)>| {
            let mut s = String::new();
            for (i, (v, a)) in terms.enumerate() {
                let sign = if a < 0.0 { "- " } else if i > 0 { "+ " } else { "" };
                let _ = write!(s, " {sign}{} {}", a.abs(), name(v));
            }
            if s.is_empty() {
                s.push_str(" 0");
            }
            s
        };
        let mut out = String::new();
        let _ = writeln!(out, "\\ {}", self.name);
        out.push_str("Minimize\n obj:");
        out.push_str(&term_list(
            &mut self
                .objective
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(i, c)| (VarId(i), *c)),
        ));
        out.push_str("\nSubject To\n");
        for (i, row) in self.rows.iter().enumerate() {
            let op = match row.sense {
                Sense::Le => "<=",
                Sense::Eq => "=",
                Sense::Ge => ">=",
            };
            let _ = writeln!(
                out,
                " {}:{} {op} {}",
                sanitize(&row.name, i, 'c'),
                term_list(&mut row.coeffs.iter().copied()),
                row.rhs
            );
        }
        out.push_str("Bounds\n");
        for (i, v) in self.vars.iter().enumerate() {
            let n = name(VarId(i));
            match (v.lower.is_finite(), v.upper.is_finite()) {
                (true, true) => {
                    let _ = writeln!(out, " {} <= {n} <= {}", v.lower, v.upper);
                }
                (true, false) => {
                    let _ = writeln!(out, " {n} >= {}", v.lower);
                }
                (false, true) => {
                    let _ = writeln!(out, " -inf <= {n} <= {}", v.upper);
                }
                (false, false) => {
                    let _ = writeln!(out, " {n} free");
                }
            }
        }
        out.push_str("End\n");
        out
    }
}

fn sanitize(name: &str, idx: usize, prefix: char) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect();
    if cleaned.is_empty() || cleaned.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        format!("{prefix}{idx}_{cleaned}")
    } else {
        cleaned
    }
}
