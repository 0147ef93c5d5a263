//! Linear programming: a self-contained simplex solver and the
//! traffic-engineering programs built on it.

mod problem;
mod simplex;
mod te;

pub use problem::{LpProblem, LpSolution, LpStatus, Sense, Tolerances, VarId};
pub use te::{
    brute_force_robust_paths, link_utilizations, max_utilization, oblivious_rates,
    robust_rates_problem, solve_mcf, solve_robust_rates, BruteForceResult, ObliviousRouting,
    RateAllocation, BRUTE_FORCE_PATH_LIMIT, NEGATIVE_RATE_TOL, REPORT_TOL,
};
