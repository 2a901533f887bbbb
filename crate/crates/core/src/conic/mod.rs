//! Small dense semidefinite programs over Hermitian matrices.
//!
//! Problems are built with [`SdpProblem`]: declare variables, write affine
//! Hermitian expressions through [`LinearMap`]s, add equality or PSD
//! constraints and a real linear objective. [`solve`] compiles the model to a
//! standard primal form, removes dependent rows, runs a primal-dual
//! interior-point method and re-checks the returned point against the
//! original expressions.

mod compile;
mod ipm;
pub mod maps;
mod model;
pub mod sdpa;

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::qmat::{CMatrix, HermitianMatrix};

pub use maps::{Composed, Identity, LinearMap, PartialTraceMap, Sandwich, TraceWith, TwirledMarginal};
pub use model::{Constraint, ConstraintKind, Expr, SdpProblem, Sense, Var, VarKind};

/// Largest total Hermitian dimension accepted by [`solve`].
pub const DIMENSION_GUARD: usize = 4096;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 200;
pub const TOL_ENV_VAR: &str = "KEXT_SOLVER_TOL";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

impl SolveOptions {
    /// Defaults, with the tolerance overridden by `KEXT_SOLVER_TOL` when set.
    pub fn from_env() -> Self {
        let mut opts = Self::default();
        if let Some(tol) = std::env::var(TOL_ENV_VAR).ok().and_then(|s| s.trim().parse::<f64>().ok()) {
            if tol > 0.0 && tol.is_finite() {
                opts.tol = tol;
            }
        }
        opts
    }
}

/// Relative primal infeasibility, dual infeasibility and duality gap.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

/// Value of a variable at the returned point.
#[derive(Clone, Debug, PartialEq)]
pub enum VarValue {
    Scalar(f64),
    Matrix(HermitianMatrix),
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SolveStatus,
    /// Primal objective in the sense of the problem.
    pub objective: f64,
    /// Dual objective in the sense of the problem.
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    /// Worst violation found when re-evaluating every constraint at the returned point.
    pub max_violation: f64,
    values: HashMap<usize, VarValue>,
}

impl SdpSolution {
    pub fn value(&self, var: Var) -> Option<&VarValue> {
        self.values.get(&var.index())
    }

    pub fn scalar(&self, var: Var) -> Option<f64> {
        match self.values.get(&var.index()) {
            Some(VarValue::Scalar(x)) => Some(*x),
            _ => None,
        }
    }

    pub fn matrix(&self, var: Var) -> Option<&HermitianMatrix> {
        match self.values.get(&var.index()) {
            Some(VarValue::Matrix(m)) => Some(m),
            _ => None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Solve `problem`. Fails with [`crate::Error::DimensionGuard`] before doing any
/// work when the total matrix dimension exceeds [`DIMENSION_GUARD`], and with
/// [`crate::Error::Model`] when the problem is malformed. A non-optimal status
/// is returned inside the solution, not as an error.
pub fn solve(problem: &SdpProblem, opts: &SolveOptions) -> crate::Result<SdpSolution> {
    let total = problem.total_matrix_dim();
    if total > DIMENSION_GUARD {
        return Err(crate::Error::DimensionGuard { dim: total, limit: DIMENSION_GUARD });
    }
    problem.validate()?;
    let compiled = compile::compile(problem)?;
    let result =
        if compiled.consistent { ipm::solve(&compiled.form, opts) } else { ipm::IpmResult::infeasible(&compiled.form) };
    Ok(compiled.extract(problem, result, opts))
}

/// `d_a · d_b^k`, or a guard error when it exceeds [`DIMENSION_GUARD`].
pub fn extension_dim(d_a: usize, d_b: usize, k: usize) -> crate::Result<usize> {
    let total =
        u32::try_from(k).ok().and_then(|k| (d_b as u128).checked_pow(k)).and_then(|t| t.checked_mul(d_a as u128));
    match total {
        Some(t) if t <= DIMENSION_GUARD as u128 => Ok(t as usize),
        _ => Err(crate::Error::DimensionGuard {
            dim: total.map(|t| t.min(usize::MAX as u128) as usize).unwrap_or(usize::MAX),
            limit: DIMENSION_GUARD,
        }),
    }
}

/// Solve and require an optimal status.
pub fn solve_optimal(problem: &SdpProblem, opts: &SolveOptions) -> crate::Result<SdpSolution> {
    let sol = solve(problem, opts)?;
    if sol.status != SolveStatus::Optimal {
        return Err(crate::Error::Solver { status: sol.status });
    }
    Ok(sol)
}

/// Real symmetric representation `[[Re H, -Im H], [Im H, Re H]]` of a Hermitian matrix.
pub fn embed_hermitian(h: &HermitianMatrix) -> DMatrix<f64> {
    embed_matrix(h.as_matrix())
}

pub(crate) fn embed_matrix(h: &CMatrix) -> DMatrix<f64> {
    let n = h.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    out
}
