use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::maps::{Identity, LinearMap};
use crate::error::{Error, Result};
use crate::qmat::{hermitian_deviation, CMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    /// Real scalar `x >= 0`.
    Nonneg,
    /// Unconstrained real scalar.
    Free,
    /// Hermitian `n x n` matrix `X ⪰ 0`.
    Psd(usize),
    /// Unconstrained Hermitian `n x n` matrix.
    HermFree(usize),
}

impl VarKind {
    pub fn is_scalar(&self) -> bool {
        matches!(self, VarKind::Nonneg | VarKind::Free)
    }

    pub fn matrix_dim(&self) -> usize {
        match self {
            VarKind::Nonneg | VarKind::Free => 1,
            VarKind::Psd(n) | VarKind::HermFree(n) => *n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(&self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
pub(crate) enum TermOp {
    /// Scalar variable times a constant Hermitian matrix.
    Scalar(CMatrix),
    /// Linear map applied to a matrix variable.
    Map(Arc<dyn LinearMap>),
}

#[derive(Clone, Debug)]
pub(crate) struct Term {
    pub var: Var,
    pub coef: f64,
    pub op: TermOp,
}

/// Affine Hermitian-valued expression `Σ coef_t · op_t(var_t) + constant`.
#[derive(Clone, Debug)]
pub struct Expr {
    dim: usize,
    pub(crate) terms: Vec<Term>,
    pub(crate) constant: CMatrix,
    malformed: Option<String>,
}

impl Expr {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, terms: Vec::new(), constant: CMatrix::zeros(dim, dim), malformed: None }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `+ coef · var` for a matrix variable of the same dimension.
    pub fn plus_var(self, var: Var, coef: f64) -> Self {
        let n = self.dim;
        self.plus_map(var, coef, Identity::arc(n))
    }

    /// `+ coef · map(var)`.
    pub fn plus_map(mut self, var: Var, coef: f64, map: Arc<dyn LinearMap>) -> Self {
        self.terms.push(Term { var, coef, op: TermOp::Map(map) });
        self
    }

    /// `+ x · h` for a scalar variable `x`.
    pub fn plus_scaled(mut self, var: Var, h: CMatrix) -> Self {
        self.terms.push(Term { var, coef: 1.0, op: TermOp::Scalar(h) });
        self
    }

    /// `+ c · x` on a 1x1 expression.
    pub fn plus_scalar(self, var: Var, c: f64) -> Self {
        self.plus_scaled(var, CMatrix::from_element(1, 1, C64::new(c, 0.0)))
    }

    /// `+ coef · c` for a constant Hermitian matrix.
    pub fn plus_const(mut self, c: &CMatrix, coef: f64) -> Self {
        if c.shape() == self.constant.shape() {
            self.constant += c * C64::new(coef, 0.0);
        } else {
            self.malformed =
                Some(format!("constant of shape {:?} added to expression of dimension {}", c.shape(), self.dim));
        }
        self
    }

    pub fn plus_const_scalar(mut self, c: f64) -> Self {
        for i in 0..self.dim {
            self.constant[(i, i)] += C64::new(c, 0.0);
        }
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    /// `expr = 0`
    Equal,
    /// `expr ⪰ 0`
    Psd,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub name: String,
    pub kind: ConstraintKind,
    pub expr: Expr,
}

#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub(crate) vars: Vec<(String, VarKind)>,
    pub(crate) constraints: Vec<Constraint>,
    pub(crate) sense: Sense,
    pub(crate) objective: Expr,
}

impl Default for SdpProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl SdpProblem {
    pub fn new() -> Self {
        Self { vars: Vec::new(), constraints: Vec::new(), sense: Sense::Minimize, objective: Expr::zeros(1) }
    }

    pub fn add_var(&mut self, name: &str, kind: VarKind) -> Var {
        self.vars.push((name.to_string(), kind));
        Var(self.vars.len() - 1)
    }

    pub fn add_eq(&mut self, name: &str, expr: Expr) {
        self.constraints.push(Constraint { name: name.to_string(), kind: ConstraintKind::Equal, expr });
    }

    pub fn add_psd(&mut self, name: &str, expr: Expr) {
        self.constraints.push(Constraint { name: name.to_string(), kind: ConstraintKind::Psd, expr });
    }

    /// The objective must be a 1x1 expression; its real part is optimized.
    pub fn set_objective(&mut self, sense: Sense, expr: Expr) {
        self.sense = sense;
        self.objective = expr;
    }

    pub fn vars(&self) -> &[(String, VarKind)] {
        &self.vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    /// Sum of the dimensions of all matrix variables and PSD constraints.
    pub fn total_matrix_dim(&self) -> usize {
        let vars: usize = self
            .vars
            .iter()
            .map(|(_, k)| match k {
                VarKind::Psd(n) | VarKind::HermFree(n) => *n,
                _ => 0,
            })
            .sum();
        let cons: usize = self.constraints.iter().filter(|c| c.kind == ConstraintKind::Psd).map(|c| c.expr.dim()).sum();
        vars + cons
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_expr("objective", &self.objective)?;
        if self.objective.dim() != 1 {
            return Err(Error::Model(format!("objective has dimension {}, expected 1", self.objective.dim())));
        }
        for c in &self.constraints {
            self.validate_expr(&c.name, &c.expr)?;
        }
        Ok(())
    }

    fn validate_expr(&self, name: &str, e: &Expr) -> Result<()> {
        if let Some(msg) = &e.malformed {
            return Err(Error::Model(format!("'{name}': {msg}")));
        }
        let scale = e.constant.iter().fold(1.0_f64, |a, z| a.max(z.norm()));
        if hermitian_deviation(&e.constant) > 1e-10 * scale {
            return Err(Error::Model(format!("constant block of '{name}' is not Hermitian")));
        }
        for t in &e.terms {
            let Some((vname, kind)) = self.vars.get(t.var.0) else {
                return Err(Error::Model(format!("'{name}' references an undeclared variable")));
            };
            if !t.coef.is_finite() {
                return Err(Error::Model(format!("'{name}' has a non-finite coefficient")));
            }
            match (&t.op, kind) {
                (TermOp::Scalar(h), VarKind::Nonneg | VarKind::Free) => {
                    if h.shape() != (e.dim, e.dim) {
                        return Err(Error::Model(format!(
                            "'{name}': coefficient of '{vname}' has shape {:?}",
                            h.shape()
                        )));
                    }
                    let s = h.iter().fold(1.0_f64, |a, z| a.max(z.norm()));
                    if hermitian_deviation(h) > 1e-10 * s {
                        return Err(Error::Model(format!("'{name}': coefficient of '{vname}' is not Hermitian")));
                    }
                }
                (TermOp::Map(m), VarKind::Psd(n) | VarKind::HermFree(n)) => {
                    if m.in_dim() != *n || m.out_dim() != e.dim {
                        return Err(Error::Model(format!(
                            "'{name}': map {} -> {} applied to '{vname}' of dimension {n} in expression of dimension {}",
                            m.in_dim(),
                            m.out_dim(),
                            e.dim
                        )));
                    }
                }
                _ => {
                    return Err(Error::Model(format!("'{name}': term kind does not match variable '{vname}'")));
                }
            }
        }
        Ok(())
    }

    /// Evaluate an expression at given variable values (scalars as 1x1 matrices).
    pub(crate) fn evaluate(&self, e: &Expr, values: &[CMatrix]) -> CMatrix {
        let mut out = e.constant.clone();
        for t in &e.terms {
            let v = &values[t.var.0];
            let contrib = match &t.op {
                TermOp::Scalar(h) => h * v[(0, 0)],
                TermOp::Map(m) => m.apply(v),
            };
            out += contrib * C64::new(t.coef, 0.0);
        }
        out
    }
}
