//! Lowering of an [`SdpProblem`] to the standard primal form
//!
//! ```text
//! min  Σ_b <C_b, X_b> + c_f · x_f
//! s.t. Σ_b <A_ib, X_b> + f_i · x_f = b_i,   X_b ⪰ 0,   x_f free
//! ```
//!
//! with `<A, X> = Re tr(A X)` on Hermitian blocks. Nonnegative scalars become
//! 1x1 blocks, free Hermitian matrices become real coordinates in an
//! orthonormal Hermitian basis, and each PSD constraint gets a hidden slack
//! block. Every Hermitian-valued equality contributes one row per basis element.

use std::collections::HashMap;

use num_complex::Complex64 as C64;

use super::ipm::IpmResult;
use super::model::{ConstraintKind, SdpProblem, Sense, TermOp, VarKind};
use super::{Residuals, SdpSolution, SolveOptions, SolveStatus, VarValue};
use crate::error::Result;
use crate::qmat::{eigenvalues_hermitian, symmetrize, CMatrix, HermitianMatrix};

const DEPENDENT_ROW_TOL: f64 = 1e-9;
const INCONSISTENT_RHS_TOL: f64 = 1e-7;

/// Element `r` of the orthonormal basis of `n x n` Hermitian matrices:
/// diagonal units first, then for each pair `i < j` the symmetric and the
/// antisymmetric-imaginary element.
pub(crate) fn herm_basis(n: usize, r: usize) -> CMatrix {
    let mut e = CMatrix::zeros(n, n);
    if r < n {
        e[(r, r)] = C64::new(1.0, 0.0);
        return e;
    }
    let (i, j, imag) = pair_of(n, r);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    if imag {
        e[(i, j)] = C64::new(0.0, s);
        e[(j, i)] = C64::new(0.0, -s);
    } else {
        e[(i, j)] = C64::new(s, 0.0);
        e[(j, i)] = C64::new(s, 0.0);
    }
    e
}

fn pair_of(n: usize, r: usize) -> (usize, usize, bool) {
    let q = r - n;
    let mut p = q / 2;
    for i in 0..n {
        let count = n - i - 1;
        if p < count {
            return (i, i + 1 + p, q % 2 == 1);
        }
        p -= count;
    }
    unreachable!("basis index {r} out of range for n = {n}")
}

/// Coordinates of a Hermitian matrix in the basis of [`herm_basis`].
pub(crate) fn herm_coords(g: &CMatrix) -> Vec<f64> {
    let n = g.nrows();
    let s = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(g[(i, i)].re);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let z = (g[(i, j)] + g[(j, i)].conj()) * 0.5;
            out.push(s * z.re);
            out.push(s * z.im);
        }
    }
    out
}

pub(crate) fn herm_from_coords(x: &[f64], n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        m[(i, i)] = C64::new(x[i], 0.0);
    }
    let mut r = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = C64::new(s * x[r], s * x[r + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            r += 2;
        }
    }
    m
}

#[derive(Clone, Debug)]
pub(crate) struct Row {
    pub blocks: Vec<Option<CMatrix>>,
    pub free: Vec<f64>,
}

impl Row {
    fn zero(nblocks: usize, nfree: usize) -> Self {
        Self { blocks: vec![None; nblocks], free: vec![0.0; nfree] }
    }

    fn add_block(&mut self, b: usize, m: &CMatrix, scale: f64) {
        let m = m * C64::new(scale, 0.0);
        match &mut self.blocks[b] {
            Some(acc) => *acc += m,
            slot => *slot = Some(m),
        }
    }

    pub fn dot(&self, other: &Row) -> f64 {
        let mut acc: f64 = self.free.iter().zip(&other.free).map(|(a, b)| a * b).sum();
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            if let (Some(a), Some(b)) = (a, b) {
                acc += a.dotc(b).re;
            }
        }
        acc
    }

    fn axpy(&mut self, alpha: f64, other: &Row) {
        for (a, b) in self.free.iter_mut().zip(&other.free) {
            *a += alpha * b;
        }
        for (b, ob) in other.blocks.iter().enumerate() {
            if let Some(m) = ob {
                self.add_block(b, m, alpha);
            }
        }
    }

    fn scale(&mut self, s: f64) {
        self.free.iter_mut().for_each(|x| *x *= s);
        for m in self.blocks.iter_mut().flatten() {
            *m *= C64::new(s, 0.0);
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct StandardForm {
    pub block_dims: Vec<usize>,
    pub n_free: usize,
    pub rows: Vec<Row>,
    pub b: Vec<f64>,
    pub c_blocks: Vec<CMatrix>,
    pub c_free: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Block(usize),
    Free(usize),
    FreeHerm { start: usize, n: usize },
}

pub(crate) struct Compiled {
    pub form: StandardForm,
    /// False when the equality system has no solution.
    pub consistent: bool,
    slots: Vec<Slot>,
    obj_sign: f64,
    obj_const: f64,
}

pub(crate) fn compile(p: &SdpProblem) -> Result<Compiled> {
    let mut block_dims = Vec::new();
    let mut n_free = 0;
    let mut slots = Vec::with_capacity(p.vars.len());
    for (_, kind) in &p.vars {
        let slot = match kind {
            VarKind::Nonneg => {
                block_dims.push(1);
                Slot::Block(block_dims.len() - 1)
            }
            VarKind::Psd(n) => {
                block_dims.push(*n);
                Slot::Block(block_dims.len() - 1)
            }
            VarKind::Free => {
                n_free += 1;
                Slot::Free(n_free - 1)
            }
            VarKind::HermFree(n) => {
                n_free += n * n;
                Slot::FreeHerm { start: n_free - n * n, n: *n }
            }
        };
        slots.push(slot);
    }
    let hidden: Vec<Option<usize>> = p
        .constraints
        .iter()
        .map(|c| match c.kind {
            ConstraintKind::Psd => {
                block_dims.push(c.expr.dim());
                Some(block_dims.len() - 1)
            }
            ConstraintKind::Equal => None,
        })
        .collect();
    let nblocks = block_dims.len();

    let mut rows = Vec::new();
    let mut b = Vec::new();
    for (c, hb) in p.constraints.iter().zip(&hidden) {
        let m = c.expr.dim();
        for r in 0..m * m {
            let e = herm_basis(m, r);
            let mut row = Row::zero(nblocks, n_free);
            for t in &c.expr.terms {
                add_term(&mut row, slots[t.var.index()], t.coef, &t.op, &e);
            }
            if let Some(hb) = hb {
                row.add_block(*hb, &e, -1.0);
            }
            rows.push(row);
            b.push(-e.dotc(&c.expr.constant).re);
        }
    }

    let obj_sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut obj = Row::zero(nblocks, n_free);
    let one = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for t in &p.objective.terms {
        add_term(&mut obj, slots[t.var.index()], obj_sign * t.coef, &t.op, &one);
    }
    let c_blocks = obj
        .blocks
        .into_iter()
        .zip(&block_dims)
        .map(|(m, &n)| m.map(|m| symmetrize(&m)).unwrap_or_else(|| CMatrix::zeros(n, n)))
        .collect();

    let (rows, b, consistent) = eliminate_dependent(rows, b);
    let form = StandardForm { block_dims, n_free, rows, b, c_blocks, c_free: obj.free };
    Ok(Compiled { form, consistent, slots, obj_sign, obj_const: p.objective.constant[(0, 0)].re })
}

fn add_term(row: &mut Row, slot: Slot, coef: f64, op: &TermOp, e: &CMatrix) {
    match (slot, op) {
        (Slot::Block(blk), TermOp::Scalar(h)) => {
            let v = coef * e.dotc(h).re;
            row.add_block(blk, &CMatrix::from_element(1, 1, C64::new(v, 0.0)), 1.0);
        }
        (Slot::Free(f), TermOp::Scalar(h)) => row.free[f] += coef * e.dotc(h).re,
        (Slot::Block(blk), TermOp::Map(map)) => row.add_block(blk, &symmetrize(&map.adjoint(e)), coef),
        (Slot::FreeHerm { start, .. }, TermOp::Map(map)) => {
            for (i, x) in herm_coords(&map.adjoint(e)).into_iter().enumerate() {
                row.free[start + i] += coef * x;
            }
        }
        _ => unreachable!("term kinds are checked by validation"),
    }
}

/// Modified Gram-Schmidt with one reorthogonalization pass. Returns an
/// orthonormal row set spanning the original rows with the matching
/// right-hand side, and whether the dropped rows were consistent.
fn eliminate_dependent(rows: Vec<Row>, b: Vec<f64>) -> (Vec<Row>, Vec<f64>, bool) {
    let mut q: Vec<Row> = Vec::new();
    let mut qb: Vec<f64> = Vec::new();
    let mut consistent = true;
    let b_scale = 1.0 + b.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    for (mut row, mut rhs) in rows.into_iter().zip(b) {
        let norm0 = row.dot(&row).sqrt();
        for _ in 0..2 {
            for (qj, bj) in q.iter().zip(&qb) {
                let c = qj.dot(&row);
                if c != 0.0 {
                    row.axpy(-c, qj);
                    rhs -= c * bj;
                }
            }
        }
        let norm = row.dot(&row).sqrt();
        if norm <= DEPENDENT_ROW_TOL * norm0.max(f64::MIN_POSITIVE) || norm0 == 0.0 {
            if rhs.abs() > INCONSISTENT_RHS_TOL * b_scale {
                consistent = false;
            }
            continue;
        }
        row.scale(1.0 / norm);
        q.push(row);
        qb.push(rhs / norm);
    }
    (q, qb, consistent)
}

impl Compiled {
    pub fn extract(&self, p: &SdpProblem, r: IpmResult, opts: &SolveOptions) -> SdpSolution {
        let mut values = HashMap::new();
        let mut dense: Vec<CMatrix> = Vec::with_capacity(p.vars.len());
        for (i, ((_, kind), slot)) in p.vars.iter().zip(&self.slots).enumerate() {
            let (value, mat) = match (*slot, kind) {
                (Slot::Block(b), VarKind::Nonneg) => {
                    let x = r.x_blocks[b][(0, 0)].re;
                    (VarValue::Scalar(x), CMatrix::from_element(1, 1, C64::new(x, 0.0)))
                }
                (Slot::Block(b), _) => {
                    let m = symmetrize(&r.x_blocks[b]);
                    (VarValue::Matrix(HermitianMatrix::from_matrix_unchecked(m.clone())), m)
                }
                (Slot::Free(f), _) => {
                    let x = r.x_free[f];
                    (VarValue::Scalar(x), CMatrix::from_element(1, 1, C64::new(x, 0.0)))
                }
                (Slot::FreeHerm { start, n }, _) => {
                    let m = herm_from_coords(&r.x_free[start..start + n * n], n);
                    (VarValue::Matrix(HermitianMatrix::from_matrix_unchecked(m.clone())), m)
                }
            };
            values.insert(i, value);
            dense.push(mat);
        }

        let mut max_violation: f64 = 0.0;
        for c in &p.constraints {
            let v = p.evaluate(&c.expr, &dense);
            let scale = 1.0 + c.expr.constant.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
            let viol = match c.kind {
                ConstraintKind::Equal => v.iter().fold(0.0_f64, |a, z| a.max(z.norm())),
                ConstraintKind::Psd => (-eigenvalues_hermitian(&v)[0]).max(0.0),
            };
            max_violation = max_violation.max(viol / scale);
        }

        let mut status = r.status;
        if status == SolveStatus::Optimal && max_violation > 10.0 * opts.tol {
            status = SolveStatus::NumericalFailure;
        }
        SdpSolution {
            status,
            objective: self.obj_sign * r.pobj + self.obj_const,
            dual_objective: self.obj_sign * r.dobj + self.obj_const,
            residuals: Residuals { primal: r.residuals.primal, dual: r.residuals.dual, gap: r.residuals.gap },
            iterations: r.iterations,
            max_violation,
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{random, trace_product};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn basis_is_orthonormal() {
        for n in [1, 2, 3, 4] {
            for r in 0..n * n {
                let er = herm_basis(n, r);
                assert!(crate::qmat::hermitian_deviation(&er) < 1e-15);
                for s in 0..n * n {
                    let ip = trace_product(&er, &herm_basis(n, s));
                    let expected = if r == s { 1.0 } else { 0.0 };
                    assert!((ip - expected).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn coords_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [1, 2, 5] {
            let h = random::hermitian(&mut rng, n).into_matrix();
            let x = herm_coords(&h);
            for (r, &xr) in x.iter().enumerate() {
                assert!((xr - trace_product(&herm_basis(n, r), &h)).abs() < 1e-12);
            }
            let back = herm_from_coords(&x, n);
            assert!(back.iter().zip(h.iter()).all(|(a, b)| (a - b).norm() < 1e-12));
        }
    }

    #[test]
    fn dependent_rows_removed() {
        let mk = |v: [f64; 2]| Row { blocks: vec![], free: v.to_vec() };
        let rows = vec![mk([1.0, 0.0]), mk([2.0, 0.0]), mk([1.0, 1.0])];
        let (q, qb, ok) = eliminate_dependent(rows.clone(), vec![1.0, 2.0, 3.0]);
        assert!(ok);
        assert_eq!(q.len(), 2);
        assert!((qb[0] - 1.0).abs() < 1e-14 && (qb[1] - 2.0).abs() < 1e-14);
        let (_, _, ok) = eliminate_dependent(rows, vec![1.0, 2.5, 3.0]);
        assert!(!ok);
    }
}
