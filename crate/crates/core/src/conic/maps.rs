//! Linear maps between Hermitian matrix spaces. Each map provides its adjoint
//! with respect to `<A, B> = Re tr(A^† B)`.

use std::fmt::Debug;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::qmat::{split_table, CMatrix, SplitTable};

pub trait LinearMap: Send + Sync + Debug {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn apply(&self, x: &CMatrix) -> CMatrix;
    fn adjoint(&self, y: &CMatrix) -> CMatrix;
}

#[derive(Clone, Debug)]
pub struct Identity(pub usize);

impl Identity {
    pub fn arc(n: usize) -> Arc<dyn LinearMap> {
        Arc::new(Identity(n))
    }
}

impl LinearMap for Identity {
    fn in_dim(&self) -> usize {
        self.0
    }
    fn out_dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &CMatrix) -> CMatrix {
        x.clone()
    }
    fn adjoint(&self, y: &CMatrix) -> CMatrix {
        y.clone()
    }
}

/// `X -> [tr(H X)]`, a 1x1 output.
#[derive(Clone, Debug)]
pub struct TraceWith {
    h: CMatrix,
}

impl TraceWith {
    #[allow(clippy::new_ret_no_self)]
    pub fn new(h: CMatrix) -> Arc<dyn LinearMap> {
        Arc::new(TraceWith { h })
    }

    pub fn identity(n: usize) -> Arc<dyn LinearMap> {
        Self::new(CMatrix::identity(n, n))
    }
}

impl LinearMap for TraceWith {
    fn in_dim(&self) -> usize {
        self.h.nrows()
    }
    fn out_dim(&self) -> usize {
        1
    }
    fn apply(&self, x: &CMatrix) -> CMatrix {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.h.nrows() {
            for j in 0..self.h.ncols() {
                acc += self.h[(i, j)] * x[(j, i)];
            }
        }
        CMatrix::from_element(1, 1, acc)
    }
    fn adjoint(&self, y: &CMatrix) -> CMatrix {
        // tr(y^† tr(H X)) = tr((conj(y) H^†)^† X)
        self.h.adjoint() * y[(0, 0)]
    }
}

#[derive(Clone, Debug)]
pub struct PartialTraceMap {
    in_dim: usize,
    table: SplitTable,
}

impl PartialTraceMap {
    pub fn new(dims: &[usize], keep: &[usize]) -> Result<Self> {
        let table = split_table(dims, keep)?;
        Ok(Self { in_dim: dims.iter().product(), table })
    }

    pub fn arc(dims: &[usize], keep: &[usize]) -> Result<Arc<dyn LinearMap>> {
        Ok(Arc::new(Self::new(dims, keep)?))
    }
}

impl LinearMap for PartialTraceMap {
    fn in_dim(&self) -> usize {
        self.in_dim
    }
    fn out_dim(&self) -> usize {
        self.table.kept
    }
    fn apply(&self, x: &CMatrix) -> CMatrix {
        self.table.trace_out(x)
    }
    fn adjoint(&self, y: &CMatrix) -> CMatrix {
        self.table.embed(y, self.in_dim)
    }
}

/// `σ_{A B_1..B_k} -> (1/k) Σ_i Tr_{B_[k]\i} σ`, reported on `A B`.
///
/// On a permutation-invariant `σ` this is the marginal on `A B_1`; for any `σ`
/// it equals the marginal of the symmetrized extension.
#[derive(Clone, Debug)]
pub struct TwirledMarginal {
    in_dim: usize,
    out_dim: usize,
    tables: Vec<SplitTable>,
}

impl TwirledMarginal {
    pub fn new(d_a: usize, d_b: usize, k: usize) -> Result<Self> {
        if k == 0 || d_a == 0 || d_b == 0 {
            return Err(Error::InvalidParameter(format!("twirled marginal with d_a={d_a}, d_b={d_b}, k={k}")));
        }
        let mut dims = vec![d_a];
        dims.extend(std::iter::repeat_n(d_b, k));
        let tables = (1..=k).map(|i| split_table(&dims, &[0, i])).collect::<Result<Vec<_>>>()?;
        Ok(Self { in_dim: dims.iter().product(), out_dim: d_a * d_b, tables })
    }

    pub fn arc(d_a: usize, d_b: usize, k: usize) -> Result<Arc<dyn LinearMap>> {
        Ok(Arc::new(Self::new(d_a, d_b, k)?))
    }
}

impl LinearMap for TwirledMarginal {
    fn in_dim(&self) -> usize {
        self.in_dim
    }
    fn out_dim(&self) -> usize {
        self.out_dim
    }
    fn apply(&self, x: &CMatrix) -> CMatrix {
        let w = C64::new(1.0 / self.tables.len() as f64, 0.0);
        let mut out = CMatrix::zeros(self.out_dim, self.out_dim);
        for t in &self.tables {
            out += t.trace_out(x);
        }
        out * w
    }
    fn adjoint(&self, y: &CMatrix) -> CMatrix {
        let w = C64::new(1.0 / self.tables.len() as f64, 0.0);
        let mut out = CMatrix::zeros(self.in_dim, self.in_dim);
        for t in &self.tables {
            out += t.embed(y, self.in_dim);
        }
        out * w
    }
}

/// `X -> Σ_t c_t A_t X B_t`. Callers must supply term sets that map Hermitian
/// inputs to Hermitian outputs.
#[derive(Clone, Debug)]
pub struct Sandwich {
    in_dim: usize,
    out_dim: usize,
    terms: Vec<(C64, CMatrix, CMatrix)>,
}

impl Sandwich {
    pub fn new(in_dim: usize, out_dim: usize, terms: Vec<(C64, CMatrix, CMatrix)>) -> Result<Self> {
        for (_, a, b) in &terms {
            if a.shape() != (out_dim, in_dim) || b.shape() != (in_dim, out_dim) {
                return Err(Error::DimensionMismatch(format!(
                    "sandwich term shapes {:?}, {:?} for map {in_dim} -> {out_dim}",
                    a.shape(),
                    b.shape()
                )));
            }
        }
        Ok(Self { in_dim, out_dim, terms })
    }

    /// `X -> U X U^†`.
    pub fn conjugation(u: &CMatrix) -> Arc<dyn LinearMap> {
        Arc::new(Sandwich {
            in_dim: u.ncols(),
            out_dim: u.nrows(),
            terms: vec![(C64::new(1.0, 0.0), u.clone(), u.adjoint())],
        })
    }

    /// Places an `n x n` Hermitian `X` into block `(i, j)` of an
    /// `nblocks x nblocks` block matrix, together with `X` at `(j, i)`.
    pub fn block(nblocks: usize, i: usize, j: usize, n: usize) -> Arc<dyn LinearMap> {
        let big = nblocks * n;
        let inject = |slot: usize| {
            let mut m = CMatrix::zeros(big, n);
            for r in 0..n {
                m[(slot * n + r, r)] = C64::new(1.0, 0.0);
            }
            m
        };
        let one = C64::new(1.0, 0.0);
        let mut terms = vec![(one, inject(i), inject(j).adjoint())];
        if i != j {
            terms.push((one, inject(j), inject(i).adjoint()));
        }
        Arc::new(Sandwich { in_dim: n, out_dim: big, terms })
    }
}

impl LinearMap for Sandwich {
    fn in_dim(&self) -> usize {
        self.in_dim
    }
    fn out_dim(&self) -> usize {
        self.out_dim
    }
    fn apply(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.out_dim, self.out_dim);
        for (c, a, b) in &self.terms {
            out += (a * x * b) * *c;
        }
        out
    }
    fn adjoint(&self, y: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.in_dim, self.in_dim);
        for (c, a, b) in &self.terms {
            out += (a.adjoint() * y * b.adjoint()) * c.conj();
        }
        out
    }
}

/// `outer ∘ inner`.
#[derive(Clone, Debug)]
pub struct Composed {
    outer: Arc<dyn LinearMap>,
    inner: Arc<dyn LinearMap>,
}

impl Composed {
    #[allow(clippy::new_ret_no_self)]
    pub fn new(outer: Arc<dyn LinearMap>, inner: Arc<dyn LinearMap>) -> Result<Arc<dyn LinearMap>> {
        if outer.in_dim() != inner.out_dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose map into dimension {} with map from dimension {}",
                inner.out_dim(),
                outer.in_dim()
            )));
        }
        Ok(Arc::new(Composed { outer, inner }))
    }
}

impl LinearMap for Composed {
    fn in_dim(&self) -> usize {
        self.inner.in_dim()
    }
    fn out_dim(&self) -> usize {
        self.outer.out_dim()
    }
    fn apply(&self, x: &CMatrix) -> CMatrix {
        self.outer.apply(&self.inner.apply(x))
    }
    fn adjoint(&self, y: &CMatrix) -> CMatrix {
        self.inner.adjoint(&self.outer.adjoint(y))
    }
}
