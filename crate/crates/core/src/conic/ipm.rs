//! Infeasible-start primal-dual interior-point method on the standard form of
//! [`super::compile`], using the HKM search direction with a Mehrotra
//! predictor-corrector step. Free variables enter through the saddle system
//! `[[M, F], [F^T, 0]]` where `M_ij = Re tr(A_i X A_j S^{-1})`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::compile::StandardForm;
use super::{Residuals, SolveOptions, SolveStatus};
use crate::qmat::{symmetrize, CMatrix};

const STEP_FRACTION: f64 = 0.98;
const BLOWUP: f64 = 1e10;
const STALL_STEP: f64 = 1e-10;

pub(crate) struct IpmResult {
    pub status: SolveStatus,
    pub x_blocks: Vec<CMatrix>,
    pub x_free: Vec<f64>,
    pub pobj: f64,
    pub dobj: f64,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl IpmResult {
    pub fn infeasible(form: &StandardForm) -> Self {
        Self {
            status: SolveStatus::Infeasible,
            x_blocks: form.block_dims.iter().map(|&n| CMatrix::zeros(n, n)).collect(),
            x_free: vec![0.0; form.n_free],
            pobj: f64::NAN,
            dobj: f64::NAN,
            residuals: Residuals { primal: f64::INFINITY, dual: f64::INFINITY, gap: f64::INFINITY },
            iterations: 0,
        }
    }
}

struct Direction {
    dx: Vec<CMatrix>,
    dxf: Vec<f64>,
    dy: Vec<f64>,
    ds: Vec<CMatrix>,
}

struct Problem<'a> {
    form: &'a StandardForm,
    /// Per block, the rows with a nonzero coefficient on it.
    touching: Vec<Vec<(usize, &'a CMatrix)>>,
}

impl<'a> Problem<'a> {
    fn new(form: &'a StandardForm) -> Self {
        let mut touching = vec![Vec::new(); form.block_dims.len()];
        for (i, row) in form.rows.iter().enumerate() {
            for (b, a) in row.blocks.iter().enumerate() {
                if let Some(a) = a {
                    touching[b].push((i, a));
                }
            }
        }
        Self { form, touching }
    }

    fn m(&self) -> usize {
        self.form.rows.len()
    }

    fn a_op(&self, x: &[CMatrix], xf: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> =
            self.form.rows.iter().map(|r| r.free.iter().zip(xf).map(|(a, b)| a * b).sum()).collect();
        for (b, rows) in self.touching.iter().enumerate() {
            for &(i, a) in rows {
                out[i] += a.dotc(&x[b]).re;
            }
        }
        out
    }

    fn a_adj_blocks(&self, y: &[f64]) -> Vec<CMatrix> {
        self.form
            .block_dims
            .iter()
            .enumerate()
            .map(|(b, &n)| {
                let mut acc = CMatrix::zeros(n, n);
                for &(i, a) in &self.touching[b] {
                    if y[i] != 0.0 {
                        acc += a * C64::new(y[i], 0.0);
                    }
                }
                acc
            })
            .collect()
    }

    fn a_adj_free(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.form.n_free];
        for (row, &yi) in self.form.rows.iter().zip(y) {
            for (o, f) in out.iter_mut().zip(&row.free) {
                *o += yi * f;
            }
        }
        out
    }
}

fn inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.dotc(b).re
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest `t` with `x + t dx ⪰ 0`, or infinity.
fn max_step(chol: &Cholesky<C64, Dyn>, dx: &CMatrix) -> Option<f64> {
    let l = chol.l();
    let w = l.solve_lower_triangular(dx)?;
    let w = l.solve_lower_triangular(&w.adjoint())?;
    let ev = SymmetricEigen::new(symmetrize(&w)).eigenvalues;
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    Some(if min < 0.0 { -1.0 / min } else { f64::INFINITY })
}

pub(crate) fn solve(form: &StandardForm, opts: &SolveOptions) -> IpmResult {
    let p = Problem::new(form);
    let m = p.m();
    let nf = form.n_free;
    let nb = form.block_dims.len();
    let n_total: usize = form.block_dims.iter().sum();

    let b_norm = norm2(&form.b);
    let c_norm = (form.c_blocks.iter().map(|c| c.norm_squared()).sum::<f64>()
        + form.c_free.iter().map(|x| x * x).sum::<f64>())
    .sqrt();

    let mut x: Vec<CMatrix> = Vec::with_capacity(nb);
    let mut s: Vec<CMatrix> = Vec::with_capacity(nb);
    for (blk, &n) in form.block_dims.iter().enumerate() {
        let rn = (n as f64).sqrt();
        let mut xi: f64 = 10.0_f64.max(rn);
        let mut eta: f64 = 10.0_f64.max(rn).max(form.c_blocks[blk].norm());
        for &(i, a) in &p.touching[blk] {
            let an = a.norm();
            xi = xi.max(rn * (1.0 + form.b[i].abs()) / (1.0 + an));
            eta = eta.max(an);
        }
        x.push(CMatrix::identity(n, n) * C64::new(xi, 0.0));
        s.push(CMatrix::identity(n, n) * C64::new(eta, 0.0));
    }
    let mut xf = vec![0.0; nf];
    let mut y = vec![0.0; m];

    let mut result = IpmResult {
        status: SolveStatus::NumericalFailure,
        x_blocks: x.clone(),
        x_free: xf.clone(),
        pobj: f64::NAN,
        dobj: f64::NAN,
        residuals: Residuals::default(),
        iterations: 0,
    };
    let mut stalls = 0;

    for iter in 0..=opts.max_iter {
        let ax = p.a_op(&x, &xf);
        let rp: Vec<f64> = form.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = p.a_adj_blocks(&y);
        let rd: Vec<CMatrix> = (0..nb).map(|b| &form.c_blocks[b] - &aty[b] - &s[b]).collect();
        let atyf = p.a_adj_free(&y);
        let rf: Vec<f64> = form.c_free.iter().zip(&atyf).map(|(c, a)| c - a).collect();

        let pobj: f64 = (0..nb).map(|b| inner(&form.c_blocks[b], &x[b])).sum::<f64>()
            + form.c_free.iter().zip(&xf).map(|(c, v)| c * v).sum::<f64>();
        let dobj: f64 = form.b.iter().zip(&y).map(|(b, v)| b * v).sum();
        let xs: f64 = (0..nb).map(|b| inner(&x[b], &s[b])).sum();
        let mu = if n_total > 0 { xs / n_total as f64 } else { 0.0 };

        let pinf = norm2(&rp) / (1.0 + b_norm);
        let dinf = (rd.iter().map(|r| r.norm_squared()).sum::<f64>() + rf.iter().map(|v| v * v).sum::<f64>()).sqrt()
            / (1.0 + c_norm);
        let denom = 1.0 + pobj.abs() + dobj.abs();
        let gap = ((pobj - dobj).abs()).max(xs.abs()) / denom;

        result.x_blocks.clone_from(&x);
        result.x_free.clone_from(&xf);
        result.pobj = pobj;
        result.dobj = dobj;
        result.residuals = Residuals { primal: pinf, dual: dinf, gap };
        result.iterations = iter;

        if pinf <= opts.tol && dinf <= opts.tol && gap <= opts.tol {
            result.status = SolveStatus::Optimal;
            return result;
        }
        if iter == opts.max_iter {
            break;
        }
        let size = x.iter().map(|v| v.norm()).fold(0.0, f64::max).max(norm2(&xf)).max(norm2(&y));
        if iter > 3 && size > BLOWUP * (1.0 + b_norm + c_norm) {
            result.status = SolveStatus::Infeasible;
            return result;
        }

        let Some(dir_ctx) = Factored::new(&p, &x, &s) else {
            return result;
        };

        let rc_aff: Vec<CMatrix> = (0..nb).map(|b| -(&x[b] * &s[b])).collect();
        let Some(aff) = dir_ctx.direction(&p, &x, &rc_aff, &rp, &rd, &rf) else {
            return result;
        };
        let Some((ap_aff, ad_aff)) = dir_ctx.step_lengths(&aff) else {
            return result;
        };
        let ap_aff = ap_aff.min(1.0);
        let ad_aff = ad_aff.min(1.0);
        let mut xs_aff = 0.0;
        for b in 0..nb {
            let xa = &x[b] + &aff.dx[b] * C64::new(ap_aff, 0.0);
            let sa = &s[b] + &aff.ds[b] * C64::new(ad_aff, 0.0);
            xs_aff += inner(&xa, &sa);
        }
        let sigma = if mu > 0.0 { ((xs_aff / n_total as f64) / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };

        let rc: Vec<CMatrix> = (0..nb)
            .map(|b| {
                let n = form.block_dims[b];
                CMatrix::identity(n, n) * C64::new(sigma * mu, 0.0) - &x[b] * &s[b] - &aff.dx[b] * &aff.ds[b]
            })
            .collect();
        let Some(dir) = dir_ctx.direction(&p, &x, &rc, &rp, &rd, &rf) else {
            return result;
        };
        let Some((ap, ad)) = dir_ctx.step_lengths(&dir) else {
            return result;
        };
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);

        if ap < STALL_STEP && ad < STALL_STEP {
            stalls += 1;
            if stalls >= 3 {
                return result;
            }
        } else {
            stalls = 0;
        }

        for b in 0..nb {
            x[b] = symmetrize(&(&x[b] + &dir.dx[b] * C64::new(ap, 0.0)));
            s[b] = symmetrize(&(&s[b] + &dir.ds[b] * C64::new(ad, 0.0)));
        }
        for (v, d) in xf.iter_mut().zip(&dir.dxf) {
            *v += ap * d;
        }
        for (v, d) in y.iter_mut().zip(&dir.dy) {
            *v += ad * d;
        }
    }
    result
}

/// Per-iteration factorizations shared by the predictor and corrector.
struct Factored {
    chol_x: Vec<Cholesky<C64, Dyn>>,
    chol_s: Vec<Cholesky<C64, Dyn>>,
    s_inv: Vec<CMatrix>,
    lu: nalgebra::LU<f64, Dyn, Dyn>,
    kkt: DMatrix<f64>,
    m: usize,
}

impl Factored {
    fn new(p: &Problem, x: &[CMatrix], s: &[CMatrix]) -> Option<Self> {
        let m = p.m();
        let nf = p.form.n_free;
        let mut chol_x = Vec::with_capacity(x.len());
        let mut chol_s = Vec::with_capacity(s.len());
        let mut s_inv = Vec::with_capacity(s.len());
        for (xb, sb) in x.iter().zip(s) {
            chol_x.push(Cholesky::new(xb.clone())?);
            let cs = Cholesky::new(sb.clone())?;
            s_inv.push(symmetrize(&cs.inverse()));
            chol_s.push(cs);
        }
        let mut kkt = DMatrix::<f64>::zeros(m + nf, m + nf);
        for (b, rows) in p.touching.iter().enumerate() {
            for &(i, ai) in rows {
                let g = &x[b] * ai * &s_inv[b];
                for &(j, aj) in rows {
                    if j <= i {
                        kkt[(j, i)] += aj.dotc(&g).re;
                    }
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                kkt[(i, j)] = kkt[(j, i)];
            }
        }
        for (i, row) in p.form.rows.iter().enumerate() {
            for (j, &f) in row.free.iter().enumerate() {
                kkt[(i, m + j)] = f;
                kkt[(m + j, i)] = f;
            }
        }
        let lu = kkt.clone().lu();
        Some(Self { chol_x, chol_s, s_inv, lu, kkt, m })
    }

    fn direction(
        &self,
        p: &Problem,
        x: &[CMatrix],
        rc: &[CMatrix],
        rp: &[f64],
        rd: &[CMatrix],
        rf: &[f64],
    ) -> Option<Direction> {
        let nb = x.len();
        let m = self.m;
        let t: Vec<CMatrix> = (0..nb).map(|b| (&rc[b] - &x[b] * &rd[b]) * &self.s_inv[b]).collect();
        let mut h = rp.to_vec();
        for (b, rows) in p.touching.iter().enumerate() {
            for &(i, a) in rows {
                h[i] -= a.dotc(&t[b]).re;
            }
        }
        let rhs = DVector::from_iterator(h.len() + rf.len(), h.into_iter().chain(rf.iter().copied()));
        let mut sol = self.lu.solve(&rhs)?;
        let resid = &rhs - &self.kkt * &sol;
        if let Some(corr) = self.lu.solve(&resid) {
            sol += corr;
        }
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let dy: Vec<f64> = sol.rows(0, m).iter().copied().collect();
        let dxf: Vec<f64> = sol.rows(m, sol.len() - m).iter().copied().collect();
        let aty = p.a_adj_blocks(&dy);
        let ds: Vec<CMatrix> = (0..nb).map(|b| &rd[b] - &aty[b]).collect();
        let dx: Vec<CMatrix> = (0..nb).map(|b| symmetrize(&((&rc[b] - &x[b] * &ds[b]) * &self.s_inv[b]))).collect();
        Some(Direction { dx, dxf, dy, ds })
    }

    fn step_lengths(&self, d: &Direction) -> Option<(f64, f64)> {
        let mut ap = f64::INFINITY;
        let mut ad = f64::INFINITY;
        for b in 0..d.dx.len() {
            ap = ap.min(max_step(&self.chol_x[b], &d.dx[b])?);
            ad = ad.min(max_step(&self.chol_s[b], &d.ds[b])?);
        }
        Some((ap, ad))
    }
}
