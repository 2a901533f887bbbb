//! Divergences behind the key and capacity bounds, in bits.
//!
//! Quantum hypothesis testing, the `k`-unextendible programs for states and
//! channels, and exact Neyman-Pearson evaluation for classical pairs and
//! i.i.d. Bernoulli pairs.
//!
//! Extensions are handled through [`TwirledMarginal`]: maximizing over any
//! extension `σ_{A B_1..B_k}` and reading off the copy-averaged marginal is the
//! same as maximizing over permutation-invariant extensions and reading off
//! the first marginal.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::SymmetricEigen;
use statrs::function::gamma::ln_gamma;

use crate::conic::{
    self, Composed, Expr, LinearMap, PartialTraceMap, Residuals, Sandwich, SdpProblem, Sense, SolveOptions,
    SolveStatus, TraceWith, TwirledMarginal, VarKind,
};
use crate::error::{Error, Result};
use crate::qmat::{symmetrize, trace_product, CMatrix, ChoiOperator, DensityMatrix, C64};

/// Distributions must sum to one within this tolerance.
pub const DISTRIBUTION_TOL: f64 = 1e-12;
/// Eigenvalues below this fraction of the largest one are treated as zero
/// when taking supports.
pub const SUPPORT_TOL: f64 = 1e-9;
/// Negative SDP divergences down to this value are rounded to zero.
const NEGATIVE_SLACK: f64 = 1e-6;
const TIE_TOL: f64 = 1e-12;
pub const MAX_ELL: u32 = 8;

/// Number of extension copies, possibly unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtOrder {
    Finite(u64),
    Infinite,
}

impl ExtOrder {
    pub fn finite(k: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("k must be at least 2, got {k}")));
        }
        Ok(ExtOrder::Finite(k))
    }

    pub fn as_finite(&self) -> Option<u64> {
        match self {
            ExtOrder::Finite(k) => Some(*k),
            ExtOrder::Infinite => None,
        }
    }

    pub fn log2(&self) -> f64 {
        match self {
            ExtOrder::Finite(k) => (*k as f64).log2(),
            ExtOrder::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for ExtOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtOrder::Finite(k) => write!(f, "{k}"),
            ExtOrder::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for ExtOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") || s == "∞" {
            return Ok(ExtOrder::Infinite);
        }
        let k: u64 = s.parse().map_err(|_| Error::InvalidParameter(format!("cannot parse k from {s:?}")))?;
        ExtOrder::finite(k)
    }
}

/// Largest fidelity with `Φ^d` among `k`-extendible states: `1/d + 1/k - 1/(dk)`,
/// or `1/d` (separable states) when `k` is unbounded.
pub fn isotropic_extendible_fidelity(d: usize, k: ExtOrder) -> f64 {
    let d = d as f64;
    match k {
        ExtOrder::Finite(k) => {
            let k = k as f64;
            1.0 / d + 1.0 / k - 1.0 / (d * k)
        }
        ExtOrder::Infinite => 1.0 / d,
    }
}

/// The pair `{f, 1-f}^{×n}` versus `{g, 1-g}^{×n}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinaryDistributionPair {
    f: f64,
    g: f64,
    n: u64,
}

impl BinaryDistributionPair {
    pub fn new(f: f64, g: f64, n: u64) -> Result<Self> {
        for (name, x) in [("f", f), ("g", g)] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidParameter(format!("{name} = {x} is not a probability")));
            }
        }
        if n == 0 {
            return Err(Error::InvalidParameter("copy count must be at least 1".into()));
        }
        Ok(Self { f, g, n })
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn n(&self) -> u64 {
        self.n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Sdp,
    NeymanPearson,
    Formula,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Sdp => "sdp",
            Method::NeymanPearson => "neyman-pearson",
            Method::Formula => "formula",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivergenceValue {
    /// Value in bits; `+inf` exactly when `infinite` is set.
    pub bits: f64,
    pub infinite: bool,
    pub method: Method,
    /// Solver residuals for SDP-backed values.
    pub residuals: Option<Residuals>,
}

impl DivergenceValue {
    fn exact(bits: f64, method: Method) -> Self {
        if bits.is_infinite() {
            Self { bits: f64::INFINITY, infinite: true, method, residuals: None }
        } else {
            Self { bits, infinite: false, method, residuals: None }
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("eps = {eps} is outside [0, 1)")));
    }
    Ok(())
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k must be at least 2, got {k}")));
    }
    Ok(())
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidParameter("empty distribution".into()));
    }
    if let Some(x) = p.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidParameter(format!("invalid probability {x}")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(Error::InvalidParameter(format!("probabilities sum to {s}")));
    }
    Ok(())
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `x ln y` with `0 ln 0 = 0`.
fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Optimal randomized test on outcome classes given as `(ln p, ln q)`.
fn neyman_pearson(classes: impl IntoIterator<Item = (f64, f64)>, eps: f64) -> DivergenceValue {
    let mut cls: Vec<(f64, f64, f64)> = classes
        .into_iter()
        .filter(|(lp, _)| *lp > f64::NEG_INFINITY)
        .map(|(lp, lq)| {
            let key = if lq == f64::NEG_INFINITY { f64::INFINITY } else { lp - lq };
            (key, lp, lq)
        })
        .collect();
    cls.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut merged: Vec<(f64, f64, f64)> = Vec::with_capacity(cls.len());
    for c in cls {
        match merged.last_mut() {
            Some(last) if last.0 == c.0 || (last.0 - c.0).abs() <= TIE_TOL => {
                last.1 = log_add_exp(last.1, c.1);
                last.2 = log_add_exp(last.2, c.2);
            }
            _ => merged.push(c),
        }
    }

    let target = 1.0 - eps;
    let mut acc_p = 0.0;
    let mut ln_acc_q = f64::NEG_INFINITY;
    for (_, lp, lq) in merged {
        let p = lp.exp();
        if eps > 0.0 && acc_p + p >= target {
            let frac = ((target - acc_p) / p).clamp(0.0, 1.0);
            if frac > 0.0 {
                ln_acc_q = log_add_exp(ln_acc_q, lq + frac.ln());
            }
            break;
        }
        acc_p += p;
        ln_acc_q = log_add_exp(ln_acc_q, lq);
    }
    DivergenceValue::exact(-ln_acc_q / LN_2, Method::NeymanPearson)
}

/// Hypothesis-testing divergence of two distributions on the same alphabet.
pub fn dh_classical(p: &[f64], q: &[f64], eps: f64) -> Result<DivergenceValue> {
    check_eps(eps)?;
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!("distributions of length {} and {}", p.len(), q.len())));
    }
    check_distribution(p)?;
    check_distribution(q)?;
    Ok(neyman_pearson(p.iter().zip(q).map(|(a, b)| (a.ln(), b.ln())), eps))
}

/// Hypothesis-testing divergence of `n` i.i.d. Bernoulli copies, grouped
/// by Hamming weight.
pub fn dh_bernoulli_n(pair: &BinaryDistributionPair, eps: f64) -> Result<DivergenceValue> {
    check_eps(eps)?;
    let (f, g, n) = (pair.f, pair.g, pair.n);
    let nf = n as f64;
    let ln_n_fact = ln_gamma(nf + 1.0);
    let classes = (0..=n).map(|j| {
        let jf = j as f64;
        let ln_c = ln_n_fact - ln_gamma(jf + 1.0) - ln_gamma(nf - jf + 1.0);
        let lp = ln_c + xlny(jf, f) + xlny(nf - jf, 1.0 - f);
        let lq = ln_c + xlny(jf, g) + xlny(nf - jf, 1.0 - g);
        (lp, lq)
    });
    Ok(neyman_pearson(classes, eps))
}

/// Bernoulli upper bound on `E^ε_k` of `n` copies of a `d`-dimensional isotropic state.
pub fn e_hyp_isotropic_n(fidelity: f64, d: usize, k: ExtOrder, n: u64, eps: f64) -> Result<DivergenceValue> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("d must be at least 2, got {d}")));
    }
    let pair = BinaryDistributionPair::new(fidelity, isotropic_extendible_fidelity(d, k), n)?;
    dh_bernoulli_n(&pair, eps)
}

/// Classical Rényi divergence of order `alpha > 1` in bits; `alpha = inf` gives
/// the max-divergence.
pub fn classical_renyi(p: &[f64], q: &[f64], alpha: f64) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!("distributions of length {} and {}", p.len(), q.len())));
    }
    if alpha.is_nan() || alpha <= 1.0 {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must exceed 1")));
    }
    check_distribution(p)?;
    check_distribution(q)?;
    let support = p.iter().zip(q).filter(|(a, _)| **a > 0.0);
    if alpha.is_infinite() {
        let m = support
            .map(|(a, b)| if *b == 0.0 { f64::INFINITY } else { (a / b).log2() })
            .fold(f64::NEG_INFINITY, f64::max);
        return Ok(m);
    }
    let mut acc = f64::NEG_INFINITY;
    for (a, b) in support {
        if *b == 0.0 {
            return Ok(f64::INFINITY);
        }
        acc = log_add_exp(acc, alpha * a.ln() + (1.0 - alpha) * b.ln());
    }
    Ok(acc / ((alpha - 1.0) * LN_2))
}

fn neg_log2_optimum(objective: f64, residuals: Residuals) -> Result<DivergenceValue> {
    if objective.is_nan() || objective <= 0.0 {
        return Err(Error::Solver { status: SolveStatus::NumericalFailure });
    }
    Ok(sdp_value(-objective.log2(), residuals))
}

fn sdp_value(bits: f64, residuals: Residuals) -> DivergenceValue {
    let bits = if bits < 0.0 && bits > -NEGATIVE_SLACK { 0.0 } else { bits };
    DivergenceValue { bits, infinite: false, method: Method::Sdp, residuals: Some(residuals) }
}

/// Projector onto eigenvectors with eigenvalue above the support tolerance.
fn support_basis(m: &CMatrix) -> (CMatrix, Vec<f64>) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let top = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i] > SUPPORT_TOL * top).collect();
    let mut v = CMatrix::zeros(m.nrows(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        v.set_column(c, &eig.eigenvectors.column(i));
    }
    (v, keep.iter().map(|&i| eig.eigenvalues[i]).collect())
}

/// Hypothesis-testing relative entropy `D^ε_H(ρ‖σ)`.
///
/// At `ε = 0` the optimal test is the support projector of `ρ`, so the value
/// is `-log2 tr[Π_ρ σ]` without a solve.
pub fn dh_quantum(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    eps: f64,
    opts: &SolveOptions,
) -> Result<DivergenceValue> {
    check_eps(eps)?;
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!("states of dimension {} and {}", rho.dim(), sigma.dim())));
    }
    let n = rho.dim();
    if eps == 0.0 {
        let (v, _) = support_basis(rho.as_matrix());
        let overlap = trace_product(&(&v * v.adjoint()), sigma.as_matrix());
        let bits = if overlap > 0.0 { -overlap.log2() } else { f64::INFINITY };
        return Ok(DivergenceValue::exact(bits.max(0.0), Method::Formula));
    }
    let mut p = SdpProblem::new();
    let lam = p.add_var("lambda", VarKind::Psd(n));
    p.add_psd("lambda<=I", Expr::zeros(n).plus_var(lam, -1.0).plus_const_scalar(1.0));
    p.add_psd(
        "type-I",
        Expr::zeros(1).plus_map(lam, 1.0, TraceWith::new(rho.as_matrix().clone())).plus_const_scalar(-(1.0 - eps)),
    );
    p.set_objective(Sense::Minimize, Expr::zeros(1).plus_map(lam, 1.0, TraceWith::new(sigma.as_matrix().clone())));
    let sol = conic::solve_optimal(&p, opts)?;
    neg_log2_optimum(sol.objective, sol.residuals)
}

fn split_dims(dim: usize, split: (usize, usize)) -> Result<()> {
    if split.0 == 0 || split.1 == 0 || split.0 * split.1 != dim {
        return Err(Error::DimensionMismatch(format!("split {split:?} does not match dimension {dim}")));
    }
    Ok(())
}

fn neg(m: &CMatrix) -> CMatrix {
    m * C64::new(-1.0, 0.0)
}

fn trace_of(n: usize) -> Arc<dyn LinearMap> {
    TraceWith::identity(n)
}

/// `k`-unextendible hypothesis-testing divergence `E^ε_k(ρ_{AB})`.
pub fn e_hyp_state(
    rho: &DensityMatrix,
    split: (usize, usize),
    k: usize,
    eps: f64,
    opts: &SolveOptions,
) -> Result<DivergenceValue> {
    check_eps(eps)?;
    check_k(k)?;
    split_dims(rho.dim(), split)?;
    let (da, db) = split;
    let n = da * db;
    let total = conic::extension_dim(da, db, k)?;

    let mut p = SdpProblem::new();
    let mu = p.add_var("mu", VarKind::Nonneg);
    let z = p.add_var("z", VarKind::Psd(n));
    let sigma = p.add_var("sigma", VarKind::Psd(total));
    p.add_eq("trace", Expr::zeros(1).plus_map(sigma, 1.0, trace_of(total)).plus_const_scalar(-1.0));
    p.add_psd(
        "dominance",
        Expr::zeros(n)
            .plus_map(sigma, 1.0, TwirledMarginal::arc(da, db, k)?)
            .plus_var(z, 1.0)
            .plus_scaled(mu, neg(rho.as_matrix())),
    );
    p.set_objective(Sense::Maximize, Expr::zeros(1).plus_scalar(mu, 1.0 - eps).plus_map(z, -1.0, trace_of(n)));
    let sol = conic::solve_optimal(&p, opts)?;
    neg_log2_optimum(sol.objective, sol.residuals)
}

/// `k`-unextendible max-divergence `E^max_k(ρ_{AB})`.
pub fn e_max_state(
    rho: &DensityMatrix,
    split: (usize, usize),
    k: usize,
    opts: &SolveOptions,
) -> Result<DivergenceValue> {
    check_k(k)?;
    split_dims(rho.dim(), split)?;
    let (da, db) = split;
    let n = da * db;
    let total = conic::extension_dim(da, db, k)?;

    let mut p = SdpProblem::new();
    let lam = p.add_var("lambda", VarKind::Nonneg);
    let sigma = p.add_var("sigma", VarKind::Psd(total));
    p.add_eq("trace", Expr::zeros(1).plus_map(sigma, 1.0, trace_of(total)).plus_const_scalar(-1.0));
    p.add_psd(
        "dominance",
        Expr::zeros(n).plus_map(sigma, 1.0, TwirledMarginal::arc(da, db, k)?).plus_scaled(lam, neg(rho.as_matrix())),
    );
    p.set_objective(Sense::Maximize, Expr::zeros(1).plus_scalar(lam, 1.0));
    let sol = conic::solve_optimal(&p, opts)?;
    neg_log2_optimum(sol.objective, sol.residuals)
}

/// Extension `Γ^P` of a channel: PSD, with `Tr_{B_[k]} Γ^P = I_A`.
fn channel_extension(p: &mut SdpProblem, da: usize, db: usize, k: usize) -> Result<(conic::Var, Arc<dyn LinearMap>)> {
    let total = conic::extension_dim(da, db, k)?;
    let ext = p.add_var("gamma_p", VarKind::Psd(total));
    let mut dims = vec![da];
    dims.extend(std::iter::repeat_n(db, k));
    p.add_eq(
        "trace-preserving",
        Expr::zeros(da).plus_map(ext, 1.0, PartialTraceMap::arc(&dims, &[0])?).plus_const_scalar(-1.0),
    );
    Ok((ext, TwirledMarginal::arc(da, db, k)?))
}

/// `k`-unextendible hypothesis-testing divergence of a channel.
pub fn e_hyp_channel(gamma: &ChoiOperator, k: usize, eps: f64, opts: &SolveOptions) -> Result<DivergenceValue> {
    check_eps(eps)?;
    check_k(k)?;
    let (da, db) = (gamma.dim_in(), gamma.dim_out());
    let n = da * db;

    let mut p = SdpProblem::new();
    let lam = p.add_var("lambda", VarKind::Nonneg);
    let mu = p.add_var("mu", VarKind::Nonneg);
    let y = p.add_var("y", VarKind::Psd(n));
    let (ext, marginal) = channel_extension(&mut p, da, db, k)?;
    p.add_psd(
        "dominance",
        Expr::zeros(n).plus_map(ext, 1.0, marginal).plus_var(y, 1.0).plus_scaled(mu, neg(gamma.as_matrix())),
    );
    p.add_psd(
        "tr_b y <= lambda",
        Expr::zeros(da).plus_scaled(lam, CMatrix::identity(da, da)).plus_map(
            y,
            -1.0,
            PartialTraceMap::arc(&[da, db], &[0])?,
        ),
    );
    p.set_objective(Sense::Maximize, Expr::zeros(1).plus_scalar(mu, 1.0 - eps).plus_scalar(lam, -1.0));
    let sol = conic::solve_optimal(&p, opts)?;
    neg_log2_optimum(sol.objective, sol.residuals)
}

/// `k`-unextendible max-divergence of a channel, computed on Choi operators.
pub fn e_max_channel(gamma: &ChoiOperator, k: usize, opts: &SolveOptions) -> Result<DivergenceValue> {
    check_k(k)?;
    let (da, db) = (gamma.dim_in(), gamma.dim_out());
    let n = da * db;

    let mut p = SdpProblem::new();
    let lam = p.add_var("lambda", VarKind::Nonneg);
    let (ext, marginal) = channel_extension(&mut p, da, db, k)?;
    p.add_psd("dominance", Expr::zeros(n).plus_map(ext, 1.0, marginal).plus_scaled(lam, neg(gamma.as_matrix())));
    p.set_objective(Sense::Maximize, Expr::zeros(1).plus_scalar(lam, 1.0));
    let sol = conic::solve_optimal(&p, opts)?;
    neg_log2_optimum(sol.objective, sol.residuals)
}

/// `big x n` matrix embedding an `n`-dimensional space at row offset `offset`.
fn injector(big: usize, offset: usize, n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(big, n);
    for r in 0..n {
        m[(offset + r, r)] = C64::new(1.0, 0.0);
    }
    m
}

/// Places an `n x n` input as the diagonal block at `offset` of a `big x big` matrix.
fn diagonal_block(big: usize, offset: usize, n: usize) -> Result<Arc<dyn LinearMap>> {
    let e = injector(big, offset, n);
    let et = e.adjoint();
    Ok(Arc::new(Sandwich::new(n, big, vec![(C64::new(1.0, 0.0), e, et)])?))
}

fn with_block(mut m: CMatrix, row: usize, col: usize, b: &CMatrix) -> CMatrix {
    m.view_mut((row, col), b.shape()).copy_from(b);
    m
}

/// `k`-unextendible geometric Rényi divergence of a channel at `α = 1 + 2^{-ℓ}`.
///
/// The chain variables `N^1..N^ℓ` are forced onto the support of `Γ^N` by the
/// block constraints, so they are parameterized there directly; this keeps the
/// program strictly feasible when `Γ^N` is rank deficient.
pub fn e_geo_channel(gamma: &ChoiOperator, k: usize, ell: u32, opts: &SolveOptions) -> Result<DivergenceValue> {
    check_k(k)?;
    if ell == 0 || ell > MAX_ELL {
        return Err(Error::InvalidParameter(format!("ell = {ell} must be in 1..={MAX_ELL}")));
    }
    let (da, db) = (gamma.dim_in(), gamma.dim_out());
    let n = da * db;
    let (v, spectrum) = support_basis(gamma.as_matrix());
    let r = spectrum.len();
    let lambda =
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(r, spectrum.iter().map(|&x| C64::new(x, 0.0))));

    let mut p = SdpProblem::new();
    let y = p.add_var("y", VarKind::Free);
    let m = p.add_var("m", VarKind::HermFree(n));
    let chain: Vec<conic::Var> = (1..=ell).map(|i| p.add_var(&format!("n{i}"), VarKind::HermFree(r))).collect();
    let (ext, marginal) = channel_extension(&mut p, da, db, k)?;

    p.add_psd(
        "tr_b m <= y",
        Expr::zeros(da).plus_scaled(y, CMatrix::identity(da, da)).plus_map(
            m,
            -1.0,
            PartialTraceMap::arc(&[da, db], &[0])?,
        ),
    );

    // [[M, Γ V], [V† Γ, n_ℓ]] ⪰ 0
    let big = n + r;
    let gv = gamma.as_matrix() * &v;
    let c = with_block(with_block(CMatrix::zeros(big, big), 0, n, &gv), n, 0, &gv.adjoint());
    p.add_psd(
        "top",
        Expr::zeros(big)
            .plus_map(m, 1.0, diagonal_block(big, 0, n)?)
            .plus_map(chain[ell as usize - 1], 1.0, diagonal_block(big, n, r)?)
            .plus_const(&c, 1.0),
    );

    // [[Λ, n_1 V†], [V n_1, N^0]] ⪰ 0 with N^0 the extension marginal
    let big = r + n;
    let e_top = injector(big, 0, r);
    let e_bot = injector(big, r, n);
    let one = C64::new(1.0, 0.0);
    let off = Sandwich::new(
        r,
        big,
        vec![(one, e_top.clone(), v.adjoint() * e_bot.adjoint()), (one, &e_bot * &v, e_top.adjoint())],
    )?;
    p.add_psd(
        "chain1",
        Expr::zeros(big)
            .plus_map(chain[0], 1.0, Arc::new(off))
            .plus_map(ext, 1.0, Composed::new(diagonal_block(big, r, n)?, marginal)?)
            .plus_const(&with_block(CMatrix::zeros(big, big), 0, 0, &lambda), 1.0),
    );

    // [[Λ, n_i], [n_i, n_{i-1}]] ⪰ 0
    for i in 1..ell as usize {
        p.add_psd(
            &format!("chain{}", i + 1),
            Expr::zeros(2 * r)
                .plus_map(chain[i], 1.0, Sandwich::block(2, 0, 1, r))
                .plus_map(chain[i - 1], 1.0, Sandwich::block(2, 1, 1, r))
                .plus_const(&with_block(CMatrix::zeros(2 * r, 2 * r), 0, 0, &lambda), 1.0),
        );
    }

    p.set_objective(Sense::Minimize, Expr::zeros(1).plus_scalar(y, 1.0));
    let sol = conic::solve_optimal(&p, opts)?;
    if sol.objective.is_nan() || sol.objective <= 0.0 {
        return Err(Error::Solver { status: SolveStatus::NumericalFailure });
    }
    Ok(sdp_value(2f64.powi(ell as i32) * sol.objective.log2(), sol.residuals))
}

/// `α = 1 + 2^{-ℓ}`.
pub fn geo_alpha(ell: u32) -> f64 {
    1.0 + 2f64.powi(-(ell as i32))
}
