//! Dense complex matrices and the quantum-information constructors shared by
//! the rest of the crate.
//!
//! Index convention: a multi-index `(x_1, ..., x_m)` over subsystems with
//! dimensions `(d_1, ..., d_m)` maps to `sum_j x_j * prod_{l>j} d_l`, i.e. the
//! last listed subsystem varies fastest. This matches the Kronecker product,
//! so `tensor(a, b)` places `a` on the first subsystem.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const CHOI_TOL: f64 = 1e-9;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Largest absolute entry of `m - m^†`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `(m + m^†) / 2`.
pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Real trace of a complex matrix.
pub fn trace_re(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// `Re tr(a b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..a.ncols() {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Ascending eigenvalues of a Hermitian matrix (symmetrized first).
pub fn eigenvalues_hermitian(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Apply `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let eig = SymmetricEigen::new(symmetrize(m));
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let w = C64::new(f(lambda), 0.0);
        for i in 0..n {
            let vi = v[i] * w;
            for j in 0..n {
                out[(i, j)] += vi * v[j].conj();
            }
        }
    }
    out
}

/// Hermitian matrix; Hermiticity is checked at construction and the stored
/// entries are exactly Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    entries: CMatrix,
}

impl HermitianMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, expected square",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let dev = hermitian_deviation(&entries);
        let scale = entries.iter().fold(1.0_f64, |acc, z| acc.max(z.norm()));
        if dev > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { entries: symmetrize(&entries) })
    }

    /// Wraps a matrix known to be Hermitian up to roundoff, symmetrizing it.
    pub(crate) fn from_matrix_unchecked(entries: CMatrix) -> Self {
        Self { entries: symmetrize(&entries) }
    }

    pub fn identity(n: usize) -> Self {
        Self { entries: CMatrix::identity(n, n) }
    }

    pub fn zeros(n: usize) -> Self {
        Self { entries: CMatrix::zeros(n, n) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        Self { entries: m }
    }

    /// `|v><v|` for a (not necessarily normalized) vector.
    pub fn projector(v: &[C64]) -> Self {
        let n = v.len();
        let m = CMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj());
        Self { entries: m }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.entries)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigenvalues_hermitian(&self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { entries: &self.entries * C64::new(s, 0.0) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same_dim(self.dim(), other.dim())?;
        Ok(Self { entries: &self.entries + &other.entries })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_same_dim(self.dim(), other.dim())?;
        Ok(Self { entries: &self.entries - &other.entries })
    }

    /// `Re tr(self * other)`.
    pub fn inner(&self, other: &Self) -> f64 {
        trace_product(&self.entries, &other.entries)
    }

    /// `u self u^†`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        Self::from_matrix_unchecked(u * &self.entries * u.adjoint())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries.iter().zip(other.entries.iter()).fold(0.0_f64, |acc, (a, b)| acc.max((a - b).norm()))
    }
}

fn check_same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("{a} vs {b}")));
    }
    Ok(())
}

/// Kronecker product; `a` occupies the leading subsystem.
pub fn tensor(a: &HermitianMatrix, b: &HermitianMatrix) -> HermitianMatrix {
    HermitianMatrix { entries: kron(&a.entries, &b.entries) }
}

/// Unit-trace positive semidefinite operator with a subsystem structure.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: HermitianMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    pub fn new(matrix: HermitianMatrix, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, matrix.dim())?;
        let tr = matrix.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace { expected: 1.0, found: tr });
        }
        let min = matrix.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { matrix, dims })
    }

    pub fn from_matrix(m: CMatrix, dims: Vec<usize>) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?, dims)
    }

    /// Pure state `|psi><psi|` from a normalized vector.
    pub fn pure(psi: &[C64], dims: Vec<usize>) -> Result<Self> {
        Self::new(HermitianMatrix::projector(psi), dims)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        Self { matrix: HermitianMatrix::identity(n).scale(1.0 / n as f64), dims }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn as_matrix(&self) -> &CMatrix {
        self.matrix.as_matrix()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DensityMatrix { matrix: tensor(&self.matrix, &other.matrix), dims }
    }

    /// Marginal on the subsystems in `keep` (in ascending order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let m = partial_trace(&self.matrix, &self.dims, keep)?;
        let mut keep_sorted = keep.to_vec();
        keep_sorted.sort_unstable();
        let dims = keep_sorted.iter().map(|&i| self.dims[i]).collect();
        Ok(DensityMatrix { matrix: m, dims })
    }

    /// Same operator, different subsystem split (products must agree).
    pub fn with_dims(&self, dims: Vec<usize>) -> Result<DensityMatrix> {
        check_dims(&dims, self.dim())?;
        Ok(DensityMatrix { matrix: self.matrix.clone(), dims })
    }
}

fn check_dims(dims: &[usize], n: usize) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::DimensionMismatch(format!("invalid subsystem dims {dims:?}")));
    }
    let prod: usize = dims.iter().product();
    if prod != n {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dims {dims:?} have product {prod}, matrix dimension is {n}"
        )));
    }
    Ok(())
}

/// Choi operator `Γ = (id ⊗ N)(d Φ)` of a channel, ordered input-reference ⊗ output.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiOperator {
    matrix: HermitianMatrix,
    dim_in: usize,
    dim_out: usize,
}

impl ChoiOperator {
    pub fn new(matrix: HermitianMatrix, dim_in: usize, dim_out: usize) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 || matrix.dim() != dim_in * dim_out {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix of dimension {} does not match {dim_in}x{dim_out}",
                matrix.dim()
            )));
        }
        let min = matrix.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        let tr = matrix.trace();
        if (tr - dim_in as f64).abs() > CHOI_TOL {
            return Err(Error::InvalidTrace { expected: dim_in as f64, found: tr });
        }
        let reduced = partial_trace(&matrix, &[dim_in, dim_out], &[0])?;
        let dev = reduced.max_abs_diff(&HermitianMatrix::identity(dim_in));
        if dev > CHOI_TOL {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(Self { matrix, dim_in, dim_out })
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn as_matrix(&self) -> &CMatrix {
        self.matrix.as_matrix()
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// Normalized Choi state `Γ / |A|`.
    pub fn choi_state(&self) -> DensityMatrix {
        DensityMatrix { matrix: self.matrix.scale(1.0 / self.dim_in as f64), dims: vec![self.dim_in, self.dim_out] }
    }
}

/// Bijection on `{0, .., k-1}` (printed 1-based).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let k = mapping.len();
        let mut seen = vec![false; k];
        for &m in &mapping {
            if m >= k || seen[m] {
                return Err(Error::InvalidParameter(format!("{mapping:?} is not a bijection")));
            }
            seen[m] = true;
        }
        Ok(Self { mapping })
    }

    pub fn identity(k: usize) -> Self {
        Self { mapping: (0..k).collect() }
    }

    /// Transposition of positions `a` and `b`.
    pub fn transposition(k: usize, a: usize, b: usize) -> Self {
        let mut mapping: Vec<usize> = (0..k).collect();
        mapping.swap(a, b);
        Self { mapping }
    }

    /// The cycle `0 -> 1 -> ... -> k-1 -> 0`.
    pub fn cycle(k: usize) -> Self {
        Self { mapping: (0..k).map(|i| (i + 1) % k).collect() }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.mapping[i]
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation { mapping: other.mapping.iter().map(|&i| self.mapping[i]).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.mapping.len()];
        for (i, &m) in self.mapping.iter().enumerate() {
            inv[m] = i;
        }
        Permutation { mapping: inv }
    }
}

/// Generators `{(1 2), (1 2 ... k)}` of the symmetric group `S_k`.
pub fn sym_group_generators(k: usize) -> Result<Vec<Permutation>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("symmetric group needs k >= 2, got {k}")));
    }
    let swap = Permutation::transposition(k, 0, 1);
    if k == 2 {
        return Ok(vec![swap]);
    }
    Ok(vec![swap, Permutation::cycle(k)])
}

fn multi_index(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for j in (0..dims.len()).rev() {
        out[j] = idx % dims[j];
        idx /= dims[j];
    }
}

fn flat_index(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Index table for splitting a space into kept and traced subsystems:
/// `table[r * traced + t]` is the full index of kept index `r`, traced index `t`.
#[derive(Clone, Debug)]
pub(crate) struct SplitTable {
    pub kept: usize,
    pub traced: usize,
    pub table: Vec<usize>,
}

pub(crate) fn split_table(dims: &[usize], keep: &[usize]) -> Result<SplitTable> {
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.is_empty() {
        return Err(Error::InvalidParameter("keep set is empty".into()));
    }
    if keep_sorted.iter().any(|&i| i >= dims.len()) {
        return Err(Error::DimensionMismatch(format!("keep {keep:?} out of range for {dims:?}")));
    }
    let traced_idx: Vec<usize> = (0..dims.len()).filter(|i| !keep_sorted.contains(i)).collect();
    let kept_dims: Vec<usize> = keep_sorted.iter().map(|&i| dims[i]).collect();
    let traced_dims: Vec<usize> = traced_idx.iter().map(|&i| dims[i]).collect();
    let kept: usize = kept_dims.iter().product();
    let traced: usize = traced_dims.iter().product();
    let mut table = vec![0; kept * traced];
    let mut kd = vec![0; kept_dims.len()];
    let mut td = vec![0; traced_dims.len()];
    let mut full = vec![0; dims.len()];
    for r in 0..kept {
        multi_index(r, &kept_dims, &mut kd);
        for t in 0..traced {
            multi_index(t, &traced_dims, &mut td);
            for (pos, &i) in keep_sorted.iter().enumerate() {
                full[i] = kd[pos];
            }
            for (pos, &i) in traced_idx.iter().enumerate() {
                full[i] = td[pos];
            }
            table[r * traced + t] = flat_index(&full, dims);
        }
    }
    Ok(SplitTable { kept, traced, table })
}

impl SplitTable {
    pub fn trace_out(&self, m: &CMatrix) -> CMatrix {
        let (k, t) = (self.kept, self.traced);
        CMatrix::from_fn(k, k, |r1, r2| {
            let mut acc = ZERO;
            for s in 0..t {
                acc += m[(self.table[r1 * t + s], self.table[r2 * t + s])];
            }
            acc
        })
    }

    /// Adjoint of `trace_out`: `y ⊗ I` on the traced subsystems.
    pub fn embed(&self, y: &CMatrix, full_dim: usize) -> CMatrix {
        let (k, t) = (self.kept, self.traced);
        let mut out = CMatrix::zeros(full_dim, full_dim);
        for r1 in 0..k {
            for r2 in 0..k {
                let v = y[(r1, r2)];
                if v == ZERO {
                    continue;
                }
                for s in 0..t {
                    out[(self.table[r1 * t + s], self.table[r2 * t + s])] += v;
                }
            }
        }
        out
    }
}

pub(crate) fn check_square_dims(m: &CMatrix, dims: &[usize]) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch("matrix is not square".into()));
    }
    check_dims(dims, m.nrows())
}

/// Partial trace of an arbitrary square matrix, keeping `keep` in ascending order.
pub fn partial_trace_matrix(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    check_square_dims(m, dims)?;
    Ok(split_table(dims, keep)?.trace_out(m))
}

/// Marginal of a Hermitian operator on the subsystems listed in `keep`.
pub fn partial_trace(m: &HermitianMatrix, dims: &[usize], keep: &[usize]) -> Result<HermitianMatrix> {
    Ok(HermitianMatrix::from_matrix_unchecked(partial_trace_matrix(m.as_matrix(), dims, keep)?))
}

/// Permutation matrix reordering tensor factors: the factor at position `j`
/// moves to position `perm[j]`. Returns `P` with `P (x_1 ⊗ ... ⊗ x_m) = y` where
/// `y_{perm[j]} = x_j`.
pub fn subsystem_permutation(dims: &[usize], perm: &Permutation) -> Result<CMatrix> {
    if perm.len() != dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "permutation of {} factors applied to {} subsystems",
            perm.len(),
            dims.len()
        )));
    }
    let n: usize = dims.iter().product();
    let mut new_dims = vec![0; dims.len()];
    for (j, &d) in dims.iter().enumerate() {
        new_dims[perm.apply(j)] = d;
    }
    let mut p = CMatrix::zeros(n, n);
    let mut digits = vec![0; dims.len()];
    let mut moved = vec![0; dims.len()];
    for col in 0..n {
        multi_index(col, dims, &mut digits);
        for (j, &x) in digits.iter().enumerate() {
            moved[perm.apply(j)] = x;
        }
        p[(flat_index(&moved, &new_dims), col)] = ONE;
    }
    Ok(p)
}

/// Unitary `W^π` on `(C^d)^{⊗k}` moving the content of slot `j` to slot `π(j)`.
/// Satisfies `W^{π∘σ} = W^π W^σ`.
pub fn permutation_unitary(perm: &Permutation, d: usize, k: usize) -> Result<CMatrix> {
    if k == 0 || perm.len() != k {
        return Err(Error::InvalidParameter(format!("permutation on {} points used for k = {k}", perm.len())));
    }
    subsystem_permutation(&vec![d; k], perm)
}

/// Vector `(1/√d) Σ_i |ii>`.
pub fn max_entangled_vector(d: usize) -> Vec<C64> {
    let mut v = vec![ZERO; d * d];
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    for i in 0..d {
        v[i * d + i] = amp;
    }
    v
}

/// Maximally entangled state `Φ^d` on `d ⊗ d`.
pub fn max_entangled(d: usize) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("max_entangled needs d >= 2, got {d}")));
    }
    DensityMatrix::pure(&max_entangled_vector(d), vec![d, d])
}

/// Isotropic state `F Φ + (1-F)(I - Φ)/(d² - 1)`.
pub fn isotropic(fidelity: f64, d: usize) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&fidelity) {
        return Err(Error::InvalidParameter(format!("isotropic fidelity {fidelity} outside [0, 1]")));
    }
    let phi = max_entangled(d)?;
    let n = d * d;
    let ident = HermitianMatrix::identity(n);
    let rest = ident.sub(phi.hermitian())?.scale((1.0 - fidelity) / (n as f64 - 1.0));
    let m = phi.hermitian().scale(fidelity).add(&rest)?;
    DensityMatrix::new(m, vec![d, d])
}

/// Choi operator of the erasure channel on a qudit of dimension `d`. The output
/// space has dimension `d + 1` with the erasure flag as the last basis vector.
pub fn erasure_choi(p: f64, d: usize) -> Result<ChoiOperator> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("erasure probability {p} outside [0, 1]")));
    }
    if d < 1 {
        return Err(Error::InvalidParameter("erasure channel needs d >= 1".into()));
    }
    let dout = d + 1;
    let n = d * dout;
    let mut m = CMatrix::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            m[(i * dout + i, j * dout + j)] += C64::new(1.0 - p, 0.0);
        }
        m[(i * dout + d, i * dout + d)] += C64::new(p, 0.0);
    }
    ChoiOperator::new(HermitianMatrix::from_matrix_unchecked(m), d, dout)
}

/// Symmetric extension of the erasure channel with `p = 1 - 1/k`, as an
/// unnormalized operator on `A B_1 ... B_k` (trace `d`):
/// `(d/k) Σ_i Φ_{A B_i} ⊗ |e><e|^{⊗ (k-1)}`.
pub fn erasure_choi_extension(d: usize, k: usize) -> Result<HermitianMatrix> {
    if k < 2 {
        return Err(Error::InvalidParameter("extension needs k >= 2".into()));
    }
    let dout = d + 1;
    let mut dims = vec![d];
    dims.extend(std::iter::repeat_n(dout, k));
    let n: usize = dims.iter().product();
    let mut m = CMatrix::zeros(n, n);
    let mut digits = vec![0; k + 1];
    let scale = C64::new(1.0 / k as f64, 0.0);
    for copy in 0..k {
        for a in 0..d {
            for b in 0..d {
                digits[0] = a;
                for (slot, digit) in digits.iter_mut().enumerate().skip(1) {
                    *digit = if slot == copy + 1 { a } else { d };
                }
                let row = flat_index(&digits, &dims);
                digits[0] = b;
                digits[copy + 1] = b;
                let col = flat_index(&digits, &dims);
                m[(row, col)] += scale;
            }
        }
    }
    Ok(HermitianMatrix::from_matrix_unchecked(m))
}

/// Uhlmann fidelity `(tr √(√σ ρ √σ))²`, evaluated as the squared trace norm
/// of `√ρ √σ` so that rank-deficient inputs do not amplify roundoff.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_dim(rho.dim(), sigma.dim())?;
    let sqrt_rho = psd_sqrt(rho.as_matrix());
    let sqrt_sigma = psd_sqrt(sigma.as_matrix());
    let product = sqrt_rho * sqrt_sigma;
    let trace_norm: f64 = product.singular_values().iter().sum();
    Ok((trace_norm * trace_norm).clamp(0.0, 1.0))
}

/// Square root of a unit-trace PSD matrix, with roundoff-level eigenvalues set to zero.
fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let floor = 64.0 * f64::EPSILON * m.nrows() as f64;
    hermitian_function(m, |x| if x > floor { x.sqrt() } else { 0.0 })
}

/// `(1 - q) ρ + q Tr_j[ρ] ⊗ I/d_j` placed back on subsystem `j`.
pub fn depolarize_subsystem(rho: &DensityMatrix, subsystem: usize, q: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("depolarizing parameter {q} outside [0, 1]")));
    }
    let dims = rho.dims();
    if subsystem >= dims.len() {
        return Err(Error::DimensionMismatch(format!("no subsystem {subsystem} in {dims:?}")));
    }
    let keep: Vec<usize> = (0..dims.len()).filter(|&i| i != subsystem).collect();
    let n = rho.dim();
    let mixed = if keep.is_empty() {
        CMatrix::identity(n, n) * C64::new(1.0 / n as f64, 0.0)
    } else {
        let table = split_table(dims, &keep)?;
        let reduced = table.trace_out(rho.as_matrix());
        table.embed(&reduced, n) * C64::new(1.0 / dims[subsystem] as f64, 0.0)
    };
    let m = rho.as_matrix() * C64::new(1.0 - q, 0.0) + mixed * C64::new(q, 0.0);
    DensityMatrix::new(HermitianMatrix::from_matrix_unchecked(m), dims.to_vec())
}

/// Seeded random matrices for tests and randomized twists.
pub mod random {
    use nalgebra::linalg::QR;
    use rand::Rng;
    use rand_distr::StandardNormal;

    use super::{CMatrix, DensityMatrix, HermitianMatrix, C64};

    pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im)
        })
    }

    /// Haar unitary via QR of a complex Ginibre matrix with phase correction.
    pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
        let g = gaussian_matrix(rng, n, n);
        let qr = QR::new(g);
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..n {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
        q
    }

    pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix {
        let g = gaussian_matrix(rng, n, n);
        HermitianMatrix::from_matrix_unchecked(&g + g.adjoint())
    }

    /// `G G^† / tr` for a Ginibre `G` of the given rank.
    pub fn state<R: Rng + ?Sized>(rng: &mut R, dims: &[usize], rank: usize) -> DensityMatrix {
        let n: usize = dims.iter().product();
        let g = gaussian_matrix(rng, n, rank.max(1));
        let m = &g * g.adjoint();
        let tr = super::trace_re(&m);
        let m = HermitianMatrix::from_matrix_unchecked(m * C64::new(1.0 / tr, 0.0));
        DensityMatrix::new(m, dims.to_vec()).expect("Ginibre state is a valid density matrix")
    }

    /// Random diagonal density matrix (a probability vector on the diagonal).
    pub fn diagonal_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DensityMatrix {
        let mut w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        DensityMatrix::new(HermitianMatrix::from_real_diagonal(&w), vec![n]).unwrap()
    }
}
