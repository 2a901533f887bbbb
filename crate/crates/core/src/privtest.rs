//! Private states, twisting unitaries and privacy tests.
//!
//! Operators live on `A B A' B'` (key registers first, then shields), with
//! `|A| = |B| = d`.

use rand::Rng;

use crate::conic::{
    self, Composed, Expr, PartialTraceMap, Sandwich, SdpProblem, Sense, SolveOptions, SolveStatus, TraceWith,
    TwirledMarginal, VarKind,
};
use crate::error::{Error, Result};
use crate::qmat::{
    max_entangled, random, subsystem_permutation, sym_group_generators, CMatrix, DensityMatrix, HermitianMatrix,
    Permutation, C64,
};

pub const UNITARY_TOL: f64 = 1e-10;
pub const PROJECTOR_TOL: f64 = 1e-9;

/// Which key register selects the shield unitary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ControlRegister {
    #[default]
    A,
    B,
}

#[derive(Clone, Debug)]
pub struct TwistSpec {
    d: usize,
    shield_dims: (usize, usize),
    controls: Vec<CMatrix>,
    control: ControlRegister,
}

impl TwistSpec {
    pub fn new(
        d: usize,
        shield_dims: (usize, usize),
        controls: Vec<CMatrix>,
        control: ControlRegister,
    ) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!("key dimension must be at least 2, got {d}")));
        }
        if shield_dims.0 == 0 || shield_dims.1 == 0 {
            return Err(Error::InvalidParameter(format!("shield dimensions {shield_dims:?} must be positive")));
        }
        if controls.len() != d {
            return Err(Error::InvalidParameter(format!("expected {d} controls, got {}", controls.len())));
        }
        let n = shield_dims.0 * shield_dims.1;
        for (index, u) in controls.iter().enumerate() {
            if u.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!(
                    "control {index} has shape {:?}, shield dimension is {n}",
                    u.shape()
                )));
            }
            let deviation = (u * u.adjoint() - CMatrix::identity(n, n)).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
            if deviation > UNITARY_TOL {
                return Err(Error::NotUnitary { index, deviation });
            }
        }
        Ok(Self { d, shield_dims, controls, control })
    }

    pub fn identity(d: usize, shield_dims: (usize, usize)) -> Result<Self> {
        let n = shield_dims.0 * shield_dims.1;
        Self::new(d, shield_dims, vec![CMatrix::identity(n, n); d], ControlRegister::A)
    }

    /// Controls drawn from the Haar measure.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        d: usize,
        shield_dims: (usize, usize),
        control: ControlRegister,
    ) -> Result<Self> {
        let n = shield_dims.0 * shield_dims.1;
        let controls = (0..d).map(|_| random::haar_unitary(rng, n)).collect();
        Self::new(d, shield_dims, controls, control)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn shield_dims(&self) -> (usize, usize) {
        self.shield_dims
    }

    pub fn control(&self) -> ControlRegister {
        self.control
    }

    pub fn controls(&self) -> &[CMatrix] {
        &self.controls
    }

    /// Subsystem dimensions `[d, d, |A'|, |B'|]`.
    pub fn dims(&self) -> Vec<usize> {
        vec![self.d, self.d, self.shield_dims.0, self.shield_dims.1]
    }

    pub fn total_dim(&self) -> usize {
        self.d * self.d * self.shield_dims.0 * self.shield_dims.1
    }
}

/// `V = Σ_i |i><i| ⊗ U^i`, with the projector on the control register and the
/// identity on the other key register.
pub fn twisting_unitary(spec: &TwistSpec) -> CMatrix {
    let d = spec.d;
    let ns = spec.shield_dims.0 * spec.shield_dims.1;
    let n = spec.total_dim();
    let mut v = CMatrix::zeros(n, n);
    for a in 0..d {
        for b in 0..d {
            let i = match spec.control {
                ControlRegister::A => a,
                ControlRegister::B => b,
            };
            let base = (a * d + b) * ns;
            let u = &spec.controls[i];
            for r in 0..ns {
                for c in 0..ns {
                    v[(base + r, base + c)] = u[(r, c)];
                }
            }
        }
    }
    v
}

/// `γ = V (Φ ⊗ τ) V^†`.
pub fn private_state(spec: &TwistSpec, tau: &DensityMatrix) -> Result<DensityMatrix> {
    let ns = spec.shield_dims.0 * spec.shield_dims.1;
    if tau.dim() != ns {
        return Err(Error::DimensionMismatch(format!("shield state has dimension {}, expected {ns}", tau.dim())));
    }
    let phi = max_entangled(spec.d)?;
    let v = twisting_unitary(spec);
    let m = phi.hermitian().as_matrix().kronecker(tau.as_matrix());
    DensityMatrix::new(HermitianMatrix::from_matrix_unchecked(&v * m * v.adjoint()), spec.dims())
}

#[derive(Clone, Debug)]
pub struct PrivacyTest {
    projector: HermitianMatrix,
    d: usize,
    shield_dims: (usize, usize),
    control: ControlRegister,
}

impl PrivacyTest {
    pub fn projector(&self) -> &HermitianMatrix {
        &self.projector
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn shield_dims(&self) -> (usize, usize) {
        self.shield_dims
    }

    pub fn control(&self) -> ControlRegister {
        self.control
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.d, self.d, self.shield_dims.0, self.shield_dims.1]
    }

    /// The projector with subsystems reordered to `(A A') (B B')`.
    pub fn projector_aa_bb(&self) -> Result<CMatrix> {
        let p = subsystem_permutation(&self.dims(), &Permutation::new(vec![0, 2, 1, 3])?)?;
        Ok(&p * self.projector.as_matrix() * p.adjoint())
    }
}

/// `Π = V (Φ ⊗ I) V^†`.
pub fn privacy_test(spec: &TwistSpec) -> Result<PrivacyTest> {
    let ns = spec.shield_dims.0 * spec.shield_dims.1;
    let phi = max_entangled(spec.d)?;
    let v = twisting_unitary(spec);
    let m = phi.as_matrix().kronecker(&CMatrix::identity(ns, ns));
    let projector = HermitianMatrix::from_matrix_unchecked(&v * m * v.adjoint());
    let sq = projector.as_matrix() * projector.as_matrix();
    let dev = (sq - projector.as_matrix()).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    if dev > PROJECTOR_TOL {
        return Err(Error::InvalidParameter(format!("privacy test is not idempotent (deviation {dev:.3e})")));
    }
    Ok(PrivacyTest { projector, d: spec.d, shield_dims: spec.shield_dims, control: spec.control })
}

/// `tr[Π ω]`, clamped to `[0, 1]`.
pub fn pass_probability(test: &PrivacyTest, omega: &DensityMatrix) -> Result<f64> {
    if omega.dim() != test.projector.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} tested against privacy test of dimension {}",
            omega.dim(),
            test.projector.dim()
        )));
    }
    Ok(test.projector.inner(omega.hermitian()).clamp(0.0, 1.0))
}

/// `1/d + 1/k - 1/(dk)`.
pub fn pass_probability_ceiling(d: usize, k: usize) -> f64 {
    let (d, k) = (d as f64, k as f64);
    1.0 / d + 1.0 / k - 1.0 / (d * k)
}

/// How permutation invariance of the extension is imposed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExtensionMode {
    /// Average the marginal over the `k` copies (equivalent to symmetrizing the extension).
    #[default]
    Twirled,
    /// Explicit invariance under the two generators of `S_k`.
    Generators,
}

#[derive(Clone, Debug)]
pub struct ExtPassResult {
    pub value: f64,
    pub ceiling: f64,
    pub status: SolveStatus,
    pub residuals: conic::Residuals,
    pub dual_value: f64,
    pub mode: ExtensionMode,
}

/// Maximum of `tr[Π σ]` over states `σ` that are `k`-extendible on `AA' : BB'`.
pub fn max_pass_probability_ext(
    test: &PrivacyTest,
    split: (usize, usize),
    k: usize,
    mode: ExtensionMode,
    opts: &SolveOptions,
) -> Result<ExtPassResult> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("extension count must be at least 2, got {k}")));
    }
    let (da, db) = split;
    if da != test.d * test.shield_dims.0 || db != test.d * test.shield_dims.1 {
        return Err(Error::DimensionMismatch(format!(
            "split {split:?} does not match |AA'| = {}, |BB'| = {}",
            test.d * test.shield_dims.0,
            test.d * test.shield_dims.1
        )));
    }
    let total = conic::extension_dim(da, db, k)?;
    let pi = test.projector_aa_bb()?;

    let mut p = SdpProblem::new();
    let omega = p.add_var("omega", VarKind::Psd(total));
    p.add_eq("trace", Expr::zeros(1).plus_map(omega, 1.0, TraceWith::identity(total)).plus_const_scalar(-1.0));
    let objective = match mode {
        ExtensionMode::Twirled => Composed::new(TraceWith::new(pi), TwirledMarginal::arc(da, db, k)?)?,
        ExtensionMode::Generators => {
            let mut dims = vec![da];
            dims.extend(std::iter::repeat_n(db, k));
            for (gi, g) in sym_group_generators(k)?.iter().enumerate() {
                let mut full = vec![0];
                full.extend(g.mapping().iter().map(|&x| x + 1));
                let w = subsystem_permutation(&dims, &Permutation::new(full)?)?;
                let e = Expr::zeros(total).plus_map(omega, 1.0, Sandwich::conjugation(&w)).plus_var(omega, -1.0);
                p.add_eq(&format!("invariance_{gi}"), e);
            }
            Composed::new(TraceWith::new(pi), PartialTraceMap::arc(&dims, &[0, 1])?)?
        }
    };
    p.set_objective(Sense::Maximize, Expr::zeros(1).plus_map(omega, 1.0, objective));
    let sol = conic::solve(&p, opts)?;
    Ok(ExtPassResult {
        value: sol.objective,
        ceiling: pass_probability_ceiling(test.d, k),
        status: sol.status,
        residuals: sol.residuals,
        dual_value: sol.dual_objective,
        mode,
    })
}

/// Convenience: a shield state `|0><0|` of the given dimension.
pub fn pure_shield(n: usize) -> DensityMatrix {
    let mut v = vec![C64::new(0.0, 0.0); n];
    v[0] = C64::new(1.0, 0.0);
    DensityMatrix::pure(&v, vec![n]).expect("basis vector is a valid state")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pauli_x() -> CMatrix {
        let mut x = CMatrix::zeros(2, 2);
        x[(0, 1)] = C64::new(1.0, 0.0);
        x[(1, 0)] = C64::new(1.0, 0.0);
        x
    }

    #[test]
    fn identity_controls_give_identity() {
        let spec = TwistSpec::identity(2, (2, 1)).unwrap();
        let v = twisting_unitary(&spec);
        assert_eq!(v, CMatrix::identity(8, 8));
    }

    #[test]
    fn twist_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for control in [ControlRegister::A, ControlRegister::B] {
            let spec = TwistSpec::random(&mut rng, 2, (2, 2), control).unwrap();
            let v = twisting_unitary(&spec);
            let dev = (&v * v.adjoint() - CMatrix::identity(16, 16)).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
            assert!(dev < 1e-12);
        }
    }

    #[test]
    fn controlled_x_basis_action() {
        // Oracle: |a>|b>|s> maps to |a>|b>(X^b |s>) when B controls.
        let spec = TwistSpec::new(2, (2, 1), vec![CMatrix::identity(2, 2), pauli_x()], ControlRegister::B).unwrap();
        let v = twisting_unitary(&spec);
        for a in 0..2 {
            for b in 0..2 {
                for s in 0..2 {
                    let col = (a * 2 + b) * 2 + s;
                    let target_s = if b == 1 { 1 - s } else { s };
                    let row = (a * 2 + b) * 2 + target_s;
                    for r in 0..8 {
                        let expected = if r == row { 1.0 } else { 0.0 };
                        assert!((v[(r, col)] - C64::new(expected, 0.0)).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn non_unitary_control_rejected() {
        let mut bad = CMatrix::identity(2, 2);
        bad[(0, 0)] = C64::new(2.0, 0.0);
        let err = TwistSpec::new(2, (2, 1), vec![CMatrix::identity(2, 2), bad], ControlRegister::A);
        assert!(matches!(err, Err(Error::NotUnitary { index: 1, .. })));
        assert!(TwistSpec::new(2, (2, 1), vec![CMatrix::identity(2, 2)], ControlRegister::A).is_err());
    }

    #[test]
    fn identity_twist_private_state_is_product() {
        let spec = TwistSpec::identity(2, (2, 1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let tau = random::state(&mut rng, &[2], 2);
        let gamma = private_state(&spec, &tau).unwrap();
        let expected = max_entangled(2).unwrap().tensor(&tau);
        assert!(gamma.hermitian().max_abs_diff(expected.hermitian()) < 1e-14);
    }

    #[test]
    fn identity_twist_test_is_phi_tensor_identity() {
        let spec = TwistSpec::identity(2, (1, 2)).unwrap();
        let test = privacy_test(&spec).unwrap();
        let expected = max_entangled(2).unwrap().as_matrix().kronecker(&CMatrix::identity(2, 2));
        assert!(test.projector().as_matrix().iter().zip(expected.iter()).all(|(a, b)| (a - b).norm() < 1e-15));
    }

    #[test]
    fn private_state_passes_its_test() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for control in [ControlRegister::A, ControlRegister::B] {
            for _ in 0..10 {
                let spec = TwistSpec::random(&mut rng, 2, (2, 2), control).unwrap();
                let tau = random::state(&mut rng, &[4], 3);
                let gamma = private_state(&spec, &tau).unwrap();
                let test = privacy_test(&spec).unwrap();
                assert!((pass_probability(&test, &gamma).unwrap() - 1.0).abs() < 1e-8);
                assert!(gamma.hermitian().min_eigenvalue() > -1e-10);
                assert!((gamma.hermitian().trace() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn test_rank_and_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let spec = TwistSpec::random(&mut rng, 2, (2, 2), ControlRegister::A).unwrap();
            let test = privacy_test(&spec).unwrap();
            let ev = test.projector().eigenvalues();
            let ones = ev.iter().filter(|&&x| (x - 1.0).abs() < 1e-9).count();
            let zeros = ev.iter().filter(|&&x| x.abs() < 1e-9).count();
            assert_eq!(ones, 4);
            assert_eq!(zeros, ev.len() - 4);
        }
    }

    #[test]
    fn maximally_mixed_pass_probability() {
        let spec = TwistSpec::identity(2, (2, 2)).unwrap();
        let test = privacy_test(&spec).unwrap();
        let omega = DensityMatrix::maximally_mixed(vec![2, 2, 2, 2]);
        assert!((pass_probability(&test, &omega).unwrap() - 4.0 / 16.0).abs() < 1e-14);
        assert!(pass_probability(&test, &DensityMatrix::maximally_mixed(vec![2, 2])).is_err());
    }

    #[test]
    fn perturbed_private_state_passes_with_fidelity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let spec = TwistSpec::random(&mut rng, 2, (2, 1), ControlRegister::A).unwrap();
            let tau = pure_shield(2);
            let gamma = private_state(&spec, &tau).unwrap();
            let noise = random::state(&mut rng, &spec.dims(), 8);
            let eps = 0.1 * rng.random::<f64>();
            let m = gamma.hermitian().scale(1.0 - eps).add(&noise.hermitian().scale(eps)).unwrap();
            let omega = DensityMatrix::new(m, spec.dims()).unwrap();
            let f = crate::qmat::fidelity(&gamma, &omega).unwrap();
            let pass = pass_probability(&privacy_test(&spec).unwrap(), &omega).unwrap();
            assert!(pass >= f - 1e-9, "pass {pass} below fidelity {f}");
        }
    }

    #[test]
    fn ceiling_formula() {
        assert!((pass_probability_ceiling(2, 2) - 0.75).abs() < 1e-15);
        assert!((pass_probability_ceiling(2, 3) - 2.0 / 3.0).abs() < 1e-15);
        assert!((pass_probability_ceiling(3, 2) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn generator_mode_matches_twirled() {
        let spec = TwistSpec::identity(2, (1, 1)).unwrap();
        let test = privacy_test(&spec).unwrap();
        let opts = SolveOptions::default();
        let a = max_pass_probability_ext(&test, (2, 2), 2, ExtensionMode::Twirled, &opts).unwrap();
        let b = max_pass_probability_ext(&test, (2, 2), 2, ExtensionMode::Generators, &opts).unwrap();
        assert_eq!(a.status, SolveStatus::Optimal);
        assert_eq!(b.status, SolveStatus::Optimal);
        assert!((a.value - 0.75).abs() < 1e-6);
        assert!((b.value - 0.75).abs() < 1e-6);
    }

    #[test]
    fn guard_and_split_checked() {
        let spec = TwistSpec::identity(2, (1, 1)).unwrap();
        let test = privacy_test(&spec).unwrap();
        let opts = SolveOptions::default();
        assert!(matches!(
            max_pass_probability_ext(&test, (2, 2), 13, ExtensionMode::Twirled, &opts),
            Err(Error::DimensionGuard { .. })
        ));
        assert!(max_pass_probability_ext(&test, (2, 3), 2, ExtensionMode::Twirled, &opts).is_err());
        assert!(max_pass_probability_ext(&test, (2, 2), 1, ExtensionMode::Twirled, &opts).is_err());
    }
}
