//! Key and private-capacity upper bounds from `k`-unextendible divergences,
//! and searches for the fewest copies or channel uses that could yield one
//! secret bit.
//!
//! Every bound has the form `log2((k-1)/k) - log2(2^{-X} - 1/k)` for an
//! effective exponent `X` built from the divergence. It is finite only for
//! `X < log2 k`; for `k = inf` it reduces to `X` itself.

use std::f64::consts::LN_2;
use std::fmt;

use statrs::function::gamma::ln_gamma;

use crate::diverge::{
    dh_bernoulli_n, e_hyp_isotropic_n, isotropic_extendible_fidelity, BinaryDistributionPair, ExtOrder,
};
use crate::error::{Error, Result};

/// Gap below `log2 k` required for a finite bound.
pub const VALIDITY_MARGIN: f64 = 1e-9;
/// Largest copy or use count tried by the minimum searches.
pub const SEARCH_CAP: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    /// One-shot distillable key of a state.
    Key,
    /// `n` copies of a state from a per-copy sandwiched divergence.
    KeyNshotSandwich,
    /// One-shot forward-assisted private capacity.
    Privcap,
    /// `n` channel uses from a per-use geometric divergence.
    PrivcapNshotGeo,
    /// `n` channel uses from a per-use sandwiched divergence.
    PrivcapNshotSandwich,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::Key => "key",
            BoundKind::KeyNshotSandwich => "key-nshot-sandwich",
            BoundKind::Privcap => "privcap",
            BoundKind::PrivcapNshotGeo => "privcap-nshot-geo",
            BoundKind::PrivcapNshotSandwich => "privcap-nshot-sandwich",
        })
    }
}

/// Inputs of a bound, enough to recompute it.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundParams {
    pub kind: BoundKind,
    /// Divergence as supplied: one-shot, per copy or per use depending on `kind`.
    pub input_bits: f64,
    pub k: ExtOrder,
    pub eps: Option<f64>,
    pub n: Option<u64>,
    pub alpha: Option<f64>,
    pub dim_a: Option<usize>,
    /// True when the divergence comes from outside the library (Rényi orders
    /// with no built-in program).
    pub externally_supplied: bool,
    pub descriptor: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundResult {
    /// Bound in secret bits; `+inf` when not valid.
    pub bits: f64,
    pub valid: bool,
    /// Effective exponent compared against `log2 k`.
    pub divergence_bits: f64,
    pub k: ExtOrder,
    pub reason: Option<String>,
    pub params: BoundParams,
}

impl BoundResult {
    /// Re-evaluate from the echoed parameters.
    pub fn recompute(&self) -> Result<BoundResult> {
        let p = &self.params;
        let need = |x: Option<f64>, what: &str| x.ok_or_else(|| Error::InvalidParameter(format!("missing {what}")));
        let need_n = || p.n.ok_or_else(|| Error::InvalidParameter("missing n".into()));
        let r = match p.kind {
            BoundKind::Key => key_bound(p.input_bits, p.k)?,
            BoundKind::Privcap => privcap_bound(p.input_bits, p.k)?,
            BoundKind::KeyNshotSandwich => {
                key_bound_nshot_sandwich(p.input_bits, need_n()?, p.k, need(p.alpha, "alpha")?, need(p.eps, "eps")?)?
            }
            BoundKind::PrivcapNshotGeo => {
                privcap_nshot_geo(p.input_bits, need_n()?, p.k, need(p.alpha, "alpha")?, need(p.eps, "eps")?)?
            }
            BoundKind::PrivcapNshotSandwich => privcap_nshot_sandwich(
                p.input_bits,
                need_n()?,
                p.k,
                need(p.alpha, "alpha")?,
                need(p.eps, "eps")?,
                p.dim_a.ok_or_else(|| Error::InvalidParameter("missing |A|".into()))?,
            )?,
        };
        Ok(r.with_descriptor(&p.descriptor).with_context(p.n, p.eps))
    }

    pub fn with_descriptor(mut self, descriptor: &str) -> Self {
        self.params.descriptor = descriptor.to_string();
        self
    }

    fn with_context(mut self, n: Option<u64>, eps: Option<f64>) -> Self {
        self.params.n = self.params.n.or(n);
        self.params.eps = self.params.eps.or(eps);
        self
    }
}

/// `α/(α-1)`, equal to 1 at `α = inf`.
pub fn alpha_coefficient(alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha <= 1.0 {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must exceed 1")));
    }
    Ok(if alpha.is_infinite() { 1.0 } else { alpha / (alpha - 1.0) })
}

/// `log2 C(n, |A|)` with `C(n, |A|) = binom(n + |A|^2 - 1, n)`.
pub fn log2_c_penalty(n: u64, dim_a: usize) -> f64 {
    let top = n as f64 + (dim_a * dim_a) as f64 - 1.0;
    (ln_gamma(top + 1.0) - ln_gamma(n as f64 + 1.0) - ln_gamma(top - n as f64 + 1.0)) / LN_2
}

fn check_divergence(e: f64) -> Result<()> {
    if e.is_nan() || e < 0.0 {
        return Err(Error::InvalidParameter(format!("divergence {e} must be nonnegative")));
    }
    Ok(())
}

fn check_k(k: ExtOrder) -> Result<()> {
    match k {
        ExtOrder::Finite(k) if k < 2 => Err(Error::InvalidParameter(format!("k must be at least 2, got {k}"))),
        _ => Ok(()),
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("eps = {eps} is outside [0, 1)")));
    }
    Ok(())
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    Ok(())
}

/// Apply the bound formula to the effective exponent `x`.
fn gated(x: f64, k: ExtOrder, params: BoundParams) -> BoundResult {
    match k {
        ExtOrder::Infinite => BoundResult { bits: x, valid: true, divergence_bits: x, k, reason: None, params },
        ExtOrder::Finite(kf) => {
            let log_k = (kf as f64).log2();
            if x < log_k - VALIDITY_MARGIN {
                let kf = kf as f64;
                // -log2((k 2^{-x} - 1)/(k - 1)), arranged for accuracy at small x
                let t = kf / (kf - 1.0) * (-x * LN_2).exp_m1();
                let bits = (-t.ln_1p() / LN_2).max(0.0);
                BoundResult { bits, valid: true, divergence_bits: x, k, reason: None, params }
            } else {
                BoundResult {
                    bits: f64::INFINITY,
                    valid: false,
                    divergence_bits: x,
                    k,
                    reason: Some(format!("bound infinite: exponent {x} is not below log2 k = {log_k}")),
                    params,
                }
            }
        }
    }
}

fn params(kind: BoundKind, input_bits: f64, k: ExtOrder) -> BoundParams {
    BoundParams {
        kind,
        input_bits,
        k,
        eps: None,
        n: None,
        alpha: None,
        dim_a: None,
        externally_supplied: false,
        descriptor: String::new(),
    }
}

/// One-shot key bound from `E^ε_k(ρ)`; `k = inf` returns `E`.
pub fn key_bound(e: f64, k: ExtOrder) -> Result<BoundResult> {
    check_divergence(e)?;
    check_k(k)?;
    Ok(gated(e, k, params(BoundKind::Key, e, k)))
}

/// One-shot private capacity bound from `E^ε_k(N)`; same formula as [`key_bound`].
pub fn privcap_bound(e: f64, k: ExtOrder) -> Result<BoundResult> {
    check_divergence(e)?;
    check_k(k)?;
    Ok(gated(e, k, params(BoundKind::Privcap, e, k)))
}

fn nshot(
    kind: BoundKind,
    e: f64,
    n: u64,
    k: ExtOrder,
    alpha: f64,
    eps: f64,
    dim_a: Option<usize>,
) -> Result<BoundResult> {
    check_divergence(e)?;
    check_k(k)?;
    check_n(n)?;
    check_eps(eps)?;
    let c = alpha_coefficient(alpha)?;
    let penalty = dim_a.map_or(0.0, |a| log2_c_penalty(n, a));
    let x = n as f64 * e + c * (penalty - (1.0 - eps).log2());
    let externally_supplied = match kind {
        BoundKind::PrivcapNshotGeo => !is_geo_alpha(alpha),
        _ => alpha.is_finite(),
    };
    let p = BoundParams {
        eps: Some(eps),
        n: Some(n),
        alpha: Some(alpha),
        dim_a,
        externally_supplied,
        ..params(kind, e, k)
    };
    Ok(gated(x, k, p))
}

fn is_geo_alpha(alpha: f64) -> bool {
    (1..=crate::diverge::MAX_ELL).any(|l| crate::diverge::geo_alpha(l) == alpha)
}

/// `n`-copy key bound from a per-copy sandwiched divergence (`α = inf` is the
/// max-divergence).
pub fn key_bound_nshot_sandwich(e_tilde: f64, n: u64, k: ExtOrder, alpha: f64, eps: f64) -> Result<BoundResult> {
    nshot(BoundKind::KeyNshotSandwich, e_tilde, n, k, alpha, eps, None)
}

/// `n`-use private capacity bound from a per-use geometric divergence, `α ∈ (1, 2]`.
pub fn privcap_nshot_geo(e_hat: f64, n: u64, k: ExtOrder, alpha: f64, eps: f64) -> Result<BoundResult> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (1, 2]")));
    }
    nshot(BoundKind::PrivcapNshotGeo, e_hat, n, k, alpha, eps, None)
}

/// `n`-use private capacity bound from a per-use sandwiched divergence,
/// including the `C(n, |A|)` penalty.
pub fn privcap_nshot_sandwich(
    e_tilde: f64,
    n: u64,
    k: ExtOrder,
    alpha: f64,
    eps: f64,
    dim_a: usize,
) -> Result<BoundResult> {
    if dim_a < 1 {
        return Err(Error::InvalidParameter("|A| must be at least 1".into()));
    }
    nshot(BoundKind::PrivcapNshotSandwich, e_tilde, n, k, alpha, eps, Some(dim_a))
}

/// Key bound for `n` copies of a `d`-dimensional isotropic state via the
/// Bernoulli reduction with fixed `G`.
pub fn isotropic_key_bound(fidelity: f64, d: usize, k: ExtOrder, n: u64, eps: f64) -> Result<BoundResult> {
    let e = e_hyp_isotropic_n(fidelity, d, k, n, eps)?;
    Ok(key_bound(e.bits, k)?.with_descriptor(&format!("isotropic F={fidelity} d={d}")).with_context(Some(n), Some(eps)))
}

/// Type-II parameter paired with erasure probability `p` for a given `k`:
/// `1/k`, or `1/2` for `k = inf`.
pub fn erasure_reference(k: ExtOrder) -> f64 {
    match k {
        ExtOrder::Finite(k) => 1.0 / k as f64,
        ExtOrder::Infinite => 0.5,
    }
}

/// Private capacity bound for `n` uses of an erasure channel.
pub fn erasure_privcap_bound(p: f64, k: ExtOrder, n: u64, eps: f64) -> Result<BoundResult> {
    check_k(k)?;
    let pair = BinaryDistributionPair::new(1.0 - p, erasure_reference(k), n)?;
    let e = dh_bernoulli_n(&pair, eps)?;
    Ok(privcap_bound(e.bits, k)?.with_descriptor(&format!("erasure p={p}")).with_context(Some(n), Some(eps)))
}

/// Result of a minimum copies or uses search.
#[derive(Clone, Debug, PartialEq)]
pub struct MinSearch {
    /// Smallest `n` whose best bound reaches one bit.
    pub n_min: u64,
    /// Best bound at `n_min`.
    pub bits: f64,
    /// The `k` attaining it.
    pub k: ExtOrder,
    pub evaluations: usize,
}

/// Pointwise minimum over `k_set` of valid bounds; invalid members count as `+inf`.
pub fn best_bound(
    k_set: &[ExtOrder],
    mut bound: impl FnMut(ExtOrder) -> Result<BoundResult>,
) -> Result<(f64, ExtOrder)> {
    let mut best: Option<(f64, ExtOrder)> = None;
    for &k in k_set {
        let r = bound(k)?;
        let b = if r.valid { r.bits } else { f64::INFINITY };
        if best.is_none_or(|(v, _)| b < v) {
            best = Some((b, k));
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("empty k set".into()))
}

/// Smallest `n >= 1` with `ub(n) >= 1`, for nondecreasing `ub`.
fn smallest_n(mut ub: impl FnMut(u64) -> Result<(f64, ExtOrder)>, what: &str) -> Result<MinSearch> {
    let mut evaluations = 0;
    let mut eval = |n: u64| {
        evaluations += 1;
        ub(n)
    };
    let first = eval(1)?;
    if first.0 >= 1.0 {
        return Ok(MinSearch { n_min: 1, bits: first.0, k: first.1, evaluations: 1 });
    }
    let mut lo = 1;
    let mut hi = 2;
    let mut at_hi = eval(hi)?;
    while at_hi.0 < 1.0 {
        lo = hi;
        hi *= 2;
        if hi > SEARCH_CAP {
            return Err(Error::Unbounded(format!("{what}: bound stays below one bit up to n = {SEARCH_CAP}")));
        }
        at_hi = eval(hi)?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let v = eval(mid)?;
        if v.0 >= 1.0 {
            hi = mid;
            at_hi = v;
        } else {
            lo = mid;
        }
    }
    Ok(MinSearch { n_min: hi, bits: at_hi.0, k: at_hi.1, evaluations })
}

fn check_k_set(k_set: &[ExtOrder]) -> Result<()> {
    if k_set.is_empty() {
        return Err(Error::InvalidParameter("empty k set".into()));
    }
    k_set.iter().try_for_each(|&k| check_k(k))
}

/// Lower bound on the copies of an isotropic state needed for one secret bit.
pub fn min_copies_isotropic(fidelity: f64, d: usize, eps: f64, k_set: &[ExtOrder]) -> Result<MinSearch> {
    check_k_set(k_set)?;
    check_eps(eps)?;
    if d < 2 {
        return Err(Error::InvalidParameter(format!("d must be at least 2, got {d}")));
    }
    if !(fidelity > isotropic_extendible_fidelity(d, ExtOrder::Infinite) && fidelity <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "F = {fidelity} must lie in (1/d, 1]; the state is separable otherwise"
        )));
    }
    smallest_n(
        |n| best_bound(k_set, |k| isotropic_key_bound(fidelity, d, k, n, eps)),
        &format!("isotropic F={fidelity}"),
    )
}

/// Lower bound on the uses of an erasure channel needed to send one secret bit.
pub fn min_uses_erasure(p: f64, eps: f64, k_set: &[ExtOrder]) -> Result<MinSearch> {
    check_k_set(k_set)?;
    check_eps(eps)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} is not a probability")));
    }
    let certifies = k_set.iter().any(|k| match k {
        ExtOrder::Infinite => true,
        ExtOrder::Finite(k) => p < 1.0 - 1.0 / *k as f64,
    });
    if !certifies {
        return Err(Error::Unbounded(format!("erasure p={p} is k-extendible for every k in the set")));
    }
    smallest_n(|n| best_bound(k_set, |k| erasure_privcap_bound(p, k, n, eps)), &format!("erasure p={p}"))
}
