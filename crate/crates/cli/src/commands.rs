//! One function per subcommand; each fills a [`Table`] in grid order.

use std::path::Path;

use kext_core::bounds::{
    erasure_privcap_bound, isotropic_key_bound, key_bound, key_bound_nshot_sandwich, min_copies_isotropic,
    min_uses_erasure, privcap_bound, privcap_nshot_geo, privcap_nshot_sandwich, BoundResult, MinSearch,
};
use kext_core::conic::SolveOptions;
use kext_core::diverge::{
    e_geo_channel, e_hyp_channel, e_hyp_isotropic_n, e_hyp_state, e_max_channel, geo_alpha, ExtOrder,
};
use kext_core::privtest::{max_pass_probability_ext, privacy_test, ControlRegister, ExtensionMode, TwistSpec};
use kext_core::qmat::{erasure_choi, isotropic, CMatrix, ChoiOperator, HermitianMatrix, C64};
use kext_core::Error;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::args::*;
use crate::grid::{parse_f64_grid, parse_k_list, parse_u64_grid};
use crate::table::{Cell, Plot, Table};
use crate::CliError;

pub const DEFAULT_F_GRID: &str = "0.75:1.0:0.005";
pub const DEFAULT_N_GRID: &str = "1:120";

fn check_dim(d: usize, what: &str) -> Result<usize, CliError> {
    if d >= 2 {
        Ok(d)
    } else {
        Err(CliError::usage(format!("{what} must be at least 2, got {d}")))
    }
}

fn check_eps(eps: &[f64]) -> Result<(), CliError> {
    match eps.iter().find(|e| !(0.0..1.0).contains(*e)) {
        Some(e) => Err(CliError::usage(format!("eps = {e} must lie in [0, 1)"))),
        None => Ok(()),
    }
}

fn grid_f64(spec: Option<&str>, default: &str, what: &str) -> Result<Vec<f64>, CliError> {
    parse_f64_grid(spec.unwrap_or(default), what).map_err(CliError::usage)
}

fn grid_n(spec: Option<&str>, default: &str) -> Result<Vec<u64>, CliError> {
    let n = parse_u64_grid(spec.unwrap_or(default), "n").map_err(CliError::usage)?;
    if n.contains(&0) {
        return Err(CliError::usage("n must be at least 1"));
    }
    Ok(n)
}

fn k_list(spec: Option<&str>, default: &str) -> Result<Vec<ExtOrder>, CliError> {
    parse_k_list(spec.unwrap_or(default)).map_err(CliError::usage)
}

fn k_cell(k: ExtOrder) -> Cell {
    Cell::text(k.to_string())
}

/// Outcome of one grid row: the cells, and the error if the row failed.
struct Row {
    cells: Vec<Cell>,
    error: Option<Error>,
}

impl Row {
    fn ok(cells: Vec<Cell>) -> Self {
        Self { cells, error: None }
    }
}

/// Append rows in grid order; fail only when every row failed.
fn collect(mut table: Table, rows: Vec<Row>) -> Result<Table, CliError> {
    let all_failed = !rows.is_empty() && rows.iter().all(|r| r.error.is_some());
    let mut first = None;
    for row in rows {
        if first.is_none() {
            first = row.error;
        }
        table.push(row.cells);
    }
    match first {
        Some(e) if all_failed => Err(e.into()),
        _ => Ok(table),
    }
}

fn status_of(e: &Error) -> &'static str {
    match e {
        Error::DimensionGuard { .. } => "guard",
        Error::Solver { .. } => "solver-failure",
        Error::Unbounded(_) => "unbounded",
        _ => "invalid-input",
    }
}

fn bound_cells(r: &BoundResult) -> [Cell; 2] {
    [r.bits.into(), r.valid.into()]
}

pub fn privacy_max(a: &PrivacyMaxArgs, opts: &SolveOptions) -> Result<Table, CliError> {
    let d = check_dim(a.d.unwrap_or(2), "d")?;
    let k = a.k.unwrap_or(2);
    if k < 2 {
        return Err(CliError::usage(format!("k must be at least 2, got {k}")));
    }
    let default_shield = if a.random_twist { 2 } else { 1 };
    let shields = (a.shield_a.unwrap_or(default_shield), a.shield_b.unwrap_or(default_shield));
    if shields.0 == 0 || shields.1 == 0 {
        return Err(CliError::usage("shield dimensions must be positive"));
    }
    let control = match a.control.unwrap_or(Control::A) {
        Control::A => ControlRegister::A,
        Control::B => ControlRegister::B,
    };
    let mode = match a.mode.unwrap_or(ExtMode::Twirled) {
        ExtMode::Twirled => ExtensionMode::Twirled,
        ExtMode::Generators => ExtensionMode::Generators,
    };
    let seed = a.seed.unwrap_or(0);
    let spec = if a.random_twist {
        TwistSpec::random(&mut ChaCha8Rng::seed_from_u64(seed), d, shields, control)?
    } else {
        TwistSpec::identity(d, shields)?
    };
    let test = privacy_test(&spec)?;
    let r = max_pass_probability_ext(&test, (d * shields.0, d * shields.1), k, mode, opts)?;

    let mut t = Table::new(
        vec!["d", "k", "shield_a", "shield_b", "twist", "seed", "optimum", "ceiling", "gap", "status"],
        Plot { x: "k", y: "optimum", series: None },
    );
    t.push(vec![
        (d as u64).into(),
        (k as u64).into(),
        (shields.0 as u64).into(),
        (shields.1 as u64).into(),
        Cell::text(if a.random_twist { "random" } else { "identity" }),
        if a.random_twist { seed.into() } else { Cell::Invalid },
        r.value.into(),
        r.ceiling.into(),
        (r.ceiling - r.value).into(),
        Cell::text(format!("{:?}", r.status).to_lowercase()),
    ]);
    Ok(t)
}

pub fn key_oneshot(a: &KeyOneshotArgs, opts: &SolveOptions) -> Result<Table, CliError> {
    let fs = grid_f64(a.fidelity.as_deref(), DEFAULT_F_GRID, "fidelity")?;
    let d = check_dim(a.d.unwrap_or(2), "d")?;
    let ks = k_list(a.k.as_deref(), "2")?;
    let eps = grid_f64(a.eps.as_deref(), "0.05", "eps")?;
    check_eps(&eps)?;
    let method = a.method.unwrap_or(OneshotMethod::Both);

    let mut points = Vec::new();
    for &f in &fs {
        for &e in &eps {
            points.extend(ks.iter().map(|&k| (f, e, k)));
        }
    }
    let rows = points
        .par_iter()
        .map(|&(f, e, k)| {
            let bern = e_hyp_isotropic_n(f, d, k, 1, e).map(|v| v.bits);
            let sdp = match (method, k) {
                (OneshotMethod::Bernoulli, _) | (_, ExtOrder::Infinite) => None,
                (_, ExtOrder::Finite(kk)) => Some(
                    isotropic(f, d).and_then(|rho| e_hyp_state(&rho, (d, d), kk as usize, e, opts)).map(|v| v.bits),
                ),
            };
            let show = |r: &Result<f64, Error>| r.as_ref().map_or(Cell::Invalid, |x| Cell::Num(*x));
            let sdp_cell = sdp.as_ref().map_or(Cell::Invalid, show);
            let bern_cell = if method == OneshotMethod::Sdp { Cell::Invalid } else { show(&bern) };
            let primary = sdp.unwrap_or(bern);
            let bound = primary.and_then(|x| key_bound(x, k));
            match bound {
                Ok(b) => {
                    let [bits, valid] = bound_cells(&b);
                    Row::ok(vec![f.into(), e.into(), k_cell(k), sdp_cell, bern_cell, bits, valid, Cell::text("ok")])
                }
                Err(err) => Row {
                    cells: vec![
                        f.into(),
                        e.into(),
                        k_cell(k),
                        sdp_cell,
                        bern_cell,
                        Cell::Invalid,
                        false.into(),
                        Cell::text(status_of(&err)),
                    ],
                    error: Some(err),
                },
            }
        })
        .collect();
    let t = Table::new(
        vec!["F", "eps", "k", "e_sdp_bits", "e_bernoulli_bits", "bound_bits", "valid", "status"],
        Plot { x: "F", y: "bound_bits", series: Some("k") },
    );
    collect(t, rows)
}

pub fn key_nshot(a: &KeyNshotArgs) -> Result<Table, CliError> {
    let d = check_dim(a.d.unwrap_or(2), "d")?;
    let eps = a.eps.unwrap_or(1e-5);
    check_eps(&[eps])?;
    let ks = k_list(a.k.as_deref(), "2,3,100000,inf")?;
    let ns = grid_n(a.n.as_deref(), DEFAULT_N_GRID)?;
    let f = a.fidelity.unwrap_or(0.95);

    let points: Vec<(ExtOrder, u64)> = ks.iter().flat_map(|&k| ns.iter().map(move |&n| (k, n))).collect();
    let rows: Vec<Result<Vec<Cell>, Error>> = points
        .par_iter()
        .map(|&(k, n)| {
            let r = match a.per_copy_bits {
                Some(e) => key_bound_nshot_sandwich(e, n, k, a.alpha.unwrap_or(f64::INFINITY), eps)?,
                None => isotropic_key_bound(f, d, k, n, eps)?,
            };
            let rate = if r.valid { r.bits / n as f64 } else { f64::INFINITY };
            Ok(vec![n.into(), k_cell(k), r.divergence_bits.into(), r.bits.into(), rate.into(), r.valid.into()])
        })
        .collect();
    let mut t = Table::new(
        vec!["n", "k", "divergence_bits", "bound_bits", "rate_bits_per_copy", "valid"],
        Plot { x: "n", y: "rate_bits_per_copy", series: Some("k") },
    );
    for row in rows {
        t.push(row?);
    }
    Ok(t)
}

fn search_cells(r: Result<MinSearch, Error>) -> Row {
    match r {
        Ok(m) => Row::ok(vec![m.n_min.into(), k_cell(m.k), m.bits.into(), Cell::text("ok")]),
        Err(Error::Unbounded(_)) => {
            Row::ok(vec![f64::INFINITY.into(), Cell::Invalid, Cell::Invalid, Cell::text("unbounded")])
        }
        Err(e) => {
            Row { cells: vec![Cell::Invalid, Cell::Invalid, Cell::Invalid, Cell::text(status_of(&e))], error: Some(e) }
        }
    }
}

pub fn min_copies(a: &MinCopiesArgs) -> Result<Table, CliError> {
    let fs = grid_f64(a.fidelity.as_deref(), "0.8:1.0:0.01", "fidelity")?;
    let d = check_dim(a.d.unwrap_or(2), "d")?;
    let eps = grid_f64(a.eps.as_deref(), "1e-5,1e-3,0.01,0.05", "eps")?;
    check_eps(&eps)?;
    let ks = k_list(a.k.as_deref(), "2,3,inf")?;

    let points: Vec<(f64, f64)> = eps.iter().flat_map(|&e| fs.iter().map(move |&f| (f, e))).collect();
    let rows = points
        .par_iter()
        .map(|&(f, e)| {
            let mut row = search_cells(min_copies_isotropic(f, d, e, &ks));
            row.cells.splice(0..0, [f.into(), e.into()]);
            row
        })
        .collect();
    let t = Table::new(
        vec!["F", "eps", "n_min", "k", "bound_bits", "status"],
        Plot { x: "F", y: "n_min", series: Some("eps") },
    );
    collect(t, rows)
}

pub fn min_uses(a: &MinUsesArgs) -> Result<Table, CliError> {
    let ps = grid_f64(a.p.as_deref(), "0:0.45:0.05", "p")?;
    let eps = grid_f64(a.eps.as_deref(), "1e-5", "eps")?;
    check_eps(&eps)?;
    let ks = k_list(a.k.as_deref(), "2,inf")?;

    let points: Vec<(f64, f64)> = eps.iter().flat_map(|&e| ps.iter().map(move |&p| (p, e))).collect();
    let rows = points
        .par_iter()
        .map(|&(p, e)| {
            let mut row = search_cells(min_uses_erasure(p, e, &ks));
            row.cells.splice(0..0, [p.into(), e.into()]);
            row
        })
        .collect();
    let t = Table::new(
        vec!["p", "eps", "n_min", "k", "bound_bits", "status"],
        Plot { x: "p", y: "n_min", series: Some("eps") },
    );
    collect(t, rows)
}

/// Per-use divergence for the geo and max paths, computed once per `k`.
fn per_use_divergence(
    gamma: &ChoiOperator,
    k: ExtOrder,
    method: ChannelMethod,
    ell: u32,
    eps: f64,
    opts: &SolveOptions,
) -> Result<f64, Error> {
    let k =
        k.as_finite().ok_or_else(|| Error::InvalidParameter("channel divergence programs need a finite k".into()))?
            as usize;
    Ok(match method {
        ChannelMethod::Hyp => e_hyp_channel(gamma, k, eps, opts)?.bits,
        ChannelMethod::Geo => e_geo_channel(gamma, k, ell, opts)?.bits,
        ChannelMethod::Max => e_max_channel(gamma, k, opts)?.bits,
    })
}

fn multi_use_bound(
    method: ChannelMethod,
    e: f64,
    n: u64,
    k: ExtOrder,
    ell: u32,
    eps: f64,
    dim_a: usize,
) -> Result<BoundResult, Error> {
    match method {
        ChannelMethod::Hyp => privcap_bound(e, k),
        ChannelMethod::Geo => privcap_nshot_geo(e, n, k, geo_alpha(ell), eps),
        ChannelMethod::Max => privcap_nshot_sandwich(e, n, k, f64::INFINITY, eps, dim_a),
    }
}

pub fn privcap(a: &PrivcapArgs, opts: &SolveOptions) -> Result<Table, CliError> {
    let p = a.p.unwrap_or(0.3);
    let eps = a.eps.unwrap_or(1e-5);
    check_eps(&[eps])?;
    let ks = k_list(a.k.as_deref(), "2")?;
    let ns = grid_n(a.n.as_deref(), DEFAULT_N_GRID)?;
    let method = a.method.unwrap_or(ChannelMethod::Hyp);
    let ell = a.ell.unwrap_or(1);
    let d = check_dim(a.d.unwrap_or(2), "d")?;

    let per_use: Vec<Option<f64>> = match method {
        ChannelMethod::Hyp => vec![None; ks.len()],
        _ => {
            let gamma = erasure_choi(p, d)?;
            ks.iter()
                .map(|&k| per_use_divergence(&gamma, k, method, ell, eps, opts).map(Some))
                .collect::<Result<_, _>>()?
        }
    };
    let points: Vec<(usize, u64)> = (0..ks.len()).flat_map(|i| ns.iter().map(move |&n| (i, n))).collect();
    let rows: Vec<Result<Vec<Cell>, Error>> = points
        .par_iter()
        .map(|&(i, n)| {
            let k = ks[i];
            let r = match per_use[i] {
                None => erasure_privcap_bound(p, k, n, eps)?,
                Some(e) => multi_use_bound(method, e, n, k, ell, eps, d)?,
            };
            let rate = if r.valid { r.bits / n as f64 } else { f64::INFINITY };
            Ok(vec![n.into(), k_cell(k), r.divergence_bits.into(), r.bits.into(), rate.into(), r.valid.into()])
        })
        .collect();
    let mut t = Table::new(
        vec!["n", "k", "divergence_bits", "bound_bits", "rate_bits_per_use", "valid"],
        Plot { x: "n", y: "rate_bits_per_use", series: Some("k") },
    );
    for row in rows {
        t.push(row?);
    }
    Ok(t)
}

/// JSON form of a Choi matrix; `im` may be omitted for real matrices.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiFile {
    pub dim_in: usize,
    pub dim_out: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

pub fn load_choi(path: &Path) -> Result<ChoiOperator, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let file: ChoiFile = serde_json::from_str(&text).map_err(|e| CliError::invalid_input(format!("Choi JSON: {e}")))?;
    let n = file.dim_in * file.dim_out;
    let square = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
    if !square(&file.re) || !file.im.as_ref().is_none_or(square) {
        return Err(CliError::invalid_input(format!(
            "Choi JSON: re and im must be {n}x{n} for dim_in = {} and dim_out = {}",
            file.dim_in, file.dim_out
        )));
    }
    let m = CMatrix::from_fn(n, n, |i, j| C64::new(file.re[i][j], file.im.as_ref().map_or(0.0, |im| im[i][j])));
    let h = HermitianMatrix::new(m)?;
    Ok(ChoiOperator::new(h, file.dim_in, file.dim_out)?)
}

pub fn channel(a: &ChannelArgs, opts: &SolveOptions) -> Result<Table, CliError> {
    let kind = a.channel.unwrap_or(ChannelKind::Erasure);
    let method = a.method.unwrap_or(ChannelMethod::Hyp);
    let k = a.k.unwrap_or(2);
    if k < 2 {
        return Err(CliError::usage(format!("k must be at least 2, got {k}")));
    }
    let eps = a.eps.unwrap_or(1e-5);
    check_eps(&[eps])?;
    let ell = a.ell.unwrap_or(1);
    let ns = grid_n(a.n.as_deref(), "1")?;
    if method == ChannelMethod::Hyp && ns != [1] {
        return Err(CliError::usage("the hyp method gives a one-shot bound; use --n 1"));
    }
    let (gamma, label) = match kind {
        ChannelKind::Erasure => {
            let p = a.p.ok_or_else(|| CliError::usage("--p is required for the erasure channel"))?;
            (erasure_choi(p, check_dim(a.d.unwrap_or(2), "d")?)?, format!("erasure p={p}"))
        }
        ChannelKind::ChoiFile => {
            let path = a.choi.as_ref().ok_or_else(|| CliError::usage("--choi is required for choi-file"))?;
            (load_choi(path)?, "choi-file".to_string())
        }
    };
    let k = ExtOrder::Finite(k as u64);
    let e = per_use_divergence(&gamma, k, method, ell, eps, opts)?;
    let alpha = match method {
        ChannelMethod::Hyp => Cell::Invalid,
        ChannelMethod::Geo => geo_alpha(ell).into(),
        ChannelMethod::Max => f64::INFINITY.into(),
    };
    let method_name = match method {
        ChannelMethod::Hyp => "hyp",
        ChannelMethod::Geo => "geo",
        ChannelMethod::Max => "max",
    };
    let mut t = Table::new(
        vec!["channel", "method", "k", "alpha", "divergence_bits", "n", "bound_bits", "valid"],
        Plot { x: "n", y: "bound_bits", series: None },
    );
    for n in ns {
        let r = multi_use_bound(method, e, n, k, ell, eps, gamma.dim_in())?;
        let [bits, valid] = bound_cells(&r);
        t.push(vec![
            Cell::text(label.clone()),
            Cell::text(method_name),
            k_cell(k),
            alpha.clone(),
            e.into(),
            n.into(),
            bits,
            valid,
        ]);
    }
    Ok(t)
}
