//! Text dump of a compiled problem in the sparse SDPA format, for
//! cross-checking with external solvers.
//!
//! The dump describes the dual of the standard form after dependent rows have
//! been removed:
//!
//! ```text
//! min  Σ_i c_i y_i   s.t.  Σ_i F_i y_i - F_0 ⪰ 0
//! ```
//!
//! with `c_i = -b_i`. Each Hermitian block `X` of dimension `n` appears as a
//! real block of dimension `2n` holding `embed_hermitian(X)`, and its
//! coefficients are `F_i = -emb(A_i)/2`, `F_0 = -emb(C)/2`. Free variables
//! `x_j` of the standard form become pairs of diagonal LP entries encoding
//! `f_j · y = c_j`. The optimal value of the dump is the negated optimal
//! value of the original problem in minimization form (ignoring constants).

use std::fmt::Write as _;

use super::compile::{self, StandardForm};
use super::{embed_matrix, SdpProblem};
use crate::error::Result;

pub fn to_sdpa_string(problem: &SdpProblem) -> Result<String> {
    problem.validate()?;
    let compiled = compile::compile(problem)?;
    Ok(render(&compiled.form))
}

fn render(form: &StandardForm) -> String {
    let m = form.rows.len();
    let nf = form.n_free;
    let mut out = String::new();
    let _ = writeln!(out, "* kext sparse SDPA dump");
    let _ = writeln!(out, "{m}");
    let nblocks = form.block_dims.len() + usize::from(nf > 0);
    let _ = writeln!(out, "{nblocks}");
    let mut sizes: Vec<String> = form.block_dims.iter().map(|n| (2 * n).to_string()).collect();
    if nf > 0 {
        sizes.push(format!("-{}", 2 * nf));
    }
    let _ = writeln!(out, "{}", sizes.join(" "));
    let c: Vec<String> = form.b.iter().map(|b| fmt(-b)).collect();
    let _ = writeln!(out, "{}", c.join(" "));

    let mut emit = |mat: usize, blk: usize, e: &nalgebra::DMatrix<f64>| {
        for i in 0..e.nrows() {
            for j in i..e.ncols() {
                let v = e[(i, j)];
                if v != 0.0 {
                    let _ = writeln!(out, "{mat} {blk} {} {} {}", i + 1, j + 1, fmt(-0.5 * v));
                }
            }
        }
    };
    for (b, c) in form.c_blocks.iter().enumerate() {
        emit(0, b + 1, &embed_matrix(c));
    }
    for (i, row) in form.rows.iter().enumerate() {
        for (b, a) in row.blocks.iter().enumerate() {
            if let Some(a) = a {
                emit(i + 1, b + 1, &embed_matrix(a));
            }
        }
    }
    if nf > 0 {
        let lp = form.block_dims.len() + 1;
        for (j, &cj) in form.c_free.iter().enumerate() {
            if cj != 0.0 {
                let _ = writeln!(out, "0 {lp} {} {} {}", 2 * j + 1, 2 * j + 1, fmt(cj));
                let _ = writeln!(out, "0 {lp} {} {} {}", 2 * j + 2, 2 * j + 2, fmt(-cj));
            }
        }
        for (i, row) in form.rows.iter().enumerate() {
            for (j, &f) in row.free.iter().enumerate() {
                if f != 0.0 {
                    let _ = writeln!(out, "{} {lp} {} {} {}", i + 1, 2 * j + 1, 2 * j + 1, fmt(f));
                    let _ = writeln!(out, "{} {lp} {} {} {}", i + 1, 2 * j + 2, 2 * j + 2, fmt(-f));
                }
            }
        }
    }
    out
}

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}
