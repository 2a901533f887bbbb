//! Parsing of grid, list and `k` flags.
//!
//! A grid is either a comma-separated list of values or `start:stop:step`.
//! The range form includes every `start + i·step` lying less than half a step
//! beyond `stop`, so a grid that lands on `stop` up to roundoff keeps it.

use kext_core::diverge::ExtOrder;

/// Decimal places kept on range points so that `0.75 + 3·0.005` prints as `0.765`.
const GRID_DECIMALS: f64 = 1e12;

pub fn parse_f64_grid(spec: &str, what: &str) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    let out = if spec.contains(':') {
        let parts = split_range(spec, what)?;
        let (start, stop, step) = (parse_f64(parts[0], what)?, parse_f64(parts[1], what)?, parse_f64(parts[2], what)?);
        if step <= 0.0 {
            return Err(format!("{what}: step must be positive in '{spec}'"));
        }
        if stop < start {
            return Err(format!("{what}: stop is below start in '{spec}'"));
        }
        let count = ((stop - start) / step + 0.5).ceil() as usize;
        (0..count).map(|i| ((start + i as f64 * step) * GRID_DECIMALS).round() / GRID_DECIMALS).collect()
    } else {
        spec.split(',').map(|s| parse_f64(s, what)).collect::<Result<Vec<_>, _>>()?
    };
    nonempty(out, what)
}

pub fn parse_u64_grid(spec: &str, what: &str) -> Result<Vec<u64>, String> {
    let spec = spec.trim();
    let out = if spec.contains(':') {
        let parts = split_range(spec, what)?;
        let (start, stop) = (parse_u64(parts[0], what)?, parse_u64(parts[1], what)?);
        let step = if parts.len() == 3 { parse_u64(parts[2], what)? } else { 1 };
        if step == 0 {
            return Err(format!("{what}: step must be positive in '{spec}'"));
        }
        if stop < start {
            return Err(format!("{what}: stop is below start in '{spec}'"));
        }
        (start..=stop).step_by(step as usize).collect()
    } else {
        spec.split(',').map(|s| parse_u64(s, what)).collect::<Result<Vec<_>, _>>()?
    };
    nonempty(out, what)
}

/// Comma-separated extension orders; `inf` is `k = ∞`.
pub fn parse_k_list(spec: &str) -> Result<Vec<ExtOrder>, String> {
    let out = spec
        .split(',')
        .map(|s| s.trim().parse::<ExtOrder>().map_err(|e| format!("k: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    nonempty(out, "k")
}

fn split_range<'a>(spec: &'a str, what: &str) -> Result<Vec<&'a str>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.len() {
        3 => Ok(parts),
        2 if what == "n" => Ok(parts),
        _ => Err(format!("{what}: expected start:stop:step, got '{spec}'")),
    }
}

fn parse_f64(s: &str, what: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("{what}: '{s}' is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{what}: '{s}' is not finite"))
    }
}

fn parse_u64(s: &str, what: &str) -> Result<u64, String> {
    s.trim().parse().map_err(|_| format!("{what}: '{s}' is not a nonnegative integer"))
}

fn nonempty<T>(v: Vec<T>, what: &str) -> Result<Vec<T>, String> {
    if v.is_empty() {
        Err(format!("{what}: empty grid"))
    } else {
        Ok(v)
    }
}
