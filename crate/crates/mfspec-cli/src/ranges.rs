//! Numeric list syntax shared by flags and config files.
//!
//! A value list is a comma-separated sequence of items, each either a number
//! or an inclusive range `lo:step:hi`.

use mfspec::legendre::uniform_grid;

pub fn parse_values(text: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim) {
        if item.is_empty() {
            return Err(format!("empty item in `{text}`"));
        }
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(number(x)?),
            [lo, step, hi] => {
                let grid = uniform_grid(number(lo)?, number(step)?, number(hi)?).map_err(|e| format!("`{item}`: {e}"))?;
                out.extend(grid);
            }
            _ => return Err(format!("`{item}` is neither a number nor lo:step:hi")),
        }
    }
    Ok(out)
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

/// `auto` or a value list.
#[derive(Debug, Clone, PartialEq)]
pub enum DeltaArg {
    Auto,
    Values(Vec<f64>),
}

pub fn parse_delta(text: &str) -> Result<DeltaArg, String> {
    if text.trim().eq_ignore_ascii_case("auto") {
        Ok(DeltaArg::Auto)
    } else {
        parse_values(text).map(DeltaArg::Values)
    }
}

/// `ROWSxCOLS`.
pub fn parse_shape(text: &str) -> Result<(usize, usize), String> {
    let (r, c) = text.split_once(['x', 'X']).ok_or_else(|| format!("`{text}` is not ROWSxCOLS"))?;
    let r: usize = r.trim().parse().map_err(|_| format!("bad row count in `{text}`"))?;
    let c: usize = c.trim().parse().map_err(|_| format!("bad column count in `{text}`"))?;
    if r == 0 || c == 0 {
        return Err(format!("`{text}` has an empty axis"));
    }
    Ok((r, c))
}
