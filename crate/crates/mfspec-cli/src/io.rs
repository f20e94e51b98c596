//! Data ingestion and plot-ready exports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use mfspec::classic::SpectrumCurve;
use mfspec::synth::Realization;
use mfspec::transform::{CoefficientPyramid, Normalization, Scale};
use serde_json::{json, Number, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
    Pgm,
    F64,
    /// `j,k,c` rows of a 1D coefficient pyramid, already L1-normalized.
    Coeffs,
}

impl InputFormat {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(InputFormat::Csv),
            "pgm" => Ok(InputFormat::Pgm),
            "f64" | "raw" | "bin" => Ok(InputFormat::F64),
            "coeffs" => Ok(InputFormat::Coeffs),
            _ => Err(format!("unknown input format `{s}` (csv, pgm, f64, coeffs)")),
        }
    }

    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "csv" | "txt" => Some(InputFormat::Csv),
            "pgm" => Some(InputFormat::Pgm),
            "f64" | "raw" | "bin" => Some(InputFormat::F64),
            _ => None,
        }
    }
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

/// Single-column CSV; a non-numeric first line is taken as a header.
pub fn parse_csv(bytes: &[u8]) -> Result<Vec<f64>, CliError> {
    let text = std::str::from_utf8(bytes).map_err(|_| CliError::Data("CSV input is not UTF-8".into()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.contains(',') {
            return Err(CliError::Data(format!("line {}: expected a single column", i + 1)));
        }
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(_) => return Err(CliError::Data(format!("line {}: non-finite value", i + 1))),
            Err(_) if out.is_empty() && i == 0 => {}
            Err(_) => return Err(CliError::Data(format!("line {}: `{line}` is not a number", i + 1))),
        }
    }
    if out.is_empty() {
        return Err(CliError::Data("CSV input holds no values".into()));
    }
    Ok(out)
}

/// Binary (P5) or ASCII (P2) graymap, 8 or 16 bits.
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>), CliError> {
    let bad = |m: &str| CliError::Data(format!("PGM: {m}"));
    let mut pos = 0;
    let mut token = || -> Option<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        (pos > start).then(|| String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token().ok_or_else(|| bad("empty file"))?;
    let mut num = |what: &str| -> Result<usize, CliError> {
        token().and_then(|t| t.parse().ok()).ok_or_else(|| bad(&format!("bad {what}")))
    };
    let cols = num("width")?;
    let rows = num("height")?;
    let maxval = num("maxval")?;
    if rows == 0 || cols == 0 || maxval == 0 || maxval > 65535 {
        return Err(bad("invalid header"));
    }
    let n = rows * cols;
    let data = match magic.as_str() {
        "P5" => {
            let body = &bytes[(pos + 1).min(bytes.len())..];
            if maxval < 256 {
                if body.len() < n {
                    return Err(bad("truncated pixel data"));
                }
                body[..n].iter().map(|&b| b as f64).collect()
            } else {
                if body.len() < 2 * n {
                    return Err(bad("truncated pixel data"));
                }
                body[..2 * n].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64).collect()
            }
        }
        "P2" => {
            let mut v = Vec::with_capacity(n);
            for _ in 0..n {
                v.push(num("pixel")? as f64);
            }
            v
        }
        _ => return Err(bad(&format!("unsupported magic `{magic}`"))),
    };
    Ok((rows, cols, data))
}

pub fn parse_f64(bytes: &[u8], shape: (usize, usize)) -> Result<Vec<f64>, CliError> {
    let n = shape.0 * shape.1;
    if bytes.len() != 8 * n {
        return Err(CliError::Data(format!(
            "raw input holds {} bytes, shape {}x{} needs {}",
            bytes.len(),
            shape.0,
            shape.1,
            8 * n
        )));
    }
    let v: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Data("raw input holds non-finite values".into()));
    }
    Ok(v)
}

pub fn parse_coeffs(bytes: &[u8]) -> Result<CoefficientPyramid, CliError> {
    let text = std::str::from_utf8(bytes).map_err(|_| CliError::Data("coefficient file is not UTF-8".into()))?;
    let mut by_scale: std::collections::BTreeMap<i32, Vec<(usize, f64)>> = Default::default();
    for (i, line) in text.lines().enumerate() {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 3 {
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            return Err(CliError::Data(format!("line {}: expected j,k,c", i + 1)));
        }
        let parsed = (f[0].parse::<i32>(), f[1].parse::<usize>(), f[2].parse::<f64>());
        match parsed {
            (Ok(j), Ok(k), Ok(c)) => by_scale.entry(j).or_default().push((k, c)),
            _ if i == 0 => {}
            _ => return Err(CliError::Data(format!("line {}: expected j,k,c", i + 1))),
        }
    }
    let mut scales = Vec::new();
    for (j, mut entries) in by_scale {
        entries.sort_by_key(|e| e.0);
        if entries.iter().enumerate().any(|(i, e)| e.0 != i) {
            return Err(CliError::Data(format!("scale {j}: positions must be 0..n without gaps")));
        }
        scales.push(Scale::new_1d(j, entries.into_iter().map(|e| e.1).collect()));
    }
    CoefficientPyramid::from_scales(1, Normalization::L1, scales).map_err(|e| CliError::Data(e.to_string()))
}

/// Fixed 17-significant-digit rendering; `-inf`, `inf` and `nan` spelled out.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// Shortest round-trip JSON number; non-finite values become null.
pub fn jnum(x: f64) -> Value {
    Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn jarr(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| jnum(x)).collect())
}

fn jopt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, jnum)
}

pub fn spectrum_json(c: &SpectrumCurve, nvm: Option<usize>) -> Value {
    let p = &c.params;
    json!({
        "estimator": c.estimator.name(),
        "d": c.d,
        "params": {
            "gamma": jopt(p.gamma),
            "delta": jopt(p.delta),
            "q_range": p.q_range.map_or(Value::Null, |(a, b)| Value::Array(vec![jnum(a), jnum(b)])),
            "j1": p.j1,
            "j2": p.j2,
            "nvm": p.nvm.or(nvm),
        },
        "h": jarr(&c.h),
        "D": jarr(&c.values),
    })
}

/// Written files are recorded for the manifest.
#[derive(Debug, Default)]
pub struct OutputLog {
    pub entries: Vec<Value>,
}

impl OutputLog {
    pub fn write(&mut self, dir: &Path, name: &str, bytes: &[u8], extra: Value) -> Result<(), CliError> {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
        let mut entry = json!({ "file": name, "bytes": bytes.len(), "sha256": sha256_hex(bytes) });
        if let (Value::Object(m), Value::Object(x)) = (&mut entry, extra) {
            m.extend(x);
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn write_json(&mut self, dir: &Path, name: &str, v: &Value) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(v).expect("serializable");
        s.push('\n');
        self.write(dir, name, s.as_bytes(), json!({}))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// CSV text from a header and rows of preformatted fields.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", r.join(","));
    }
    s
}

pub fn signal_csv(x: &[f64]) -> String {
    csv(&["value"], x.iter().map(|&v| vec![fmt17(v)]))
}

pub fn coeffs_csv(p: &CoefficientPyramid) -> String {
    let mut rows = Vec::new();
    for s in p.scales().iter().rev() {
        for (k, &c) in s.subband(0).iter().enumerate() {
            rows.push(vec![s.j().to_string(), k.to_string(), fmt17(c)]);
        }
    }
    csv(&["j", "k", "c"], rows)
}

pub fn f64_bytes(data: &[f64]) -> Vec<u8> {
    data.iter().flat_map(|v| v.to_le_bytes()).collect()
}

/// 16-bit binary graymap, linearly rescaled from the data range.
pub fn pgm16(rows: usize, cols: usize, data: &[f64]) -> Vec<u8> {
    let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n{cols} {rows}\n65535\n").into_bytes();
    for &v in data {
        let q = ((v - lo) / span * 65535.0).round().clamp(0.0, 65535.0) as u16;
        out.extend(q.to_be_bytes());
    }
    out
}

/// Shape recorded for `file` in a neighbouring manifest, if any.
pub fn sidecar_shape(input: &Path) -> Option<(usize, usize)> {
    let manifest = input.parent()?.join("manifest.json");
    let v: Value = serde_json::from_slice(&fs::read(manifest).ok()?).ok()?;
    let name = input.file_name()?.to_str()?;
    v.get("outputs")?.as_array()?.iter().find_map(|o| {
        if o.get("file")?.as_str()? != name {
            return None;
        }
        let s = o.get("shape")?.as_array()?;
        Some((s.first()?.as_u64()? as usize, s.get(1)?.as_u64()? as usize))
    })
}

pub fn realization_dim(r: &Realization) -> usize {
    match r {
        Realization::Signal(_) => 1,
        Realization::Image { .. } => 2,
        Realization::Pyramid(p) => p.dim(),
    }
}

pub fn realization_shape(r: &Realization) -> (usize, usize) {
    match r {
        Realization::Signal(x) => (1, x.len()),
        Realization::Image { rows, cols, .. } => (*rows, *cols),
        Realization::Pyramid(p) => p.shape(),
    }
}
