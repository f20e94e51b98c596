//! Classical wavelet-leader formalism: structure functions, scaling
//! exponents and the (concave) Legendre spectrum.

use crate::error::{Error, Result};
use crate::leaders::LeaderPyramid;
use crate::legendre::GFunction;
use crate::logsum::log2_mean_exp2;
use crate::regression::SlopeWeights;

/// `log2 S(q, j)` for a grid of `q` over the usable scales.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureFunctionTable {
    q: Vec<f64>,
    /// Ascending (coarse to fine).
    js: Vec<i32>,
    /// `log2_s[qi][ji]`
    log2_s: Vec<Vec<f64>>,
    n_j: Vec<usize>,
    /// Across-position variance of `log2 L` per scale.
    log_var: Vec<f64>,
    /// Scales skipped because they had no valid leader.
    dropped: Vec<i32>,
}

impl StructureFunctionTable {
    /// Table from explicit values, `log2_s[qi][ji]` with `js` ascending.
    pub fn from_values(q: Vec<f64>, js: Vec<i32>, log2_s: Vec<Vec<f64>>, n_j: Vec<usize>) -> Result<Self> {
        if log2_s.len() != q.len() || log2_s.iter().any(|r| r.len() != js.len()) || n_j.len() != js.len() {
            return Err(Error::InvalidInput("structure function table has inconsistent shape".into()));
        }
        if js.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("scales must be strictly increasing".into()));
        }
        let log_var = vec![1.0; js.len()];
        Ok(StructureFunctionTable { q, js, log2_s, n_j, log_var, dropped: Vec::new() })
    }

    pub(crate) fn with_log_var(mut self, log_var: Vec<f64>, dropped: Vec<i32>) -> Self {
        self.log_var = log_var;
        self.dropped = dropped;
        self
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn js(&self) -> &[i32] {
        &self.js
    }

    pub fn n_j(&self) -> &[usize] {
        &self.n_j
    }

    pub fn dropped(&self) -> &[i32] {
        &self.dropped
    }

    /// Row of `log2 S(q_i, j)` across scales.
    pub fn row(&self, qi: usize) -> &[f64] {
        &self.log2_s[qi]
    }

    pub fn value(&self, qi: usize, j: i32) -> Option<f64> {
        self.js.iter().position(|&x| x == j).map(|ji| self.log2_s[qi][ji])
    }

    pub fn log_var(&self) -> &[f64] {
        &self.log_var
    }
}

/// Per-scale logs of valid leaders, coarse to fine, skipping empty scales.
pub(crate) struct LogLeaders {
    pub js: Vec<i32>,
    pub logs: Vec<Vec<f64>>,
    pub dropped: Vec<i32>,
}

impl LogLeaders {
    pub fn new(leaders: &LeaderPyramid, keep: impl Fn(i32) -> bool) -> Self {
        let mut js = Vec::new();
        let mut logs = Vec::new();
        let mut dropped = Vec::new();
        for s in leaders.scales().iter().rev() {
            if !keep(s.j()) {
                continue;
            }
            if s.n_valid() == 0 {
                dropped.push(s.j());
                continue;
            }
            js.push(s.j());
            logs.push(s.log2_valid());
        }
        LogLeaders { js, logs, dropped }
    }
}

fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// `log2 S(q, j) = log2(mean_k L_{j,k}^q)` over valid leaders, in the log domain.
pub fn structure_functions(leaders: &LeaderPyramid, q_grid: &[f64]) -> Result<StructureFunctionTable> {
    let ll = LogLeaders::new(leaders, |_| true);
    if ll.js.is_empty() {
        return Err(Error::InvalidInput("no scale has a valid leader".into()));
    }
    let mut e = Vec::new();
    let log2_s = q_grid
        .iter()
        .map(|&q| {
            ll.logs
                .iter()
                .map(|l| {
                    e.clear();
                    e.extend(l.iter().map(|x| q * x));
                    log2_mean_exp2(&e)
                })
                .collect()
        })
        .collect();
    Ok(StructureFunctionTable {
        q: q_grid.to_vec(),
        n_j: ll.logs.iter().map(Vec::len).collect(),
        log_var: ll.logs.iter().map(|l| variance(l)).collect(),
        js: ll.js,
        log2_s,
        dropped: ll.dropped,
    })
}

/// Scaling exponents with per-`q` regression diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFunction {
    pub q: Vec<f64>,
    pub zeta: Vec<f64>,
    pub slope_se: Vec<f64>,
    pub r2: Vec<f64>,
    pub intercept: Vec<f64>,
    pub j1: i32,
    pub j2: i32,
    pub weighted: bool,
    /// Lifting function for generalized exponents; `None` for classical ones.
    pub g: Option<GFunction>,
}

pub(crate) fn fit_weights(table: &StructureFunctionTable, j1: i32, j2: i32, weighted: bool) -> Result<(Vec<usize>, SlopeWeights)> {
    if j1 >= j2 {
        return Err(Error::InvalidRange(format!("j1 = {j1} must be < j2 = {j2}")));
    }
    let (lo, hi) = match (table.js.first(), table.js.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(Error::InvalidRange("empty table".into())),
    };
    if j1 < lo || j2 > hi {
        return Err(Error::InvalidRange(format!("[{j1}, {j2}] outside available scales [{lo}, {hi}]")));
    }
    let idx: Vec<usize> = (0..table.js.len()).filter(|&i| (j1..=j2).contains(&table.js[i])).collect();
    if idx.len() < 3 {
        return Err(Error::InvalidRange(format!("[{j1}, {j2}] holds {} usable scales, need 3", idx.len())));
    }
    let x: Vec<f64> = idx.iter().map(|&i| table.js[i] as f64).collect();
    let weights = if weighted {
        let var: Vec<f64> = idx.iter().map(|&i| table.log_var[i] / table.n_j[i] as f64).collect();
        if var.iter().all(|&v| v > 0.0 && v.is_finite()) {
            SlopeWeights::weighted(&x, &var.iter().map(|v| 1.0 / v).collect::<Vec<_>>())
        } else {
            SlopeWeights::ols(&x)
        }
    } else {
        SlopeWeights::ols(&x)
    };
    Ok((idx, weights))
}

/// `zeta(q) = -slope` of `log2 S(q, j)` against `j` over `[j1, j2]`.
///
/// Weighted mode uses inverse-variance weights from the dispersion of
/// `log2 L` at each scale; it falls back to equal weights when some scale
/// has zero dispersion.
pub fn scaling_exponents(table: &StructureFunctionTable, j1: i32, j2: i32, weighted: bool) -> Result<ScalingFunction> {
    let (idx, w) = fit_weights(table, j1, j2, weighted)?;
    let n = table.q.len();
    let mut out = ScalingFunction {
        q: table.q.clone(),
        zeta: Vec::with_capacity(n),
        slope_se: Vec::with_capacity(n),
        r2: Vec::with_capacity(n),
        intercept: Vec::with_capacity(n),
        j1,
        j2,
        weighted,
        g: None,
    };
    let mut y = Vec::with_capacity(idx.len());
    for row in &table.log2_s {
        y.clear();
        y.extend(idx.iter().map(|&i| row[i]));
        let fit = w.fit(&y);
        out.zeta.push(-fit.slope);
        out.slope_se.push(fit.slope_se);
        out.r2.push(fit.r2);
        out.intercept.push(fit.intercept);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Legendre,
    Generalized,
    Envelope,
    Theory,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Legendre => "legendre",
            Estimator::Generalized => "generalized",
            Estimator::Envelope => "envelope",
            Estimator::Theory => "theory",
        }
    }
}

/// Settings a spectrum estimate was produced with.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpectrumParams {
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub q_range: Option<(f64, f64)>,
    pub j1: Option<i32>,
    pub j2: Option<i32>,
    pub nvm: Option<usize>,
}

/// Sampled spectrum `D(h)`; `-inf` marks points outside the support.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCurve {
    pub estimator: Estimator,
    pub d: usize,
    pub params: SpectrumParams,
    pub h: Vec<f64>,
    pub values: Vec<f64>,
}

impl SpectrumCurve {
    pub fn max_finite(&self) -> Option<f64> {
        self.values.iter().copied().filter(|v| v.is_finite()).reduce(f64::max)
    }

    pub fn value_at(&self, h: f64) -> Option<f64> {
        let i = self
            .h
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - h).abs().total_cmp(&(b.1 - h).abs()))?
            .0;
        Some(self.values[i])
    }
}

pub(crate) fn legendre_min(q: &[f64], zeta: &[f64], h: f64, d: f64) -> f64 {
    q.iter().zip(zeta).map(|(&qi, &z)| d + qi * h - z).fold(f64::INFINITY, f64::min)
}

fn q_range(q: &[f64]) -> Option<(f64, f64)> {
    let lo = q.iter().copied().reduce(f64::min)?;
    let hi = q.iter().copied().reduce(f64::max)?;
    Some((lo, hi))
}

/// `L(h) = min_q (d + q h - zeta(q))`.
pub fn legendre_spectrum(zeta: &ScalingFunction, h_grid: &[f64], d: usize) -> Result<SpectrumCurve> {
    if zeta.q.is_empty() || zeta.zeta.iter().any(|z| !z.is_finite()) {
        return Err(Error::InvalidInput("scaling function must be finite and nonempty".into()));
    }
    let values = h_grid.iter().map(|&h| legendre_min(&zeta.q, &zeta.zeta, h, d as f64)).collect();
    Ok(SpectrumCurve {
        estimator: Estimator::Legendre,
        d,
        params: SpectrumParams {
            q_range: q_range(&zeta.q),
            j1: Some(zeta.j1),
            j2: Some(zeta.j2),
            ..Default::default()
        },
        h: h_grid.to_vec(),
        values,
    })
}

/// Parametric form `(h(q), d + q h(q) - zeta(q))` with `h(q)` from centered
/// finite differences of `zeta` (one-sided at the ends of the `q` grid).
pub fn parametric_spectrum(zeta: &ScalingFunction, d: usize) -> Vec<(f64, f64)> {
    let (q, z) = (&zeta.q, &zeta.zeta);
    let n = q.len();
    if n < 2 {
        return Vec::new();
    }
    (0..n)
        .map(|i| {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            let h = (z[b] - z[a]) / (q[b] - q[a]);
            (h, d as f64 + q[i] * h - z[i])
        })
        .collect()
}
