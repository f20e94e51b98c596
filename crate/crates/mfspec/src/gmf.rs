//! Generalized multifractal formalism.
//!
//! Leaders are recentred as `phi = (log2 L - c10) / (-j)` and lifted by an
//! admissible `g` before the structure-function moments are taken. The
//! Legendre transform of the resulting exponents, minus `g`, gives a spectrum
//! estimate that need not be concave. Taking the pointwise minimum over a
//! family of shifted and dilated `g` gives the envelope estimate.

use rayon::prelude::*;

use crate::classic::{
    fit_weights, legendre_min, scaling_exponents, structure_functions, Estimator, LogLeaders, ScalingFunction,
    SpectrumCurve, SpectrumParams, StructureFunctionTable,
};
use crate::error::{Error, Result};
use crate::leaders::LeaderPyramid;
use crate::legendre::{uniform_grid, GFunction, GShape};
use crate::logsum::log2_mean_exp2;
use crate::regression::ols_fit;

/// Inclusive range of scales used by a regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FitRange {
    pub j1: i32,
    pub j2: i32,
}

impl FitRange {
    pub fn new(j1: i32, j2: i32) -> Self {
        FitRange { j1, j2 }
    }

    pub fn contains(&self, j: i32) -> bool {
        self.j1 <= j && j <= self.j2
    }
}

/// Linear fit `mean_k log2 L_{j,k} = c10 - h_mode * j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenteringEstimate {
    pub c10: f64,
    pub h_mode: f64,
    pub fit: FitRange,
}

pub fn estimate_centering(leaders: &LeaderPyramid, j1: i32, j2: i32) -> Result<CenteringEstimate> {
    if j1 >= j2 {
        return Err(Error::InvalidRange(format!("j1 = {j1} must be < j2 = {j2}")));
    }
    let ll = LogLeaders::new(leaders, |j| (j1..=j2).contains(&j));
    if ll.js.len() < 3 || !ll.dropped.is_empty() {
        return Err(Error::InvalidRange(format!(
            "[{j1}, {j2}] needs at least 3 scales, each with valid leaders"
        )));
    }
    let x: Vec<f64> = ll.js.iter().map(|&j| j as f64).collect();
    let y: Vec<f64> = ll.logs.iter().map(|l| l.iter().sum::<f64>() / l.len() as f64).collect();
    let fit = ols_fit(&x, &y);
    Ok(CenteringEstimate { c10: fit.intercept, h_mode: -fit.slope, fit: FitRange::new(j1, j2) })
}

/// Per-scale data reused across `(q, g)`: `a = log2 L - c10` (equal to
/// `-j * phi`) and `phi` itself.
struct Centered {
    js: Vec<i32>,
    a: Vec<Vec<f64>>,
    phi: Vec<Vec<f64>>,
    dropped: Vec<i32>,
}

impl Centered {
    fn new(leaders: &LeaderPyramid, c: &CenteringEstimate, keep: impl Fn(i32) -> bool) -> Self {
        let ll = LogLeaders::new(leaders, |j| j != 0 && keep(j));
        let mut dropped = ll.dropped;
        if leaders.scale(0).is_some() && keep(0) {
            dropped.push(0);
        }
        let a: Vec<Vec<f64>> = ll.logs.iter().map(|l| l.iter().map(|x| x - c.c10).collect()).collect();
        let phi = a
            .iter()
            .zip(&ll.js)
            .map(|(row, &j)| row.iter().map(|x| x / -(j as f64)).collect())
            .collect();
        Centered { js: ll.js, a, phi, dropped }
    }

    /// `log2 S_g(q, j)` for every `q`, as `[qi][ji]`.
    fn log_structure(&self, q_grid: &[f64], g: &GFunction) -> Vec<Vec<f64>> {
        let b: Vec<Vec<f64>> = self
            .phi
            .iter()
            .zip(&self.js)
            .map(|(row, &j)| row.iter().map(|&p| j as f64 * g.eval(p)).collect())
            .collect();
        let mut e = Vec::new();
        q_grid
            .iter()
            .map(|&q| {
                self.a
                    .iter()
                    .zip(&b)
                    .map(|(a, b)| {
                        e.clear();
                        e.extend(a.iter().zip(b).map(|(x, y)| q * x + y));
                        log2_mean_exp2(&e)
                    })
                    .collect()
            })
            .collect()
    }
}

/// `log2 S_g(q, j)` per scale, with `e = -j (q phi - g(phi))` accumulated in
/// the log domain. Scales without valid leaders, and `j = 0` where `phi` is
/// undefined, are left out.
pub fn generalized_log_structure(
    leaders: &LeaderPyramid,
    centering: &CenteringEstimate,
    q: f64,
    g: &GFunction,
) -> Result<Vec<(i32, f64)>> {
    g.validate()?;
    let c = Centered::new(leaders, centering, |_| true);
    if c.js.is_empty() {
        return Err(Error::InvalidInput("no scale has a valid leader".into()));
    }
    let rows = c.log_structure(&[q], g);
    Ok(c.js.iter().copied().zip(rows[0].iter().copied()).collect())
}

/// Generalized structure functions over a grid of `q`.
pub fn generalized_structure_functions(
    leaders: &LeaderPyramid,
    centering: &CenteringEstimate,
    q_grid: &[f64],
    g: &GFunction,
) -> Result<StructureFunctionTable> {
    g.validate()?;
    let c = Centered::new(leaders, centering, |_| true);
    table_from(&c, q_grid, g)
}

fn table_from(c: &Centered, q_grid: &[f64], g: &GFunction) -> Result<StructureFunctionTable> {
    if c.js.is_empty() {
        return Err(Error::InvalidInput("no scale has a valid leader".into()));
    }
    let rows = c.log_structure(q_grid, g);
    let n_j = c.a.iter().map(Vec::len).collect();
    StructureFunctionTable::from_values(q_grid.to_vec(), c.js.clone(), rows, n_j)
        .map(|t| t.with_log_var(c.a.iter().map(|r| sample_var(r)).collect(), c.dropped.clone()))
}

fn sample_var(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// Same regression as the classical exponents, tagged with `g`.
pub fn generalized_scaling_exponents(
    table: &StructureFunctionTable,
    g: &GFunction,
    j1: i32,
    j2: i32,
    weighted: bool,
) -> Result<ScalingFunction> {
    let mut z = scaling_exponents(table, j1, j2, weighted)?;
    z.g = Some(*g);
    Ok(z)
}

/// `L_g(h) = min_q (d + q h - zeta_g(q)) - g(h)`.
pub fn generalized_spectrum(zeta_g: &ScalingFunction, g: &GFunction, h_grid: &[f64], d: usize) -> Result<SpectrumCurve> {
    if zeta_g.q.is_empty() || zeta_g.zeta.iter().any(|z| !z.is_finite()) {
        return Err(Error::InvalidInput("scaling function must be finite and nonempty".into()));
    }
    let values = h_grid
        .iter()
        .map(|&h| legendre_min(&zeta_g.q, &zeta_g.zeta, h, d as f64) - g.eval(h))
        .collect();
    let (lo, hi) = q_bounds(&zeta_g.q);
    Ok(SpectrumCurve {
        estimator: Estimator::Generalized,
        d,
        params: SpectrumParams {
            gamma: Some(g.gamma),
            delta: (g.gamma != 0.0).then_some(g.delta),
            q_range: Some((lo, hi)),
            j1: Some(zeta_g.j1),
            j2: Some(zeta_g.j2),
            nvm: None,
        },
        h: h_grid.to_vec(),
        values,
    })
}

fn q_bounds(q: &[f64]) -> (f64, f64) {
    let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Family of lifting functions `g_{gamma, delta}` and the `q` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GmfParameterGrid {
    pub gammas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub q_grid: Vec<f64>,
    pub shape: GShape,
}

impl GmfParameterGrid {
    pub fn validate(&self) -> Result<()> {
        if !self.gammas.contains(&0.0) {
            return Err(crate::error::param("gamma", "the set must contain 0"));
        }
        if self.gammas.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(crate::error::param("gamma", "values must be finite and >= 0"));
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !d.is_finite()) {
            return Err(crate::error::param("delta", "need at least one finite value"));
        }
        if self.q_grid.is_empty() || self.q_grid.iter().any(|q| !q.is_finite()) {
            return Err(crate::error::param("q", "need at least one finite value"));
        }
        Ok(())
    }

    /// Every `(gamma, delta)` member. `gamma = 0` appears once since `delta`
    /// has no effect on it.
    pub fn members(&self) -> Vec<GFunction> {
        let mut out = Vec::new();
        for &gamma in &self.gammas {
            if gamma == 0.0 {
                out.push(GFunction { shape: self.shape, gamma: 0.0, delta: 0.0 });
            } else {
                out.extend(self.deltas.iter().map(|&delta| GFunction { shape: self.shape, gamma, delta }));
            }
        }
        out
    }
}

pub const DEFAULT_GAMMAS: [f64; 6] = [0.0, 5.0, 10.0, 100.0, 200.0, 500.0];

/// Default family: `gamma in {0, 5, 10, 100, 200, 500}`, 21 shifts spanning
/// `h_mode +- 0.3`, `q` from -4 to 4 in steps of 0.25, parabolic `g`.
pub fn default_parameter_grid(centering: &CenteringEstimate) -> GmfParameterGrid {
    GmfParameterGrid {
        gammas: DEFAULT_GAMMAS.to_vec(),
        deltas: delta_grid(centering.h_mode, 0.3, 21),
        q_grid: uniform_grid(-4.0, 0.25, 4.0).expect("static grid"),
        shape: GShape::Parabola,
    }
}

/// `count` evenly spaced shifts on `[center - half_width, center + half_width]`.
pub fn delta_grid(center: f64, half_width: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![center];
    }
    let step = 2.0 * half_width / (count - 1) as f64;
    (0..count).map(|i| center - half_width + i as f64 * step).collect()
}

/// One member of the family with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub g: GFunction,
    pub zeta: ScalingFunction,
    pub spectrum: SpectrumCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResult {
    pub centering: CenteringEstimate,
    pub classical: SpectrumCurve,
    pub classical_zeta: ScalingFunction,
    pub members: Vec<Member>,
    pub envelope: SpectrumCurve,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnvelopeOptions {
    /// Centering fit range; defaults to the regression range.
    pub centering_fit: Option<FitRange>,
    pub weighted: bool,
}

/// Classical spectrum, every generalized member, and their pointwise minimum.
pub fn envelope_estimate(
    leaders: &LeaderPyramid,
    grid: &GmfParameterGrid,
    fit: FitRange,
    h_grid: &[f64],
    d: usize,
) -> Result<EnvelopeResult> {
    envelope_estimate_with(leaders, grid, fit, h_grid, d, EnvelopeOptions::default())
}

pub fn envelope_estimate_with(
    leaders: &LeaderPyramid,
    grid: &GmfParameterGrid,
    fit: FitRange,
    h_grid: &[f64],
    d: usize,
    options: EnvelopeOptions,
) -> Result<EnvelopeResult> {
    grid.validate()?;
    if h_grid.is_empty() {
        return Err(Error::InvalidInput("empty h grid".into()));
    }
    let cfit = options.centering_fit.unwrap_or(fit);
    let centering = estimate_centering(leaders, cfit.j1, cfit.j2)?;

    let classical_table = structure_functions(leaders, &grid.q_grid)?;
    let classical_zeta = scaling_exponents(&classical_table, fit.j1, fit.j2, options.weighted)?;
    let classical = crate::classic::legendre_spectrum(&classical_zeta, h_grid, d)?;

    // Only scales inside the regression range influence the members.
    let centered = Centered::new(leaders, &centering, |j| fit.contains(j));
    let probe = table_from(&centered, &grid.q_grid[..1], &GFunction::zero())?;
    fit_weights(&probe, fit.j1, fit.j2, options.weighted)?;

    let members: Vec<Member> = grid
        .members()
        .par_iter()
        .map(|g| -> Result<Member> {
            let table = table_from(&centered, &grid.q_grid, g)?;
            let zeta = generalized_scaling_exponents(&table, g, fit.j1, fit.j2, options.weighted)?;
            let spectrum = generalized_spectrum(&zeta, g, h_grid, d)?;
            Ok(Member { g: *g, zeta, spectrum })
        })
        .collect::<Result<_>>()?;

    let mut values = vec![f64::INFINITY; h_grid.len()];
    for m in &members {
        for (v, &w) in values.iter_mut().zip(&m.spectrum.values) {
            *v = v.min(w);
        }
    }
    let (lo, hi) = q_bounds(&grid.q_grid);
    let envelope = SpectrumCurve {
        estimator: Estimator::Envelope,
        d,
        params: SpectrumParams {
            q_range: Some((lo, hi)),
            j1: Some(fit.j1),
            j2: Some(fit.j2),
            ..Default::default()
        },
        h: h_grid.to_vec(),
        values,
    };
    Ok(EnvelopeResult { centering, classical, classical_zeta, members, envelope })
}
