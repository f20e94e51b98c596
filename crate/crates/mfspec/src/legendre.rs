//! Legendre-Fenchel transforms of sampled functions by direct grid minimization.
//!
//! `-inf` marks points outside the support; such points never enter a minimum.

use rayon::prelude::*;

use crate::error::{param, Error, Result};

/// Values on a uniform, strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "grid has {} points but {} values",
                grid.len(),
                values.len()
            )));
        }
        check_uniform(&grid)?;
        if values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::InvalidInput("values must be finite or -inf".into()));
        }
        Ok(SampledFunction { grid, values })
    }

    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.iter().map(|&h| f(h)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        if self.grid.len() < 2 { 0.0 } else { self.grid[1] - self.grid[0] }
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

fn check_uniform(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Ok(());
    }
    let step = grid[1] - grid[0];
    let scale = grid.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for w in grid.windows(2) {
        let d = w[1] - w[0];
        if !(d > 0.0) || (d - step).abs() > 1e-12 * scale {
            return Err(Error::InvalidInput("grid must be uniform and strictly increasing".into()));
        }
    }
    Ok(())
}

/// Uniform grid `lo, lo + step, ..., hi` (inclusive when `hi` is on the lattice).
pub fn uniform_grid(lo: f64, step: f64, hi: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(param("grid", format!("bad range {lo}:{step}:{hi}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| lo + i as f64 * step).collect())
}

/// Lifting function `g`, either `-gamma (h - delta)^2` or `-gamma |h - delta|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GFunction {
    pub shape: GShape,
    pub gamma: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GShape {
    Parabola,
    AbsoluteValue,
}

impl GFunction {
    pub fn parabola(gamma: f64, delta: f64) -> Self {
        GFunction { shape: GShape::Parabola, gamma, delta }
    }

    pub fn absolute_value(gamma: f64, delta: f64) -> Self {
        GFunction { shape: GShape::AbsoluteValue, gamma, delta }
    }

    pub fn zero() -> Self {
        Self::parabola(0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(param("gamma", format!("must be finite and >= 0, got {}", self.gamma)));
        }
        if !self.delta.is_finite() {
            return Err(param("delta", "must be finite"));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, h: f64) -> f64 {
        if self.gamma == 0.0 {
            return 0.0;
        }
        let u = h - self.delta;
        match self.shape {
            GShape::Parabola => -self.gamma * u * u,
            GShape::AbsoluteValue => -self.gamma * u.abs(),
        }
    }
}

/// `min` over the finite entries of `f(x) + a(x)`, skipping `-inf` values.
fn finite_min(f: &SampledFunction, term: impl Fn(f64, f64) -> f64) -> f64 {
    let mut best = f64::INFINITY;
    for (&x, &v) in f.grid.iter().zip(&f.values) {
        if v == f64::NEG_INFINITY {
            continue;
        }
        let t = term(x, v);
        if t < best {
            best = t;
        }
    }
    best
}

fn require_finite(f: &SampledFunction) -> Result<()> {
    if f.values.iter().all(|&v| v == f64::NEG_INFINITY) {
        return Err(Error::InvalidInput("function has no finite value".into()));
    }
    Ok(())
}

/// `f*(q) = min_h (d + q h - f(h))`.
pub fn legendre_transform(f: &SampledFunction, q_grid: &[f64], d: f64) -> Result<SampledFunction> {
    require_finite(f)?;
    let values = q_grid.par_iter().map(|&q| finite_min(f, |h, v| d + q * h - v)).collect();
    SampledFunction::new(q_grid.to_vec(), values)
}

/// `f**(h) = min_q (d + q h - f*(q))` evaluated on the grid of `f`.
pub fn double_legendre(f: &SampledFunction, q_grid: &[f64], d: f64) -> Result<SampledFunction> {
    let star = legendre_transform(f, q_grid, d)?;
    let values = f.grid.par_iter().map(|&h| finite_min(&star, |q, s| d + q * h - s)).collect();
    SampledFunction::new(f.grid.clone(), values)
}

/// `(f + g)** - g`, the generalized Legendre spectrum of a sampled `f`.
pub fn lifted_double_legendre(f: &SampledFunction, g: &GFunction, q_grid: &[f64], d: f64) -> Result<SampledFunction> {
    g.validate()?;
    let lifted: Vec<f64> = f
        .grid
        .iter()
        .zip(&f.values)
        .map(|(&h, &v)| if v == f64::NEG_INFINITY { v } else { v + g.eval(h) })
        .collect();
    let lifted = SampledFunction::new(f.grid.clone(), lifted)?;
    let hull = double_legendre(&lifted, q_grid, d)?;
    let values = hull.grid.iter().zip(&hull.values).map(|(&h, &v)| v - g.eval(h)).collect();
    SampledFunction::new(hull.grid, values)
}

/// Pointwise minimum of curves sharing one grid.
pub fn pointwise_envelope(curves: &[SampledFunction]) -> Result<SampledFunction> {
    let first = curves.first().ok_or_else(|| Error::InvalidInput("no curves".into()))?;
    let mut values = first.values.clone();
    for c in &curves[1..] {
        let same = c.grid.len() == first.grid.len()
            && c.grid.iter().zip(&first.grid).all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0));
        if !same {
            return Err(Error::InvalidInput("curves are on different grids".into()));
        }
        for (v, &w) in values.iter_mut().zip(&c.values) {
            *v = v.min(w);
        }
    }
    SampledFunction::new(first.grid.clone(), values)
}

/// Nonconcave test spectrum made of two unit parabolas peaking at `h = -1` and `h = 1`.
pub fn double_parabola(h: f64) -> f64 {
    if -2.0 < h && h < 0.0 {
        1.0 - (h + 1.0) * (h + 1.0)
    } else if (0.0..=2.0).contains(&h) {
        1.0 - (h - 1.0) * (h - 1.0)
    } else {
        f64::NEG_INFINITY
    }
}

/// Closed-form generalized Legendre spectrum of [`double_parabola`] for
/// `g(h) = -gamma h^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleParabola {
    gamma: f64,
}

pub fn analytic_double_parabola(gamma: f64) -> Result<DoubleParabola> {
    if !(gamma >= 0.0) {
        return Err(param("gamma", format!("must be >= 0, got {gamma}")));
    }
    Ok(DoubleParabola { gamma })
}

impl DoubleParabola {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eval(&self, h: f64) -> f64 {
        let b = 1.0 / (1.0 + self.gamma);
        if h.abs() <= b {
            b + self.gamma * h * h
        } else {
            double_parabola(h)
        }
    }
}
