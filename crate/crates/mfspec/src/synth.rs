//! Synthetic multifractal processes with known spectra.
//!
//! Every generator is a pure function of its parameters and a 64-bit seed.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{param, Error, Result};
use crate::transform::{CoefficientPyramid, Normalization, Scale};

/// Process description; sizes must be powers of two.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessSpec {
    LevyBrownian { n: usize, alpha: f64 },
    Dwc { levels: usize, w: f64 },
    DwcThresholded { levels: usize, w: f64, theta: f64 },
    Mrw1d { n: usize, h: f64, lambda2: f64 },
    Mrw2d { rows: usize, cols: usize, h: f64, lambda2: f64 },
    /// Pieces joined along `axis` (0 = rows stacked, 1 = side by side; 1D uses 0).
    Concat { pieces: Vec<ProcessSpec>, axis: usize },
}

/// Generated data.
#[derive(Debug, Clone, PartialEq)]
pub enum Realization {
    Signal(Vec<f64>),
    Image { rows: usize, cols: usize, data: Vec<f64> },
    Pyramid(CoefficientPyramid),
}

impl ProcessSpec {
    pub fn dim(&self) -> usize {
        match self {
            ProcessSpec::Mrw2d { .. } => 2,
            ProcessSpec::Concat { pieces, .. } => pieces.first().map_or(1, ProcessSpec::dim),
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ProcessSpec::LevyBrownian { n, alpha } => {
                check_alpha(alpha)?;
                check_dyadic("n", n)
            }
            ProcessSpec::Dwc { levels, w } => {
                check_w(w)?;
                check_levels(levels)
            }
            ProcessSpec::DwcThresholded { levels, w, theta } => {
                check_w(w)?;
                check_levels(levels)?;
                check_theta(theta)
            }
            ProcessSpec::Mrw1d { n, h, lambda2 } => {
                check_mrw(h, lambda2)?;
                check_dyadic("n", n)
            }
            ProcessSpec::Mrw2d { rows, cols, h, lambda2 } => {
                check_mrw(h, lambda2)?;
                check_dyadic("rows", rows)?;
                check_dyadic("cols", cols)
            }
            ProcessSpec::Concat { ref pieces, axis } => {
                if pieces.is_empty() {
                    return Err(Error::InvalidInput("concat needs at least one piece".into()));
                }
                for p in pieces {
                    p.validate()?;
                    if matches!(p, ProcessSpec::Dwc { .. } | ProcessSpec::DwcThresholded { .. } | ProcessSpec::Concat { .. }) {
                        return Err(Error::InvalidInput("concat pieces must be sampled processes".into()));
                    }
                }
                let dim = pieces[0].dim();
                if pieces.iter().any(|p| p.dim() != dim) {
                    return Err(Error::InvalidInput("concat pieces differ in dimension".into()));
                }
                if dim == 1 && axis != 0 || axis > 1 {
                    return Err(param("axis", format!("{axis} is not valid for {dim}D pieces")));
                }
                if dim == 2 {
                    let shapes: Vec<(usize, usize)> = pieces.iter().map(|p| p.shape()).collect();
                    let ok = shapes.iter().all(|s| if axis == 0 { s.1 == shapes[0].1 } else { s.0 == shapes[0].0 });
                    if !ok {
                        return Err(Error::InvalidInput("concat pieces have mismatched sizes".into()));
                    }
                }
                Ok(())
            }
        }
    }

    /// Output shape `(rows, cols)`; `rows = 1` for signals and cascades.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            ProcessSpec::LevyBrownian { n, .. } | ProcessSpec::Mrw1d { n, .. } => (1, *n),
            ProcessSpec::Dwc { levels, .. } | ProcessSpec::DwcThresholded { levels, .. } => (1, 1 << levels),
            ProcessSpec::Mrw2d { rows, cols, .. } => (*rows, *cols),
            ProcessSpec::Concat { pieces, axis } => {
                let shapes = pieces.iter().map(ProcessSpec::shape);
                if pieces.first().map_or(1, ProcessSpec::dim) == 1 {
                    (1, shapes.map(|s| s.1).sum())
                } else if *axis == 0 {
                    let s0 = pieces[0].shape();
                    (shapes.map(|s| s.0).sum(), s0.1)
                } else {
                    let s0 = pieces[0].shape();
                    (s0.0, shapes.map(|s| s.1).sum())
                }
            }
        }
    }

    pub fn generate(&self, seed: u64) -> Result<Realization> {
        self.validate()?;
        match *self {
            ProcessSpec::LevyBrownian { n, alpha } => gen_levy_brownian(n, alpha, seed).map(Realization::Signal),
            ProcessSpec::Dwc { levels, w } => gen_dwc(levels, w).map(Realization::Pyramid),
            ProcessSpec::DwcThresholded { levels, w, theta } => {
                threshold_dwc(&gen_dwc(levels, w)?, theta).map(Realization::Pyramid)
            }
            ProcessSpec::Mrw1d { n, h, lambda2 } => gen_mrw1d(n, h, lambda2, seed).map(Realization::Signal),
            ProcessSpec::Mrw2d { rows, cols, h, lambda2 } => {
                gen_mrw2d(rows, cols, h, lambda2, seed).map(|data| Realization::Image { rows, cols, data })
            }
            ProcessSpec::Concat { ref pieces, axis } => concat(pieces, axis, seed),
        }
    }

    pub fn theory(&self) -> Result<TheorySpectrum> {
        self.validate()?;
        Ok(match *self {
            ProcessSpec::LevyBrownian { alpha, .. } => theory_levy(alpha)?,
            ProcessSpec::Dwc { w, .. } => theory_dwc(w)?,
            ProcessSpec::DwcThresholded { w, theta, .. } => theory_dwc_thresholded(w, theta)?,
            ProcessSpec::Mrw1d { h, lambda2, .. } => theory_mrw(h, lambda2, 1)?,
            ProcessSpec::Mrw2d { h, lambda2, .. } => theory_mrw(h, lambda2, 2)?,
            ProcessSpec::Concat { ref pieces, .. } => {
                theory_sup(&pieces.iter().map(ProcessSpec::theory).collect::<Result<Vec<_>>>()?)?
            }
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(param("alpha", format!("must lie in (0, 2), got {alpha}")))
    }
}

fn check_w(w: f64) -> Result<()> {
    if w > 0.0 && w < 1.0 {
        Ok(())
    } else {
        Err(param("w", format!("must lie in (0, 1), got {w}")))
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(param("theta", format!("must be > 0, got {theta}")))
    }
}

fn check_levels(levels: usize) -> Result<()> {
    if (1..=30).contains(&levels) {
        Ok(())
    } else {
        Err(param("levels", format!("must lie in 1..=30, got {levels}")))
    }
}

fn check_mrw(h: f64, lambda2: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(param("H", format!("must lie in (0, 1), got {h}")));
    }
    if !(lambda2 > 0.0 && lambda2.is_finite()) {
        return Err(param("lambda2", format!("must be > 0, got {lambda2}")));
    }
    Ok(())
}

fn check_dyadic(name: &'static str, n: usize) -> Result<()> {
    if n >= 2 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(param(name, format!("must be a power of two >= 2, got {n}")))
    }
}

/// Seed for piece or realization `index` derived from `master`.
pub fn sub_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x6a09_e667_f3bc_c909)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric unit-scale alpha-stable variate (Chambers-Mallows-Stuck).
fn stable_sample<R: Rng>(alpha: f64, r: &mut R) -> f64 {
    let v = r.random_range(-FRAC_PI_2..FRAC_PI_2);
    let w: f64 = Exp1.sample(r);
    if (alpha - 1.0).abs() < 1e-12 {
        return v.tan();
    }
    let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    a * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Weights of the two components of [`gen_levy_components`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyComponents {
    pub stable: f64,
    pub brownian: f64,
}

/// Symmetric alpha-stable motion plus an independent Brownian motion, both
/// at unit scale over the time span `[0, 1]` sampled at `n` points.
pub fn gen_levy_brownian(n: usize, alpha: f64, seed: u64) -> Result<Vec<f64>> {
    gen_levy_components(n, alpha, seed, LevyComponents { stable: 1.0, brownian: 1.0 })
}

/// Path built from the increments `stable * dt^(1/alpha) S_k + brownian * dt^(1/2) G_k`
/// with `dt = 1/n`, `S_k` unit stable and `G_k` standard normal.
///
/// The mean increment is removed so that the path closes on itself, which
/// keeps the periodic wavelet transform free of a jump at the border.
pub fn gen_levy_components(n: usize, alpha: f64, seed: u64, c: LevyComponents) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    check_dyadic("n", n)?;
    let mut r = rng(seed);
    let dt = 1.0 / n as f64;
    let (cs, cb) = (c.stable * dt.powf(1.0 / alpha), c.brownian * dt.sqrt());
    let inc: Vec<f64> = (0..n)
        .map(|_| {
            let s = stable_sample(alpha, &mut r);
            let g: f64 = StandardNormal.sample(&mut r);
            cs * s + cb * g
        })
        .collect();
    Ok(closed_path(&inc))
}

/// Exclusive cumulative sum of increments with their mean removed.
fn closed_path(inc: &[f64]) -> Vec<f64> {
    let mean = inc.iter().sum::<f64>() / inc.len() as f64;
    let mut x = Vec::with_capacity(inc.len());
    let mut acc = 0.0;
    for &v in inc {
        x.push(acc);
        acc += v - mean;
    }
    x
}

/// Closed-form spectrum of a reference process; `-inf` outside the support.
#[derive(Debug, Clone, PartialEq)]
pub enum TheorySpectrum {
    Levy { alpha: f64 },
    Dwc { w: f64 },
    DwcThresholded { w: f64, theta: f64 },
    Mrw { h: f64, lambda2: f64, d: usize },
    Sup(Vec<TheorySpectrum>),
}

impl TheorySpectrum {
    pub fn dim(&self) -> usize {
        match self {
            TheorySpectrum::Mrw { d, .. } => *d,
            TheorySpectrum::Sup(v) => v.first().map_or(1, TheorySpectrum::dim),
            _ => 1,
        }
    }

    pub fn eval(&self, h: f64) -> f64 {
        match *self {
            TheorySpectrum::Levy { alpha } => {
                if (0.0..0.5).contains(&h) {
                    alpha * h
                } else if h == 0.5 {
                    1.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            TheorySpectrum::Dwc { w } => dwc_spectrum(w, h),
            TheorySpectrum::DwcThresholded { w, theta } => {
                let base = dwc_spectrum(w, h);
                let (hmin, hmax) = dwc_support(w);
                if !(theta > hmin && theta <= hmax) {
                    return base;
                }
                // Preimage of h under u -> theta (u - hmin) / (theta - hmin) on [theta, hmax].
                let u = hmin + h * (theta - hmin) / theta;
                let moved = if u >= theta && u <= hmax { dwc_spectrum(w, u) } else { f64::NEG_INFINITY };
                base.max(moved)
            }
            TheorySpectrum::Mrw { h: hh, lambda2, d } => {
                let c1 = hh + lambda2 / 2.0;
                d as f64 - (h - c1) * (h - c1) / (2.0 * lambda2)
            }
            TheorySpectrum::Sup(ref v) => v.iter().map(|t| t.eval(h)).fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Interval outside which the spectrum is `-inf`.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            TheorySpectrum::Levy { .. } => (0.0, 0.5),
            TheorySpectrum::Dwc { w } => dwc_support(w),
            TheorySpectrum::DwcThresholded { w, theta } => {
                let (hmin, hmax) = dwc_support(w);
                if theta > hmin && theta <= hmax {
                    (hmin, hmax.max(theta * (hmax - hmin) / (theta - hmin)))
                } else {
                    (hmin, hmax)
                }
            }
            TheorySpectrum::Mrw { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            TheorySpectrum::Sup(ref v) => v.iter().map(TheorySpectrum::support).fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(a, b), (c, d)| (a.min(c), b.max(d)),
            ),
        }
    }

    /// True for the single-point spectrum of the symmetric cascade.
    pub fn is_degenerate(&self) -> bool {
        matches!(*self, TheorySpectrum::Dwc { w } | TheorySpectrum::DwcThresholded { w, .. } if w == 0.5)
    }

    pub fn sample(&self, h_grid: &[f64]) -> Vec<f64> {
        h_grid.iter().map(|&h| self.eval(h)).collect()
    }
}

pub fn theory_levy(alpha: f64) -> Result<TheorySpectrum> {
    check_alpha(alpha)?;
    Ok(TheorySpectrum::Levy { alpha })
}

fn dwc_support(w: f64) -> (f64, f64) {
    let a = -(1.0 - w).log2();
    let b = -w.log2();
    (a.min(b), a.max(b))
}

/// Binary entropy form of the cascade spectrum in terms of
/// `alpha(h) = (h + log2(1 - w)) / (log2(1 - w) - log2 w)`.
fn dwc_spectrum(w: f64, h: f64) -> f64 {
    if w == 0.5 {
        return if (h - 1.0).abs() <= 1e-12 { 1.0 } else { f64::NEG_INFINITY };
    }
    let l1 = (1.0 - w).log2();
    let a = (h + l1) / (l1 - w.log2());
    let tol = 1e-12;
    if !(-tol..=1.0 + tol).contains(&a) {
        return f64::NEG_INFINITY;
    }
    let a = a.clamp(0.0, 1.0);
    let xlx = |x: f64| if x <= 0.0 { 0.0 } else { x * x.log2() };
    -xlx(a) - xlx(1.0 - a)
}

pub fn theory_dwc(w: f64) -> Result<TheorySpectrum> {
    check_w(w)?;
    Ok(TheorySpectrum::Dwc { w })
}

/// Spectrum of the thresholded cascade: the supremum of the cascade spectrum
/// and its composition with the inverse of the increasing map
/// `u -> theta (u - h_min) / (theta - h_min)` defined on `[theta, h_max]`.
/// When `theta` lies outside `(h_min, h_max]` the map is undefined and the
/// plain cascade spectrum is returned.
pub fn theory_dwc_thresholded(w: f64, theta: f64) -> Result<TheorySpectrum> {
    check_w(w)?;
    check_theta(theta)?;
    Ok(TheorySpectrum::DwcThresholded { w, theta })
}

pub fn theory_mrw(h: f64, lambda2: f64, d: usize) -> Result<TheorySpectrum> {
    check_mrw(h, lambda2)?;
    if d != 1 && d != 2 {
        return Err(param("d", format!("must be 1 or 2, got {d}")));
    }
    Ok(TheorySpectrum::Mrw { h, lambda2, d })
}

pub fn theory_sup(spectra: &[TheorySpectrum]) -> Result<TheorySpectrum> {
    if spectra.is_empty() {
        return Err(Error::InvalidInput("no spectra to combine".into()));
    }
    if spectra.len() == 1 {
        return Ok(spectra[0].clone());
    }
    Ok(TheorySpectrum::Sup(spectra.to_vec()))
}

/// Binomial cascade with values already L1-normalized: the root at scale 0
/// is 1 and the children of `c` are `w c` and `(1 - w) c`.
pub fn gen_dwc(levels: usize, w: f64) -> Result<CoefficientPyramid> {
    check_w(w)?;
    check_levels(levels)?;
    let mut scales = vec![Scale::new_1d(0, vec![1.0])];
    let mut cur = vec![1.0];
    for j in 1..=levels {
        let next: Vec<f64> = cur.iter().flat_map(|&c| [w * c, (1.0 - w) * c]).collect();
        scales.push(Scale::new_1d(j as i32, next.clone()));
        cur = next;
    }
    CoefficientPyramid::from_scales(1, Normalization::L1, scales)
}

/// Hard threshold: coefficients with `|c| < 2^(-theta j)` are set to zero.
pub fn threshold_dwc(pyramid: &CoefficientPyramid, theta: f64) -> Result<CoefficientPyramid> {
    check_theta(theta)?;
    Ok(pyramid.map_coefficients(|j, c| if c.abs() < (-theta * j as f64).exp2() { 0.0 } else { c }))
}

/// Log-correlated covariance `lambda2 * ln+(l / (dist + 1))`.
fn log_cov(lambda2: f64, l: f64, dist: f64) -> f64 {
    let v = (l / (dist + 1.0)).ln();
    if v > 0.0 { lambda2 * v } else { 0.0 }
}

fn fft_inplace(planner: &mut FftPlanner<f64>, data: &mut [Complex64], inverse: bool) {
    let fft = if inverse { planner.plan_fft_inverse(data.len()) } else { planner.plan_fft_forward(data.len()) };
    fft.process(data);
}

fn fft2(planner: &mut FftPlanner<f64>, data: &mut [Complex64], rows: usize, cols: usize, inverse: bool) {
    let row_fft = if inverse { planner.plan_fft_inverse(cols) } else { planner.plan_fft_forward(cols) };
    for row in data.chunks_exact_mut(cols) {
        row_fft.process(row);
    }
    let col_fft = if inverse { planner.plan_fft_inverse(rows) } else { planner.plan_fft_forward(rows) };
    let mut col = vec![Complex64::new(0.0, 0.0); rows];
    for x in 0..cols {
        for y in 0..rows {
            col[y] = data[y * cols + x];
        }
        col_fft.process(&mut col);
        for y in 0..rows {
            data[y * cols + x] = col[y];
        }
    }
}

/// Square roots of circulant eigenvalues for a stationary covariance given
/// on the periodic grid `rows x cols`. Fails if a significantly negative
/// eigenvalue shows up.
fn circulant_sqrt(planner: &mut FftPlanner<f64>, rows: usize, cols: usize, cov: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    let mut c: Vec<Complex64> = (0..rows * cols)
        .map(|i| {
            let (y, x) = (i / cols, i % cols);
            let dy = y.min(rows - y) as f64;
            let dx = x.min(cols - x) as f64;
            Complex64::new(cov((dy * dy + dx * dx).sqrt()), 0.0)
        })
        .collect();
    if rows == 1 {
        fft_inplace(planner, &mut c, false);
    } else {
        fft2(planner, &mut c, rows, cols, false);
    }
    let max = c.iter().map(|v| v.re).fold(0.0, f64::max);
    let min = c.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
    if min < -1e-9 * max.max(1.0) {
        return Err(Error::Embedding(min));
    }
    Ok(c.iter().map(|v| v.re.max(0.0).sqrt()).collect())
}

/// Gaussian field with the log-correlated covariance and mean
/// `-lambda2 ln l`, on a `rows x cols` periodic grid. Tries the direct
/// embedding first and a doubled grid (cropped back) if that is not
/// positive semidefinite.
fn log_correlated_field<R: Rng>(
    planner: &mut FftPlanner<f64>,
    rows: usize,
    cols: usize,
    lambda2: f64,
    l: f64,
    r: &mut R,
) -> Result<Vec<f64>> {
    let cov = |d: f64| log_cov(lambda2, l, d);
    let (er, ec, sq) = match circulant_sqrt(planner, rows, cols, cov) {
        Ok(sq) => (rows, cols, sq),
        Err(_) => {
            let er = if rows == 1 { 1 } else { 2 * rows };
            (er, 2 * cols, circulant_sqrt(planner, er, 2 * cols, cov)?)
        }
    };
    let m = er * ec;
    let mut z: Vec<Complex64> = (0..m).map(|_| Complex64::new(StandardNormal.sample(r), 0.0)).collect();
    if er == 1 {
        fft_inplace(planner, &mut z, false);
    } else {
        fft2(planner, &mut z, er, ec, false);
    }
    for (v, s) in z.iter_mut().zip(&sq) {
        *v *= *s;
    }
    if er == 1 {
        fft_inplace(planner, &mut z, true);
    } else {
        fft2(planner, &mut z, er, ec, true);
    }
    let mean = -lambda2 * l.ln();
    let mut out = Vec::with_capacity(rows * cols);
    for y in 0..rows {
        for x in 0..cols {
            out.push(z[y * ec + x].re / m as f64 + mean);
        }
    }
    Ok(out)
}

/// White Gaussian noise modulated by `exp(omega)`.
fn modulated_noise(planner: &mut FftPlanner<f64>, rows: usize, cols: usize, lambda2: f64, seed: u64) -> Result<Vec<f64>> {
    let mut r = rng(seed);
    let side = if rows == 1 { cols } else { rows.min(cols) };
    let l = side as f64 / 8.0;
    let omega = log_correlated_field(planner, rows, cols, lambda2, l, &mut r)?;
    Ok(omega
        .iter()
        .map(|&o| {
            let e: f64 = StandardNormal.sample(&mut r);
            e * o.exp()
        })
        .collect())
}

/// Multiplies the spectrum of `x` by `|f|^(-order)` (frequency in cycles
/// per sample, zero mode removed) and returns the real part.
fn fractional_integrate(planner: &mut FftPlanner<f64>, x: &[f64], rows: usize, cols: usize, order: f64) -> Vec<f64> {
    let m = rows * cols;
    let mut z: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let freq = |k: usize, n: usize| {
        let k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        k / n as f64
    };
    if rows == 1 {
        fft_inplace(planner, &mut z, false);
    } else {
        fft2(planner, &mut z, rows, cols, false);
    }
    for (i, v) in z.iter_mut().enumerate() {
        let fy = if rows == 1 { 0.0 } else { freq(i / cols, rows) };
        let fx = freq(i % cols, cols);
        let f = (fx * fx + fy * fy).sqrt();
        *v = if f == 0.0 { Complex64::new(0.0, 0.0) } else { *v * f.powf(-order) };
    }
    if rows == 1 {
        fft_inplace(planner, &mut z, true);
    } else {
        fft2(planner, &mut z, rows, cols, true);
    }
    z.iter().map(|v| v.re / m as f64).collect()
}

/// Fractional integration orders giving the scaling function
/// `zeta(q) = (H + lambda2/2) q - lambda2 q^2 / 2`, so that the spectrum is
/// the parabola with vertex at `H + lambda2/2`.
fn mrw_order(h: f64, lambda2: f64, d: usize) -> f64 {
    if d == 1 {
        h - 0.5 - lambda2 / 2.0
    } else {
        h + 1.0 - lambda2 / 2.0
    }
}

/// Amplitude factor expressing a path on `n` samples on the unit interval,
/// so that pieces of different sizes and regularities are comparable.
fn unit_scale(n: f64, h: f64, lambda2: f64) -> f64 {
    n.powf(-(h - lambda2 / 2.0))
}

/// 1D multifractal random walk.
///
/// Gaussian white noise is modulated by `exp(omega)` with `omega` a
/// log-correlated Gaussian process (integral scale `n/8`) synthesized by
/// circulant embedding, then fractionally integrated in Fourier and summed.
/// The path is periodic and starts at 0.
pub fn gen_mrw1d(n: usize, h: f64, lambda2: f64, seed: u64) -> Result<Vec<f64>> {
    check_mrw(h, lambda2)?;
    check_dyadic("n", n)?;
    let mut planner = FftPlanner::new();
    let noise = modulated_noise(&mut planner, 1, n, lambda2, seed)?;
    let inc = fractional_integrate(&mut planner, &noise, 1, n, mrw_order(h, lambda2, 1));
    let s = unit_scale(n as f64, h, lambda2);
    Ok(closed_path(&inc).into_iter().map(|v| v * s).collect())
}

/// 2D multifractal random walk on a periodic `rows x cols` grid (row-major).
pub fn gen_mrw2d(rows: usize, cols: usize, h: f64, lambda2: f64, seed: u64) -> Result<Vec<f64>> {
    check_mrw(h, lambda2)?;
    check_dyadic("rows", rows)?;
    check_dyadic("cols", cols)?;
    let mut planner = FftPlanner::new();
    let noise = modulated_noise(&mut planner, rows, cols, lambda2, seed)?;
    let s = unit_scale(((rows * cols) as f64).sqrt(), h, lambda2);
    Ok(fractional_integrate(&mut planner, &noise, rows, cols, mrw_order(h, lambda2, 2))
        .into_iter()
        .map(|v| v * s)
        .collect())
}

/// Concatenates independently seeded pieces.
///
/// 1D pieces are joined continuously, each starting where the previous one
/// ends. 2D MRW pieces are joined before integration: each piece's modulated
/// noise is placed on the full canvas, integrated there with its own order,
/// and the results are summed. This avoids a jump along the junction.
pub fn concat(pieces: &[ProcessSpec], axis: usize, seed: u64) -> Result<Realization> {
    let spec = ProcessSpec::Concat { pieces: pieces.to_vec(), axis };
    spec.validate()?;
    if spec.dim() == 1 {
        let mut out: Vec<f64> = Vec::new();
        for (i, p) in pieces.iter().enumerate() {
            let Realization::Signal(x) = p.generate(sub_seed(seed, i as u64))? else {
                return Err(Error::InvalidInput("1D concat needs signals".into()));
            };
            let shift = out.last().map_or(0.0, |&last| last - x[0]);
            out.extend(x.iter().map(|v| v + shift));
        }
        return Ok(Realization::Signal(out));
    }
    let (rows, cols) = spec.shape();
    let mut planner = FftPlanner::new();
    let mut total = vec![0.0; rows * cols];
    let (mut oy, mut ox) = (0usize, 0usize);
    for (i, p) in pieces.iter().enumerate() {
        let ProcessSpec::Mrw2d { rows: pr, cols: pc, h, lambda2 } = *p else {
            return Err(Error::InvalidInput("2D concat supports MRW pieces".into()));
        };
        let noise = modulated_noise(&mut planner, pr, pc, lambda2, sub_seed(seed, i as u64))?;
        let mut canvas = vec![0.0; rows * cols];
        for y in 0..pr {
            let dst = (oy + y) * cols + ox;
            canvas[dst..dst + pc].copy_from_slice(&noise[y * pc..(y + 1) * pc]);
        }
        let s = unit_scale(((rows * cols) as f64).sqrt(), h, lambda2);
        let field = fractional_integrate(&mut planner, &canvas, rows, cols, mrw_order(h, lambda2, 2));
        for (t, v) in total.iter_mut().zip(field) {
            *t += v * s;
        }
        if axis == 0 {
            oy += pr;
        } else {
            ox += pc;
        }
    }
    Ok(Realization::Image { rows, cols, data: total })
}
