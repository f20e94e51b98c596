//! Orthonormal periodic discrete wavelet transforms.
//!
//! Coefficients are stored with their orthonormal (L2) normalization; the
//! L1 renormalization used by wavelet leaders is applied in [`crate::leaders`].

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Daubechies lowpass filter together with its number of vanishing moments.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilter {
    taps: Vec<f64>,
    nvm: usize,
}

impl WaveletFilter {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn n_vanishing_moments(&self) -> usize {
        self.nvm
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Quadrature-mirror highpass, `g[k] = (-1)^k h[L-1-k]`.
    pub fn highpass(&self) -> Vec<f64> {
        let l = self.taps.len();
        (0..l)
            .map(|k| {
                let v = self.taps[l - 1 - k];
                if k % 2 == 0 { v } else { -v }
            })
            .collect()
    }
}

/// Minimum-phase Daubechies filter with `nvm` vanishing moments and `2*nvm` taps.
///
/// Built by spectral factorization: the roots of the Daubechies polynomial
/// `P(y) = sum_k C(N-1+k, k) y^k` are mapped to `z` through
/// `y = (2 - z - 1/z) / 4` and the root inside the unit circle is kept.
pub fn daubechies_filter(nvm: usize) -> Result<WaveletFilter> {
    if nvm == 0 || nvm > 10 {
        return Err(Error::UnsupportedFilter(nvm));
    }
    if nvm == 1 {
        let t = std::f64::consts::FRAC_1_SQRT_2;
        return Ok(WaveletFilter { taps: vec![t, t], nvm });
    }
    let coeffs: Vec<f64> = (0..nvm).map(|k| binomial(nvm - 1 + k, k)).collect();
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..nvm {
        poly = poly_mul(&poly, &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]);
    }
    for y in polynomial_roots(&coeffs) {
        let b = Complex64::new(2.0, 0.0) - 4.0 * y;
        let disc = (b * b - 4.0).sqrt();
        let z1 = (b + disc) / 2.0;
        let z2 = (b - disc) / 2.0;
        let z = if z1.norm() < z2.norm() { z1 } else { z2 };
        poly = poly_mul(&poly, &[Complex64::new(1.0, 0.0), -z]);
    }
    let mut taps: Vec<f64> = poly.iter().map(|c| c.re).collect();
    let s: f64 = taps.iter().sum();
    let scale = std::f64::consts::SQRT_2 / s;
    for t in &mut taps {
        *t *= scale;
    }
    Ok(WaveletFilter { taps, nvm })
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r.round()
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (k, &y) in b.iter().enumerate() {
            out[i + k] += x * y;
        }
    }
    out
}

/// Roots of `sum_k c[k] x^k` by Durand-Kerner iteration followed by Newton polishing.
fn polynomial_roots(c: &[f64]) -> Vec<Complex64> {
    let deg = c.len() - 1;
    let lead = c[deg];
    let monic: Vec<f64> = c.iter().map(|v| v / lead).collect();
    let eval = |x: Complex64| {
        let mut acc = Complex64::new(0.0, 0.0);
        for &a in monic.iter().rev() {
            acc = acc * x + a;
        }
        acc
    };
    let deriv = |x: Complex64| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &a) in monic.iter().enumerate().skip(1).rev() {
            acc = acc * x + a * k as f64;
        }
        acc
    };
    let radius = 1.0 + monic[..deg].iter().map(|v| v.abs()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..deg).map(|k| seed.powu(k as u32) * (radius / 2.0)).collect();
    for _ in 0..2000 {
        let mut change: f64 = 0.0;
        for i in 0..deg {
            let mut den = Complex64::new(1.0, 0.0);
            for k in 0..deg {
                if k != i {
                    den *= roots[i] - roots[k];
                }
            }
            let step = eval(roots[i]) / den;
            roots[i] -= step;
            change = change.max(step.norm());
        }
        if change < 1e-15 {
            break;
        }
    }
    for r in &mut roots {
        for _ in 0..4 {
            let d = deriv(*r);
            if d.norm() == 0.0 {
                break;
            }
            *r -= eval(*r) / d;
        }
    }
    roots
}

/// Whether stored coefficients are orthonormal DWT outputs or already
/// L1-normalized (as for prescribed cascades).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    L2,
    L1,
}

/// Detail coefficients at one dyadic scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Scale {
    j: i32,
    rows: usize,
    cols: usize,
    subbands: Vec<Vec<f64>>,
}

impl Scale {
    pub fn new_1d(j: i32, data: Vec<f64>) -> Self {
        Scale { j, rows: 1, cols: data.len(), subbands: vec![data] }
    }

    /// Three row-major subbands ordered (high-x/low-y, low-x/high-y, high-x/high-y).
    pub fn new_2d(j: i32, rows: usize, cols: usize, subbands: [Vec<f64>; 3]) -> Result<Self> {
        if subbands.iter().any(|s| s.len() != rows * cols) {
            return Err(Error::InvalidInput(format!("subband size does not match {rows}x{cols}")));
        }
        Ok(Scale { j, rows, cols, subbands: subbands.into() })
    }

    pub fn j(&self) -> i32 {
        self.j
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn subbands(&self) -> &[Vec<f64>] {
        &self.subbands
    }

    pub fn subband(&self, i: usize) -> &[f64] {
        &self.subbands[i]
    }
}

/// Wavelet coefficients of a 1D signal or 2D image at consecutive scales.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPyramid {
    dim: usize,
    shape: (usize, usize),
    /// Finest first.
    scales: Vec<Scale>,
    approx: Vec<f64>,
    approx_shape: (usize, usize),
    normalization: Normalization,
    filter_len: Option<usize>,
}

impl CoefficientPyramid {
    /// Hand-built pyramid. Scales may be given in any order but must be
    /// consecutive in `j`, with each finer scale twice as long per axis.
    pub fn from_scales(dim: usize, normalization: Normalization, mut scales: Vec<Scale>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidInput(format!("dimension must be 1 or 2, got {dim}")));
        }
        if scales.is_empty() {
            return Err(Error::InvalidInput("pyramid has no scales".into()));
        }
        scales.sort_by(|a, b| b.j.cmp(&a.j));
        let bands = if dim == 1 { 1 } else { 3 };
        for s in &scales {
            if s.subbands.len() != bands || (dim == 1 && s.rows != 1) {
                return Err(Error::InvalidInput(format!("scale {} does not match dimension {dim}", s.j)));
            }
        }
        for w in scales.windows(2) {
            let (fine, coarse) = (&w[0], &w[1]);
            let axis_ok = |f: usize, c: usize| f / 2 == c;
            let rows_ok = if dim == 1 { true } else { axis_ok(fine.rows, coarse.rows) };
            if fine.j != coarse.j + 1 || !rows_ok || !axis_ok(fine.cols, coarse.cols) {
                return Err(Error::InvalidInput(format!(
                    "scales {} and {} are not a dyadic pair",
                    coarse.j, fine.j
                )));
            }
        }
        let coarse = scales.last().expect("nonempty");
        let shape = if dim == 1 {
            (1, scales[0].cols * 2)
        } else {
            (scales[0].rows * 2, scales[0].cols * 2)
        };
        Ok(CoefficientPyramid {
            dim,
            shape,
            approx: Vec::new(),
            approx_shape: (if dim == 1 { 1 } else { coarse.rows }, coarse.cols),
            scales,
            normalization,
            filter_len: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sample shape `(rows, cols)` of the analysed data; `rows = 1` in 1D.
    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    /// Scales ordered finest first.
    pub fn scales(&self) -> &[Scale] {
        &self.scales
    }

    pub fn scale(&self, j: i32) -> Option<&Scale> {
        self.scales.iter().find(|s| s.j == j)
    }

    /// Scale at DWT level `l` (1 is finest).
    pub fn level(&self, l: usize) -> Option<&Scale> {
        l.checked_sub(1).and_then(|i| self.scales.get(i))
    }

    pub fn n_levels(&self) -> usize {
        self.scales.len()
    }

    pub fn finest_j(&self) -> i32 {
        self.scales[0].j
    }

    pub fn coarsest_j(&self) -> i32 {
        self.scales[self.scales.len() - 1].j
    }

    pub fn approx(&self) -> &[f64] {
        &self.approx
    }

    pub fn approx_shape(&self) -> (usize, usize) {
        self.approx_shape
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Filter length used to produce the pyramid, if it came from a transform.
    pub fn filter_len(&self) -> Option<usize> {
        self.filter_len
    }

    /// Factor turning a stored coefficient at scale `j` into its L1-normalized value.
    pub fn l1_factor(&self, j: i32) -> f64 {
        match self.normalization {
            Normalization::L2 => (self.dim as f64 * j as f64 / 2.0).exp2(),
            Normalization::L1 => 1.0,
        }
    }

    /// Copy with every detail coefficient `c` at scale `j` replaced by `f(j, c)`.
    pub fn map_coefficients(&self, f: impl Fn(i32, f64) -> f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.scales {
            let j = s.j;
            for band in &mut s.subbands {
                for c in band.iter_mut() {
                    *c = f(j, *c);
                }
            }
        }
        out
    }

    /// Sum of squares of all detail and approximation coefficients.
    pub fn energy(&self) -> f64 {
        let details: f64 = self
            .scales
            .iter()
            .flat_map(|s| s.subbands.iter())
            .flat_map(|b| b.iter())
            .map(|c| c * c)
            .sum();
        details + self.approx.iter().map(|c| c * c).sum::<f64>()
    }
}

/// Default decomposition depth: `floor(log2 N) - ceil(log2 len(taps))`.
pub fn default_levels(n: usize, filter: &WaveletFilter) -> usize {
    let taps_log = (filter.len() as f64).log2().ceil() as usize;
    floor_log2(n).saturating_sub(taps_log)
}

pub(crate) fn floor_log2(n: usize) -> usize {
    if n == 0 { 0 } else { (usize::BITS - 1 - n.leading_zeros()) as usize }
}

fn check_length(len: usize, levels: usize, taps: usize) -> Result<()> {
    let need = 1usize.checked_shl(levels as u32).and_then(|p| p.checked_mul(taps));
    match need {
        Some(need) if levels >= 1 && len >= need => Ok(()),
        _ => Err(Error::InsufficientLength { len, levels, taps }),
    }
}

/// One periodic analysis step; `a.len()` must be even.
fn analysis_step(a: &[f64], h: &[f64], g: &[f64], lo: &mut Vec<f64>, hi: &mut Vec<f64>) {
    let m = a.len();
    lo.clear();
    hi.clear();
    for n in 0..m / 2 {
        let (mut sl, mut sh) = (0.0, 0.0);
        for (k, (&hk, &gk)) in h.iter().zip(g).enumerate() {
            let v = a[(2 * n + k) % m];
            sl += hk * v;
            sh += gk * v;
        }
        lo.push(sl);
        hi.push(sh);
    }
}

/// Periodic orthonormal DWT of a 1D signal over `levels` levels.
///
/// When an intermediate approximation has odd length its last sample is
/// dropped, so level `l` holds `floor(N / 2^l)` coefficients.
pub fn dwt1d(signal: &[f64], filter: &WaveletFilter, levels: usize) -> Result<CoefficientPyramid> {
    check_length(signal.len(), levels, filter.len())?;
    let n = floor_log2(signal.len()) as i32;
    let h = filter.taps();
    let g = filter.highpass();
    let mut a = signal.to_vec();
    let mut scales = Vec::with_capacity(levels);
    let (mut lo, mut hi) = (Vec::new(), Vec::new());
    for l in 1..=levels {
        a.truncate(a.len() & !1);
        analysis_step(&a, h, &g, &mut lo, &mut hi);
        scales.push(Scale::new_1d(n - l as i32, hi.clone()));
        std::mem::swap(&mut a, &mut lo);
    }
    Ok(CoefficientPyramid {
        dim: 1,
        shape: (1, signal.len()),
        scales,
        approx_shape: (1, a.len()),
        approx: a,
        normalization: Normalization::L2,
        filter_len: Some(filter.len()),
    })
}

/// Inverse of [`dwt1d`] for pyramids whose levels all had even length.
pub fn idwt1d(pyramid: &CoefficientPyramid, filter: &WaveletFilter) -> Result<Vec<f64>> {
    if pyramid.dim != 1 || pyramid.approx.is_empty() {
        return Err(Error::InvalidInput("inverse transform needs a 1D transform pyramid".into()));
    }
    let h = filter.taps();
    let g = filter.highpass();
    let mut a = pyramid.approx.clone();
    for s in pyramid.scales.iter().rev() {
        let d = &s.subbands[0];
        if d.len() != a.len() {
            return Err(Error::InvalidInput("pyramid levels are not dyadic".into()));
        }
        let m = 2 * a.len();
        let mut out = vec![0.0; m];
        for n in 0..a.len() {
            for k in 0..h.len() {
                out[(2 * n + k) % m] += h[k] * a[n] + g[k] * d[n];
            }
        }
        a = out;
    }
    Ok(a)
}

/// Separable periodic orthonormal DWT of a row-major `rows x cols` image.
///
/// Subbands per scale: high-pass along x (columns) with low-pass along y,
/// low-pass along x with high-pass along y, then high-pass along both.
pub fn dwt2d(image: &[f64], rows: usize, cols: usize, filter: &WaveletFilter, levels: usize) -> Result<CoefficientPyramid> {
    if image.len() != rows * cols {
        return Err(Error::InvalidInput(format!(
            "image has {} samples, expected {rows}x{cols}",
            image.len()
        )));
    }
    check_length(rows.min(cols), levels, filter.len())?;
    let n = floor_log2(rows.min(cols)) as i32;
    let h = filter.taps();
    let g = filter.highpass();
    let (mut r, mut c) = (rows, cols);
    let mut a = image.to_vec();
    let mut scales = Vec::with_capacity(levels);
    let (mut lo, mut hi) = (Vec::new(), Vec::new());
    let mut line = Vec::new();
    for l in 1..=levels {
        let (r2, c2) = (r & !1, c & !1);
        let (hr, hc) = (r2 / 2, c2 / 2);
        // Filter along x: each row becomes [low | high] halves.
        let mut lx = vec![0.0; r2 * hc];
        let mut hx = vec![0.0; r2 * hc];
        for y in 0..r2 {
            line.clear();
            line.extend_from_slice(&a[y * c..y * c + c2]);
            analysis_step(&line, h, &g, &mut lo, &mut hi);
            lx[y * hc..(y + 1) * hc].copy_from_slice(&lo);
            hx[y * hc..(y + 1) * hc].copy_from_slice(&hi);
        }
        let mut ll = vec![0.0; hr * hc];
        let mut bands = [vec![0.0; hr * hc], vec![0.0; hr * hc], vec![0.0; hr * hc]];
        for x in 0..hc {
            line.clear();
            line.extend((0..r2).map(|y| lx[y * hc + x]));
            analysis_step(&line, h, &g, &mut lo, &mut hi);
            for y in 0..hr {
                ll[y * hc + x] = lo[y];
                bands[1][y * hc + x] = hi[y];
            }
            line.clear();
            line.extend((0..r2).map(|y| hx[y * hc + x]));
            analysis_step(&line, h, &g, &mut lo, &mut hi);
            for y in 0..hr {
                bands[0][y * hc + x] = lo[y];
                bands[2][y * hc + x] = hi[y];
            }
        }
        scales.push(Scale { j: n - l as i32, rows: hr, cols: hc, subbands: bands.into() });
        a = ll;
        r = hr;
        c = hc;
    }
    Ok(CoefficientPyramid {
        dim: 2,
        shape: (rows, cols),
        scales,
        approx: a,
        approx_shape: (r, c),
        normalization: Normalization::L2,
        filter_len: Some(filter.len()),
    })
}
