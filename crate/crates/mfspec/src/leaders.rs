//! Wavelet leaders: suprema of L1-normalized coefficients over the 3-cube
//! neighbourhood of each dyadic cube and all finer scales.

use crate::error::{param, Error, Result};
use crate::transform::CoefficientPyramid;

/// Leaders at one scale with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderScale {
    j: i32,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
    n_valid: usize,
}

impl LeaderScale {
    /// Builds a scale directly from leader values; zero and non-finite values are masked.
    pub fn new(j: i32, rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols || values.is_empty() {
            return Err(Error::InvalidInput(format!("scale {j}: {} values for {rows}x{cols}", values.len())));
        }
        let valid: Vec<bool> = values.iter().map(|&v| v > 0.0 && v.is_finite()).collect();
        let n_valid = valid.iter().filter(|&&v| v).count();
        Ok(LeaderScale { j, rows, cols, values, valid, n_valid })
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn n_valid(&self) -> usize {
        self.n_valid
    }

    /// Valid leader values in storage order.
    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().zip(&self.valid).filter(|(_, &ok)| ok).map(|(&v, _)| v)
    }

    /// `log2` of the valid leaders.
    pub fn log2_valid(&self) -> Vec<f64> {
        self.valid_values().map(f64::log2).collect()
    }
}

/// Leaders at consecutive scales, finest first.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderPyramid {
    dim: usize,
    scales: Vec<LeaderScale>,
}

impl LeaderPyramid {
    pub fn from_scales(dim: usize, mut scales: Vec<LeaderScale>) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::InvalidInput("leader pyramid has no scales".into()));
        }
        scales.sort_by(|a, b| b.j.cmp(&a.j));
        Ok(LeaderPyramid { dim, scales })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scales(&self) -> &[LeaderScale] {
        &self.scales
    }

    pub fn scale(&self, j: i32) -> Option<&LeaderScale> {
        self.scales.iter().find(|s| s.j == j)
    }

    pub fn finest_j(&self) -> i32 {
        self.scales[0].j
    }

    pub fn coarsest_j(&self) -> i32 {
        self.scales[self.scales.len() - 1].j
    }

    /// Multiplies every leader by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.scales {
            for v in &mut s.values {
                *v *= c;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LeaderOptions {
    /// Mask positions whose neighbourhood wraps around the periodic border,
    /// or whose finer-scale coefficients involve wrapped filter support.
    pub mask_border: bool,
}

pub fn leaders1d(pyramid: &CoefficientPyramid) -> Result<LeaderPyramid> {
    if pyramid.dim() != 1 {
        return Err(Error::InvalidInput("leaders1d needs a 1D pyramid".into()));
    }
    compute_leaders(pyramid, LeaderOptions::default())
}

pub fn leaders2d(pyramid: &CoefficientPyramid) -> Result<LeaderPyramid> {
    if pyramid.dim() != 2 {
        return Err(Error::InvalidInput("leaders2d needs a 2D pyramid".into()));
    }
    compute_leaders(pyramid, LeaderOptions::default())
}

/// Bottom-up leader computation for either dimension.
///
/// A running maximum over each cube and its descendants is propagated from the
/// finest scale upwards, then combined over the periodic 3 (or 3x3) neighbourhood.
pub fn compute_leaders(pyramid: &CoefficientPyramid, options: LeaderOptions) -> Result<LeaderPyramid> {
    if pyramid.scales().iter().any(|s| s.is_empty()) {
        return Err(Error::InvalidInput("pyramid contains an empty scale".into()));
    }
    let dim = pyramid.dim();
    let mut out = Vec::with_capacity(pyramid.n_levels());
    let mut below: Option<(Vec<f64>, usize, usize)> = None;
    for s in pyramid.scales() {
        let (rows, cols) = (s.rows(), s.cols());
        let f = pyramid.l1_factor(s.j());
        let mut m = vec![0.0f64; rows * cols];
        for band in s.subbands() {
            for (mi, &c) in m.iter_mut().zip(band) {
                *mi = mi.max(f * c.abs());
            }
        }
        if let Some((fine, fr, fc)) = &below {
            for y in 0..rows {
                for x in 0..cols {
                    let mut best = m[y * cols + x];
                    let ys: &[usize] = if dim == 1 { &[0] } else { &[2 * y, 2 * y + 1] };
                    for &yy in ys {
                        if yy >= *fr {
                            continue;
                        }
                        for xx in [2 * x, 2 * x + 1] {
                            if xx < *fc {
                                best = best.max(fine[yy * fc + xx]);
                            }
                        }
                    }
                    m[y * cols + x] = best;
                }
            }
        }
        let mut values = vec![0.0f64; rows * cols];
        let row_offsets: &[isize] = if dim == 1 { &[0] } else { &[-1, 0, 1] };
        for y in 0..rows {
            for x in 0..cols {
                let mut best = 0.0f64;
                for &dy in row_offsets {
                    let yy = wrap(y, dy, rows);
                    for dx in [-1isize, 0, 1] {
                        best = best.max(m[yy * cols + wrap(x, dx, cols)]);
                    }
                }
                values[y * cols + x] = best;
            }
        }
        let mut scale = LeaderScale::new(s.j(), rows, cols, values)?;
        if options.mask_border {
            let right = pyramid.filter_len().unwrap_or(1);
            let inside = |k: usize, n: usize| k >= 1 && k + 1 + right <= n;
            for y in 0..rows {
                for x in 0..cols {
                    let ok = inside(x, cols) && (dim == 1 || inside(y, rows));
                    if !ok {
                        scale.valid[y * cols + x] = false;
                    }
                }
            }
            scale.n_valid = scale.valid.iter().filter(|&&v| v).count();
        }
        out.push(scale);
        below = Some((m, rows, cols));
    }
    LeaderPyramid::from_scales(dim, out)
}

fn wrap(i: usize, d: isize, n: usize) -> usize {
    (i as isize + d).rem_euclid(n as isize) as usize
}

/// Log-slopes `h(y, 2^-j) = log2 L / (-j)` at one scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeScale {
    pub j: i32,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

/// Pointwise log-slopes for every scale; positions are invalid where the
/// leader is masked, and every position is invalid at `j = 0`.
pub fn log_slopes(leaders: &LeaderPyramid) -> Vec<SlopeScale> {
    leaders
        .scales()
        .iter()
        .map(|s| {
            let valid: Vec<bool> = s.valid().iter().map(|&v| v && s.j() != 0).collect();
            let values = s
                .values()
                .iter()
                .zip(&valid)
                .map(|(&l, &ok)| if ok { l.log2() / -(s.j() as f64) } else { f64::NAN })
                .collect();
            SlopeScale { j: s.j(), values, valid }
        })
        .collect()
}

/// Finite-scale large-deviation histogram
/// `D(h, 2^-j, eps) = log2(#{y : |h(y, 2^-j) - h| <= eps}) / (-j)`.
///
/// Empty bins yield `-inf`. Note the sign: with the `-j` denominator the
/// value is the negated log-density of counts per scale.
pub fn ld_histogram(leaders: &LeaderPyramid, j: i32, epsilon: f64, h_grid: &[f64]) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) {
        return Err(param("epsilon", format!("must be > 0, got {epsilon}")));
    }
    if j == 0 {
        return Err(Error::InvalidRange("scale 0 has no log-slopes".into()));
    }
    let idx = leaders
        .scales()
        .iter()
        .position(|s| s.j() == j)
        .ok_or_else(|| Error::InvalidRange(format!("scale {j} not in pyramid")))?;
    let slopes = &log_slopes(leaders)[idx];
    let hs: Vec<f64> = slopes
        .values
        .iter()
        .zip(&slopes.valid)
        .filter(|(_, &ok)| ok)
        .map(|(&v, _)| v)
        .collect();
    Ok(h_grid
        .iter()
        .map(|&h| {
            let count = hs.iter().filter(|&&v| h - epsilon <= v && v <= h + epsilon).count();
            if count == 0 {
                f64::NEG_INFINITY
            } else {
                (count as f64).log2() / -(j as f64)
            }
        })
        .collect())
}
