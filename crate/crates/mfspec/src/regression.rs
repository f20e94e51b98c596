//! Linear regression of log-scale quantities against the scale index.

/// Least-squares line `y = intercept + slope * x` with fit diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub r2: f64,
}

/// Regression weights for a fixed set of abscissae, so that many ordinates
/// (one per `q`) share a single precomputation.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeWeights {
    x: Vec<f64>,
    v: Vec<f64>,
    xbar: f64,
    sxx: f64,
    /// `slope = sum_i w[i] y[i]`
    w: Vec<f64>,
}

impl SlopeWeights {
    /// Ordinary least squares.
    pub fn ols(x: &[f64]) -> Self {
        Self::weighted(x, &vec![1.0; x.len()])
    }

    /// Weighted least squares with positive weights `v`.
    pub fn weighted(x: &[f64], v: &[f64]) -> Self {
        let sv: f64 = v.iter().sum();
        let xbar = x.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / sv;
        let sxx: f64 = x.iter().zip(v).map(|(a, b)| b * (a - xbar) * (a - xbar)).sum();
        let w = x.iter().zip(v).map(|(a, b)| b * (a - xbar) / sxx).collect();
        SlopeWeights { x: x.to_vec(), v: v.to_vec(), xbar, sxx, w }
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn slope(&self, y: &[f64]) -> f64 {
        self.w.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    pub fn fit(&self, y: &[f64]) -> LineFit {
        let slope = self.slope(y);
        let sv: f64 = self.v.iter().sum();
        let ybar = y.iter().zip(&self.v).map(|(a, b)| a * b).sum::<f64>() / sv;
        let intercept = ybar - slope * self.xbar;
        let mut ss_res = 0.0;
        let mut ss_tot = 0.0;
        for ((&xi, &yi), &vi) in self.x.iter().zip(y).zip(&self.v) {
            let r = yi - (intercept + slope * xi);
            ss_res += vi * r * r;
            ss_tot += vi * (yi - ybar) * (yi - ybar);
        }
        let dof = self.x.len().saturating_sub(2).max(1) as f64;
        let slope_se = (ss_res / dof / self.sxx).sqrt();
        // A flat sequence is fitted exactly by a flat line. Spread at rounding
        // level (rms below 1e-12 in log units) counts as flat.
        let r2 = if ss_tot <= 1e-24 * sv {
            1.0
        } else {
            1.0 - ss_res / ss_tot
        };
        LineFit { slope, intercept, slope_se, r2 }
    }
}

pub fn ols_fit(x: &[f64], y: &[f64]) -> LineFit {
    SlopeWeights::ols(x).fit(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = ols_fit(&[1.0, 2.0, 3.0, 4.0], &[3.0, 5.0, 7.0, 9.0]);
        assert!((f.slope - 2.0).abs() < 1e-14);
        assert!((f.intercept - 1.0).abs() < 1e-14);
        assert_eq!(f.r2, 1.0);
    }

    #[test]
    fn rounding_noise_is_flat() {
        let f = ols_fit(&[1.0, 2.0, 3.0], &[1e-28, -3e-28, 2e-29]);
        assert_eq!(f.r2, 1.0);
        let g = ols_fit(&[1.0, 2.0, 3.0], &[1e-3, -3e-3, 2e-4]);
        assert!(g.r2 < 1.0);
    }

    #[test]
    fn weights_sum_to_zero() {
        let w = SlopeWeights::weighted(&[3.0, 4.0, 5.0, 6.0], &[1.0, 2.0, 0.5, 3.0]);
        assert!(w.weights().iter().sum::<f64>().abs() < 1e-14);
        let sx: f64 = w.weights().iter().zip([3.0, 4.0, 5.0, 6.0]).map(|(a, b)| a * b).sum();
        assert!((sx - 1.0).abs() < 1e-14);
    }
}
