//! Monte Carlo experiments: synthesize, analyze with both formalisms and
//! aggregate mean spectra, quantile bands and errors against theory.

use rayon::prelude::*;

use crate::classic::SpectrumCurve;
use crate::error::{Error, Result};
use crate::gmf::{
    delta_grid, envelope_estimate_with, estimate_centering, generalized_structure_functions, CenteringEstimate,
    EnvelopeOptions, EnvelopeResult, FitRange, GmfParameterGrid, DEFAULT_GAMMAS,
};
use crate::leaders::{compute_leaders, LeaderOptions, LeaderPyramid};
use crate::legendre::{uniform_grid, GFunction, GShape};
use crate::regression::SlopeWeights;
use crate::synth::{sub_seed, ProcessSpec, Realization, TheorySpectrum};
use crate::transform::{daubechies_filter, default_levels, dwt1d, dwt2d, floor_log2, WaveletFilter};

/// How the shifts of the lifting family are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum DeltaSpec {
    /// `count` shifts spanning `h_mode +- half_width`.
    Auto { half_width: f64, count: usize },
    List(Vec<f64>),
}

impl Default for DeltaSpec {
    fn default() -> Self {
        DeltaSpec::Auto { half_width: 0.3, count: 21 }
    }
}

/// Parameter tuples reported in logscale diagrams.
#[derive(Debug, Clone, PartialEq)]
pub struct LogscaleSelection {
    pub q: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Default for LogscaleSelection {
    fn default() -> Self {
        LogscaleSelection { q: vec![-2.0, -1.0, 0.0, 1.0, 2.0], gammas: vec![0.0, 100.0] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSettings {
    pub nvm: usize,
    /// Decomposition depth; defaults to `floor(log2 N) - ceil(log2 taps)`.
    pub levels: Option<usize>,
    pub fit: FitRange,
    pub centering_fit: Option<FitRange>,
    pub q_grid: Vec<f64>,
    pub gammas: Vec<f64>,
    pub deltas: DeltaSpec,
    pub shape: GShape,
    pub h_grid: Vec<f64>,
    pub weighted: bool,
    pub mask_border: bool,
    pub logscale: LogscaleSelection,
}

impl AnalysisSettings {
    /// Defaults for data whose smallest axis has `2^log2_n` samples.
    pub fn defaults_for(log2_n: usize) -> Self {
        let filter = daubechies_filter(3).expect("supported");
        AnalysisSettings {
            nvm: 3,
            levels: None,
            fit: default_fit_range(log2_n, &filter),
            centering_fit: None,
            q_grid: uniform_grid(-4.0, 0.25, 4.0).expect("static grid"),
            gammas: DEFAULT_GAMMAS.to_vec(),
            deltas: DeltaSpec::default(),
            shape: GShape::Parabola,
            h_grid: uniform_grid(0.0, 0.005, 1.5).expect("static grid"),
            weighted: false,
            mask_border: false,
            logscale: LogscaleSelection::default(),
        }
    }
}

/// Default regression range: from one scale above the coarsest wrap-free
/// level down to two levels above the finest, i.e.
/// `[ceil(log2 taps) + 1, log2_n - 3]` for `2^log2_n` samples.
pub fn default_fit_range(log2_n: usize, filter: &WaveletFilter) -> FitRange {
    let taps_log = (filter.len() as f64).log2().ceil() as i32;
    FitRange::new(taps_log + 1, log2_n as i32 - 3)
}

/// Leaders of any realization.
pub fn realization_leaders(r: &Realization, settings: &AnalysisSettings) -> Result<LeaderPyramid> {
    let options = LeaderOptions { mask_border: settings.mask_border };
    match r {
        Realization::Signal(x) => {
            let filter = daubechies_filter(settings.nvm)?;
            let levels = settings.levels.unwrap_or_else(|| default_levels(x.len(), &filter));
            compute_leaders(&dwt1d(x, &filter, levels)?, options)
        }
        Realization::Image { rows, cols, data } => {
            let filter = daubechies_filter(settings.nvm)?;
            let levels = settings.levels.unwrap_or_else(|| default_levels((*rows).min(*cols), &filter));
            compute_leaders(&dwt2d(data, *rows, *cols, &filter, levels)?, options)
        }
        Realization::Pyramid(p) => compute_leaders(p, options),
    }
}

/// Parameter grid for a pyramid, resolving automatic shifts from its centering.
pub fn parameter_grid(settings: &AnalysisSettings, centering: &CenteringEstimate) -> GmfParameterGrid {
    let deltas = match &settings.deltas {
        DeltaSpec::Auto { half_width, count } => delta_grid(centering.h_mode, *half_width, *count),
        DeltaSpec::List(v) => v.clone(),
    };
    GmfParameterGrid { gammas: settings.gammas.clone(), deltas, q_grid: settings.q_grid.clone(), shape: settings.shape }
}

/// Complete analysis of one data set.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub dim: usize,
    pub leaders: LeaderPyramid,
    pub grid: GmfParameterGrid,
    pub result: EnvelopeResult,
}

pub fn analyze_leaders(leaders: LeaderPyramid, settings: &AnalysisSettings) -> Result<Analysis> {
    let cfit = settings.centering_fit.unwrap_or(settings.fit);
    let centering = estimate_centering(&leaders, cfit.j1, cfit.j2)?;
    let grid = parameter_grid(settings, &centering);
    let options = EnvelopeOptions { centering_fit: settings.centering_fit, weighted: settings.weighted };
    let dim = leaders.dim();
    let result = envelope_estimate_with(&leaders, &grid, settings.fit, &settings.h_grid, dim, options)?;
    Ok(Analysis { dim, leaders, grid, result })
}

pub fn analyze(r: &Realization, settings: &AnalysisSettings) -> Result<Analysis> {
    analyze_leaders(realization_leaders(r, settings)?, settings)
}

/// One line of a logscale diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogscaleRow {
    pub q: f64,
    pub gamma: f64,
    pub delta: f64,
    pub j: i32,
    pub log2_s: f64,
    /// Fitted line evaluated at `j`.
    pub fit: f64,
    pub in_fit_range: bool,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Scale-by-scale `log2 S_g(q, j)` and the regression line over the fit range
/// for every selected `(q, gamma)`, with `delta = h_mode`.
pub fn logscale_table(analysis: &Analysis, selection: &LogscaleSelection, fit: FitRange) -> Result<Vec<LogscaleRow>> {
    let c = &analysis.result.centering;
    let mut rows = Vec::new();
    for &gamma in &selection.gammas {
        let g = match analysis.grid.shape {
            GShape::Parabola => GFunction::parabola(gamma, c.h_mode),
            GShape::AbsoluteValue => GFunction::absolute_value(gamma, c.h_mode),
        };
        let table = generalized_structure_functions(&analysis.leaders, c, &selection.q, &g)?;
        let idx: Vec<usize> = (0..table.js().len()).filter(|&i| fit.contains(table.js()[i])).collect();
        if idx.len() < 3 {
            return Err(Error::InvalidRange(format!("[{}, {}] holds fewer than 3 scales", fit.j1, fit.j2)));
        }
        let x: Vec<f64> = idx.iter().map(|&i| table.js()[i] as f64).collect();
        let w = SlopeWeights::ols(&x);
        for (qi, &q) in selection.q.iter().enumerate() {
            let row = table.row(qi);
            let y: Vec<f64> = idx.iter().map(|&i| row[i]).collect();
            let line = w.fit(&y);
            for (ji, &j) in table.js().iter().enumerate() {
                rows.push(LogscaleRow {
                    q,
                    gamma,
                    delta: g.delta,
                    j,
                    log2_s: row[ji],
                    fit: line.intercept + line.slope * j as f64,
                    in_fit_range: fit.contains(j),
                    slope: line.slope,
                    intercept: line.intercept,
                    r2: line.r2,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub process: ProcessSpec,
    pub n_mc: usize,
    pub analysis: AnalysisSettings,
    pub seed: u64,
    /// Keep per-realization logscale tables.
    pub keep_logscale: bool,
}

/// Result of analysing one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationSummary {
    pub index: usize,
    pub seed: u64,
    pub centering: CenteringEstimate,
    pub classical: Vec<f64>,
    pub envelope: Vec<f64>,
    /// `max_h (L_envelope - L_member)` over all members; at most 0.
    pub envelope_excess: f64,
    /// `max_h (L_envelope - L_classical)`.
    pub classical_deficit: f64,
    pub logscale: Vec<LogscaleRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorAggregate {
    pub name: String,
    pub mean: Vec<f64>,
    pub band_low: Vec<f64>,
    pub band_high: Vec<f64>,
    /// NaN where the theory is negative or undefined.
    pub rmse: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub h: Vec<f64>,
    pub d: usize,
    pub theory: Vec<f64>,
    pub estimators: Vec<EstimatorAggregate>,
    pub realizations: Vec<RealizationSummary>,
    pub failures: Vec<(usize, String)>,
}

impl AggregateResult {
    pub fn estimator(&self, name: &str) -> Option<&EstimatorAggregate> {
        self.estimators.iter().find(|e| e.name == name)
    }
}

fn max_excess(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| x - y)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn run_one(config: &ExperimentConfig, index: usize) -> Result<RealizationSummary> {
    let seed = sub_seed(config.seed, index as u64);
    let data = config.process.generate(seed)?;
    let analysis = analyze(&data, &config.analysis)?;
    let res = &analysis.result;
    let envelope_excess = res
        .members
        .iter()
        .map(|m| max_excess(&res.envelope.values, &m.spectrum.values))
        .fold(f64::NEG_INFINITY, f64::max);
    let classical_deficit = max_excess(&res.envelope.values, &res.classical.values);
    let logscale = if config.keep_logscale {
        logscale_table(&analysis, &config.analysis.logscale, config.analysis.fit)?
    } else {
        Vec::new()
    };
    Ok(RealizationSummary {
        index,
        seed,
        centering: res.centering,
        classical: res.classical.values.clone(),
        envelope: res.envelope.values.clone(),
        envelope_excess,
        classical_deficit,
        logscale,
    })
}

/// Linear-interpolated empirical quantile of sorted values.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    let a = sorted[i];
    if frac == 0.0 || i + 1 >= sorted.len() || a == sorted[i + 1] || a == f64::NEG_INFINITY {
        return a;
    }
    a + frac * (sorted[i + 1] - a)
}

fn aggregate(name: &str, curves: &[&[f64]], theory: &[f64]) -> EstimatorAggregate {
    let n = curves[0].len();
    let mut agg = EstimatorAggregate {
        name: name.to_string(),
        mean: Vec::with_capacity(n),
        band_low: Vec::with_capacity(n),
        band_high: Vec::with_capacity(n),
        rmse: Vec::with_capacity(n),
    };
    let mut col = Vec::with_capacity(curves.len());
    for i in 0..n {
        col.clear();
        col.extend(curves.iter().map(|c| c[i]));
        let mean = if col.contains(&f64::NEG_INFINITY) {
            f64::NEG_INFINITY
        } else {
            col.iter().sum::<f64>() / col.len() as f64
        };
        col.sort_by(f64::total_cmp);
        // Bands are widened to contain the mean when the sample is very skewed.
        agg.band_low.push(quantile(&col, 0.025).min(mean));
        agg.band_high.push(quantile(&col, 0.975).max(mean));
        agg.mean.push(mean);
        let t = theory[i];
        agg.rmse.push(if t >= 0.0 {
            (col.iter().map(|v| (v - t) * (v - t)).sum::<f64>() / col.len() as f64).sqrt()
        } else {
            f64::NAN
        });
    }
    agg
}

/// Runs `n_mc` independent realizations in parallel and aggregates them.
///
/// Realization `i` uses seed `sub_seed(seed, i)`, and aggregation happens
/// after all realizations finish, in index order, so the result does not
/// depend on the number of worker threads.
pub fn run_experiment(config: &ExperimentConfig) -> Result<AggregateResult> {
    if config.n_mc == 0 {
        return Err(crate::error::param("n_mc", "must be >= 1"));
    }
    config.process.validate()?;
    let theory_fn: TheorySpectrum = config.process.theory()?;
    let outcomes: Vec<Result<RealizationSummary>> = (0..config.n_mc).into_par_iter().map(|i| run_one(config, i)).collect();
    let mut realizations = Vec::new();
    let mut failures = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(s) => realizations.push(s),
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    if realizations.is_empty() {
        return Err(Error::InvalidInput(format!(
            "all {} realizations failed; first error: {}",
            config.n_mc, failures[0].1
        )));
    }
    let h = config.analysis.h_grid.clone();
    let theory = theory_fn.sample(&h);
    let classical: Vec<&[f64]> = realizations.iter().map(|r| r.classical.as_slice()).collect();
    let envelope: Vec<&[f64]> = realizations.iter().map(|r| r.envelope.as_slice()).collect();
    let estimators = vec![aggregate("legendre", &classical, &theory), aggregate("envelope", &envelope, &theory)];
    Ok(AggregateResult { h, d: theory_fn.dim(), theory, estimators, realizations, failures })
}

/// Log2 of the smallest axis of a process output.
pub fn resolution(spec: &ProcessSpec) -> usize {
    let (r, c) = spec.shape();
    if spec.dim() == 1 { floor_log2(c) } else { floor_log2(r.min(c)) }
}

/// Spectrum curve of the mean of an aggregate estimator.
pub fn mean_curve(agg: &AggregateResult, name: &str) -> Option<SpectrumCurve> {
    let e = agg.estimator(name)?;
    Some(SpectrumCurve {
        estimator: if name == "legendre" {
            crate::classic::Estimator::Legendre
        } else {
            crate::classic::Estimator::Envelope
        },
        d: agg.d,
        params: Default::default(),
        h: agg.h.clone(),
        values: e.mean.clone(),
    })
}
