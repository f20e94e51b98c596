//! TOML run files and their merge with command-line flags.
//!
//! Flags win over file values, which win over built-in defaults.

use std::path::Path;

use mfspec::gmf::FitRange;
use mfspec::harness::{AnalysisSettings, DeltaSpec, ExperimentConfig};
use mfspec::legendre::GShape;
use mfspec::synth::ProcessSpec;
use serde::Deserialize;

use crate::ranges::parse_values;
use crate::CliError;

/// A number, an array of numbers, or list syntax such as `"-4:0.25:4"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Values {
    One(f64),
    List(Vec<f64>),
    Text(String),
}

impl Values {
    pub fn resolve(&self, field: &str) -> Result<Vec<f64>, CliError> {
        let v = match self {
            Values::One(x) => vec![*x],
            Values::List(v) => v.clone(),
            Values::Text(t) => parse_values(t).map_err(|e| CliError::usage(format!("`{field}`: {e}")))?,
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::usage(format!("`{field}` needs finite values")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub nvm: Option<usize>,
    pub levels: Option<usize>,
    pub j1: Option<i32>,
    pub j2: Option<i32>,
    pub centering_j1: Option<i32>,
    pub centering_j2: Option<i32>,
    pub q: Option<Values>,
    pub gamma: Option<Values>,
    /// `"auto"` or explicit shifts.
    pub delta: Option<Values>,
    pub delta_half_width: Option<f64>,
    pub delta_count: Option<usize>,
    pub g_shape: Option<String>,
    pub h: Option<Values>,
    pub weighted: Option<bool>,
    pub mask_border: Option<bool>,
    pub logscale_q: Option<Values>,
    pub logscale_gamma: Option<Values>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl AnalysisSection {
    /// Fields set in `top` replace those of `self`.
    pub fn overlay(mut self, top: &AnalysisSection) -> Self {
        let s = &mut self;
        overlay!(s, top; nvm, levels, j1, j2, centering_j1, centering_j2, q, gamma, delta, delta_half_width,
            delta_count, g_shape, h, weighted, mask_border, logscale_q, logscale_gamma);
        self
    }

    /// Settings for data whose smallest axis holds `2^log2_n` samples.
    pub fn settings(&self, log2_n: usize) -> Result<AnalysisSettings, CliError> {
        let mut s = AnalysisSettings::defaults_for(log2_n);
        if let Some(nvm) = self.nvm {
            let filter = mfspec::transform::daubechies_filter(nvm)?;
            s.nvm = nvm;
            s.fit = mfspec::harness::default_fit_range(log2_n, &filter);
        }
        s.levels = self.levels.or(s.levels);
        s.fit = FitRange::new(self.j1.unwrap_or(s.fit.j1), self.j2.unwrap_or(s.fit.j2));
        if s.fit.j1 >= s.fit.j2 && self.j1.is_none() && self.j2.is_none() {
            return Err(CliError::Data(format!(
                "data with 2^{log2_n} samples per axis is too short for the default fit range [{}, {}]",
                s.fit.j1, s.fit.j2
            )));
        }
        if s.fit.j1 >= s.fit.j2 {
            return Err(CliError::usage(format!("fit range needs j1 < j2, got [{}, {}]", s.fit.j1, s.fit.j2)));
        }
        if self.centering_j1.is_some() || self.centering_j2.is_some() {
            let c = FitRange::new(self.centering_j1.unwrap_or(s.fit.j1), self.centering_j2.unwrap_or(s.fit.j2));
            if c.j1 >= c.j2 {
                return Err(CliError::usage(format!("centering range needs j1 < j2, got [{}, {}]", c.j1, c.j2)));
            }
            s.centering_fit = Some(c);
        }
        if let Some(q) = &self.q {
            s.q_grid = q.resolve("q")?;
        }
        if let Some(g) = &self.gamma {
            s.gammas = g.resolve("gamma")?;
        }
        if !s.gammas.contains(&0.0) {
            return Err(CliError::usage("`gamma` must include 0"));
        }
        if s.gammas.iter().any(|&g| g < 0.0) {
            return Err(CliError::usage("`gamma` values must be >= 0"));
        }
        let (mut half_width, mut count) = match s.deltas {
            DeltaSpec::Auto { half_width, count } => (half_width, count),
            DeltaSpec::List(_) => unreachable!("defaults use automatic shifts"),
        };
        half_width = self.delta_half_width.unwrap_or(half_width);
        count = self.delta_count.unwrap_or(count);
        if !(half_width >= 0.0 && half_width.is_finite()) || count == 0 {
            return Err(CliError::usage("automatic shifts need half width >= 0 and count >= 1"));
        }
        s.deltas = match &self.delta {
            Some(Values::Text(t)) if t.trim().eq_ignore_ascii_case("auto") => DeltaSpec::Auto { half_width, count },
            Some(v) => DeltaSpec::List(v.resolve("delta")?),
            None => DeltaSpec::Auto { half_width, count },
        };
        if let Some(shape) = &self.g_shape {
            s.shape = parse_g_shape(shape)?;
        }
        if let Some(h) = &self.h {
            s.h_grid = h.resolve("h")?;
        }
        s.weighted = self.weighted.unwrap_or(s.weighted);
        s.mask_border = self.mask_border.unwrap_or(s.mask_border);
        if let Some(q) = &self.logscale_q {
            s.logscale.q = q.resolve("logscale_q")?;
        }
        if let Some(g) = &self.logscale_gamma {
            s.logscale.gammas = g.resolve("logscale_gamma")?;
        }
        Ok(s)
    }
}

pub fn parse_g_shape(s: &str) -> Result<GShape, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "parabola" | "quadratic" => Ok(GShape::Parabola),
        "abs" | "absolute" | "absolute-value" => Ok(GShape::AbsoluteValue),
        _ => Err(CliError::usage(format!("unknown g shape `{s}` (parabola, abs)"))),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSection {
    pub kind: Option<String>,
    pub n: Option<usize>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub levels: Option<usize>,
    pub alpha: Option<f64>,
    pub w: Option<f64>,
    pub theta: Option<f64>,
    /// One value, or one per piece for concatenations.
    #[serde(rename = "H")]
    pub h: Option<Values>,
    /// Broadcast over pieces when a single value is given.
    pub lambda2: Option<Values>,
    pub axis: Option<usize>,
}

fn need<T: Copy>(v: Option<T>, name: &str, kind: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::usage(format!("process `{kind}` needs `{name}`")))
}

impl ProcessSection {
    pub fn spec(&self) -> Result<ProcessSpec, CliError> {
        let kind = self.kind.as_deref().ok_or_else(|| CliError::usage("process needs `kind`"))?;
        let one = |v: &Option<Values>, name: &str| -> Result<f64, CliError> {
            let v = v.as_ref().ok_or_else(|| CliError::usage(format!("process `{kind}` needs `{name}`")))?;
            match v.resolve(name)?.as_slice() {
                [x] => Ok(*x),
                _ => Err(CliError::usage(format!("process `{kind}` takes a single `{name}`"))),
            }
        };
        let spec = match kind {
            "levy" => ProcessSpec::LevyBrownian { n: need(self.n, "n", kind)?, alpha: need(self.alpha, "alpha", kind)? },
            "dwc" => ProcessSpec::Dwc { levels: need(self.levels, "levels", kind)?, w: need(self.w, "w", kind)? },
            "dwc-thresholded" => ProcessSpec::DwcThresholded {
                levels: need(self.levels, "levels", kind)?,
                w: need(self.w, "w", kind)?,
                theta: need(self.theta, "theta", kind)?,
            },
            "mrw1d" => ProcessSpec::Mrw1d { n: need(self.n, "n", kind)?, h: one(&self.h, "H")?, lambda2: one(&self.lambda2, "lambda2")? },
            "mrw2d" => ProcessSpec::Mrw2d {
                rows: need(self.rows, "rows", kind)?,
                cols: need(self.cols, "cols", kind)?,
                h: one(&self.h, "H")?,
                lambda2: one(&self.lambda2, "lambda2")?,
            },
            "concat-mrw1d" | "concat-mrw2d" => {
                let hs = need(self.h.as_ref(), "H", kind)?.resolve("H")?;
                let l2 = need(self.lambda2.as_ref(), "lambda2", kind)?.resolve("lambda2")?;
                let l2 = match l2.len() {
                    1 => vec![l2[0]; hs.len()],
                    n if n == hs.len() => l2,
                    n => return Err(CliError::usage(format!("`lambda2` has {n} values for {} pieces", hs.len()))),
                };
                let pieces = if kind == "concat-mrw1d" {
                    let n = need(self.n, "n", kind)?;
                    hs.iter().zip(&l2).map(|(&h, &lambda2)| ProcessSpec::Mrw1d { n, h, lambda2 }).collect()
                } else {
                    let (rows, cols) = (need(self.rows, "rows", kind)?, need(self.cols, "cols", kind)?);
                    hs.iter().zip(&l2).map(|(&h, &lambda2)| ProcessSpec::Mrw2d { rows, cols, h, lambda2 }).collect()
                };
                let axis = self.axis.unwrap_or(if kind == "concat-mrw1d" { 0 } else { 1 });
                ProcessSpec::Concat { pieces, axis }
            }
            other => {
                return Err(CliError::usage(format!(
                    "unknown process `{other}` (levy, dwc, dwc-thresholded, mrw1d, mrw2d, concat-mrw1d, concat-mrw2d)"
                )))
            }
        };
        spec.validate().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub n_mc: Option<usize>,
    pub seed: Option<u64>,
    pub keep_logscale: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    #[serde(default)]
    pub process: Option<ProcessSection>,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

impl RunFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::usage(format!("{origin}: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Monte Carlo configuration, with optional overrides.
    pub fn experiment(
        &self,
        analysis_flags: &AnalysisSection,
        n_mc: Option<usize>,
        seed: Option<u64>,
    ) -> Result<ExperimentConfig, CliError> {
        let process = self.process.as_ref().ok_or_else(|| CliError::usage("config needs a [process] section"))?.spec()?;
        let analysis = self.analysis.clone().overlay(analysis_flags).settings(mfspec::harness::resolution(&process))?;
        let n_mc = n_mc.or(self.experiment.n_mc).unwrap_or(100);
        if n_mc == 0 {
            return Err(CliError::usage("`n_mc` must be >= 1"));
        }
        Ok(ExperimentConfig {
            process,
            n_mc,
            analysis,
            seed: seed.or(self.experiment.seed).unwrap_or(0),
            keep_logscale: self.experiment.keep_logscale.unwrap_or(false),
        })
    }
}
