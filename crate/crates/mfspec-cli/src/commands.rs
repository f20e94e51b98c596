use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use mfspec::classic::ScalingFunction;
use mfspec::harness::{self, AggregateResult, AnalysisSettings, DeltaSpec, EstimatorAggregate, ExperimentConfig};
use mfspec::legendre::GShape;
use mfspec::synth::{ProcessSpec, Realization};
use serde_json::{json, Value};

use crate::config::{ProcessSection, RunFile, Values};
use crate::io::{self, fmt17, jarr, jnum, InputFormat, OutputLog};
use crate::ranges::{parse_shape, parse_values};
use crate::{AnalyzeArgs, CliError, McArgs, SynthArgs};

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

fn floor_log2(n: usize) -> usize {
    (usize::BITS - 1 - n.max(1).leading_zeros()) as usize
}

fn out_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))
}

fn shape_name(s: GShape) -> &'static str {
    match s {
        GShape::Parabola => "parabola",
        GShape::AbsoluteValue => "abs",
    }
}

pub fn settings_json(s: &AnalysisSettings) -> Value {
    json!({
        "nvm": s.nvm,
        "levels": s.levels,
        "fit": [s.fit.j1, s.fit.j2],
        "centering_fit": s.centering_fit.map(|c| [c.j1, c.j2]),
        "q": jarr(&s.q_grid),
        "gamma": jarr(&s.gammas),
        "delta": match &s.deltas {
            DeltaSpec::Auto { half_width, count } => json!({ "auto": { "half_width": jnum(*half_width), "count": count } }),
            DeltaSpec::List(v) => jarr(v),
        },
        "g_shape": shape_name(s.shape),
        "h": jarr(&s.h_grid),
        "weighted": s.weighted,
        "mask_border": s.mask_border,
        "logscale_q": jarr(&s.logscale.q),
        "logscale_gamma": jarr(&s.logscale.gammas),
    })
}

pub fn process_json(p: &ProcessSpec) -> Value {
    match p {
        ProcessSpec::LevyBrownian { n, alpha } => json!({ "kind": "levy", "n": n, "alpha": jnum(*alpha) }),
        ProcessSpec::Dwc { levels, w } => json!({ "kind": "dwc", "levels": levels, "w": jnum(*w) }),
        ProcessSpec::DwcThresholded { levels, w, theta } => {
            json!({ "kind": "dwc-thresholded", "levels": levels, "w": jnum(*w), "theta": jnum(*theta) })
        }
        ProcessSpec::Mrw1d { n, h, lambda2 } => json!({ "kind": "mrw1d", "n": n, "H": jnum(*h), "lambda2": jnum(*lambda2) }),
        ProcessSpec::Mrw2d { rows, cols, h, lambda2 } => {
            json!({ "kind": "mrw2d", "rows": rows, "cols": cols, "H": jnum(*h), "lambda2": jnum(*lambda2) })
        }
        ProcessSpec::Concat { pieces, axis } => {
            json!({ "kind": "concat", "axis": axis, "pieces": pieces.iter().map(process_json).collect::<Vec<_>>() })
        }
    }
}

fn zeta_json(z: &ScalingFunction) -> Value {
    json!({
        "q": jarr(&z.q),
        "zeta": jarr(&z.zeta),
        "slope_se": jarr(&z.slope_se),
        "r2": jarr(&z.r2),
        "intercept": jarr(&z.intercept),
        "fit": [z.j1, z.j2],
        "weighted": z.weighted,
    })
}

fn write_manifest(
    dir: &Path,
    command: &str,
    argv: &[String],
    config: Value,
    inputs: Vec<Value>,
    outputs: OutputLog,
    started: u128,
) -> Result<(), CliError> {
    let manifest = json!({
        "tool": "mfspec",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "argv": argv,
        "config": config,
        "inputs": inputs,
        "outputs": outputs.entries,
        "started_unix_ms": started as u64,
        "finished_unix_ms": now_ms() as u64,
    });
    let mut s = serde_json::to_string_pretty(&manifest).expect("serializable");
    s.push('\n');
    std::fs::write(dir.join("manifest.json"), s)
        .map_err(|e| CliError::Data(format!("cannot write manifest in {}: {e}", dir.display())))
}

fn load_input(args: &AnalyzeArgs) -> Result<(Realization, Vec<u8>), CliError> {
    let format = match &args.format {
        Some(f) => InputFormat::parse(f).map_err(CliError::Usage)?,
        None => InputFormat::from_path(&args.input)
            .ok_or_else(|| CliError::usage(format!("cannot infer the format of {}; pass --format", args.input.display())))?,
    };
    let shape = args.shape.as_deref().map(parse_shape).transpose().map_err(CliError::Usage)?;
    let bytes = io::read_bytes(&args.input)?;
    let r = match format {
        InputFormat::Csv => Realization::Signal(io::parse_csv(&bytes)?),
        InputFormat::Pgm => {
            let (rows, cols, data) = io::parse_pgm(&bytes)?;
            if rows == 1 { Realization::Signal(data) } else { Realization::Image { rows, cols, data } }
        }
        InputFormat::F64 => {
            let (rows, cols) = shape.or_else(|| io::sidecar_shape(&args.input)).ok_or_else(|| {
                CliError::usage("raw input needs --shape ROWSxCOLS (no shape found in a neighbouring manifest.json)")
            })?;
            let data = io::parse_f64(&bytes, (rows, cols))?;
            if rows == 1 { Realization::Signal(data) } else { Realization::Image { rows, cols, data } }
        }
        InputFormat::Coeffs => Realization::Pyramid(io::parse_coeffs(&bytes)?),
    };
    if let Some(d) = args.dim {
        if d != 1 && d != 2 {
            return Err(CliError::usage(format!("--dim must be 1 or 2, got {d}")));
        }
        if d != io::realization_dim(&r) {
            return Err(CliError::Data(format!("--dim {d} given but the input is {}D", io::realization_dim(&r))));
        }
    }
    Ok((r, bytes))
}

fn log2_resolution(r: &Realization) -> usize {
    let (rows, cols) = io::realization_shape(r);
    floor_log2(if io::realization_dim(r) == 1 { cols } else { rows.min(cols) })
}

fn max_point(h: &[f64], d: &[f64]) -> Value {
    let best = d.iter().enumerate().filter(|(_, v)| v.is_finite()).max_by(|a, b| a.1.total_cmp(b.1));
    match best {
        Some((i, &v)) => json!({ "h": jnum(h[i]), "D": jnum(v) }),
        None => Value::Null,
    }
}

pub fn analyze(args: &AnalyzeArgs, argv: &[String]) -> Result<(), CliError> {
    let started = now_ms();
    let file_section = match &args.config {
        Some(p) => RunFile::load(p)?.analysis,
        None => Default::default(),
    };
    let section = file_section.overlay(&args.analysis.section());
    let (data, bytes) = load_input(args)?;
    let log2_n = log2_resolution(&data);
    let settings = section.settings(log2_n)?;
    let analysis = harness::analyze(&data, &settings)?;
    let logscale = harness::logscale_table(&analysis, &settings.logscale, settings.fit)?;
    let res = &analysis.result;
    let nvm = (!matches!(data, Realization::Pyramid(_))).then_some(settings.nvm);

    out_dir(&args.out)?;
    let mut outputs = OutputLog::default();
    let mut spectra = vec![io::spectrum_json(&res.classical, nvm), io::spectrum_json(&res.envelope, nvm)];
    spectra.extend(res.members.iter().map(|m| io::spectrum_json(&m.spectrum, nvm)));
    outputs.write_json(&args.out, "spectra.json", &Value::Array(spectra))?;

    let members: Vec<Value> = res
        .members
        .iter()
        .map(|m| {
            json!({
                "gamma": jnum(m.g.gamma),
                "delta": jnum(m.g.delta),
                "g_shape": shape_name(m.g.shape),
                "zeta": zeta_json(&m.zeta),
                "max": max_point(&m.spectrum.h, &m.spectrum.values),
            })
        })
        .collect();
    let (rows, cols) = io::realization_shape(&data);
    let summary = json!({
        "dim": analysis.dim,
        "shape": [rows, cols],
        "log2_n": log2_n,
        "fit": [settings.fit.j1, settings.fit.j2],
        "scales": analysis.leaders.scales().iter().map(|s| s.j()).collect::<Vec<_>>(),
        "centering": {
            "c10": jnum(res.centering.c10),
            "h_mode": jnum(res.centering.h_mode),
            "fit": [res.centering.fit.j1, res.centering.fit.j2],
        },
        "deltas": jarr(&analysis.grid.deltas),
        "classical": { "zeta": zeta_json(&res.classical_zeta), "max": max_point(&res.classical.h, &res.classical.values) },
        "envelope": { "max": max_point(&res.envelope.h, &res.envelope.values) },
        "members": members,
    });
    outputs.write_json(&args.out, "summary.json", &summary)?;

    let rows_csv = logscale.iter().map(|r| {
        vec![
            fmt17(r.q),
            fmt17(r.gamma),
            fmt17(r.delta),
            r.j.to_string(),
            fmt17(r.log2_s),
            fmt17(r.fit),
            u8::from(r.in_fit_range).to_string(),
            fmt17(r.slope),
            fmt17(r.intercept),
            fmt17(r.r2),
        ]
    });
    let header = ["q", "gamma", "delta", "j", "log2_S", "fit", "in_fit_range", "slope", "intercept", "r2"];
    outputs.write(&args.out, "logscale.csv", io::csv(&header, rows_csv).as_bytes(), json!({}))?;

    let mut config = json!({ "analysis": settings_json(&settings) });
    if let Some(p) = &args.config {
        config["config_file"] = json!(p.display().to_string());
    }
    let mut inputs = vec![json!({
        "path": args.input.display().to_string(),
        "bytes": bytes.len(),
        "sha256": io::sha256_hex(&bytes),
        "shape": [rows, cols],
    })];
    if let Some(p) = &args.config {
        let b = io::read_bytes(p)?;
        inputs.push(json!({ "path": p.display().to_string(), "bytes": b.len(), "sha256": io::sha256_hex(&b) }));
    }
    write_manifest(&args.out, "analyze", argv, config, inputs, outputs, started)?;
    eprintln!(
        "analyzed {}D data ({rows}x{cols}), h_mode {:.4}, {} members -> {}",
        analysis.dim,
        res.centering.h_mode,
        res.members.len(),
        args.out.display()
    );
    Ok(())
}

pub fn synth(args: &SynthArgs, argv: &[String]) -> Result<(), CliError> {
    let started = now_ms();
    let section = ProcessSection {
        kind: Some(args.process.clone()),
        n: args.n,
        rows: args.rows,
        cols: args.cols,
        levels: args.levels,
        alpha: args.alpha,
        w: args.w,
        theta: args.theta,
        h: args.hurst.clone().map(Values::Text),
        lambda2: args.lambda2.clone().map(Values::Text),
        axis: args.axis,
    };
    let spec = section.spec()?;
    let h_grid = parse_values(&args.h).map_err(|e| CliError::usage(format!("--h: {e}")))?;
    let theory = spec.theory()?;
    let data = spec.generate(args.seed)?;

    out_dir(&args.out)?;
    let mut outputs = OutputLog::default();
    let format = args.format.as_deref().map(str::to_ascii_lowercase);
    match (&data, format.as_deref()) {
        (Realization::Signal(x), None | Some("csv")) => {
            outputs.write(&args.out, "data.csv", io::signal_csv(x).as_bytes(), json!({ "shape": [1, x.len()] }))?
        }
        (Realization::Signal(x), Some("f64")) => {
            outputs.write(&args.out, "data.f64", &io::f64_bytes(x), json!({ "shape": [1, x.len()] }))?
        }
        (Realization::Image { rows, cols, data }, None | Some("f64")) => {
            outputs.write(&args.out, "data.f64", &io::f64_bytes(data), json!({ "shape": [rows, cols] }))?
        }
        (Realization::Image { rows, cols, data }, Some("pgm")) => {
            outputs.write(&args.out, "data.pgm", &io::pgm16(*rows, *cols, data), json!({ "shape": [rows, cols] }))?
        }
        (Realization::Pyramid(p), None | Some("coeffs")) => {
            outputs.write(&args.out, "coeffs.csv", io::coeffs_csv(p).as_bytes(), json!({ "shape": p.shape() }))?
        }
        (_, Some(f)) => {
            return Err(CliError::usage(format!("--format {f} does not apply to {}D {} output", io::realization_dim(&data), args.process)))
        }
    }
    let (lo, hi) = theory.support();
    let theory_json = json!({
        "process": process_json(&spec),
        "d": theory.dim(),
        "support": [jnum(lo), jnum(hi)],
        "h": jarr(&h_grid),
        "D": jarr(&theory.sample(&h_grid)),
    });
    outputs.write_json(&args.out, "theory.json", &theory_json)?;
    let config = json!({ "process": process_json(&spec), "seed": args.seed });
    write_manifest(&args.out, "synth", argv, config, vec![], outputs, started)?;
    let (rows, cols) = io::realization_shape(&data);
    eprintln!("generated {} ({rows}x{cols}), seed {} -> {}", args.process, args.seed, args.out.display());
    Ok(())
}

fn aggregate_csv(agg: &AggregateResult, e: &EstimatorAggregate) -> String {
    let rows = (0..agg.h.len()).map(|i| {
        vec![fmt17(agg.h[i]), fmt17(agg.theory[i]), fmt17(e.mean[i]), fmt17(e.band_low[i]), fmt17(e.band_high[i]), fmt17(e.rmse[i])]
    });
    io::csv(&["h", "theory", "mean", "band_low", "band_high", "rmse"], rows)
}

fn curve_max(v: &[f64]) -> f64 {
    v.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max)
}

fn experiment_json(c: &ExperimentConfig) -> Value {
    json!({
        "process": process_json(&c.process),
        "experiment": { "n_mc": c.n_mc, "seed": c.seed, "keep_logscale": c.keep_logscale },
        "analysis": settings_json(&c.analysis),
    })
}

pub fn mc(args: &McArgs, argv: &[String]) -> Result<(), CliError> {
    let started = now_ms();
    let file = RunFile::load(&args.config)?;
    let config = file.experiment(&args.analysis.section(), args.n_mc, args.seed)?;
    let agg = harness::run_experiment(&config)?;

    out_dir(&args.out)?;
    let mut outputs = OutputLog::default();
    for e in &agg.estimators {
        outputs.write(&args.out, &format!("{}.csv", e.name), aggregate_csv(&agg, e).as_bytes(), json!({}))?;
    }
    let rows = agg.realizations.iter().map(|r| {
        vec![
            r.index.to_string(),
            r.seed.to_string(),
            fmt17(r.centering.h_mode),
            fmt17(r.centering.c10),
            fmt17(curve_max(&r.classical)),
            fmt17(curve_max(&r.envelope)),
            fmt17(r.envelope_excess),
            fmt17(r.classical_deficit),
        ]
    });
    let header = ["index", "seed", "h_mode", "c10", "legendre_max", "envelope_max", "envelope_excess", "classical_deficit"];
    outputs.write(&args.out, "realizations.csv", io::csv(&header, rows).as_bytes(), json!({}))?;
    if config.keep_logscale {
        let rows = agg.realizations.iter().flat_map(|r| {
            r.logscale.iter().map(move |l| {
                vec![
                    r.index.to_string(),
                    fmt17(l.q),
                    fmt17(l.gamma),
                    fmt17(l.delta),
                    l.j.to_string(),
                    fmt17(l.log2_s),
                    fmt17(l.fit),
                    u8::from(l.in_fit_range).to_string(),
                    fmt17(l.slope),
                    fmt17(l.r2),
                ]
            })
        });
        let header = ["index", "q", "gamma", "delta", "j", "log2_S", "fit", "in_fit_range", "slope", "r2"];
        outputs.write(&args.out, "logscale.csv", io::csv(&header, rows).as_bytes(), json!({}))?;
    }
    let summary = json!({
        "d": agg.d,
        "n_mc": config.n_mc,
        "completed": agg.realizations.len(),
        "failures": agg.failures.iter().map(|(i, m)| json!({ "index": i, "error": m })).collect::<Vec<_>>(),
    });
    outputs.write_json(&args.out, "summary.json", &summary)?;
    let b = io::read_bytes(&args.config)?;
    let inputs = vec![json!({ "path": args.config.display().to_string(), "bytes": b.len(), "sha256": io::sha256_hex(&b) })];
    write_manifest(&args.out, "mc", argv, experiment_json(&config), inputs, outputs, started)?;
    eprintln!(
        "{} of {} realizations analyzed ({} failed) -> {}",
        agg.realizations.len(),
        config.n_mc,
        agg.failures.len(),
        args.out.display()
    );
    Ok(())
}
