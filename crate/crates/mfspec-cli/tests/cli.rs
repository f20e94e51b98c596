use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mfspec_cli::config::{AnalysisSection, RunFile};
use serde_json::Value;
use tempfile::TempDir;

fn mfspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfspec")).args(args).env("MFSPEC_THREADS", "2").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn presets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets")
}

fn curve<'a>(spectra: &'a Value, name: &str) -> &'a Value {
    spectra.as_array().unwrap().iter().find(|c| c["estimator"] == name).unwrap()
}

fn values(v: &Value) -> Vec<Option<f64>> {
    v.as_array().unwrap().iter().map(Value::as_f64).collect()
}

#[test]
fn usage_errors_exit_1() {
    let o = mfspec(&["analyze", "--out", "nowhere"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--input"));
    assert_eq!(code(&mfspec(&["frobnicate"])), 1);
    assert_eq!(code(&mfspec(&["--help"])), 0);
    assert_eq!(code(&mfspec(&["--version"])), 0);
}

#[test]
fn invalid_process_parameter_is_named() {
    let dir = TempDir::new().unwrap();
    let o = mfspec(&["synth", "--process", "mrw1d", "--n", "1024", "--H", "1.5", "--lambda2", "0.02", "--out", s(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("`H`"), "{}", stderr(&o));
    let o = mfspec(&["synth", "--process", "levy", "--n", "1000", "--alpha", "1.25", "--out", s(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("`n`"));
    let o = mfspec(&["synth", "--process", "mrw1d", "--n", "1024", "--lambda2", "0.02", "--out", s(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("needs `H`"));
}

#[test]
fn synthesis_is_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = mfspec(&["synth", "--process", "mrw1d", "--n", "65536", "--H", "0.72", "--lambda2", "0.08", "--seed", "7", "--out", s(&out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (std::fs::read(out.join("data.csv")).unwrap(), std::fs::read(out.join("theory.json")).unwrap())
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a, b);
    let text = String::from_utf8(a.0).unwrap();
    assert_eq!(text.lines().count(), 65537);
    // Fixed 17-significant-digit fields.
    assert!(text.lines().skip(1).all(|l| l.split('e').next().unwrap().trim_start_matches('-').len() == 18));
    let manifest = json(&dir.path().join("a/manifest.json"));
    assert_eq!(manifest["outputs"][0]["file"], "data.csv");
    assert_eq!(manifest["outputs"][0]["shape"], serde_json::json!([1, 65536]));
    assert_eq!(manifest["config"]["seed"], 7);
}

#[test]
fn levy_theory_file() {
    let dir = TempDir::new().unwrap();
    let o = mfspec(&["synth", "--process", "levy", "--alpha", "1.25", "--n", "1048576", "--seed", "3", "--out", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = json(&dir.path().join("theory.json"));
    let h = values(&t["h"]);
    let d = values(&t["D"]);
    let i = h.iter().position(|x| (x.unwrap() - 0.4).abs() < 1e-9).unwrap();
    assert!((d[i].unwrap() - 0.5).abs() < 1e-12);
    let top = h.iter().position(|x| (x.unwrap() - 0.5).abs() < 1e-9).unwrap();
    assert_eq!(d[top], Some(1.0));
    // Outside the support the spectrum is -inf, written as null.
    assert_eq!(d[top + 1], None);
    assert_eq!(t["d"], 1);
}

#[test]
fn analyze_signal_from_csv() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("sig");
    let o = mfspec(&["synth", "--process", "mrw1d", "--n", "16384", "--H", "0.72", "--lambda2", "0.08", "--seed", "1", "--out", s(&data)]);
    assert_eq!(code(&o), 0);
    let input = data.join("data.csv");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = mfspec(&[
            "analyze", "--input", s(&input), "--dim", "1", "--nvm", "3", "--j1", "3", "--j2", "10", "--q", "-4:0.25:4",
            "--gamma", "0,5,10,100,200,500", "--delta", "auto", "--out", s(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        out
    };
    let out = run("a");
    let spectra = json(&out.join("spectra.json"));
    let names: Vec<&str> = spectra.as_array().unwrap().iter().map(|c| c["estimator"].as_str().unwrap()).collect();
    assert_eq!(names[0], "legendre");
    assert_eq!(names[1], "envelope");
    // gamma = 0 once, 21 shifts for each of the other five strengths.
    assert_eq!(names.len(), 2 + 1 + 5 * 21);
    let l = curve(&spectra, "legendre");
    assert_eq!(l["d"], 1);
    assert_eq!(l["params"]["j1"], 3);
    assert_eq!(l["params"]["j2"], 10);
    assert_eq!(l["params"]["nvm"], 3);
    assert_eq!(l["h"].as_array().unwrap().len(), l["D"].as_array().unwrap().len());
    let env = values(&curve(&spectra, "envelope")["D"]);
    let leg = values(&l["D"]);
    for (e, c) in env.iter().zip(&leg) {
        if let (Some(e), Some(c)) = (e, c) {
            assert!(*e <= 1.0 + 1e-9 && *c <= 1.0 + 1e-9);
        }
    }
    let summary = json(&out.join("summary.json"));
    let h_mode = summary["centering"]["h_mode"].as_f64().unwrap();
    assert!((h_mode - 0.76).abs() < 0.1, "{h_mode}");
    assert_eq!(summary["deltas"].as_array().unwrap().len(), 21);

    let logscale = std::fs::read_to_string(out.join("logscale.csv")).unwrap();
    assert!(logscale.starts_with("q,gamma,delta,j,log2_S,fit,in_fit_range,slope,intercept,r2\n"));
    assert!(logscale.lines().count() > 1);

    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "analyze");
    assert_eq!(manifest["config"]["analysis"]["fit"], serde_json::json!([3, 10]));
    let sha = manifest["inputs"][0]["sha256"].as_str().unwrap();
    assert_eq!(sha.len(), 64);
    let files: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|o| o["file"].as_str().unwrap()).collect();
    assert_eq!(files, ["spectra.json", "summary.json", "logscale.csv"]);

    let again = run("b");
    for f in files {
        assert_eq!(std::fs::read(out.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn analyze_images() {
    let dir = TempDir::new().unwrap();
    let gen = |format: &str| {
        let out = dir.path().join(format);
        let o = mfspec(&[
            "synth", "--process", "mrw2d", "--rows", "128", "--cols", "128", "--H", "0.6", "--lambda2", "0.01", "--seed", "5",
            "--format", format, "--out", s(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        out
    };
    let pgm = gen("pgm").join("data.pgm");
    let out = dir.path().join("a_pgm");
    let o = mfspec(&["analyze", "--input", s(&pgm), "--dim", "2", "--j1", "3", "--j2", "5", "--gamma", "0,10", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let spectra = json(&out.join("spectra.json"));
    for c in spectra.as_array().unwrap() {
        assert_eq!(c["d"], 2);
    }
    // Single lifted members may exceed d away from their shift; the two estimates may not.
    for c in [curve(&spectra, "legendre"), curve(&spectra, "envelope")] {
        let best = values(&c["D"]).into_iter().flatten().fold(f64::NEG_INFINITY, f64::max);
        assert!(best <= 2.0 + 1e-9, "{} {best}", c["estimator"]);
    }

    // Raw floats pick their shape up from the manifest written next to them.
    let raw = gen("f64").join("data.f64");
    let out = dir.path().join("a_raw");
    let o = mfspec(&["analyze", "--input", s(&raw), "--j1", "3", "--j2", "5", "--gamma", "0,10", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&out.join("summary.json"))["shape"], serde_json::json!([128, 128]));
    let o = mfspec(&["analyze", "--input", s(&raw), "--shape", "64x64", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    let o = mfspec(&["analyze", "--input", s(&raw), "--dim", "1", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn analyze_cascade_coefficients() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("dwc");
    let o = mfspec(&["synth", "--process", "dwc", "--levels", "12", "--w", "0.45", "--out", s(&data)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("a");
    let o = mfspec(&["analyze", "--input", s(&data.join("coeffs.csv")), "--format", "coeffs", "--gamma", "0", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = json(&out.join("summary.json"));
    let zeta = &summary["classical"]["zeta"];
    let q = values(&zeta["q"]);
    let z = values(&zeta["zeta"]);
    let i = q.iter().position(|&x| x == Some(2.0)).unwrap();
    let exact = 1.0 - (0.45f64.powi(2) + 0.55f64.powi(2)).log2();
    assert!((z[i].unwrap() - exact).abs() < 0.05);
    assert_eq!(curve(&json(&out.join("spectra.json")), "legendre")["params"]["nvm"], Value::Null);
}

#[test]
fn data_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    assert_eq!(code(&mfspec(&["analyze", "--input", s(&dir.path().join("missing.csv")), "--out", s(&out)])), 2);
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "value\n1\n2\nthree\n").unwrap();
    let o = mfspec(&["analyze", "--input", s(&bad), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 4"));
    let short = dir.path().join("short.csv");
    std::fs::write(&short, "1\n2\n3\n4\n").unwrap();
    assert_eq!(code(&mfspec(&["analyze", "--input", s(&short), "--out", s(&out)])), 2);
    let unknown = dir.path().join("x.dat");
    std::fs::write(&unknown, "1\n").unwrap();
    assert_eq!(code(&mfspec(&["analyze", "--input", s(&unknown), "--out", s(&out)])), 1);
}

#[test]
fn config_errors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = mfspec(&["mc", "--config", s(&dir.path().join("nope.cfg")), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "[process]\nkind = \"mrw1d\"\nn = \"many\"\n").unwrap();
    let o = mfspec(&["mc", "--config", s(&bad), "--out", s(&out)]);
    assert_eq!(code(&o), 1);
    let msg = stderr(&o);
    assert!(msg.contains("line 3") && msg.contains('n'), "{msg}");
    std::fs::write(&bad, "[analysis]\ngama = [0]\n").unwrap();
    let o = mfspec(&["mc", "--config", s(&bad), "--out", s(&out)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("gama"));
}

#[test]
fn single_realization_bands_equal_mean() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("one.cfg");
    std::fs::write(
        &cfg,
        "[process]\nkind = \"mrw1d\"\nn = 4096\nH = 0.72\nlambda2 = 0.08\n\n[experiment]\nn_mc = 1\nseed = 3\nkeep_logscale = true\n\n[analysis]\nj1 = 4\nj2 = 9\ngamma = [0, 10]\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = mfspec(&["mc", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for name in ["legendre.csv", "envelope.csv"] {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "h,theory,mean,band_low,band_high,rmse");
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(f[2], f[3], "{line}");
            assert_eq!(f[2], f[4], "{line}");
        }
    }
    assert_eq!(std::fs::read_to_string(out.join("realizations.csv")).unwrap().lines().count(), 2);
    assert!(out.join("logscale.csv").exists());
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["config"]["experiment"]["n_mc"], 1);
    assert_eq!(manifest["config"]["process"]["kind"], "mrw1d");
}

#[test]
fn presets_resolve() {
    for name in ["concat-mrw.cfg", "concat-mrw-2d.cfg", "mrw.cfg", "levy.cfg", "moffett-like.cfg"] {
        let f = RunFile::load(&presets().join(name)).unwrap();
        let c = f.experiment(&AnalysisSection::default(), None, None).unwrap();
        assert!(c.n_mc >= 1, "{name}");
    }
    let m = RunFile::load(&presets().join("moffett-like.cfg")).unwrap().experiment(&AnalysisSection::default(), None, None).unwrap();
    assert_eq!(m.analysis.gammas, vec![0.0, 100.0, 500.0, 750.0]);
    assert_eq!(m.analysis.q_grid.len(), 81);
    assert_eq!(m.analysis.q_grid[0], -10.0);
}

fn local_maxima(v: &[Option<f64>]) -> Vec<usize> {
    (1..v.len() - 1)
        .filter(|&i| match (v[i - 1], v[i], v[i + 1]) {
            (Some(a), Some(b), Some(c)) => b > a && b >= c,
            _ => false,
        })
        .collect()
}

#[test]
fn concatenated_mrw_preset_shows_a_dip() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = mfspec(&["mc", "--config", s(&presets().join("concat-mrw.cfg")), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("envelope.csv")).unwrap();
    let rows: Vec<(f64, Option<f64>)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let m: f64 = f[2].parse().unwrap();
            (f[0].parse().unwrap(), m.is_finite().then_some(m))
        })
        .collect();
    let mean: Vec<Option<f64>> = rows.iter().map(|r| r.1).collect();
    let maxima = local_maxima(&mean);
    let peak_near = |t: f64| maxima.iter().copied().filter(|&i| (rows[i].0 - t).abs() <= 0.03).map(|i| mean[i].unwrap()).fold(None, |a: Option<f64>, b| Some(a.map_or(b, |a| a.max(b))));
    let (p1, p2) = (peak_near(0.605).expect("first mode"), peak_near(0.755).expect("second mode"));
    let dip_at = rows.iter().position(|r| (r.0 - 0.68).abs() < 1e-9).unwrap();
    let dip = mean[dip_at].unwrap();
    assert!(dip < p1.min(p2), "dip {dip} peaks {p1} {p2}");
}
