use mfspec::gmf::FitRange;
use mfspec::harness::{
    analyze, analyze_leaders, default_fit_range, logscale_table, resolution, run_experiment, AnalysisSettings, DeltaSpec,
    ExperimentConfig, LogscaleSelection,
};
use mfspec::leaders::{LeaderPyramid, LeaderScale};
use mfspec::synth::{ProcessSpec, Realization};
use mfspec::transform::daubechies_filter;
use mfspec::Error;

fn small_mrw(n_mc: usize, seed: u64) -> ExperimentConfig {
    let mut analysis = AnalysisSettings::defaults_for(12);
    analysis.fit = FitRange::new(4, 9);
    analysis.gammas = vec![0.0, 10.0, 100.0];
    analysis.deltas = DeltaSpec::Auto { half_width: 0.3, count: 7 };
    ExperimentConfig {
        process: ProcessSpec::Mrw1d { n: 1 << 12, h: 0.72, lambda2: 0.08 },
        n_mc,
        analysis,
        seed,
        keep_logscale: false,
    }
}

fn power_law_pyramid(h: f64, c: f64) -> LeaderPyramid {
    let scales = (1..=9)
        .map(|j| {
            let n = 1usize << j;
            LeaderScale::new(j, 1, n, vec![c * 2f64.powf(-h * j as f64); n]).unwrap()
        })
        .collect();
    LeaderPyramid::from_scales(1, scales).unwrap()
}

#[test]
fn single_realization_bands_collapse() {
    let agg = run_experiment(&small_mrw(1, 3)).unwrap();
    assert_eq!(agg.realizations.len(), 1);
    for e in &agg.estimators {
        assert_eq!(e.mean, e.band_low);
        assert_eq!(e.mean, e.band_high);
    }
    assert_eq!(agg.estimator("legendre").unwrap().mean, agg.realizations[0].classical);
    assert_eq!(agg.estimator("envelope").unwrap().mean, agg.realizations[0].envelope);
}

#[test]
fn worker_count_does_not_change_results() {
    let config = small_mrw(4, 11);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_experiment(&config).unwrap())
    };
    let (a, b) = (run(1), run(4));
    // Debug output compares NaN entries as equal.
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    let seeds: Vec<u64> = a.realizations.iter().map(|r| r.seed).collect();
    let mut unique = seeds.clone();
    unique.dedup();
    assert_eq!(unique.len(), 4);
}

#[test]
fn aggregate_invariants() {
    let agg = run_experiment(&small_mrw(6, 5)).unwrap();
    assert_eq!(agg.d, 1);
    assert!(agg.failures.is_empty());
    for e in &agg.estimators {
        for i in 0..agg.h.len() {
            assert!(e.band_low[i] <= e.mean[i] && e.mean[i] <= e.band_high[i], "{} at {}", e.name, agg.h[i]);
            if agg.theory[i] >= 0.0 {
                assert!(e.rmse[i] >= 0.0);
            } else {
                assert!(e.rmse[i].is_nan());
            }
        }
    }
    for r in &agg.realizations {
        assert!(r.envelope_excess <= 1e-9);
        assert!(r.classical_deficit <= 0.02);
        assert!(r.logscale.is_empty());
    }
}

#[test]
fn mrw_error_at_the_mode() {
    let mut analysis = AnalysisSettings::defaults_for(16);
    analysis.gammas = vec![0.0];
    let config = ExperimentConfig {
        process: ProcessSpec::Mrw1d { n: 1 << 16, h: 0.72, lambda2: 0.08 },
        n_mc: 10,
        analysis,
        seed: 2024,
        keep_logscale: false,
    };
    let agg = run_experiment(&config).unwrap();
    let mode = agg.h.iter().position(|&h| (h - 0.76).abs() < 1e-9).unwrap();
    let rmse = agg.estimator("legendre").unwrap().rmse[mode];
    assert!(rmse <= 0.1, "rmse {rmse}");
}

#[test]
fn exact_power_law_logscale_is_linear() {
    let mut s = AnalysisSettings::defaults_for(9);
    s.fit = FitRange::new(2, 8);
    let a = analyze_leaders(power_law_pyramid(0.7, 3.0), &s).unwrap();
    assert!((a.result.centering.h_mode - 0.7).abs() < 1e-12);
    let sel = LogscaleSelection { q: vec![-2.0, 0.0, 2.0], gammas: vec![0.0, 100.0] };
    let rows = logscale_table(&a, &sel, s.fit).unwrap();
    assert_eq!(rows.len(), 3 * 2 * 9);
    for r in &rows {
        assert!((r.r2 - 1.0).abs() < 1e-12, "{r:?}");
        assert!((r.slope + 0.7 * r.q).abs() < 1e-10);
        assert!((r.fit - r.log2_s).abs() < 1e-9);
        assert_eq!(r.in_fit_range, (2..=8).contains(&r.j));
        if r.gamma == 100.0 {
            assert!((r.delta - 0.7).abs() < 1e-12);
        }
        if r.q == 0.0 && r.gamma == 0.0 {
            assert_eq!(r.log2_s, 0.0);
            assert_eq!(r.slope, 0.0);
        }
    }
}

#[test]
fn logscale_tables_are_kept_on_request() {
    let mut config = small_mrw(2, 8);
    config.keep_logscale = true;
    let agg = run_experiment(&config).unwrap();
    for r in &agg.realizations {
        let sel = &config.analysis.logscale;
        assert!(!r.logscale.is_empty());
        assert_eq!(r.logscale.len() % (sel.q.len() * sel.gammas.len()), 0);
    }
}

#[test]
fn analysis_of_images_uses_the_second_dimension() {
    let spec = ProcessSpec::Mrw2d { rows: 128, cols: 128, h: 0.6, lambda2: 0.01 };
    let mut s = AnalysisSettings::defaults_for(7);
    s.fit = FitRange::new(3, 5);
    s.gammas = vec![0.0, 10.0];
    let a = analyze(&spec.generate(1).unwrap(), &s).unwrap();
    assert_eq!(a.dim, 2);
    let best = a.result.classical.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(best <= 2.0 + 1e-12);
    assert!(best > 1.9);
}

#[test]
fn experiment_errors() {
    assert!(matches!(run_experiment(&small_mrw(0, 1)), Err(Error::InvalidParameter { name: "n_mc", .. })));
    let mut bad = small_mrw(2, 1);
    bad.analysis.fit = FitRange::new(4, 40);
    assert!(run_experiment(&bad).is_err());
    let mut invalid = small_mrw(2, 1);
    invalid.process = ProcessSpec::Mrw1d { n: 1000, h: 0.7, lambda2: 0.01 };
    assert!(run_experiment(&invalid).is_err());
}

#[test]
fn resolution_and_default_fit() {
    assert_eq!(resolution(&ProcessSpec::Mrw1d { n: 1 << 16, h: 0.7, lambda2: 0.01 }), 16);
    assert_eq!(resolution(&ProcessSpec::Mrw2d { rows: 512, cols: 256, h: 0.7, lambda2: 0.01 }), 8);
    assert_eq!(default_fit_range(16, &daubechies_filter(3).unwrap()), FitRange::new(4, 13));
    assert_eq!(default_fit_range(10, &daubechies_filter(1).unwrap()), FitRange::new(2, 7));
    let cascade = ProcessSpec::Dwc { levels: 12, w: 0.45 };
    let s = AnalysisSettings::defaults_for(12);
    let a = analyze(&cascade.generate(0).unwrap(), &s).unwrap();
    assert!(matches!(cascade.generate(0).unwrap(), Realization::Pyramid(_)));
    assert_eq!(a.dim, 1);
}
