use mfspec::classic::{
    legendre_spectrum, parametric_spectrum, scaling_exponents, structure_functions, Estimator, StructureFunctionTable,
};
use mfspec::leaders::{compute_leaders, LeaderOptions, LeaderPyramid, LeaderScale};
use mfspec::legendre::uniform_grid;
use mfspec::synth::gen_dwc;
use mfspec::Error;
use proptest::prelude::*;

fn pyramid(scales: Vec<(i32, Vec<f64>)>) -> LeaderPyramid {
    let s = scales
        .into_iter()
        .map(|(j, v)| {
            let n = v.len();
            LeaderScale::new(j, 1, n, v).unwrap()
        })
        .collect();
    LeaderPyramid::from_scales(1, s).unwrap()
}

fn table_from_fn(q: &[f64], js: &[i32], f: impl Fn(f64, i32) -> f64) -> StructureFunctionTable {
    let rows = q.iter().map(|&qi| js.iter().map(|&j| f(qi, j)).collect()).collect();
    StructureFunctionTable::from_values(q.to_vec(), js.to_vec(), rows, vec![16; js.len()]).unwrap()
}

#[test]
fn zero_moment_is_zero() {
    let p = pyramid((1..=5).map(|j| (j, (0..(1 << j)).map(|k| 0.1 + k as f64).collect())).collect());
    let t = structure_functions(&p, &[0.0, 1.0]).unwrap();
    assert!(t.row(0).iter().all(|&v| v == 0.0));
}

#[test]
fn power_law_leaders() {
    let p = pyramid((1..=6).map(|j| (j, vec![2f64.powf(-0.5 * j as f64); 1 << j])).collect());
    let t = structure_functions(&p, &[2.0]).unwrap();
    for (&j, &v) in t.js().iter().zip(t.row(0)) {
        assert!((v + j as f64).abs() < 1e-12);
    }
    assert_eq!(t.js(), &[1, 2, 3, 4, 5, 6]);
}

#[test]
fn small_sample_arithmetic() {
    let p = pyramid(vec![(3, vec![1.0, 2.0, 4.0])]);
    let t = structure_functions(&p, &[1.0]).unwrap();
    assert!((t.value(0, 3).unwrap() - (7.0f64 / 3.0).log2()).abs() < 1e-14);
    assert_eq!(t.n_j(), &[3]);
}

#[test]
fn empty_scales_are_dropped_and_flagged() {
    let p = pyramid(vec![(2, vec![0.0; 4]), (3, vec![1.0; 8]), (4, vec![0.5; 16])]);
    let t = structure_functions(&p, &[1.0]).unwrap();
    assert_eq!(t.js(), &[3, 4]);
    assert_eq!(t.dropped(), &[2]);
}

#[test]
fn large_moments_do_not_overflow() {
    let p = pyramid(vec![(3, vec![1e-300, 1e300, 1.0]), (4, vec![1e-200; 4]), (5, vec![3.0; 4])]);
    let t = structure_functions(&p, &[-60.0, 60.0]).unwrap();
    for qi in 0..2 {
        assert!(t.row(qi).iter().all(|v| v.is_finite()));
    }
    // Dominated by the largest leader: 60 * log2(1e300) - log2(3).
    let want = 60.0 * 1e300f64.log2() - 3f64.log2();
    assert!((t.value(1, 3).unwrap() - want).abs() < 1e-9 * want);
}

#[test]
fn exact_lines_are_recovered() {
    let q = uniform_grid(-3.0, 0.5, 3.0).unwrap();
    let js: Vec<i32> = (2..=10).collect();
    let t = table_from_fn(&q, &js, |q, j| -0.72 * q * j as f64);
    let z = scaling_exponents(&t, 3, 9, false).unwrap();
    for (&qi, &zi) in q.iter().zip(&z.zeta) {
        assert!((zi - 0.72 * qi).abs() < 1e-12);
    }
    assert!(z.r2.iter().all(|&r| (r - 1.0).abs() < 1e-12));
    let t = table_from_fn(&q, &js, |q, j| 5.0 * q.sin() - (0.3 * q - 0.05 * q * q) * j as f64);
    let z = scaling_exponents(&t, 2, 10, false).unwrap();
    for (&qi, &zi) in q.iter().zip(&z.zeta) {
        assert!((zi - (0.3 * qi - 0.05 * qi * qi)).abs() < 1e-12);
    }
}

#[test]
fn three_point_least_squares() {
    let t = StructureFunctionTable::from_values(vec![1.0], vec![3, 4, 5], vec![vec![-1.0, -1.6, -2.0]], vec![4, 4, 4]).unwrap();
    let z = scaling_exponents(&t, 3, 5, false).unwrap();
    // Slope of (3,-1), (4,-1.6), (5,-2) is -0.5.
    assert!((z.zeta[0] - 0.5).abs() < 1e-12);
    let fitted = z.intercept[0] - 0.5 * 4.0;
    assert!((fitted - (-1.0 - 1.6 - 2.0) / 3.0).abs() < 1e-12);
}

#[test]
fn regression_range_errors() {
    let t = table_from_fn(&[1.0], &[1, 2, 3, 4, 5], |_, j| -(j as f64));
    assert!(matches!(scaling_exponents(&t, 4, 3, false), Err(Error::InvalidRange(_))));
    assert!(matches!(scaling_exponents(&t, 0, 4, false), Err(Error::InvalidRange(_))));
    assert!(matches!(scaling_exponents(&t, 4, 5, false), Err(Error::InvalidRange(_))));
    assert!(scaling_exponents(&t, 3, 5, false).is_ok());
}

#[test]
fn weighted_regression_on_exact_lines_and_fallback() {
    // Distinct dispersion per scale gives genuinely unequal weights.
    let p = pyramid((2..=8).map(|j| (j, (0..(1 << j)).map(|k| 2f64.powf(-0.6 * j as f64) * (1.0 + (k % j as usize) as f64)).collect())).collect());
    let q = [-1.0, 1.0, 2.0];
    let t = structure_functions(&p, &q).unwrap();
    let zw = scaling_exponents(&t, 2, 8, true).unwrap();
    let zu = scaling_exponents(&t, 2, 8, false).unwrap();
    assert!(zw.weighted);
    assert!(zw.zeta.iter().zip(&zu.zeta).any(|(a, b)| (a - b).abs() > 1e-6));
    // Zero dispersion at every scale falls back to equal weights.
    let flat = pyramid((2..=6).map(|j| (j, vec![2f64.powf(-0.4 * j as f64); 1 << j])).collect());
    let t = structure_functions(&flat, &q).unwrap();
    let zw = scaling_exponents(&t, 2, 6, true).unwrap();
    let zu = scaling_exponents(&t, 2, 6, false).unwrap();
    assert_eq!(zw.zeta, zu.zeta);
    for (&qi, &zi) in q.iter().zip(&zw.zeta) {
        assert!((zi - 0.4 * qi).abs() < 1e-12);
    }
}

#[test]
fn legendre_spectrum_examples() {
    let q = uniform_grid(-4.0, 0.25, 4.0).unwrap();
    let js: Vec<i32> = (1..=8).collect();
    let h_true = 0.7;
    let t = table_from_fn(&q, &js, |q, j| -h_true * q * j as f64);
    let z = scaling_exponents(&t, 1, 8, false).unwrap();
    let l = legendre_spectrum(&z, &[h_true, h_true + 0.5], 1).unwrap();
    assert!((l.values[0] - 1.0).abs() < 1e-12);
    assert!((l.values[1] - (1.0 - 2.0)).abs() < 1e-12);
    assert_eq!(l.estimator, Estimator::Legendre);
    assert_eq!(l.params.j1, Some(1));
    assert_eq!(l.params.q_range, Some((-4.0, 4.0)));

    let (hh, lam2) = (0.72, 0.08);
    let c1 = hh + lam2 / 2.0;
    let q = uniform_grid(-8.0, 0.01, 8.0).unwrap();
    let t = table_from_fn(&q, &js, |q, j| -(c1 * q - lam2 * q * q / 2.0) * j as f64);
    let z = scaling_exponents(&t, 1, 8, false).unwrap();
    let h = uniform_grid(0.5, 0.01, 1.0).unwrap();
    for d in [1usize, 2] {
        let l = legendre_spectrum(&z, &h, d).unwrap();
        for (&x, &v) in h.iter().zip(&l.values) {
            let want = d as f64 - (x - c1) * (x - c1) / (2.0 * lam2);
            assert!((v - want).abs() < 1e-4, "h = {x}");
        }
    }
}

#[test]
fn parametric_points_lie_on_the_parabola() {
    let (c1, lam2) = (0.76, 0.08);
    let q = uniform_grid(-3.0, 0.5, 3.0).unwrap();
    let js: Vec<i32> = (1..=6).collect();
    let t = table_from_fn(&q, &js, |q, j| -(c1 * q - lam2 * q * q / 2.0) * j as f64);
    let z = scaling_exponents(&t, 1, 6, false).unwrap();
    let pts = parametric_spectrum(&z, 1);
    assert_eq!(pts.len(), q.len());
    for &(h, d) in &pts[1..pts.len() - 1] {
        assert!((d - (1.0 - (h - c1) * (h - c1) / (2.0 * lam2))).abs() < 1e-10);
    }
}

#[test]
fn cascade_matches_closed_form_exponents() {
    let w: f64 = 0.45;
    let p = gen_dwc(14, w).unwrap();
    let l = compute_leaders(&p, LeaderOptions::default()).unwrap();
    let q = uniform_grid(-4.0, 0.25, 4.0).unwrap();
    let t = structure_functions(&l, &q).unwrap();
    let z = scaling_exponents(&t, 1, 14, false).unwrap();
    for (&qi, &zi) in q.iter().zip(&z.zeta) {
        let want = 1.0 - (w.powf(qi) + (1.0 - w).powf(qi)).log2();
        assert!((zi - want).abs() <= 0.05, "q = {qi}: {zi} vs {want}");
    }
}

fn random_pyramid(vals: &[f64]) -> LeaderPyramid {
    let mut it = vals.iter().cycle();
    pyramid((1..=7).map(|j| (j, (0..(1 << j)).map(|_| it.next().unwrap().exp2()).collect())).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn amplitude_does_not_change_exponents(vals in prop::collection::vec(-6.0f64..0.0, 5..60), c in 0.01f64..100.0) {
        let p = random_pyramid(&vals);
        let q = uniform_grid(-4.0, 0.5, 4.0).unwrap();
        let a = scaling_exponents(&structure_functions(&p, &q).unwrap(), 2, 7, false).unwrap();
        let b = scaling_exponents(&structure_functions(&p.scaled(c), &q).unwrap(), 2, 7, false).unwrap();
        for (x, y) in a.zeta.iter().zip(&b.zeta) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn spectrum_bounded_by_dimension_and_concave(vals in prop::collection::vec(-6.0f64..0.0, 5..60)) {
        let p = random_pyramid(&vals);
        let q = uniform_grid(-4.0, 0.25, 4.0).unwrap();
        let z = scaling_exponents(&structure_functions(&p, &q).unwrap(), 1, 7, false).unwrap();
        prop_assert_eq!(z.zeta[16], 0.0);
        let h = uniform_grid(-1.0, 0.01, 3.0).unwrap();
        let l = legendre_spectrum(&z, &h, 1).unwrap();
        prop_assert!(l.values.iter().all(|&v| v <= 1.0 + 1e-12));
        for i in 1..h.len() - 1 {
            prop_assert!(l.values[i - 1] - 2.0 * l.values[i] + l.values[i + 1] <= 1e-9);
        }
    }
}
