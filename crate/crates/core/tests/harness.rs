use std::collections::HashMap;

use hexmix::harness::*;
use hexmix::rng::replica_seed;
use hexmix::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// e^{tQ} by uniformization: Poisson-weighted powers of I + Q/Λ.
fn uniformized(q: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = q.nrows();
    let rate = (0..n).map(|i| -q[(i, i)]).fold(0.0, f64::max).max(1e-12);
    let p = DMatrix::identity(n, n) + q / rate;
    let mut term = DMatrix::identity(n, n);
    let mut weight = (-rate * t).exp();
    let mut out = &term * weight;
    let mut k = 0.0;
    while k < rate * t + 60.0 {
        k += 1.0;
        term = &term * &p;
        weight *= rate * t / k;
        out += &term * weight;
    }
    out
}

/// Generator rebuilt from single-site flips of the enumerated states.
fn generator_by_flips(states: &[HeightField], q: f64, scale: f64) -> DMatrix<f64> {
    let index: HashMap<&[i32], usize> = states.iter().enumerate().map(|(i, s)| (s.raw(), i)).collect();
    let p_up = 1.0 / (1.0 + (-q / scale).exp());
    let mut g = DMatrix::zeros(states.len(), states.len());
    for (a, s) in states.iter().enumerate() {
        for site in flippable(s) {
            let up = s.at(site.x, site.y) == site.h_min;
            let t = s.with_value(site.x, site.y, if up { site.h_max } else { site.h_min }).unwrap();
            let rate = 2.0 * if up { p_up } else { 1.0 - p_up };
            g[(a, index[t.raw()])] += rate;
            g[(a, a)] -= rate;
        }
    }
    g
}

#[test]
fn spectrum_matches_independent_generator() {
    for ((a, b, c), q) in [((1, 1, 1), 0.0), ((2, 1, 1), 0.7), ((2, 2, 2), 0.0), ((2, 2, 2), -1.3), ((3, 2, 1), 0.4)] {
        let d = make_domain(a, b, c).unwrap();
        let spec = exact_spectrum(&d, q).unwrap();
        let g = generator_by_flips(&spec.states, q, a as f64);
        assert!((&g - &spec.generator).amax() < 1e-15);
        assert!(spec.row_sum_residual() < 1e-12);
        assert!(spec.stationarity_residual() < 1e-12);
        assert!(spec.detailed_balance_residual() < 1e-12);
        assert!(spec.stationary_error() < 1e-12);
        for t in [0.1, 0.7, 3.0] {
            assert!((spec.transition(t) - uniformized(&g, t)).amax() < 1e-10, "({a},{b},{c}) t={t}");
            assert!(spec.expm_discrepancy(t) < 1e-10);
        }
        let vols: Vec<f64> = spec.states.iter().map(|s| volume(s) as f64).collect();
        let z: f64 = vols.iter().map(|v| (q / a as f64 * v).exp()).sum();
        for (v, p) in vols.iter().zip(spec.target.iter()) {
            assert!(((q / a as f64 * v).exp() / z - p).abs() < 1e-12);
        }
    }
}

#[test]
fn two_state_chain_in_closed_form() {
    let spec = exact_spectrum(&make_domain(1, 1, 1).unwrap(), 0.0).unwrap();
    assert!((spec.gap - 2.0).abs() < 1e-12);
    for t in [0.0, 0.2, 1.0, 2.5] {
        assert!((spec.tv(t) - 0.5 * (-2.0 * t).exp()).abs() < 1e-12);
    }
    for eps in [0.01f64, 0.1, 0.25, 0.4] {
        let want = (1.0 / (2.0 * eps)).ln() / 2.0;
        assert!((tmix_exact(&spec, eps).unwrap() - want).abs() < 1e-9);
    }
    assert!(tmix_exact(&spec, 1.5).is_err());
}

#[test]
fn uniform_stationary_law_at_zero_tilt() {
    let spec = exact_spectrum(&make_domain(2, 2, 2).unwrap(), 0.0).unwrap();
    assert_eq!(spec.len(), 20);
    assert!(spec.target.iter().all(|p| (p - 0.05).abs() < 1e-15));
    assert!(spec.stationary.iter().all(|p| (p - 0.05).abs() < 1e-12));
}

#[test]
fn mixing_time_curve_is_monotone() {
    let spec = exact_spectrum(&make_domain(2, 2, 2).unwrap(), 0.3).unwrap();
    let times: Vec<f64> = (0..60).map(|k| 0.1 * k as f64).collect();
    let curve = spec.tv_curve(&times);
    assert!(curve.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    let eps = [0.45, 0.25, 0.1, 0.01, 1e-4];
    let tm: Vec<f64> = eps.iter().map(|&e| tmix_exact(&spec, e).unwrap()).collect();
    assert!(tm.windows(2).all(|w| w[0] < w[1]));
    for (e, t) in eps.iter().zip(&tm) {
        assert!(spec.tv(*t) <= e + 1e-9 && spec.tv(t * (1.0 - 1e-6)) > e - 1e-9);
    }
    let (lhs, rhs) = submultiplicativity(&spec, 0.25, 1e-3).unwrap();
    assert!(lhs <= rhs * (1.0 + 1e-9));
    assert!(submultiplicativity(&spec, 0.6, 0.1).is_err());
}

#[test]
fn uniformity_accepts_exact_samples_and_rejects_biased_ones() {
    let d = make_domain(1, 1, 1).unwrap();
    let samples = par_map(10_000, |i| cftp_sample(&ChainConfig::new(&d, replica_seed(3, i as u64))).unwrap());
    assert!(uniformity_test(&samples, &d).unwrap().p_value > 1e-3);

    let d = make_domain(2, 2, 2).unwrap();
    let (min, _) = extreme_tilings(&d);
    // short runs from the bottom are far from uniform
    let biased = par_map(5_000, |i| run(&ChainConfig::new(&d, replica_seed(4, i as u64)), &min, 0.3, &[]).unwrap().last().clone());
    assert!(uniformity_test(&biased, &d).unwrap().p_value < 1e-6);

    let tilted = par_map(5_000, |i| cftp_sample(&ChainConfig::new(&d, replica_seed(5, i as u64)).with_q(1.0)).unwrap());
    assert!(tilted_law_test(&tilted, &d, 1.0, 2.0).unwrap().p_value > 1e-3);
    assert!(uniformity_test(&tilted, &d).unwrap().p_value < 1e-6);

    let foreign = extreme_tilings(&make_domain(2, 1, 1).unwrap()).0;
    assert!(uniformity_test(&[foreign], &d).is_err());
}

#[test]
fn shuffled_streams_are_caught() {
    for seed in 0..5 {
        assert!(shuffled_stream_detected(&make_domain(3, 3, 3).unwrap(), seed, 200.0));
    }
}

#[test]
fn small_lattice_shape_error_is_bounded() {
    let shape = LatticeShape::new(4, 0.0).unwrap();
    let d = make_domain(4, 4, 4).unwrap();
    let (min, max) = extreme_tilings(&d);
    for f in [&min, &max, &cftp_sample(&ChainConfig::new(&d, 2)).unwrap()] {
        let e = shape.sup_error(f);
        assert!((0.0..=1.0).contains(&e), "{e}");
    }
    let frozen = shape.frozen_outside(0.3).unwrap();
    assert!(!frozen.is_empty());
    for (i, h) in frozen {
        assert!(min.raw()[i] <= h && h <= max.raw()[i]);
    }
}

#[test]
fn tilted_shape_fits_better_than_untilted() {
    let out = tilted_shape_experiment(8, &[0.0, 1.0], 300, 17).unwrap();
    let tilted = &out.arms[1];
    assert!(tilted.fit_tilted < tilted.fit_untilted, "{} vs {}", tilted.fit_tilted, tilted.fit_untilted);
    assert!(out.arms[0].volume_ci.0 < tilted.volume_ci.0);
}

#[test]
fn tv_bracket_on_smallest_hexagon() {
    let b = tv_bracket(1, 4000, 9).unwrap();
    assert!((b.tmix - 2f64.ln() / 2.0).abs() < 1e-9);
    assert!(b.within_tolerance() && b.brackets_tmix());
}

#[test]
fn reports_serialise_deterministically() {
    let run = || coalescence_scaling(&[2, 3], 20, 5, 1000.0).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.report.to_json(), b.report.to_json());
    assert!(!a.report.to_json().contains("wall_clock"));
    assert_eq!(a.medians, b.medians);
    assert!(a.non_coalesced.iter().all(|&n| n == 0));
    let v: serde_json::Value = serde_json::from_str(&a.report.to_json()).unwrap();
    assert_eq!(v["name"], "coalescence_scaling");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stationary_law_is_the_tilted_measure(q in -3.0f64..3.0, scale in 0.5f64..4.0) {
        let d = make_domain(2, 2, 1).unwrap();
        let spec = exact_spectrum_scaled(&d, q, scale).unwrap();
        prop_assert!(spec.stationary_error() < 1e-10);
        prop_assert!(spec.detailed_balance_residual() < 1e-12);
        prop_assert!(spec.gap > 0.0);
    }
}
