use std::collections::BTreeMap;

use num_complex::Complex64;
use proptest::prelude::*;
use raplab::algebra::{discriminant_of_roots, hungarian, roots_of};
use raplab::flows::{contraction_bound_check, integrate, Ivp, RhsSpec, SolverOptions};
use raplab::maps::{iterate, MapSpec};
use raplab::recurrence::{
    classify, translation_set_global, translation_set_remote, TauCandidates, Thresholds,
};
use raplab::signal::{sup_distance, SampledSignal, Window};

fn trig(a: f64, w1: f64, b: f64, w2: f64, span: f64, dt: f64) -> SampledSignal {
    let n = SampledSignal::points_for(0.0, span, dt);
    SampledSignal::from_fn(0.0, dt, n, |t| a * (w1 * t).sin() + b * (w2 * t).cos()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sup_distance_is_a_metric(
        a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64,
        w1 in 0.1..3.0f64, w2 in 0.1..3.0f64,
    ) {
        let s1 = trig(a, w1, b, w2, 50.0, 0.1);
        let s2 = trig(b, w2, c, w1, 50.0, 0.1);
        let s3 = trig(c, w1, a, w2, 50.0, 0.1);
        let w = Window::new(0.0, 50.0).unwrap();
        let d12 = sup_distance(&s1, &s2, &w).unwrap();
        prop_assert_eq!(d12, sup_distance(&s2, &s1, &w).unwrap());
        prop_assert_eq!(sup_distance(&s1, &s1, &w).unwrap(), 0.0);
        let d13 = sup_distance(&s1, &s3, &w).unwrap();
        let d32 = sup_distance(&s3, &s2, &w).unwrap();
        prop_assert!(d12 <= d13 + d32 + 1e-12);
    }

    #[test]
    fn translations_compose(k1 in 0usize..200, k2 in 0usize..200, w1 in 0.1..3.0f64) {
        let s = trig(1.0, w1, 0.5, 1.7, 100.0, 0.05);
        let (h1, h2) = (k1 as f64 * 0.05, k2 as f64 * 0.05);
        let twice = s.translate(h1).unwrap().translate(h2).unwrap();
        let once = s.translate(h1 + h2).unwrap();
        prop_assert_eq!(twice.len(), once.len());
        let w = once.domain();
        prop_assert!(sup_distance(&twice, &once, &w).unwrap() < 1e-12);
    }

    #[test]
    fn accepted_shifts_grow_with_epsilon(
        w1 in 0.3..2.0f64, w2 in 0.3..2.0f64, e1 in 0.02..0.3f64, de in 0.0..0.3f64,
    ) {
        let s = trig(1.0, w1, 1.0, w2, 200.0, 0.1);
        let w = Window::new(0.0, 200.0).unwrap();
        // On a fixed candidate set the accepted shifts are nested exactly.
        let fixed = TauCandidates::Grid { start: 0.25, end: 40.0, step: 0.25, refine: false };
        let lo = translation_set_global(&s, e1, &w, &fixed).unwrap();
        let hi = translation_set_global(&s, e1 + de, &w, &fixed).unwrap();
        for tau in lo.accepted_taus() {
            prop_assert!(hi.is_accepted(tau), "tau {} lost when eps grows", tau);
        }
        let rlo = translation_set_remote(&s, e1, &fixed).unwrap();
        let rhi = translation_set_remote(&s, e1 + de, &fixed).unwrap();
        for tau in rlo.accepted_taus() {
            prop_assert!(rhi.is_accepted(tau));
        }
        // Refined shifts may move within their cell, but the cell stays covered.
        let refined = TauCandidates::grid(0.25, 40.0, 0.25);
        let lo = translation_set_global(&s, e1, &w, &refined).unwrap();
        let hi = translation_set_global(&s, e1 + de, &w, &refined).unwrap().accepted_taus();
        for tau in lo.accepted_taus() {
            prop_assert!(hi.iter().any(|h| (h - tau).abs() <= 0.125 + 1e-9), "cell of {} lost", tau);
        }
    }

    #[test]
    fn global_acceptance_implies_remote(w1 in 0.3..2.0f64, eps in 0.05..0.4f64) {
        let s = trig(1.0, w1, 0.7, 2f64.sqrt(), 200.0, 0.1);
        let cands = TauCandidates::list((1..=40).map(|k| k as f64).collect::<Vec<_>>());
        let g = translation_set_global(&s, eps, &s.domain(), &cands).unwrap();
        let r = translation_set_remote(&s, eps, &cands).unwrap();
        for e in g.accepted() {
            let re = r.entries.iter().find(|x| x.tau == e.tau).unwrap();
            prop_assert!(re.accepted);
            prop_assert_eq!(re.l, Some(0.0));
        }
    }

    #[test]
    fn polynomial_roots_reconstruct_coefficients(
        coeffs in proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 1..6),
    ) {
        let a: Vec<Complex64> = coeffs.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
        let roots = roots_of(&a, 0.0).unwrap();
        // Expand prod (x - λ_i) and compare with the monic coefficients.
        let mut poly = vec![Complex64::new(1.0, 0.0)];
        for r in &roots {
            let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
            for (k, c) in poly.iter().enumerate() {
                next[k] += c;
                next[k + 1] -= c * r;
            }
            poly = next;
        }
        let scale = 1.0 + a.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        for (k, c) in a.iter().enumerate() {
            prop_assert!((poly[k + 1] - c).norm() < 1e-8 * scale.powi(a.len() as i32));
        }
        if a.len() == 2 {
            let d = discriminant_of_roots(&roots);
            let oracle = -(a[0] * a[0] - 4.0 * a[1]);
            prop_assert!((d - oracle).norm() < 1e-8 * scale * scale);
        }
    }

    #[test]
    fn hungarian_matches_brute_force(
        cost in proptest::collection::vec(proptest::collection::vec(0.0..10.0f64, 4), 4),
    ) {
        let best = hungarian(&cost);
        let total = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>();
        let mut perm = vec![0, 1, 2, 3];
        let mut min = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| min = min.min(total(p)));
        prop_assert!((total(&best) - min).abs() < 1e-12);
    }

    #[test]
    fn map_iteration_is_deterministic(u0 in -5.0..5.0f64, c in -1.0..1.0f64) {
        let mut params = BTreeMap::new();
        params.insert("c".to_string(), c);
        let m = MapSpec::builtin_with("affine_remote", &params).unwrap();
        prop_assert_eq!(iterate(&m, &[u0], 200).unwrap(), iterate(&m, &[u0], 200).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn contraction_bound_holds_for_dissipative_pairs(x1 in -5.0..5.0f64, x2 in -5.0..5.0f64) {
        let opts = SolverOptions { rel_tol: 1e-10, abs_tol: 1e-12, max_step: 0.05 };
        let rhs = RhsSpec::builtin("heq1").unwrap();
        let span = Window::new(0.0, 30.0).unwrap();
        let a = integrate(&Ivp::new(rhs.clone(), vec![x1], span, opts)).unwrap();
        let b = integrate(&Ivp::new(rhs, vec![x2], span, opts)).unwrap();
        prop_assert!(contraction_bound_check(&a, &b, 0.5, 3.0, 1e-6).unwrap().holds);
    }

    #[test]
    fn bounded_forcing_keeps_solutions_bounded(x0 in -6.0..6.0f64) {
        let rhs = RhsSpec::builtin("heq1").unwrap();
        let s = integrate(&Ivp::new(rhs, vec![x0], Window::new(0.0, 60.0).unwrap(), SolverOptions::default())).unwrap();
        let bound = x0.abs().max(1.0 + 2.0);
        prop_assert!(s.sup_norm() <= bound + 1e-9);
    }

    #[test]
    fn classification_flags_are_monotone(w1 in 0.5..2.0f64, b in 0.0..1.0f64, drift in 0.0..1.0f64) {
        let dt = 0.1;
        let n = SampledSignal::points_for(0.0, 600.0, dt);
        let s = SampledSignal::from_fn(0.0, dt, n, |t| (w1 * t + drift * (1.0 + t).ln()).sin() + b * (-0.05 * t).exp()).unwrap();
        let r = classify(&s, &Thresholds::for_signal(&s)).unwrap();
        prop_assert!(r.flags.is_monotone(), "{:?}", r.flags);
    }
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}
