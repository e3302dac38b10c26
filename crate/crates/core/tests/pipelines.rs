mod common;

use gpke::cases::{
    abel_cross_check, abel_state_from_profile, coordinate_relation, find_nondegenerate_seed, integrate_a34_gq, integrate_abel,
    integrate_case, key_function, profile_summary, seed_state, AlgebraCase, CaseTag, ModelParams, RelationInput, ReducedSolution,
    SearchBox,
};
use gpke::example::ExampleParams;
use gpke::geometry::metric_from_key;
use gpke::ode::IntegratorConfig;
use gpke::quartic::{classify_by_roots, classify_real, invariants, weyl_from_theta, PetrovTag, DEFAULT_EPS};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn case(tag: CaseTag, p: ModelParams) -> AlgebraCase {
    AlgebraCase::new(tag, p).unwrap()
}

fn certified(case: &AlgebraCase, span: f64) -> ReducedSolution {
    let cert = find_nondegenerate_seed(case, &SearchBox::default_for(case.tag), 400).unwrap();
    integrate_case(case, cert.seed, cert.seed.t0 + span, &IntegratorConfig::default()).unwrap()
}

#[test]
fn jet_and_closed_form_discriminants_agree_along_trajectories() {
    for (tag, lambda) in [(CaseTag::A32, 1.0), (CaseTag::A32, -2.0), (CaseTag::A34, 1.0), (CaseTag::A34, -1.0), (CaseTag::A36, 0.5)] {
        let sol = certified(&case(tag, ModelParams::new(lambda)), 1.0);
        let s = profile_summary(&sol, 64, DEFAULT_EPS).unwrap();
        assert!(s.compared >= 50, "{tag}: {} compared", s.compared);
        assert!(s.max_d_gap.unwrap() <= 1e-6, "{tag} Λ={lambda}: {:?}", s.max_d_gap);
        assert!(s.max_hh_residual <= 1e-8, "{tag} Λ={lambda}: {}", s.max_hh_residual);
    }
}

#[test]
fn profiles_solve_the_reduced_equation_in_every_case() {
    let p = ModelParams::new(-1.0).with_m0(-0.75).with_alpha0(0.6).with_zeta0(0.4);
    for tag in [CaseTag::A35, CaseTag::A35Half, CaseTag::A37] {
        let sol = certified(&case(tag, p), 0.5);
        let s = profile_summary(&sol, 40, DEFAULT_EPS).unwrap();
        assert!(s.max_hh_residual <= 1e-8, "{tag}: {}", s.max_hh_residual);
        assert!(s.samples.iter().all(|x| x.tag != PetrovTag::Degenerate), "{tag}");
    }
}

#[test]
fn profile_and_first_order_forms_agree() {
    // T = v⁴ g(ln v), so T_v / v³ = Q + g along both integrations.
    let cfg = IntegratorConfig::with_tol(1e-11, 1e-13);
    for (lambda, g0, q0) in [(1.0, 0.2, 0.3), (-1.0, -0.3, 0.5), (3.0, 0.05, 0.9)] {
        let c = case(CaseTag::A34, ModelParams::new(lambda));
        let gq = integrate_a34_gq(&c, g0, q0, 0.5, &cfg).unwrap();
        let tv = integrate_case(&c, seed_state(&c, g0, q0).unwrap(), 0.5f64.exp(), &cfg).unwrap();
        let w_end = gq.t_end().min(tv.validity().1.ln());
        for k in 0..=30 {
            let w = w_end * k as f64 / 30.0;
            let y = gq.eval(w).unwrap();
            let v = w.exp();
            let (t, t_v) = tv.state(v).unwrap();
            assert!((t_v / v.powi(3) - (y[0] + y[1])).abs() <= 1e-7, "Λ={lambda} w={w}");
            assert!((t / v.powi(4) - y[0]).abs() <= 1e-7, "Λ={lambda} w={w}");
        }
    }
}

#[test]
fn a34_and_a36_share_sigma_but_not_the_metric() {
    let (a34, a36) = (case(CaseTag::A34, ModelParams::new(1.0)), case(CaseTag::A36, ModelParams::new(1.0)));
    let (g0, q0) = (0.2, 0.5);
    let s34 = integrate_case(&a34, seed_state(&a34, g0, q0).unwrap(), 1.0f64.exp(), &IntegratorConfig::default()).unwrap();
    let s36 = integrate_case(&a36, seed_state(&a36, g0, q0).unwrap(), 1.0, &IntegratorConfig::default()).unwrap();
    for k in 0..=20 {
        let w = k as f64 / 20.0;
        let (u, du) = s36.state(w).unwrap();
        let (r6, sig6) = abel_state_from_profile(&a36, w, u, du).unwrap();
        let v = w.exp();
        let (u, du) = s34.state(v).unwrap();
        let (r4, sig4) = abel_state_from_profile(&a34, v, u, du).unwrap();
        assert!((r4 - r6).abs() <= 1e-7 * r6.abs(), "w={w}: r {r4} vs {r6}");
        assert!((sig4 - sig6).abs() <= 1e-7 * sig6.abs().max(1.0), "w={w}: Σ {sig4} vs {sig6}");
    }
    // xy = 1.32 and (x² + y²)/2 lie inside both validity intervals.
    let (x, y) = (1.2, 1.1);
    let point = [0.4, -0.3, x, y];
    let m34 = metric_from_key(&key_function(&a34, Some(&s34)).unwrap().jet(x, y).unwrap(), point, 1.0);
    let m36 = metric_from_key(&key_function(&a36, Some(&s36)).unwrap().jet(x, y).unwrap(), point, 1.0);
    assert!((m34.g - m36.g).amax() > 1e-3 * m34.g.amax(), "{} vs {}", m34.g, m36.g);
}

#[test]
fn half_case_without_logarithm_has_constant_sigma() {
    let c = case(CaseTag::A35Half, ModelParams::new(1.0).with_zeta0(0.0));
    let sol = certified(&c, 0.8);
    let sigmas: Vec<f64> = sol
        .trajectory
        .sample(40)
        .unwrap()
        .into_iter()
        .map(|(t, y)| abel_state_from_profile(&c, t, y[0], y[1]).unwrap().1)
        .collect();
    let s0 = sigmas[0];
    assert!(sigmas.iter().all(|s| (s - s0).abs() <= 1e-8 * s0.abs().max(1.0)), "{sigmas:?}");
}

#[test]
fn abel_integrations_reproduce_mapped_profiles() {
    let p = ModelParams::new(1.0).with_m0(0.3).with_alpha0(0.4);
    for tag in [CaseTag::A32, CaseTag::A34, CaseTag::A35, CaseTag::A36, CaseTag::A37] {
        let sol = certified(&case(tag, p), 0.5);
        let dev = abel_cross_check(&sol, 30).unwrap();
        assert!(dev <= 1e-6, "{tag}: {dev}");
    }
}

#[test]
fn a32_relation_differentiates_to_its_integrand() {
    let c = case(CaseTag::A32, ModelParams::new(1.0));
    let sol = certified(&c, 0.5);
    let (t, y0) = sol.trajectory.sample(2).unwrap()[0].clone();
    let (r0, s0) = abel_state_from_profile(&c, t, y0[0], y0[1]).unwrap();
    let abel = integrate_abel(&c, r0, s0, r0 + 0.3, &IntegratorConfig::with_tol(1e-12, 1e-14)).unwrap();
    let (lo, hi) = abel.interval();
    let y = 1.7;
    let x = |w: f64| coordinate_relation(&abel, RelationInput { from: lo, to: w, y: Some(y) }).unwrap();
    for k in 1..5 {
        let w = lo + (hi - lo) * k as f64 / 5.0;
        let h = 1e-4 * (hi - lo);
        let fd = (x(w + h) - x(w - h)) / (2.0 * h);
        let sigma = abel.sigma(w).unwrap();
        let expect = y * (4.0 - (12.0 * w + 1.0) * (3.0 * w + 1.0) / (3.0 * sigma));
        assert!((fd - expect).abs() <= 1e-6 * expect.abs().max(1.0), "w={w}: {fd} vs {expect}");
    }
    assert_eq!(x(lo), -y * y.ln());
}

#[test]
fn a36_relation_is_positive() {
    let c = case(CaseTag::A36, ModelParams::new(1.0));
    let sol = certified(&c, 0.5);
    let (t, y0) = sol.trajectory.sample(2).unwrap()[0].clone();
    let (r0, s0) = abel_state_from_profile(&c, t, y0[0], y0[1]).unwrap();
    let abel = integrate_abel(&c, r0, s0, r0 * 1.5, &IntegratorConfig::default()).unwrap();
    let (lo, hi) = abel.interval();
    for k in 0..=4 {
        let to = lo + (hi - lo) * k as f64 / 4.0;
        assert!(coordinate_relation(&abel, RelationInput { from: lo, to, y: None }).unwrap() > 0.0);
    }
}

#[test]
fn example_discriminant_ignores_x_and_z0() {
    for lambda in [1.0, -1.0] {
        for w in [0.3, 1.7, 7.5, 60.0] {
            let closed = ExampleParams::new(lambda, 1.0).unwrap().dpr(w, 1.0).unwrap().d;
            for z0 in [1.0, -1.0, 2.0, 0.3] {
                let e = ExampleParams::new(lambda, z0).unwrap();
                for x in [0.5, 1.0, -1.3, 2.0] {
                    assert_eq!(e.dpr(w, x).unwrap().d, closed);
                    let y = e.y_of(x, w).unwrap();
                    let prof = e.profile_at(w).unwrap();
                    let inv = e.case().conditioned_invariants(x, y, &|_| Ok(prof)).unwrap();
                    assert!((inv.d - closed).abs() <= 1e-6 * closed.abs(), "Λ={lambda} w={w} z0={z0} x={x}: {} vs {closed}", inv.d);
                }
            }
        }
    }
}

#[test]
fn degenerate_band_and_repeated_roots_coincide_on_the_corpus() {
    let mut rng = StdRng::seed_from_u64(99);
    let mut corpus: Vec<_> = (0..2000).map(|_| common::random_quartic(&mut rng)).collect();
    for k in 0..400 {
        let a = -2.0 + 4.0 * k as f64 / 400.0;
        let b = 1.5 - a / 3.0;
        corpus.push(common::quartic_from_roots(&[(a, 0.0), (a, 0.0), (b, 0.7)], 1.3));
        corpus.push(common::quartic_from_roots(&[(a, 0.4), (a, 0.4)], -0.6));
        corpus.push(common::quartic_from_roots(&[(b, 0.0), (b, 0.0), (b, 0.0), (a - 3.0, 0.0)], 2.0));
    }
    let mut degenerate = 0;
    for q in &corpus {
        let tag = classify_real(&invariants(q), DEFAULT_EPS).tag;
        let repeated = !classify_by_roots(q, 1e-4).unwrap().all_simple();
        if tag == PetrovTag::Degenerate {
            degenerate += 1;
            assert!(repeated, "{q:?}");
        }
        if repeated && classify_by_roots(q, 1e-7).map(|p| !p.all_simple()).unwrap() {
            assert_eq!(tag, PetrovTag::Degenerate, "{q:?}");
        }
    }
    assert!(degenerate >= 1200);
}

proptest! {
    #[test]
    fn a33_is_degenerate_everywhere(
        lambda in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0],
        f0 in prop_oneof![-3.0f64..-0.2, 0.2f64..3.0],
        g0 in -2.0f64..2.0,
        x in -2.0f64..2.0,
        y in prop_oneof![-2.0f64..-0.1, 0.1f64..2.0],
    ) {
        let c = case(CaseTag::A33, ModelParams::new(lambda).with_f0_g0(f0, g0));
        let th = c.theta_jet(x, y, &|_| unreachable!()).unwrap();
        let inv = invariants(&weyl_from_theta(&th));
        prop_assert!(inv.d.abs() <= 1e-12 * inv.d_scale.max(f64::MIN_POSITIVE), "{inv:?}");
    }
}
