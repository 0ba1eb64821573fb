use std::f64::consts::PI;

use aharmonic::experiment::Scenario;
use aharmonic::hessian::cordes_claim_sample;
use aharmonic::model::{
    builtin_model, conjugate_model, cordes_constants, elliptic_coefficients_from_d, ModelSpec,
};
use aharmonic::numeric::gauss_legendre;
use aharmonic::solver::radial_oracle;
use aharmonic::verdicts::{log_convexity_verdict, Status, VerdictContext};
use aharmonic::level::Profile;
use aharmonic::chart::Topology;
use proptest::prelude::*;

fn model_strategy() -> impl Strategy<Value = ModelSpec> {
    prop_oneof![
        (1.1f64..6.0).prop_map(|p| ModelSpec::PHarmonic { p }),
        (0.2f64..3.0).prop_map(|c| ModelSpec::MinimalSurface { cap: Some(c) }),
        (1.05f64..3.0).prop_map(|gamma| ModelSpec::SubsonicGas { gamma }),
        (0.1f64..0.95).prop_map(|cap| ModelSpec::MaximalLorentz { cap }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn structure_bounds_hold_below_cap(spec in model_strategy(), u in 1e-4f64..1.0) {
        let m = builtin_model(&spec).unwrap();
        let s = u * m.structure_cap().min(m.domain_sup() * (1.0 - 1e-9)).min(1e3);
        let e = m.one_plus_d(s);
        prop_assert!(e >= m.alpha() - 1e-9 && e <= m.beta() + 1e-9, "{spec:?} s={s} 1+D={e}");
    }

    #[test]
    fn flux_inverse_round_trips(spec in model_strategy(), u in 1e-3f64..0.99) {
        let m = builtin_model(&spec).unwrap();
        let t = u * m.domain_sup().min(10.0);
        let back = m.invert_flux(m.flux(t)).unwrap();
        prop_assert!((back - t).abs() <= 1e-9 * t.max(1.0), "{spec:?}: {t} -> {back}");
    }

    #[test]
    fn conjugate_swaps_and_inverts_bounds(p in 1.2f64..5.0) {
        let m = builtin_model(&ModelSpec::PHarmonic { p }).unwrap();
        let b = conjugate_model(&m);
        prop_assert!((b.alpha() - 1.0 / m.beta()).abs() < 1e-12);
        prop_assert!((b.beta() - 1.0 / m.alpha()).abs() < 1e-12);
    }

    #[test]
    fn system_coefficients_stay_below_one(d in -0.999f64..1e3) {
        // |a1| + |a2| = abs_sum / 2
        let c = elliptic_coefficients_from_d(d).unwrap();
        prop_assert!(0.5 * c.abs_sum < 1.0, "D={d}: {}", c.abs_sum);
    }

    #[test]
    fn cordes_constants_are_admissible(alpha in 0.05f64..5.0, extra in 0.0f64..5.0) {
        let beta = alpha + extra;
        let k = cordes_constants(alpha, beta).unwrap();
        prop_assert!(k.c1 > (1.0 + beta * beta) / (2.0 * alpha));
        prop_assert!(k.c2 > 0.0);
        let c2 = (k.c1 * k.c1 - 1.0) / (2.0 * k.c1 * alpha - 1.0 - beta * beta);
        prop_assert!((k.c2 - c2).abs() <= 1e-12 * c2);
    }

    #[test]
    fn cordes_claim_holds_for_random_pairs(alpha in 0.1f64..4.0, extra in 0.0f64..4.0, seed in any::<u64>()) {
        let beta = alpha + extra;
        let k = cordes_constants(alpha, beta).unwrap();
        let r = cordes_claim_sample(alpha, beta, &k, 2000, seed);
        prop_assert_eq!(r.violations, 0);
    }

    #[test]
    fn radial_oracle_is_monotone_and_hits_boundary_values(p in 1.3f64..5.0, ratio in 1.2f64..4.0) {
        let m = builtin_model(&ModelSpec::PHarmonic { p }).unwrap();
        let sol = radial_oracle(&m, ratio, 0.0, 1.0).unwrap();
        prop_assert!(sol.u_of_r(1.0).unwrap().abs() < 1e-8);
        prop_assert!((sol.u_of_r(ratio).unwrap() - 1.0).abs() < 1e-8);
        let mut prev = -1.0;
        for k in 0..=16 {
            let r = 1.0 + (ratio - 1.0) * k as f64 / 16.0;
            let u = sol.u_of_r(r).unwrap();
            prop_assert!(u > prev);
            prev = u;
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials(n in 2usize..24, deg_frac in 0.0f64..1.0) {
        let deg = ((2 * n - 1) as f64 * deg_frac) as i32;
        let (x, w) = gauss_legendre(n);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
        let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
        prop_assert!((q - exact).abs() < 1e-12);
    }

    #[test]
    fn log_convexity_margin_is_scale_invariant(a in 0.5f64..4.0, b in -2.0f64..2.0, scale in 1e-3f64..1e3) {
        // L = exp(a t + b t^2): (ln L)'' = 2b, so the verdict fails exactly when b < 0
        let ts: Vec<f64> = (0..17).map(|k| 0.05 + 0.9 * k as f64 / 16.0).collect();
        let profile = |s: f64| {
            let l: Vec<f64> = ts.iter().map(|&t| s * (a * t + b * t * t).exp()).collect();
            let l1: Vec<f64> = ts.iter().zip(&l).map(|(&t, l)| l * (a + 2.0 * b * t)).collect();
            let l2: Vec<f64> = ts.iter().zip(&l).map(|(&t, l)| l * ((a + 2.0 * b * t).powi(2) + 2.0 * b)).collect();
            Profile {
                t: ts.clone(),
                length: l,
                l1_fd: l1.clone(),
                l2_fd: l2.clone(),
                l1_coarea: l1,
                l2_coarea: l2,
                k_int: vec![-2.0 * PI; 17],
                t1: 0.0,
                t2: 1.0,
                ..Default::default()
            }
        };
        let ctx = VerdictContext {
            model: "p_harmonic".into(),
            alpha: 1.0,
            beta: 1.0,
            p: Some(2.0),
            maximal_lorentz: false,
            topology: Topology::AnnulusInDisk,
            curvature_nonpositive: true,
            curvature_nonpositive_filled: true,
            min_grad: 1.0,
            max_grad: 1.0,
            minimal_growth: false,
        };
        let v1 = log_convexity_verdict(&profile(1.0), &ctx, 1e-9);
        let v2 = log_convexity_verdict(&profile(scale), &ctx, 1e-9);
        prop_assert!((v1.margin.unwrap() - v2.margin.unwrap()).abs() < 1e-9);
        prop_assert!(v1.margin.unwrap() >= -2.0 - 1e-12 && v1.margin.unwrap() <= 1.0 + 1e-12);
        if b.abs() > 1e-3 {
            prop_assert_eq!(v1.status == Status::Fail, b < 0.0);
        }
    }
}

#[test]
fn bundled_configs_round_trip_through_json() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/suite");
    for path in aharmonic::experiment::suite_configs(&dir).unwrap() {
        let sc = Scenario::load(&path).unwrap();
        let again = Scenario::from_json(&serde_json::to_string(&sc).unwrap()).unwrap();
        assert_eq!(sc, again, "{}", path.display());
    }
}
