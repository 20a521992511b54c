mod common;

use common::{close, random_pd_table, random_population, rng};
use proptest::prelude::*;
use ratiolab::approximation::{
    first_order_bias, first_order_mse, optimal_parameters, regression_min_mse, second_order_mse,
    taylor_expand_estimator, FormulaMode, OptimumMethod, PublishedSymbols,
};
use ratiolab::moments::{
    build_v_table, has_closed_form, OracleOptions, VPolicy, CLOSED_FORM_INDICES,
};
use ratiolab::simulation::enumerate_exact;
use ratiolab::{EstimatorSpec, Family, Powers, VTable};

fn moment_scale(v: &VTable, p: Powers) -> f64 {
    let g = |q| v.get(q).unwrap().abs().sqrt();
    g(Powers::new(2, 0, 0)).powi(p.y as i32)
        * g(Powers::new(0, 2, 0)).powi(p.x as i32)
        * g(Powers::new(0, 0, 2)).powi(p.z as i32)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_forms_equal_enumeration(seed in any::<u64>(), units in 5usize..10, frac in 0.0f64..1.0) {
        let pop = random_population(&mut rng(seed), units);
        let n = 1 + ((units - 1) as f64 * frac) as usize;
        let closed = build_v_table(&pop, n, VPolicy::ClosedFormWhereListed, &OracleOptions::default()).unwrap();
        let enumerated = build_v_table(&pop, n, VPolicy::EnumerateAll, &OracleOptions::default()).unwrap();
        for p in CLOSED_FORM_INDICES {
            let (a, b) = (closed.get(p).unwrap(), enumerated.get(p).unwrap());
            let floor = moment_scale(&enumerated, p);
            prop_assert!(close(a, b, 1e-10, floor), "V{p}: {a} vs {b} (N={units}, n={n})");
        }
        for p in Powers::up_to_degree(4).into_iter().filter(|p| !has_closed_form(*p)) {
            let (a, b) = (closed.get(p).unwrap(), enumerated.get(p).unwrap());
            if p.degree() == 1 {
                // zero in closed form, roundoff-sized under enumeration
                prop_assert_eq!(a, 0.0);
                prop_assert!(b.abs() < 1e-14, "V{p} = {b}");
            } else {
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn sample_mean_is_unbiased(seed in any::<u64>(), units in 3usize..10, frac in 0.0f64..1.0) {
        let pop = random_population(&mut rng(seed), units);
        let n = 1 + ((units - 1) as f64 * frac) as usize;
        let r = enumerate_exact(&pop, &EstimatorSpec::sample_mean(), n, u128::MAX).unwrap();
        prop_assert!(r.bias.abs() <= 1e-12 * pop.means().y);
    }
}

#[test]
fn ratio_family_mse_ignores_auxiliary_units() {
    let pop = random_population(&mut rng(11), 8);
    let rescaled = pop.scaled(1.0, 3.5, 0.2).unwrap();
    for family in [Family::T1, Family::T2, Family::T4, Family::T5] {
        let spec = family.default_spec();
        let a = enumerate_exact(&pop, &spec, 3, u128::MAX).unwrap();
        let b = enumerate_exact(&rescaled, &spec, 3, u128::MAX).unwrap();
        assert!(close(a.mse, b.mse, 1e-10, 0.0), "{family:?}");
    }
    // t3 mixes x and z additively, so only a common rescaling is harmless
    let common = pop.scaled(1.0, 2.0, 2.0).unwrap();
    let spec = Family::T3.default_spec();
    let a = enumerate_exact(&pop, &spec, 3, u128::MAX).unwrap();
    let b = enumerate_exact(&common, &spec, 3, u128::MAX).unwrap();
    assert!(close(a.mse, b.mse, 1e-10, 0.0));
}

#[test]
fn mse_scales_with_study_variable() {
    let pop = random_population(&mut rng(12), 7);
    let c = 4.0;
    let scaled = pop.scaled(c, 1.0, 1.0).unwrap();
    for family in Family::ALL {
        let spec = family.default_spec();
        let a = enumerate_exact(&pop, &spec, 3, u128::MAX).unwrap();
        let b = enumerate_exact(&scaled, &spec, 3, u128::MAX).unwrap();
        assert!(close(c * c * a.mse, b.mse, 1e-10, 0.0), "{family:?}");
        assert!(
            close(c * a.bias, b.bias, 1e-9, a.mse.sqrt() * c),
            "{family:?}"
        );
    }
}

#[test]
fn v_table_is_scale_free() {
    let pop = random_population(&mut rng(13), 8);
    let a = build_v_table(&pop, 3, VPolicy::EnumerateAll, &OracleOptions::default()).unwrap();
    let b = build_v_table(
        &pop.scaled(7.0, 0.5, 3.0).unwrap(),
        3,
        VPolicy::EnumerateAll,
        &OracleOptions::default(),
    )
    .unwrap();
    for (p, e) in a.iter() {
        let floor = moment_scale(&a, p);
        assert!(close(e.value, b.get(p).unwrap(), 1e-9, floor), "V{p}");
    }
}

#[test]
fn t4_is_t1_with_doubled_exponents() {
    let mut r = rng(14);
    for _ in 0..50 {
        let v = random_pd_table(&mut r);
        let (a1, a2) = (r_f(&mut r), r_f(&mut r));
        let t1 = first_order_mse(
            &EstimatorSpec::T1 {
                alpha1: a1,
                alpha2: a2,
            },
            &v,
        )
        .unwrap();
        let t4 = first_order_mse(
            &EstimatorSpec::T4 {
                beta1: 2.0 * a1,
                beta2: 2.0 * a2,
            },
            &v,
        )
        .unwrap();
        assert!(close(t1, t4, 1e-12, 0.0));
    }
}

fn r_f(r: &mut impl rand::Rng) -> f64 {
    r.random_range(-2.0..2.0)
}

#[test]
fn quadratic_optimum_is_a_minimum() {
    let mut r = rng(15);
    for _ in 0..20 {
        let v = random_pd_table(&mut r);
        let o = optimal_parameters(
            &Family::T1.default_spec(),
            &v,
            OptimumMethod::QuadraticSolve,
        )
        .unwrap();
        let EstimatorSpec::T1 { alpha1, alpha2 } = o.spec else {
            unreachable!()
        };
        let f = |a: f64, b: f64| {
            first_order_mse(
                &EstimatorSpec::T1 {
                    alpha1: a,
                    alpha2: b,
                },
                &v,
            )
            .unwrap()
        };
        let f0 = f(alpha1, alpha2);
        for k in 0..100 {
            let ang = k as f64 * std::f64::consts::TAU / 100.0;
            let (dx, dz) = (1e-3 * ang.cos(), 1e-3 * ang.sin());
            assert!(f(alpha1 + dx, alpha2 + dz) >= f0);
        }
        let h = 1e-5;
        let gx = (f(alpha1 + h, alpha2) - f(alpha1 - h, alpha2)) / (2.0 * h);
        let gz = (f(alpha1, alpha2 + h) - f(alpha1, alpha2 - h)) / (2.0 * h);
        let ybar2 = v.means().y.powi(2);
        let curvature =
            ybar2 * (v.get(Powers::new(0, 2, 0)).unwrap() + v.get(Powers::new(0, 0, 2)).unwrap());
        assert!(
            gx.hypot(gz) < 1e-6 * curvature.max(f0),
            "gradient {gx} {gz}"
        );
        let reg = regression_min_mse(&v).unwrap();
        assert!(reg <= f(0.3, -0.2) && reg <= f(alpha1, alpha2) + 1e-12 * f0);
    }
}

#[test]
fn first_order_bias_special_cases() {
    let pop = random_population(&mut rng(16), 8);
    let symbols = PublishedSymbols::default();
    let census = build_v_table(
        &pop,
        8,
        VPolicy::ClosedFormWhereListed,
        &OracleOptions::default(),
    )
    .unwrap();
    let v = build_v_table(
        &pop,
        3,
        VPolicy::ClosedFormWhereListed,
        &OracleOptions::default(),
    )
    .unwrap();
    for family in [Family::T1, Family::T3, Family::T4] {
        let b = first_order_bias(
            &family.default_spec(),
            &census,
            FormulaMode::ReDerived,
            &symbols,
        )
        .unwrap();
        assert!(b.abs() < 1e-12);
    }
    let zero = EstimatorSpec::T1 {
        alpha1: 0.0,
        alpha2: 0.0,
    };
    assert_eq!(
        first_order_bias(&zero, &v, FormulaMode::ReDerived, &symbols).unwrap(),
        0.0
    );
    let ratio = EstimatorSpec::T1 {
        alpha1: 1.0,
        alpha2: 0.0,
    };
    let b = first_order_bias(&ratio, &v, FormulaMode::ReDerived, &symbols).unwrap();
    let g = |y, x, z| v.get(Powers::new(y, x, z)).unwrap();
    let classical = v.means().y * (g(0, 2, 0) - g(1, 1, 0));
    assert!(close(b, classical, 1e-12, 0.0));
    let exact = enumerate_exact(&pop, &ratio, 3, u128::MAX).unwrap();
    assert!((b - exact.bias).abs() < 0.5 * exact.mse.sqrt());
}

#[test]
fn second_order_improves_on_ratio_estimator() {
    let pop = random_population(&mut rng(17), 8);
    let v = build_v_table(
        &pop,
        3,
        VPolicy::ClosedFormWhereListed,
        &OracleOptions::default(),
    )
    .unwrap();
    let ratio = EstimatorSpec::T1 {
        alpha1: 1.0,
        alpha2: 0.0,
    };
    let exact = enumerate_exact(&pop, &ratio, 3, u128::MAX).unwrap().mse;
    let first = first_order_mse(&ratio, &v).unwrap();
    let second = second_order_mse(
        &ratio,
        &v,
        FormulaMode::ReDerived,
        &PublishedSymbols::default(),
    )
    .unwrap();
    assert!(
        (second - exact).abs() < (first - exact).abs(),
        "{first} {second} {exact}"
    );
}

#[test]
fn linearization_and_order_checks() {
    let means = ratiolab::Means {
        y: 5.0,
        x: 4.0,
        z: 3.0,
    };
    let t1 = EstimatorSpec::T1 {
        alpha1: 0.6,
        alpha2: -0.3,
    };
    assert!(taylor_expand_estimator(&t1, &means, 0).is_err());
    let lin = taylor_expand_estimator(&t1, &means, 1).unwrap();
    assert_eq!(lin.coeff(Powers::new(1, 0, 0)), 1.0);
    assert_eq!(lin.coeff(Powers::new(0, 1, 0)), -0.6);
    assert_eq!(lin.coeff(Powers::new(0, 0, 1)), 0.3);
    assert_eq!(lin.terms().count(), 3);
    let ratio = EstimatorSpec::T1 {
        alpha1: 1.0,
        alpha2: 0.0,
    };
    let d = taylor_expand_estimator(&ratio, &means, 4).unwrap();
    assert_eq!(d.coeff(Powers::new(0, 2, 0)), 1.0);
    assert_eq!(d.coeff(Powers::new(1, 1, 0)), -1.0);
    let t5 = EstimatorSpec::T5 {
        k1: 0.4,
        k2: 0.6,
        delta1: 1,
        delta2: -1,
        c: 2.0,
        d: 1.0,
    };
    let d = taylor_expand_estimator(&t5, &means, 4).unwrap();
    for j in 2..=4 {
        assert_eq!(d.coeff(Powers::new(0, j, 0)), 0.0);
    }
}
