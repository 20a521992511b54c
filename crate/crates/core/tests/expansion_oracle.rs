//! Fourth-order expansion coefficients checked against values computed
//! independently with a computer-algebra system, and the as-published vs
//! re-derived second-order forms compared monomial by monomial.

use std::collections::BTreeSet;

use ratiolab::approximation::{
    first_order_bias, second_order_mse, taylor_expand_estimator, FormulaMode, PublishedSymbols,
};
use ratiolab::poly::Poly;
use ratiolab::{Error, EstimatorSpec, Means, Powers, Provenance, VTable};

const T1_D: &[((u8, u8, u8), f64)] = &[
    ((0, 0, 1), -0.4),
    ((0, 0, 2), 0.28),
    ((0, 0, 3), -0.224),
    ((0, 0, 4), 0.1904),
    ((0, 1, 0), -0.7),
    ((0, 1, 1), 0.28),
    ((0, 1, 2), -0.196),
    ((0, 1, 3), 0.1568),
    ((0, 2, 0), 0.595),
    ((0, 2, 1), -0.238),
    ((0, 2, 2), 0.1666),
    ((0, 3, 0), -0.5355),
    ((0, 3, 1), 0.2142),
    ((0, 4, 0), 0.4953375),
    ((1, 0, 0), 1.0),
    ((1, 0, 1), -0.4),
    ((1, 0, 2), 0.28),
    ((1, 0, 3), -0.224),
    ((1, 1, 0), -0.7),
    ((1, 1, 1), 0.28),
    ((1, 1, 2), -0.196),
    ((1, 2, 0), 0.595),
    ((1, 2, 1), -0.238),
    ((1, 3, 0), -0.5355),
];

const T1_D2: &[((u8, u8, u8), f64)] = &[
    ((0, 0, 2), 0.16),
    ((0, 0, 3), -0.224),
    ((0, 0, 4), 0.2576),
    ((0, 1, 1), 0.56),
    ((0, 1, 2), -0.616),
    ((0, 1, 3), 0.6272),
    ((0, 2, 0), 0.49),
    ((0, 2, 1), -0.868),
    ((0, 2, 2), 0.8764),
    ((0, 3, 0), -0.833),
    ((0, 3, 1), 1.0948),
    ((0, 4, 0), 1.103725),
    ((1, 0, 1), -0.8),
    ((1, 0, 2), 0.88),
    ((1, 0, 3), -0.896),
    ((1, 1, 0), -1.4),
    ((1, 1, 1), 1.68),
    ((1, 1, 2), -1.624),
    ((1, 2, 0), 2.17),
    ((1, 2, 1), -2.212),
    ((1, 3, 0), -2.737),
    ((2, 0, 0), 1.0),
    ((2, 0, 1), -0.8),
    ((2, 0, 2), 0.72),
    ((2, 1, 0), -1.4),
    ((2, 1, 1), 1.12),
    ((2, 2, 0), 1.68),
];

const T2_D: &[((u8, u8, u8), f64)] = &[
    ((0, 0, 1), -0.7),
    ((0, 0, 2), 0.7),
    ((0, 0, 3), -0.7),
    ((0, 0, 4), 0.7),
    ((0, 1, 0), -0.3),
    ((0, 2, 0), 0.3),
    ((0, 3, 0), -0.3),
    ((0, 4, 0), 0.3),
    ((1, 0, 0), 1.0),
    ((1, 0, 1), -0.7),
    ((1, 0, 2), 0.7),
    ((1, 0, 3), -0.7),
    ((1, 1, 0), -0.3),
    ((1, 2, 0), 0.3),
    ((1, 3, 0), -0.3),
];

const T2_D2: &[((u8, u8, u8), f64)] = &[
    ((0, 0, 2), 0.49),
    ((0, 0, 3), -0.98),
    ((0, 0, 4), 1.47),
    ((0, 1, 1), 0.42),
    ((0, 1, 2), -0.42),
    ((0, 1, 3), 0.42),
    ((0, 2, 0), 0.09),
    ((0, 2, 1), -0.42),
    ((0, 2, 2), 0.42),
    ((0, 3, 0), -0.18),
    ((0, 3, 1), 0.42),
    ((0, 4, 0), 0.27),
    ((1, 0, 1), -1.4),
    ((1, 0, 2), 2.38),
    ((1, 0, 3), -3.36),
    ((1, 1, 0), -0.6),
    ((1, 1, 1), 0.84),
    ((1, 1, 2), -0.84),
    ((1, 2, 0), 0.78),
    ((1, 2, 1), -0.84),
    ((1, 3, 0), -0.96),
    ((2, 0, 0), 1.0),
    ((2, 0, 1), -1.4),
    ((2, 0, 2), 1.89),
    ((2, 1, 0), -0.6),
    ((2, 1, 1), 0.42),
    ((2, 2, 0), 0.69),
];

const T3_D: &[((u8, u8, u8), f64)] = &[
    ((0, 0, 1), -0.5),
    ((0, 0, 2), 0.20833333333333334),
    ((0, 0, 3), -0.08101851851851852),
    ((0, 0, 4), 0.030381944444444444),
    ((0, 1, 0), -1.0),
    ((0, 1, 1), 0.8333333333333334),
    ((0, 1, 2), -0.4861111111111111),
    ((0, 1, 3), 0.24305555555555555),
    ((0, 2, 0), 0.8333333333333334),
    ((0, 2, 1), -0.9722222222222222),
    ((0, 2, 2), 0.7291666666666666),
    ((0, 3, 0), -0.6481481481481481),
    ((0, 3, 1), 0.9722222222222222),
    ((0, 4, 0), 0.4861111111111111),
    ((1, 0, 0), 1.0),
    ((1, 0, 1), -0.5),
    ((1, 0, 2), 0.20833333333333334),
    ((1, 0, 3), -0.08101851851851852),
    ((1, 1, 0), -1.0),
    ((1, 1, 1), 0.8333333333333334),
    ((1, 1, 2), -0.4861111111111111),
    ((1, 2, 0), 0.8333333333333334),
    ((1, 2, 1), -0.9722222222222222),
    ((1, 3, 0), -0.6481481481481481),
];

const T3_D2: &[((u8, u8, u8), f64)] = &[
    ((0, 0, 2), 0.25),
    ((0, 0, 3), -0.20833333333333334),
    ((0, 0, 4), 0.1244212962962963),
    ((0, 1, 1), 1.0),
    ((0, 1, 2), -1.25),
    ((0, 1, 3), 0.9953703703703703),
    ((0, 2, 0), 1.0),
    ((0, 2, 1), -2.5),
    ((0, 2, 2), 2.986111111111111),
    ((0, 3, 0), -1.6666666666666667),
    ((0, 3, 1), 3.9814814814814814),
    ((0, 4, 0), 1.9907407407407407),
    ((1, 0, 1), -1.0),
    ((1, 0, 2), 0.9166666666666666),
    ((1, 0, 3), -0.5787037037037037),
    ((1, 1, 0), -2.0),
    ((1, 1, 1), 3.6666666666666665),
    ((1, 1, 2), -3.4722222222222223),
    ((1, 2, 0), 3.6666666666666665),
    ((1, 2, 1), -6.944444444444445),
    ((1, 3, 0), -4.62962962962963),
    ((2, 0, 0), 1.0),
    ((2, 0, 1), -1.0),
    ((2, 0, 2), 0.6666666666666666),
    ((2, 1, 0), -2.0),
    ((2, 1, 1), 2.6666666666666665),
    ((2, 2, 0), 2.6666666666666665),
];

const T4_D: &[((u8, u8, u8), f64)] = &[
    ((0, 0, 1), 0.25),
    ((0, 0, 2), -0.09375),
    ((0, 0, 3), 0.033854166666666664),
    ((0, 0, 4), -0.011555989583333332),
    ((0, 1, 0), -0.6),
    ((0, 1, 1), -0.15),
    ((0, 1, 2), 0.05625),
    ((0, 1, 3), -0.0203125),
    ((0, 2, 0), 0.48),
    ((0, 2, 1), 0.12),
    ((0, 2, 2), -0.045),
    ((0, 3, 0), -0.366),
    ((0, 3, 1), -0.0915),
    ((0, 4, 0), 0.2694),
    ((1, 0, 0), 1.0),
    ((1, 0, 1), 0.25),
    ((1, 0, 2), -0.09375),
    ((1, 0, 3), 0.033854166666666664),
    ((1, 1, 0), -0.6),
    ((1, 1, 1), -0.15),
    ((1, 1, 2), 0.05625),
    ((1, 2, 0), 0.48),
    ((1, 2, 1), 0.12),
    ((1, 3, 0), -0.366),
];

const T4_D2: &[((u8, u8, u8), f64)] = &[
    ((0, 0, 2), 0.0625),
    ((0, 0, 3), -0.046875),
    ((0, 0, 4), 0.025716145833333332),
    ((0, 1, 1), -0.3),
    ((0, 1, 2), 0.0375),
    ((0, 1, 3), 0.015625),
    ((0, 2, 0), 0.36),
    ((0, 2, 1), 0.42),
    ((0, 2, 2), -0.075),
    ((0, 3, 0), -0.576),
    ((0, 3, 1), -0.471),
    ((0, 4, 0), 0.6696),
    ((1, 0, 1), 0.5),
    ((1, 0, 2), -0.0625),
    ((1, 0, 3), -0.026041666666666668),
    ((1, 1, 0), -1.2),
    ((1, 1, 1), -0.9),
    ((1, 1, 2), 0.1875),
    ((1, 2, 0), 1.68),
    ((1, 2, 1), 1.08),
    ((1, 3, 0), -1.884),
    ((2, 0, 0), 1.0),
    ((2, 0, 1), 0.5),
    ((2, 0, 2), -0.125),
    ((2, 1, 0), -1.2),
    ((2, 1, 1), -0.6),
    ((2, 2, 0), 1.32),
];

const T5_D: &[((u8, u8, u8), f64)] = &[
    ((0, 0, 1), 0.25),
    ((0, 0, 2), -0.25),
    ((0, 0, 3), 0.25),
    ((0, 0, 4), -0.25),
    ((0, 1, 0), 0.375),
    ((0, 2, 0), 0.1875),
    ((0, 3, 0), 0.09375),
    ((0, 4, 0), 0.046875),
    ((1, 0, 0), 1.0),
    ((1, 0, 1), 0.25),
    ((1, 0, 2), -0.25),
    ((1, 0, 3), 0.25),
    ((1, 1, 0), 0.375),
    ((1, 2, 0), 0.1875),
    ((1, 3, 0), 0.09375),
];

const T5_D2: &[((u8, u8, u8), f64)] = &[
    ((0, 0, 2), 0.0625),
    ((0, 0, 3), -0.125),
    ((0, 0, 4), 0.1875),
    ((0, 1, 1), 0.1875),
    ((0, 1, 2), -0.1875),
    ((0, 1, 3), 0.1875),
    ((0, 2, 0), 0.140625),
    ((0, 2, 1), 0.09375),
    ((0, 2, 2), -0.09375),
    ((0, 3, 0), 0.140625),
    ((0, 3, 1), 0.046875),
    ((0, 4, 0), 0.10546875),
    ((1, 0, 1), 0.5),
    ((1, 0, 2), -0.375),
    ((1, 0, 3), 0.25),
    ((1, 1, 0), 0.75),
    ((1, 1, 1), 0.375),
    ((1, 1, 2), -0.375),
    ((1, 2, 0), 0.65625),
    ((1, 2, 1), 0.1875),
    ((1, 3, 0), 0.46875),
    ((2, 0, 0), 1.0),
    ((2, 0, 1), 0.5),
    ((2, 0, 2), -0.4375),
    ((2, 1, 0), 0.75),
    ((2, 1, 1), 0.1875),
    ((2, 2, 0), 0.515625),
];

fn means() -> Means {
    Means {
        y: 10.0,
        x: 12.0,
        z: 9.0,
    }
}

type Coeffs = &'static [((u8, u8, u8), f64)];

fn cases() -> Vec<(&'static str, EstimatorSpec, Coeffs, Coeffs)> {
    vec![
        (
            "t1",
            EstimatorSpec::T1 {
                alpha1: 0.7,
                alpha2: 0.4,
            },
            T1_D,
            T1_D2,
        ),
        (
            "t2",
            EstimatorSpec::T2 {
                lambda1: 0.3,
                lambda2: 0.7,
            },
            T2_D,
            T2_D2,
        ),
        (
            "t3",
            EstimatorSpec::T3 {
                w1: 0.6,
                w2: 0.4,
                alpha: 1.5,
            },
            T3_D,
            T3_D2,
        ),
        (
            "t4",
            EstimatorSpec::T4 {
                beta1: 1.2,
                beta2: -0.5,
            },
            T4_D,
            T4_D2,
        ),
        (
            "t5",
            EstimatorSpec::T5 {
                k1: 0.75,
                k2: 0.25,
                delta1: -1,
                delta2: -1,
                c: 3.0,
                d: 1.0,
            },
            T5_D,
            T5_D2,
        ),
    ]
}

fn assert_matches(label: &str, got: &Poly, want: Coeffs) {
    let mut seen = BTreeSet::new();
    for &((y, x, z), c) in want {
        let p = Powers::new(y, x, z);
        seen.insert(p);
        let g = got.coeff(p);
        assert!(
            (g - c).abs() <= 1e-13 * c.abs().max(1.0),
            "{label} {p}: {g} vs {c}"
        );
    }
    for (p, c) in got.terms() {
        if !seen.contains(&p) {
            assert!(c.abs() < 1e-14, "{label} {p}: unexpected {c}");
        }
    }
}

#[test]
fn deviation_coefficients_match_cas() {
    for (label, spec, d, _) in cases() {
        let got = taylor_expand_estimator(&spec, &means(), 4).unwrap();
        assert_matches(label, &got, d);
    }
}

#[test]
fn squared_deviation_coefficients_match_cas() {
    for (label, spec, _, d2) in cases() {
        let dev = taylor_expand_estimator(&spec, &means(), 4).unwrap();
        assert_matches(label, &(&dev * &dev), d2);
    }
}

fn unit_table(hot: Powers) -> VTable {
    let mut v = VTable::new(
        Means {
            y: 1.0,
            x: 12.0,
            z: 9.0,
        },
        None,
        None,
    );
    for p in Powers::up_to_degree(4) {
        v.set(
            p,
            if p == hot { 1.0 } else { 0.0 },
            Provenance::LiteralFixture,
        );
    }
    v
}

fn discrepancies(spec: &EstimatorSpec, symbols: &PublishedSymbols) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for p in Powers::up_to_degree(4)
        .into_iter()
        .filter(|p| p.degree() >= 2)
    {
        let v = unit_table(p);
        let a = second_order_mse(spec, &v, FormulaMode::AsPublished, symbols).unwrap();
        let b = second_order_mse(spec, &v, FormulaMode::ReDerived, symbols).unwrap();
        if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
            out.insert(p.to_string());
        }
    }
    out
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[test]
fn t1_modes_differ_only_at_ledger_terms() {
    let spec = EstimatorSpec::T1 {
        alpha1: 0.7,
        alpha2: 0.4,
    };
    let got = discrepancies(&spec, &PublishedSymbols::default());
    assert_eq!(
        got,
        set(&["003", "012", "013", "021", "022", "031", "102", "112", "121"])
    );
}

#[test]
fn t2_modes_differ_only_at_ledger_terms() {
    let spec = EstimatorSpec::T2 {
        lambda1: 0.3,
        lambda2: 0.7,
    };
    let got = discrepancies(&spec, &PublishedSymbols::default());
    assert_eq!(got, set(&["102", "103"]));
}

#[test]
fn t4_modes_differ_only_at_ledger_terms() {
    let spec = EstimatorSpec::T4 {
        beta1: 1.2,
        beta2: -0.5,
    };
    let symbols = PublishedSymbols {
        s: Some(0.0),
        ..Default::default()
    };
    let got = discrepancies(&spec, &symbols);
    assert_eq!(
        got,
        set(&[
            "003", "004", "012", "013", "021", "022", "030", "031", "040", "101", "102", "103",
            "120", "121", "130", "201", "202", "210", "211", "220",
        ])
    );
}

#[test]
fn leading_term_only() {
    let hot = Powers::new(2, 0, 0);
    for (_, spec, _, _) in cases() {
        let v = unit_table(hot);
        let symbols = PublishedSymbols {
            a1: Some(0.3),
            a2: Some(0.2),
            theta: Some(0.1),
            s: Some(0.5),
            m2: Some(0.4),
            n2: Some(-0.6),
            alpha_product: None,
        };
        for mode in [FormulaMode::AsPublished, FormulaMode::ReDerived] {
            let m = second_order_mse(&spec, &v, mode, &symbols).unwrap();
            assert!((m - 1.0).abs() < 1e-15, "{spec} {mode}: {m}");
        }
    }
}

#[test]
fn first_order_bias_modes_differ_only_at_ledger_terms() {
    let symbols = PublishedSymbols {
        alpha_product: Some(0.3),
        ..Default::default()
    };
    let want: [&[&str]; 5] = [&["101", "102"], &["011"], &["101"], &["011"], &["011"]];
    for ((label, spec, _, _), want) in cases().into_iter().zip(want) {
        let mut got = BTreeSet::new();
        for p in Powers::up_to_degree(3)
            .into_iter()
            .filter(|p| p.degree() >= 2)
        {
            let v = unit_table(p);
            let a = first_order_bias(&spec, &v, FormulaMode::AsPublished, &symbols).unwrap();
            let b = first_order_bias(&spec, &v, FormulaMode::ReDerived, &symbols).unwrap();
            if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                got.insert(p.to_string());
            }
        }
        assert_eq!(got, set(want), "{label}");
    }
}

#[test]
fn printed_second_order_needs_undefined_symbols() {
    let v = unit_table(Powers::new(2, 0, 0));
    let none = PublishedSymbols::default();
    let want = [None, None, Some("A1"), Some("S"), Some("M2")];
    for ((label, spec, _, _), want) in cases().into_iter().zip(want) {
        let got = second_order_mse(&spec, &v, FormulaMode::AsPublished, &none);
        match want {
            Some(name) => assert_eq!(got, Err(Error::UndefinedSymbol(name)), "{label}"),
            None => assert!(got.is_ok(), "{label}"),
        }
        assert!(second_order_mse(&spec, &v, FormulaMode::ReDerived, &none).is_ok());
    }
}
