use std::collections::BTreeMap;

use super::{ensure_valid, FormulaMode, PublishedSymbols};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorSpec, Family};
use crate::moments::{Means, Powers};
use crate::poly::{binomial_series, exp_series, Poly};

/// Series of `(X̄ - x̄)/(X̄ + x̄) = -e/(2+e)` in powers of `e`.
fn half_ratio_series(degree: u32) -> Vec<f64> {
    (0..=degree)
        .map(|j| {
            if j == 0 {
                0.0
            } else {
                (-0.5f64).powi(j as i32)
            }
        })
        .collect()
}

/// Expansion of `t/Ȳ - 1` in `(e0, e1, e2)` up to total degree `order`.
///
/// `means` is only consulted for `T3`, whose combined ratio mixes the two
/// auxiliary means.
pub fn taylor_expand_estimator(spec: &EstimatorSpec, means: &Means, order: u32) -> Result<Poly> {
    if !(1..=4).contains(&order) {
        return Err(Error::InvalidOrder(order));
    }
    ensure_valid(spec)?;
    let e0 = Poly::var(0, order);
    let e1 = Poly::var(1, order);
    let e2 = Poly::var(2, order);
    let one = Poly::constant(1.0, order);

    let factor = match *spec {
        EstimatorSpec::T1 { alpha1, alpha2 } => {
            &e1.compose(&binomial_series(-alpha1, order))
                * &e2.compose(&binomial_series(-alpha2, order))
        }
        EstimatorSpec::T2 { lambda1, lambda2 } => {
            let inv = binomial_series(-1.0, order);
            &e1.compose(&inv).scale(lambda1) + &e2.compose(&inv).scale(lambda2)
        }
        EstimatorSpec::T3 { w1, w2, alpha } => {
            let total = w1 * means.x + w2 * means.z;
            if total == 0.0 {
                return Err(Error::DivisionByZero("w1X̄ + w2Z̄"));
            }
            let theta = 1.0 / total;
            let u = &e1.scale(theta * w1 * means.x) + &e2.scale(theta * w2 * means.z);
            u.compose(&binomial_series(-alpha, order))
        }
        EstimatorSpec::T4 { beta1, beta2 } => {
            let g = half_ratio_series(order);
            let ex = exp_series(order);
            &e1.compose(&g).scale(beta1).compose(&ex) * &e2.compose(&g).scale(beta2).compose(&ex)
        }
        EstimatorSpec::T5 {
            k1,
            k2,
            delta1,
            delta2,
            ..
        } => {
            let eta1 = spec.eta1().ok_or(Error::DivisionByZero("c - d"))?;
            let left = e1
                .scale(-eta1)
                .compose(&binomial_series(delta1 as f64, order));
            let right = &one.scale(2.0) - &e2.compose(&binomial_series(delta2 as f64, order));
            &left.scale(k1) + &right.scale(k2)
        }
    };
    Ok(&(&(&one + &e0) * &factor) - &one)
}

/// Named expansion constants of one estimator in one formula mode.
///
/// * t1 (both modes): `R1..R3`, `S1..S3`, magnitudes of the `e1^2..e1^4` and
///   `e2^2..e2^4` coefficients of `(1+e)^-α`.
/// * t3: re-derived mode records `theta = 1/(w1X̄ + w2Z̄)`; published mode holds
///   `A1`, `A2`, `theta` only when supplied.
/// * t4: published mode holds `M, N, O, P, Q, R` as printed plus `S` when
///   supplied; re-derived mode holds `x1..x4` and `z1..z4`, the coefficients of
///   `exp(β (X̄-x̄)/(X̄+x̄))` in powers of `e1` and `e2`.
/// * t5: `eta1`, `M1..M3` and `N1..N3`. Re-derived: `M_j = C(δ1, j+1) η1^(j+1)`
///   and `N_j = C(δ2, j+1)`. Published: `M1`, `N1` as printed; `M2`, `N2` come
///   from the supplied symbols, or vanish when the exponent is 0 or 1 and every
///   higher binomial term is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesCoefficients {
    pub family: Family,
    pub mode: FormulaMode,
    constants: BTreeMap<&'static str, f64>,
}

impl SeriesCoefficients {
    pub fn get(&self, name: &'static str) -> Result<f64> {
        self.constants
            .get(name)
            .copied()
            .ok_or(Error::UndefinedSymbol(name))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        self.constants.iter().map(|(k, v)| (*k, *v))
    }
}

/// Generalized binomial coefficient `C(a, j)`.
fn binom(a: f64, j: u32) -> f64 {
    binomial_series(a, j)[j as usize]
}

pub fn series_coefficients(
    spec: &EstimatorSpec,
    means: &Means,
    mode: FormulaMode,
    symbols: &PublishedSymbols,
) -> Result<SeriesCoefficients> {
    ensure_valid(spec)?;
    let mut c: BTreeMap<&'static str, f64> = BTreeMap::new();
    match *spec {
        EstimatorSpec::T1 { alpha1, alpha2 } => {
            let rising = |a: f64, k: u32| (0..k).map(|i| a + i as f64).product::<f64>();
            for (names, a) in [(["R1", "R2", "R3"], alpha1), (["S1", "S2", "S3"], alpha2)] {
                c.insert(names[0], rising(a, 2) / 2.0);
                c.insert(names[1], rising(a, 3) / 6.0);
                c.insert(names[2], rising(a, 4) / 24.0);
            }
        }
        EstimatorSpec::T2 { .. } => {}
        EstimatorSpec::T3 { w1, w2, .. } => match mode {
            FormulaMode::ReDerived => {
                let total = w1 * means.x + w2 * means.z;
                if total == 0.0 {
                    return Err(Error::DivisionByZero("w1X̄ + w2Z̄"));
                }
                c.insert("theta", 1.0 / total);
            }
            FormulaMode::AsPublished => {
                for (name, v) in [
                    ("A1", symbols.a1),
                    ("A2", symbols.a2),
                    ("theta", symbols.theta),
                ] {
                    if let Some(v) = v {
                        c.insert(name, v);
                    }
                }
            }
        },
        EstimatorSpec::T4 { beta1, beta2 } => match mode {
            FormulaMode::AsPublished => {
                let (b1, b2) = (beta1, beta2);
                c.insert("M", b1 + b1 * b1 / 2.0);
                c.insert("N", b2 + b2 * b2 / 2.0);
                c.insert("O", b1 * b1 + b1.powi(3) / 6.0);
                c.insert("P", b2 * b2 + b2.powi(3) / 6.0);
                c.insert("Q", b1 * b2 + b1 * b1 * b2 / 2.0);
                c.insert("R", b1 * b2 + b1 * b2 * b2 / 2.0);
                if let Some(s) = symbols.s {
                    c.insert("S", s);
                }
            }
            FormulaMode::ReDerived => {
                let g = Poly::var(1, 4).compose(&half_ratio_series(4));
                for (names, beta) in [
                    (["x1", "x2", "x3", "x4"], beta1),
                    (["z1", "z2", "z3", "z4"], beta2),
                ] {
                    let f = g.scale(beta).compose(&exp_series(4));
                    for (j, name) in names.iter().enumerate() {
                        c.insert(name, f.coeff(Powers::new(0, j as u8 + 1, 0)));
                    }
                }
            }
        },
        EstimatorSpec::T5 { delta1, delta2, .. } => {
            let eta1 = spec.eta1().ok_or(Error::DivisionByZero("c - d"))?;
            let (d1, d2) = (delta1 as f64, delta2 as f64);
            c.insert("eta1", eta1);
            match mode {
                FormulaMode::ReDerived => {
                    for (j, (m, n)) in [("M1", "N1"), ("M2", "N2"), ("M3", "N3")]
                        .iter()
                        .enumerate()
                    {
                        let k = j as u32 + 2;
                        c.insert(m, binom(d1, k) * eta1.powi(k as i32));
                        c.insert(n, binom(d2, k));
                    }
                }
                FormulaMode::AsPublished => {
                    c.insert("M1", d1 * (d1 - 1.0) / 2.0 * eta1 * eta1);
                    c.insert("N1", d2 * (d2 - 1.0) / 2.0);
                    let terminating = |d: i32| d == 0 || d == 1;
                    let m2 = symbols.m2.or(terminating(delta1).then_some(0.0));
                    let n2 = symbols.n2.or(terminating(delta2).then_some(0.0));
                    if let Some(v) = m2 {
                        c.insert("M2", v);
                    }
                    if let Some(v) = n2 {
                        c.insert("N2", v);
                    }
                }
            }
        }
    }
    Ok(SeriesCoefficients {
        family: spec.family(),
        mode,
        constants: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn means() -> Means {
        Means {
            y: 10.0,
            x: 12.0,
            z: 9.0,
        }
    }

    fn p(y: u8, x: u8, z: u8) -> Powers {
        Powers::new(y, x, z)
    }

    #[test]
    fn order_zero_rejected() {
        let s = Family::T1.default_spec();
        assert_eq!(
            taylor_expand_estimator(&s, &means(), 0),
            Err(Error::InvalidOrder(0))
        );
    }

    #[test]
    fn first_order_t1_is_linearization() {
        let s = EstimatorSpec::T1 {
            alpha1: 0.3,
            alpha2: -2.0,
        };
        let d = taylor_expand_estimator(&s, &means(), 1).unwrap();
        assert_eq!(d.coeff(p(1, 0, 0)), 1.0);
        assert_eq!(d.coeff(p(0, 1, 0)), -0.3);
        assert_eq!(d.coeff(p(0, 0, 1)), 2.0);
        assert_eq!(d.terms().count(), 3);
    }

    #[test]
    fn classical_ratio_expansion() {
        let s = EstimatorSpec::T1 {
            alpha1: 1.0,
            alpha2: 0.0,
        };
        let d = taylor_expand_estimator(&s, &means(), 4).unwrap();
        // (1+e0)/(1+e1) - 1
        assert_eq!(d.coeff(p(0, 2, 0)), 1.0);
        assert_eq!(d.coeff(p(1, 1, 0)), -1.0);
        assert_eq!(d.coeff(p(1, 2, 0)), 1.0);
        assert_eq!(d.coeff(p(0, 4, 0)), 1.0);
        assert_eq!(d.coeff(p(0, 0, 1)), 0.0);
    }

    #[test]
    fn t5_with_unit_delta1_is_linear_in_e1() {
        let s = EstimatorSpec::T5 {
            k1: 0.4,
            k2: 0.6,
            delta1: 1,
            delta2: -1,
            c: 3.0,
            d: 2.0,
        };
        let d = taylor_expand_estimator(&s, &means(), 4).unwrap();
        for j in 2..=4 {
            assert_eq!(d.coeff(p(0, j, 0)), 0.0);
        }
        assert!((d.coeff(p(0, 1, 0)) + 0.4 * 2.0).abs() < 1e-15);
    }

    #[test]
    fn t5_series_constants_match_expansion() {
        for (delta1, delta2) in [(-1, -1), (-1, 1), (1, -1), (0, 1)] {
            let s = EstimatorSpec::T5 {
                k1: 1.0,
                k2: 0.0,
                delta1,
                delta2,
                c: 3.0,
                d: 1.0,
            };
            let eta1: f64 = 0.5;
            let sc = series_coefficients(&s, &means(), FormulaMode::ReDerived, &Default::default())
                .unwrap();
            let d = taylor_expand_estimator(&s, &means(), 4).unwrap();
            // coefficient of e1^j in (1 - η1 e1)^δ1 is C(δ1, j)(-η1)^j
            for j in 1..=4u32 {
                let expected = binom(delta1 as f64, j) * (-eta1).powi(j as i32);
                assert!((d.coeff(p(0, j as u8, 0)) - expected).abs() < 1e-14);
            }
            assert!((d.coeff(p(0, 2, 0)) - sc.get("M1").unwrap()).abs() < 1e-14);
            assert!((d.coeff(p(0, 3, 0)) + sc.get("M2").unwrap()).abs() < 1e-14);
            assert!((d.coeff(p(0, 4, 0)) - sc.get("M3").unwrap()).abs() < 1e-14);

            let s2 = EstimatorSpec::T5 {
                k1: 0.0,
                k2: 1.0,
                delta1,
                delta2,
                c: 3.0,
                d: 1.0,
            };
            let d2 = taylor_expand_estimator(&s2, &means(), 4).unwrap();
            for j in 1..=4u32 {
                let expected = -binom(delta2 as f64, j);
                assert!((d2.coeff(p(0, 0, j as u8)) - expected).abs() < 1e-14);
            }
            assert!((d2.coeff(p(0, 0, 2)) + sc.get("N1").unwrap()).abs() < 1e-14);
            assert!((d2.coeff(p(0, 0, 3)) + sc.get("N2").unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn t1_constants_are_binomial_magnitudes() {
        let s = EstimatorSpec::T1 {
            alpha1: 0.7,
            alpha2: 1.9,
        };
        for mode in [FormulaMode::AsPublished, FormulaMode::ReDerived] {
            let sc = series_coefficients(&s, &means(), mode, &Default::default()).unwrap();
            for (j, name) in ["R1", "R2", "R3"].iter().enumerate() {
                let k = j as u32 + 2;
                let signed = binom(-0.7, k);
                assert!((sc.get(name).unwrap() - signed.abs()).abs() < 1e-14);
            }
            assert!((sc.get("S1").unwrap() - 1.9 * 2.9 / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn t4_constants() {
        let s = EstimatorSpec::T4 {
            beta1: 1.2,
            beta2: -0.5,
        };
        let re =
            series_coefficients(&s, &means(), FormulaMode::ReDerived, &Default::default()).unwrap();
        let b = 1.2;
        assert!((re.get("x1").unwrap() + b / 2.0).abs() < 1e-15);
        assert!((re.get("x2").unwrap() - (b / 4.0 + b * b / 8.0)).abs() < 1e-15);
        assert!((re.get("x3").unwrap() + (b + b * b + b.powi(3) / 6.0) / 8.0).abs() < 1e-15);
        let publ = series_coefficients(&s, &means(), FormulaMode::AsPublished, &Default::default())
            .unwrap();
        assert!((publ.get("M").unwrap() - (b + b * b / 2.0)).abs() < 1e-15);
        assert_eq!(publ.get("S"), Err(Error::UndefinedSymbol("S")));
    }

    #[test]
    fn published_t5_second_terms_need_symbols() {
        let s = EstimatorSpec::T5 {
            k1: 0.5,
            k2: 0.5,
            delta1: -1,
            delta2: 1,
            c: 2.0,
            d: 1.0,
        };
        let sc = series_coefficients(&s, &means(), FormulaMode::AsPublished, &Default::default())
            .unwrap();
        assert_eq!(sc.get("M2"), Err(Error::UndefinedSymbol("M2")));
        assert_eq!(sc.get("N2"), Ok(0.0));
    }
}
