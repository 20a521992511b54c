use super::{
    ensure_valid, require, series_coefficients, taylor_expand_estimator, FormulaMode,
    PublishedSymbols,
};
use crate::error::{Error, Result};
use crate::estimators::EstimatorSpec;
use crate::moments::{Powers, VTable};

fn lookup(v: &VTable) -> impl Fn(u8, u8, u8) -> Result<f64> + '_ {
    move |y, x, z| v.get(Powers::new(y, x, z))
}

/// First-order bias `Ȳ E[t/Ȳ - 1]` with the deviation truncated at degree two.
pub fn first_order_bias(
    spec: &EstimatorSpec,
    v: &VTable,
    mode: FormulaMode,
    symbols: &PublishedSymbols,
) -> Result<f64> {
    ensure_valid(spec)?;
    let m = v.means();
    match mode {
        FormulaMode::ReDerived => {
            let d = taylor_expand_estimator(spec, m, 2)?;
            Ok(m.y * d.expectation(v)?)
        }
        FormulaMode::AsPublished => published_bias(spec, v, symbols),
    }
}

fn published_bias(spec: &EstimatorSpec, v: &VTable, symbols: &PublishedSymbols) -> Result<f64> {
    let m = v.means();
    let v = lookup(v);
    let bracket = match *spec {
        EstimatorSpec::T1 { alpha1, alpha2 } => {
            let r1 = alpha1 * (alpha1 + 1.0) / 2.0;
            let s1 = alpha2 * (alpha2 + 1.0) / 2.0;
            -alpha1 * v(1, 1, 0)?
                + alpha2 * v(1, 0, 2)?
                + r1 * v(0, 2, 0)?
                + s1 * v(0, 0, 2)?
                + alpha1 * alpha2 * v(0, 1, 1)?
        }
        EstimatorSpec::T2 { lambda1, lambda2 } => {
            let a12 = require(symbols.alpha_product, "alpha1*alpha2")?;
            -lambda1 * v(1, 1, 0)? - lambda2 * v(1, 0, 1)?
                + lambda1 * v(0, 2, 0)?
                + lambda2 * v(0, 0, 2)?
                + a12 * v(0, 1, 1)?
        }
        EstimatorSpec::T3 { w1, w2, alpha } => {
            let total = w1 * m.x + w2 * m.z;
            if total == 0.0 {
                return Err(Error::DivisionByZero("w1X̄ + w2Z̄"));
            }
            let lam = 1.0 / total;
            -alpha * lam * (w1 * m.x * v(1, 1, 0)? - w2 * v(1, 0, 1)?)
                + lam * lam * alpha * (alpha + 1.0) / 2.0
                    * (w1 * w1 * m.x * m.x * v(0, 2, 0)?
                        + w2 * w2 * m.z * m.z * v(0, 0, 2)?
                        + 2.0 * w1 * w2 * m.x * m.z * v(0, 1, 1)?)
        }
        EstimatorSpec::T4 { beta1, beta2 } => {
            -beta1 / 2.0 * v(1, 1, 0)? - beta2 / 2.0 * v(1, 0, 1)?
                + v(0, 2, 0)? * (beta1 / 4.0 + beta1 * beta1 / 8.0)
                + (beta2 / 4.0 + beta2 * beta2 / 8.0) * v(0, 0, 2)?
        }
        EstimatorSpec::T5 {
            k1,
            k2,
            delta1,
            delta2,
            ..
        } => {
            let sc = series_coefficients(spec, m, FormulaMode::AsPublished, symbols)?;
            let eta1 = sc.get("eta1")?;
            let a12 = require(symbols.alpha_product, "alpha1*alpha2")?;
            let (d1, d2) = (delta1 as f64, delta2 as f64);
            -k1 * eta1 * d1 * v(1, 1, 0)? - k2 * d2 * v(1, 0, 1)? + k1 * sc.get("M1")? * v(0, 2, 0)?
                - k2 * sc.get("N1")? * v(0, 0, 2)?
                + a12 * v(0, 1, 1)?
        }
    };
    Ok(m.y * bracket)
}

/// First-order MSE, the quadratic form in the second-order `V` terms.
pub fn first_order_mse(spec: &EstimatorSpec, v: &VTable) -> Result<f64> {
    ensure_valid(spec)?;
    let m = v.means();
    let v200 = v.get(Powers::new(2, 0, 0))?;
    let v020 = v.get(Powers::new(0, 2, 0))?;
    let v002 = v.get(Powers::new(0, 0, 2))?;
    let v110 = v.get(Powers::new(1, 1, 0))?;
    let v101 = v.get(Powers::new(1, 0, 1))?;
    let v011 = v.get(Powers::new(0, 1, 1))?;
    let bracket = match *spec {
        EstimatorSpec::T1 {
            alpha1: a1,
            alpha2: a2,
        } => {
            v200 + a1 * a1 * v020 + a2 * a2 * v002 - 2.0 * a1 * v110 - 2.0 * a2 * v101
                + 2.0 * a1 * a2 * v011
        }
        EstimatorSpec::T2 {
            lambda1: l1,
            lambda2: l2,
        } => {
            v200 + l1 * l1 * v020 + l2 * l2 * v002 - 2.0 * l1 * v110 - 2.0 * l2 * v101
                + 2.0 * l1 * l2 * v011
        }
        EstimatorSpec::T3 { w1, w2, alpha } => {
            let total = w1 * m.x + w2 * m.z;
            if total == 0.0 {
                return Err(Error::DivisionByZero("w1X̄ + w2Z̄"));
            }
            let lam = 1.0 / total;
            let (wx, wz) = (w1 * m.x, w2 * m.z);
            v200 + alpha
                * alpha
                * lam
                * lam
                * (wx * wx * v020 + wz * wz * v002 + 2.0 * wx * wz * v011)
                - 2.0 * alpha * lam * (wx * v110 + wz * v101)
        }
        EstimatorSpec::T4 {
            beta1: b1,
            beta2: b2,
        } => {
            v200 + b1 * b1 / 4.0 * v020 + b2 * b2 / 4.0 * v002 - b1 * v110 - b2 * v101
                + b1 * b2 / 2.0 * v011
        }
        EstimatorSpec::T5 {
            k1,
            k2,
            delta1,
            delta2,
            ..
        } => {
            let eta1 = spec.eta1().ok_or(Error::DivisionByZero("c - d"))?;
            let (d1, d2) = (delta1 as f64, delta2 as f64);
            v200 + k1 * k1 * d1 * d1 * eta1 * eta1 * v020 + k2 * k2 * d2 * d2 * v002
                - 2.0 * k1 * d1 * eta1 * v110
                - 2.0 * k2 * d2 * v101
                + 2.0 * k1 * k2 * d1 * d2 * eta1 * v011
        }
    };
    Ok(m.y * m.y * bracket)
}
