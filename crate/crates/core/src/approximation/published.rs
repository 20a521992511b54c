//! Second-order MSE expressions transcribed term by term from the literature,
//! defects included. See `ERRATA.md` for how each one differs from the
//! re-derived expansion.

use super::{require, series_coefficients, FormulaMode, PublishedSymbols};
use crate::error::{Error, Result};
use crate::estimators::EstimatorSpec;
use crate::moments::{Powers, VTable};

pub(super) fn second_order_mse(
    spec: &EstimatorSpec,
    table: &VTable,
    symbols: &PublishedSymbols,
) -> Result<f64> {
    let m = *table.means();
    let v = |y: u8, x: u8, z: u8| table.get(Powers::new(y, x, z));
    let sc = series_coefficients(spec, &m, FormulaMode::AsPublished, symbols)?;

    let bracket = match *spec {
        EstimatorSpec::T1 {
            alpha1: a1,
            alpha2: a2,
        } => {
            let (r1, r2) = (sc.get("R1")?, sc.get("R2")?);
            let (s1, s2) = (sc.get("S1")?, sc.get("S2")?);
            // the printed V121 coefficient says M1; the squaring step it comes
            // from has R1, which is what is used here
            v(2, 0, 0)? + a1 * a1 * v(0, 2, 0)? + a2 * a2 * v(0, 0, 2)?
                - 2.0 * a1 * v(1, 1, 0)?
                - 2.0 * a2 * v(1, 0, 1)?
                + 2.0 * a1 * a2 * v(0, 1, 1)?
                - 2.0 * a1 * v(2, 1, 0)?
                - 2.0 * a2 * v(2, 0, 1)?
                + (2.0 * r1 + 2.0 * a1 * a1) * v(1, 2, 0)?
                + 2.0 * s1 * v(1, 0, 2)?
                - 2.0 * a1 * a1 * a2 * v(0, 2, 1)?
                - 2.0 * s1 * a1 * v(0, 1, 2)?
                - 2.0 * r1 * a1 * v(0, 3, 0)?
                + 6.0 * a1 * a2 * v(1, 1, 1)?
                + (a1 * a1 + 2.0 * r1) * v(2, 2, 0)?
                + (a2 * a2 + 2.0 * s1) * v(2, 0, 2)?
                + (a1 * a1 * a2 * a2 + 2.0 * r1 * s1) * v(0, 2, 2)?
                - (4.0 * a1 * a1 * a2 + 6.0 * r1 * a1) * v(1, 2, 1)?
                - 4.0 * a1 * (s1 + a2 * a2) * v(1, 1, 2)?
                + 4.0 * a1 * a2 * v(2, 1, 1)?
                - 2.0 * (r2 + 2.0 * a1 * r1) * v(1, 3, 0)?
                - 2.0 * (s2 + 2.0 * a2 * s1) * v(1, 0, 3)?
                - 2.0 * a1 * (s2 - a2 * s1) * v(0, 1, 2)?
                + 2.0 * a2 * (r2 + a1 * r1) * v(0, 2, 1)?
                + (r1 * r1 + 2.0 * a1 * r2) * v(0, 4, 0)?
                + (s1 * s1 + 2.0 * a2 * s2) * v(0, 0, 4)?
        }
        EstimatorSpec::T2 {
            lambda1: l1,
            lambda2: l2,
        } => {
            v(2, 0, 0)?
                + l1 * l1
                    * (v(0, 2, 0)? + v(2, 2, 0)? + 3.0 * v(0, 4, 0)? + 2.0 * v(1, 2, 0)?
                        - 2.0 * v(0, 3, 0)?
                        - 4.0 * v(1, 3, 0)?)
                + l2 * l2
                    * (v(0, 0, 2)? + v(2, 0, 2)? + 3.0 * v(0, 0, 4)? + 2.0 * v(1, 0, 2)?
                        - 2.0 * v(0, 0, 3)?
                        - 4.0 * v(1, 0, 3)?)
                + 2.0 * l1 * (-v(1, 1, 0)? - v(2, 1, 0)? + v(1, 2, 0)? + v(2, 2, 0)? - v(1, 3, 0)?)
                + 2.0 * l2 * (-v(1, 0, 1)? - v(2, 0, 1)? + v(2, 0, 2)?)
                + 2.0
                    * l1
                    * l2
                    * (v(0, 1, 1)? + 2.0 * v(1, 1, 1)? - v(0, 1, 2)? - 2.0 * v(1, 1, 2)?
                        + v(0, 1, 3)?
                        + v(2, 1, 1)?
                        - v(0, 2, 1)?
                        - 2.0 * v(1, 2, 1)?
                        + v(0, 2, 2)?
                        + v(0, 3, 1)?)
        }
        EstimatorSpec::T3 { w1, w2, alpha: a } => {
            let a1 = require(symbols.a1, "A1")?;
            let a2 = require(symbols.a2, "A2")?;
            let th = require(symbols.theta, "theta")?;
            let (x1, x2) = (m.x, m.z);
            let (th2, th3, th4) = (th * th, th.powi(3), th.powi(4));
            let quartic = a1 * a1 * th4 + 4.0 * a2 * a * th4;
            let quartic_sq = a1.powi(4) * th4 + 2.0 * a2 * a * th4;
            let quartic_mixed = a1 * a1 * th4 + 2.0 * a2 * a * th4;
            v(2, 0, 0)?
                + w1 * w1
                    * x1
                    * (a * a * th2 * (v(0, 2, 0)? + v(2, 2, 0)? + 2.0 * v(1, 2, 0)?)
                        + 2.0 * a1 * th2 * (v(1, 2, 0)? + v(2, 2, 0)?))
                + w2 * w2
                    * x2
                    * (a * a * th2 * (v(0, 0, 2)? + v(2, 0, 2)? + 2.0 * v(1, 2, 0)?)
                        + 2.0 * a1 * th2 * (v(1, 2, 0)? + v(2, 0, 2)?))
                + 2.0
                    * w1
                    * w2
                    * x1
                    * x2
                    * (a * a * th2 * (v(2, 1, 1)? + 2.0 * v(1, 1, 1)?)
                        + 2.0 * a1 * th2 * (v(1, 1, 1)? + v(2, 1, 1)?))
                + 2.0 * w1.powi(3) * w2 * x1.powi(3) * x2 * quartic * v(0, 3, 1)?
                + 2.0 * w1 * w2.powi(3) * x1 * x2.powi(3) * quartic * v(0, 1, 3)?
                - 2.0 * a * th * w1 * x1 * (v(1, 1, 0)? + v(2, 1, 0)?)
                - 2.0 * a * th * w2 * x2 * (v(1, 0, 1)? + v(2, 0, 1)?)
                + 3.0
                    * w1
                    * w1
                    * w2
                    * x1
                    * x1
                    * x2
                    * (-2.0 * a2 * th3 * v(1, 2, 1)?
                        - 4.0 * a1 * a * th3 * v(1, 2, 1)?
                        - 2.0 * a1 * a * th3 * v(0, 1, 2)?)
                + 3.0
                    * w1
                    * x1
                    * w2
                    * w2
                    * x2
                    * x2
                    * (-2.0 * a2 * th3 * v(1, 1, 2)?
                        - 4.0 * a1 * a * th3 * v(1, 1, 2)?
                        - 2.0 * a1 * a * th3 * v(0, 1, 2)?)
                + w1.powi(4) * x1.powi(4) * quartic_sq * v(0, 4, 0)?
                + w2.powi(4) * x2.powi(4) * quartic_sq * v(0, 0, 2)?
                + w1.powi(3)
                    * x1.powi(3)
                    * (-2.0 * a2 * th3 * v(1, 3, 0)?
                        - 4.0 * a1 * a * th3 * v(1, 3, 0)?
                        - 2.0 * a1 * a * th3 * v(0, 3, 0)?)
                + w2.powi(3)
                    * x2.powi(3)
                    * (-2.0 * a2 * th3 * v(1, 0, 3)?
                        - 4.0 * a1 * a * th3 * v(1, 0, 3)?
                        - 2.0 * a1 * a * th3 * v(0, 0, 3)?)
                + 6.0 * w1 * w1 * x1 * x1 * w2 * w2 * x2 * x2 * quartic_mixed * v(0, 2, 2)?
        }
        EstimatorSpec::T4 {
            beta1: b1,
            beta2: b2,
        } => {
            let (mm, nn, oo) = (sc.get("M")?, sc.get("N")?, sc.get("O")?);
            let (pp, qq, rr) = (sc.get("P")?, sc.get("Q")?, sc.get("R")?);
            let ss = require(symbols.s, "S")?;
            v(2, 0, 0)? + b1 * b1 / 4.0 * v(0, 2, 0)? + b2 * b2 / 4.0 * v(0, 0, 2)?
                - b1 * v(1, 1, 0)?
                - b1 * v(2, 1, 0)? * (mm + b1 * b1 / 4.0)
                + v(1, 0, 2)? / 2.0 * (nn + b2 * b2 / 4.0)
                - v(0, 2, 1)? * (mm + b1 * b1 * b2)
                - v(0, 1, 2)? * (nn + b2 * b2 * b1)
                + 1.5 * b1 * b2 * v(1, 1, 1)?
                + 0.5 * b1 * b2 * v(0, 1, 1)?
                - 0.75 * b1 * mm * v(0, 3, 0)?
                - 0.5 * b2 * nn * v(0, 0, 3)?
                + v(2, 2, 0)? / 2.0 * (mm + b1 * b1 / 4.0)
                + v(2, 0, 2)? / 2.0 * (nn + b2 * b2 / 4.0)
                + v(0, 2, 2)? / 8.0 * (b1 * b1 * b2 * b2 / 2.0 + b1 + b2 * qq + mm * nn)
                - v(1, 3, 0)? / 4.0 * (oo + 2.0 * b1 * mm)
                - v(1, 0, 3)? / 4.0 * (pp + 2.0 * b2 * nn)
                + v(0, 3, 1)? / 8.0 * (b1 * qq + oo + ss * mm)
                + v(0, 1, 3)? / 8.0 * (b2 * rr + b1 * pp + ss * nn)
                - v(1, 2, 1)? / 4.0 * (qq + 2.0 * b1 * b1 * b2 + b2 * mm)
                - v(1, 1, 2)? / 4.0 * (2.0 * b2 * b2 * b1 + 2.0 * b1 * nn + rr)
                - v(0, 4, 0)? / 16.0 * (2.0 * b1 * oo + mm * mm)
                + v(0, 0, 4)? / 16.0 * (2.0 * b2 * pp + nn * nn)
                + v(2, 1, 1)? / 2.0 * (b1 * b1 * b2 + ss)
        }
        EstimatorSpec::T5 {
            k1,
            k2,
            delta1,
            delta2,
            ..
        } => {
            let eta1 = sc.get("eta1")?;
            let (m1, n1) = (sc.get("M1")?, sc.get("N1")?);
            let (m2, n2) = (sc.get("M2")?, sc.get("N2")?);
            let (d1, d2) = (delta1 as f64, delta2 as f64);
            v(2, 0, 0)?
                + k1 * k1
                    * (d1 * d1 * eta1 * eta1 * (v(0, 2, 0)? + v(0, 2, 2)? + 2.0 * v(1, 2, 0)?)
                        + 2.0 * d1 * eta1 * (m1 * v(0, 4, 0)? - 2.0 * m1 * v(0, 3, 0)?)
                        + m1 * m1 * v(0, 4, 0)?)
                + k2 * k2
                    * (d2 * d2 * (v(0, 0, 2)? + v(2, 0, 2)? + 2.0 * v(1, 0, 2)?)
                        + 2.0 * d2 * (n1 * v(1, 0, 3)? + n1 * v(0, 3, 0)? + n2 * v(0, 0, 4)?)
                        + n1 * n1 * v(0, 0, 4)?)
                + 2.0
                    * k1
                    * (d1 * eta1 * (-v(1, 1, 0)? - v(2, 1, 0)?) + m1 * (v(1, 2, 0)? + v(2, 2, 0)?)
                        - m2 * v(1, 3, 0)?)
                + 2.0
                    * k2
                    * (d2 * (-v(1, 0, 1)? - v(2, 0, 1)?) + n1 * (-v(1, 0, 2)? - v(2, 0, 2)?)
                        - n2 * v(1, 0, 3)?)
                + 2.0
                    * k1
                    * k2
                    * (d1 * d2 * eta1 * (v(0, 1, 1)? + 2.0 * v(1, 1, 1)? + v(2, 1, 1)?)
                        + d1 * eta1 * (n1 * v(0, 1, 2)? + n2 * v(0, 1, 3)?))
        }
    };
    if !bracket.is_finite() {
        return Err(Error::DivisionByZero("published expression"));
    }
    Ok(m.y * m.y * bracket)
}
