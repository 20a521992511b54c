//! Taylor approximations of estimator bias and MSE, optimal parameters and the
//! two-auxiliary regression benchmark.
//!
//! Two formula modes exist. `ReDerived` expands each estimator to fourth order
//! in `(e0, e1, e2)` with exact series coefficients, squares and truncates the
//! deviation, and replaces every monomial with its `V` term. `AsPublished`
//! evaluates the literature expressions term by term, including the terms
//! listed in `ERRATA.md`; symbols those expressions never define must be
//! supplied through [`PublishedSymbols`].

mod first_order;
mod optimal;
mod published;
mod series;

use std::fmt;

pub use first_order::{first_order_bias, first_order_mse};
pub use optimal::{
    optimal_parameters, optimize_t3_alpha, regression_min_mse, Optimum, OptimumMethod,
};
pub use series::{series_coefficients, taylor_expand_estimator, SeriesCoefficients};

use crate::error::{Error, Result};
use crate::estimators::{validate_spec, EstimatorSpec, Family};
use crate::moments::VTable;
use crate::poly::MAX_DEGREE;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FormulaMode {
    AsPublished,
    ReDerived,
}

impl fmt::Display for FormulaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormulaMode::AsPublished => "as-published",
            FormulaMode::ReDerived => "re-derived",
        })
    }
}

/// Values for symbols that the published expressions use without defining.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PublishedSymbols {
    /// `A1` in the published second-order t3 expression.
    pub a1: Option<f64>,
    /// `A2` in the published second-order t3 expression.
    pub a2: Option<f64>,
    /// `θ` in the published second-order t3 expression.
    pub theta: Option<f64>,
    /// `S` in the `V211` term of the published second-order t4 expression.
    pub s: Option<f64>,
    /// `M2` in the published second-order t5 expression.
    pub m2: Option<f64>,
    /// `N2` in the published second-order t5 expression.
    pub n2: Option<f64>,
    /// The stray `α1α2` factor on `V011` in the published t2 and t5 biases.
    pub alpha_product: Option<f64>,
}

pub(crate) fn require(value: Option<f64>, name: &'static str) -> Result<f64> {
    value.ok_or(Error::UndefinedSymbol(name))
}

pub(crate) fn ensure_valid(spec: &EstimatorSpec) -> Result<()> {
    let violations = validate_spec(spec);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(violations))
    }
}

/// Second-order MSE: `Ȳ² E[(t/Ȳ - 1)²]` with the deviation expanded and the
/// square truncated at total degree four.
pub fn second_order_mse(
    spec: &EstimatorSpec,
    v: &VTable,
    mode: FormulaMode,
    symbols: &PublishedSymbols,
) -> Result<f64> {
    ensure_valid(spec)?;
    let ybar = v.means().y;
    match mode {
        FormulaMode::ReDerived => {
            let d = taylor_expand_estimator(spec, v.means(), MAX_DEGREE)?;
            let squared = &d * &d;
            Ok(ybar * ybar * squared.expectation(v)?)
        }
        FormulaMode::AsPublished => published::second_order_mse(spec, v, symbols),
    }
}

/// One approximation cell: order, mode and the resulting numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxResult {
    pub family: Family,
    pub order: u8,
    pub mode: FormulaMode,
    /// First-order bias; second-order bias is not computed.
    pub bias: Option<f64>,
    pub mse: f64,
    /// Provenance summary of the V-table the numbers were computed from.
    pub inputs: String,
}

pub fn approximate(
    spec: &EstimatorSpec,
    v: &VTable,
    order: u8,
    mode: FormulaMode,
    symbols: &PublishedSymbols,
) -> Result<ApproxResult> {
    let (bias, mse) = match order {
        1 => (
            Some(first_order_bias(spec, v, mode, symbols)?),
            first_order_mse(spec, v)?,
        ),
        2 => (None, second_order_mse(spec, v, mode, symbols)?),
        other => return Err(Error::InvalidOrder(other as u32)),
    };
    Ok(ApproxResult {
        family: spec.family(),
        order,
        mode,
        bias,
        mse,
        inputs: v.provenance_summary(),
    })
}
