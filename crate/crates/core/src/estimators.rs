//! The five ratio/product/exponential estimator families evaluated on a
//! concrete sample.

use std::fmt;

use crate::error::{Error, Result};
use crate::moments::{Means, Population};

const SUM_TOLERANCE: f64 = 1e-9;

/// Estimator family identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    T1,
    T2,
    T3,
    T4,
    T5,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::T1, Family::T2, Family::T3, Family::T4, Family::T5];

    pub fn id(self) -> &'static str {
        match self {
            Family::T1 => "t1",
            Family::T2 => "t2",
            Family::T3 => "t3",
            Family::T4 => "t4",
            Family::T5 => "t5",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Family::ALL
            .into_iter()
            .find(|f| f.id().eq_ignore_ascii_case(s.trim()))
    }

    /// Moderate parameter values used by simulations when nothing else is given.
    pub fn default_spec(self) -> EstimatorSpec {
        match self {
            Family::T1 => EstimatorSpec::T1 {
                alpha1: 0.5,
                alpha2: 0.5,
            },
            Family::T2 => EstimatorSpec::T2 {
                lambda1: 0.5,
                lambda2: 0.5,
            },
            Family::T3 => EstimatorSpec::T3 {
                w1: 0.5,
                w2: 0.5,
                alpha: 1.0,
            },
            Family::T4 => EstimatorSpec::T4 {
                beta1: 1.0,
                beta2: 1.0,
            },
            Family::T5 => EstimatorSpec::T5 {
                k1: 0.5,
                k2: 0.5,
                delta1: 1,
                delta2: 1,
                c: 2.0,
                d: 1.0,
            },
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// An estimator family together with its parameters.
///
/// * `T1`: `ȳ (X̄/x̄)^α1 (Z̄/z̄)^α2`
/// * `T2`: `ȳ [λ1 X̄/x̄ + λ2 Z̄/z̄]`, `λ1 + λ2 = 1`
/// * `T3`: `ȳ [(w1 X̄ + w2 Z̄)/(w1 x̄ + w2 z̄)]^α`, `w1 + w2 = 1`
/// * `T4`: `ȳ exp(β1 (X̄-x̄)/(X̄+x̄)) exp(β2 (Z̄-z̄)/(Z̄+z̄))`
/// * `T5`: `ȳ [k1 {(cX̄ - dx̄)/((c-d)X̄)}^δ1 + k2 {2 - (z̄/Z̄)^δ2}]`, `k1 + k2 = 1`
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EstimatorSpec {
    T1 {
        alpha1: f64,
        alpha2: f64,
    },
    T2 {
        lambda1: f64,
        lambda2: f64,
    },
    T3 {
        w1: f64,
        w2: f64,
        alpha: f64,
    },
    T4 {
        beta1: f64,
        beta2: f64,
    },
    T5 {
        k1: f64,
        k2: f64,
        delta1: i32,
        delta2: i32,
        c: f64,
        d: f64,
    },
}

impl EstimatorSpec {
    pub fn family(&self) -> Family {
        match self {
            EstimatorSpec::T1 { .. } => Family::T1,
            EstimatorSpec::T2 { .. } => Family::T2,
            EstimatorSpec::T3 { .. } => Family::T3,
            EstimatorSpec::T4 { .. } => Family::T4,
            EstimatorSpec::T5 { .. } => Family::T5,
        }
    }

    /// The plain sample mean `ȳ`, written as a `T5` with zero exponents.
    pub fn sample_mean() -> Self {
        EstimatorSpec::T5 {
            k1: 0.5,
            k2: 0.5,
            delta1: 0,
            delta2: 0,
            c: 2.0,
            d: 1.0,
        }
    }

    /// `η1 = d/(c-d)` for `T5`.
    pub fn eta1(&self) -> Option<f64> {
        match *self {
            EstimatorSpec::T5 { c, d, .. } if c != d => Some(d / (c - d)),
            _ => None,
        }
    }

    /// `name=value` pairs, used by reports.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            EstimatorSpec::T1 { alpha1, alpha2 } => vec![("alpha1", alpha1), ("alpha2", alpha2)],
            EstimatorSpec::T2 { lambda1, lambda2 } => {
                vec![("lambda1", lambda1), ("lambda2", lambda2)]
            }
            EstimatorSpec::T3 { w1, w2, alpha } => vec![("w1", w1), ("w2", w2), ("alpha", alpha)],
            EstimatorSpec::T4 { beta1, beta2 } => vec![("beta1", beta1), ("beta2", beta2)],
            EstimatorSpec::T5 {
                k1,
                k2,
                delta1,
                delta2,
                c,
                d,
            } => vec![
                ("k1", k1),
                ("k2", k2),
                ("delta1", delta1 as f64),
                ("delta2", delta2 as f64),
                ("c", c),
                ("d", d),
            ],
        }
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = self
            .params()
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(",");
        write!(f, "{}({body})", self.family())
    }
}

/// Every violated invariant of `spec`; empty when the spec is valid.
pub fn validate_spec(spec: &EstimatorSpec) -> Vec<String> {
    let mut out = Vec::new();
    let mut check_sum = |name: &str, a: f64, b: f64| {
        let s = a + b;
        if (s - 1.0).abs() > SUM_TOLERANCE {
            out.push(format!("{name} weights sum {s} != 1"));
        }
    };
    match *spec {
        EstimatorSpec::T1 { .. } | EstimatorSpec::T4 { .. } => {}
        EstimatorSpec::T2 { lambda1, lambda2 } => check_sum("lambda", lambda1, lambda2),
        EstimatorSpec::T3 { w1, w2, .. } => check_sum("w", w1, w2),
        EstimatorSpec::T5 {
            k1,
            k2,
            delta1,
            delta2,
            c,
            d,
        } => {
            check_sum("k", k1, k2);
            if c == d {
                out.push("c = d leaves eta1 = d/(c-d) undefined".to_string());
            }
            for (name, delta) in [("delta1", delta1), ("delta2", delta2)] {
                if !(-1..=1).contains(&delta) {
                    out.push(format!("{name} = {delta} is outside {{-1, 0, 1}}"));
                }
            }
        }
    }
    let finite = spec.params().iter().all(|(_, v)| v.is_finite());
    if !finite {
        out.push("parameters must be finite".to_string());
    }
    out
}

/// Indices of a sample drawn from a population, with its sample means.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleView {
    indices: Vec<usize>,
    means: Means,
}

impl SampleView {
    pub fn new(pop: &Population, indices: &[usize]) -> Result<Self> {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        let bad_size = || Error::InvalidSampleSize {
            n: indices.len(),
            population: pop.len(),
        };
        if sorted.is_empty() || sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(bad_size());
        }
        if sorted.last().is_some_and(|&i| i >= pop.len()) {
            return Err(bad_size());
        }
        let n = sorted.len() as f64;
        let avg = |col: &[f64]| sorted.iter().map(|&i| col[i]).sum::<f64>() / n;
        let means = Means {
            y: avg(pop.y()),
            x: avg(pop.x()),
            z: avg(pop.z()),
        };
        Ok(Self {
            indices: sorted,
            means,
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn means(&self) -> &Means {
        &self.means
    }

    /// Relative errors `(e0, e1, e2)` against the population means.
    pub fn e_terms(&self, population: &Means) -> Result<[f64; 3]> {
        population.require_nonzero()?;
        Ok([
            (self.means.y - population.y) / population.y,
            (self.means.x - population.x) / population.x,
            (self.means.z - population.z) / population.z,
        ])
    }
}

/// `base^exponent` restricted to real results.
fn real_pow(base: f64, exponent: f64, what: &'static str) -> Result<f64> {
    if base > 0.0 {
        return Ok(base.powf(exponent));
    }
    if exponent.fract() != 0.0 {
        return Err(Error::NonRealPower { base, exponent });
    }
    if base == 0.0 && exponent < 0.0 {
        return Err(Error::DivisionByZero(what));
    }
    Ok(base.powi(exponent as i32))
}

fn ratio(num: f64, den: f64, what: &'static str) -> Result<f64> {
    if den == 0.0 {
        Err(Error::DivisionByZero(what))
    } else {
        Ok(num / den)
    }
}

/// Evaluates `spec` on `sample`, using the population's known auxiliary means.
pub fn evaluate(spec: &EstimatorSpec, sample: &SampleView, pop: &Population) -> Result<f64> {
    let violations = validate_spec(spec);
    if !violations.is_empty() {
        return Err(Error::InvalidSpec(violations));
    }
    evaluate_with_means(spec, sample.means(), &pop.means())
}

/// Evaluation from sample and population means directly; `spec` is assumed
/// valid.
pub fn evaluate_with_means(
    spec: &EstimatorSpec,
    sample: &Means,
    population: &Means,
) -> Result<f64> {
    let (ybar, xbar, zbar) = (sample.y, sample.x, sample.z);
    let (big_x, big_z) = (population.x, population.z);
    let value = match *spec {
        EstimatorSpec::T1 { alpha1, alpha2 } => {
            let rx = ratio(big_x, xbar, "X̄/x̄")?;
            let rz = ratio(big_z, zbar, "Z̄/z̄")?;
            ybar * real_pow(rx, alpha1, "X̄/x̄")? * real_pow(rz, alpha2, "Z̄/z̄")?
        }
        EstimatorSpec::T2 { lambda1, lambda2 } => {
            let rx = ratio(big_x, xbar, "X̄/x̄")?;
            let rz = ratio(big_z, zbar, "Z̄/z̄")?;
            ybar * (lambda1 * rx + lambda2 * rz)
        }
        EstimatorSpec::T3 { w1, w2, alpha } => {
            let r = ratio(w1 * big_x + w2 * big_z, w1 * xbar + w2 * zbar, "w1x̄ + w2z̄")?;
            ybar * real_pow(r, alpha, "combined ratio")?
        }
        EstimatorSpec::T4 { beta1, beta2 } => {
            let gx = ratio(big_x - xbar, big_x + xbar, "X̄ + x̄")?;
            let gz = ratio(big_z - zbar, big_z + zbar, "Z̄ + z̄")?;
            ybar * (beta1 * gx).exp() * (beta2 * gz).exp()
        }
        EstimatorSpec::T5 {
            k1,
            k2,
            delta1,
            delta2,
            c,
            d,
        } => {
            let base = ratio(c * big_x - d * xbar, (c - d) * big_x, "(c-d)X̄")?;
            let rz = ratio(zbar, big_z, "z̄/Z̄")?;
            let left = real_pow(base, delta1 as f64, "(cX̄-dx̄)/((c-d)X̄)")?;
            let right = 2.0 - real_pow(rz, delta2 as f64, "z̄/Z̄")?;
            ybar * (k1 * left + k2 * right)
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::DivisionByZero("estimator overflowed"))
    }
}
