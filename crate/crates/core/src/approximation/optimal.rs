use super::{ensure_valid, first_order_mse};
use crate::error::{Error, Result};
use crate::estimators::EstimatorSpec;
use crate::moments::{Means, Powers, VTable};

/// Relative size below which a determinant or variance counts as zero.
const SINGULAR_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OptimumMethod {
    /// Evaluate the optimum expressions exactly as published.
    PublishedFormula,
    /// Solve the first-order normal equations under the family's constraint.
    QuadraticSolve,
}

impl std::fmt::Display for OptimumMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptimumMethod::PublishedFormula => "published-formula",
            OptimumMethod::QuadraticSolve => "quadratic-solve",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Optimum {
    pub spec: EstimatorSpec,
    /// The quadratic has a flat direction; `spec` is the minimum-norm choice.
    pub non_unique: bool,
}

struct Second {
    v200: f64,
    v020: f64,
    v002: f64,
    v110: f64,
    v101: f64,
    v011: f64,
}

impl Second {
    fn read(v: &VTable) -> Result<Self> {
        let g = |y, x, z| v.get(Powers::new(y, x, z));
        Ok(Self {
            v200: g(2, 0, 0)?,
            v020: g(0, 2, 0)?,
            v002: g(0, 0, 2)?,
            v110: g(1, 1, 0)?,
            v101: g(1, 0, 1)?,
            v011: g(0, 1, 1)?,
        })
    }

    fn det(&self) -> f64 {
        self.v020 * self.v002 - self.v011 * self.v011
    }

    fn det_is_zero(&self) -> bool {
        self.det() <= SINGULAR_TOL * (self.v020 * self.v002).abs()
    }

    /// Variance of `a e1 - b e2`.
    fn contrast_var(&self, a: f64, b: f64) -> f64 {
        a * a * self.v020 + b * b * self.v002 - 2.0 * a * b * self.v011
    }

    fn contrast_scale(&self, a: f64, b: f64) -> f64 {
        a * a * self.v020.abs() + b * b * self.v002.abs()
    }
}

/// Minimizer of `a'Σa - 2a'c` with `Σ = [[V020, V011], [V011, V002]]` and
/// `c = (V110, V101)`; the pseudo-inverse solution when `Σ` is singular.
fn solve_t1(s: &Second) -> Result<((f64, f64), bool)> {
    if !s.det_is_zero() {
        let det = s.det();
        let a1 = (s.v110 * s.v002 - s.v101 * s.v011) / det;
        let a2 = (s.v101 * s.v020 - s.v110 * s.v011) / det;
        return Ok(((a1, a2), false));
    }
    // Σ is PSD of rank ≤ 1: Σ = λ u u' with λ = trace
    let trace = s.v020 + s.v002;
    let c_norm = s.v110.hypot(s.v101);
    if trace <= 0.0 {
        if c_norm == 0.0 {
            return Ok(((0.0, 0.0), true));
        }
        return Err(Error::Singular("auxiliary variances vanish".into()));
    }
    let (ux, uz) = if s.v020 >= s.v002 {
        let n = s.v020.hypot(s.v011);
        (s.v020 / n, s.v011 / n)
    } else {
        let n = s.v011.hypot(s.v002);
        (s.v011 / n, s.v002 / n)
    };
    let proj = (ux * s.v110 + uz * s.v101) / trace;
    let (a1, a2) = (ux * proj, uz * proj);
    // c must lie in the range of Σ, otherwise the quadratic is unbounded
    let rx = s.v020 * a1 + s.v011 * a2 - s.v110;
    let rz = s.v011 * a1 + s.v002 * a2 - s.v101;
    if rx.hypot(rz) > 1e-9 * c_norm.max(f64::MIN_POSITIVE) {
        return Err(Error::Singular(
            "auxiliaries are collinear but carry different information on y".into(),
        ));
    }
    Ok(((a1, a2), true))
}

/// One-dimensional minimizer `num/den` of a constrained quadratic; flat
/// directions fall back to `fallback`.
fn solve_1d(num: f64, den: f64, scale: f64, fallback: f64) -> Result<(f64, bool)> {
    if den.abs() <= SINGULAR_TOL * scale {
        if num.abs() <= 1e-9 * scale.max(f64::MIN_POSITIVE) {
            return Ok((fallback, true));
        }
        return Err(Error::Singular(
            "constrained quadratic has no minimum".into(),
        ));
    }
    Ok((num / den, false))
}

fn weight_from_share(share: f64, m: &Means) -> Result<f64> {
    // share = w1 X̄ / (w1 X̄ + (1-w1) Z̄)  ⇔  w1 = share Z̄ / (X̄(1-share) + share Z̄)
    let den = m.x * (1.0 - share) + share * m.z;
    if den == 0.0 {
        return Err(Error::Singular("optimal t3 weights are unbounded".into()));
    }
    Ok(share * m.z / den)
}

/// Optimal free parameters of `template`'s family. Fixed inputs are taken
/// from the template: `α` for t3 and `δ1, δ2, c, d` for t5.
pub fn optimal_parameters(
    template: &EstimatorSpec,
    v: &VTable,
    method: OptimumMethod,
) -> Result<Optimum> {
    ensure_valid(template)?;
    let s = Second::read(v)?;
    let m = *v.means();
    match method {
        OptimumMethod::QuadraticSolve => quadratic_solve(template, &s, &m),
        OptimumMethod::PublishedFormula => {
            published_formula(template, &s, &m, v).map(|spec| Optimum {
                spec,
                non_unique: false,
            })
        }
    }
}

fn quadratic_solve(template: &EstimatorSpec, s: &Second, m: &Means) -> Result<Optimum> {
    let (spec, non_unique) = match *template {
        EstimatorSpec::T1 { .. } => {
            let ((a1, a2), flat) = solve_t1(s)?;
            (
                EstimatorSpec::T1 {
                    alpha1: a1,
                    alpha2: a2,
                },
                flat,
            )
        }
        EstimatorSpec::T4 { .. } => {
            let ((a1, a2), flat) = solve_t1(s)?;
            (
                EstimatorSpec::T4 {
                    beta1: 2.0 * a1,
                    beta2: 2.0 * a2,
                },
                flat,
            )
        }
        EstimatorSpec::T2 { .. } => {
            let num = s.v002 - s.v101 + s.v110 - s.v011;
            let (l1, flat) = solve_1d(
                num,
                s.contrast_var(1.0, 1.0),
                s.contrast_scale(1.0, 1.0),
                0.5,
            )?;
            (
                EstimatorSpec::T2 {
                    lambda1: l1,
                    lambda2: 1.0 - l1,
                },
                flat,
            )
        }
        EstimatorSpec::T3 { alpha, .. } => {
            if alpha == 0.0 {
                (
                    EstimatorSpec::T3 {
                        w1: 0.5,
                        w2: 0.5,
                        alpha,
                    },
                    true,
                )
            } else {
                let num = s.v002 - s.v011 + (s.v110 - s.v101) / alpha;
                let (share, flat) = solve_1d(
                    num,
                    s.contrast_var(1.0, 1.0),
                    s.contrast_scale(1.0, 1.0),
                    f64::NAN,
                )?;
                if flat {
                    (
                        EstimatorSpec::T3 {
                            w1: 0.5,
                            w2: 0.5,
                            alpha,
                        },
                        true,
                    )
                } else {
                    let w1 = weight_from_share(share, m)?;
                    (
                        EstimatorSpec::T3 {
                            w1,
                            w2: 1.0 - w1,
                            alpha,
                        },
                        false,
                    )
                }
            }
        }
        EstimatorSpec::T5 {
            delta1,
            delta2,
            c,
            d,
            ..
        } => {
            let eta1 = template.eta1().ok_or(Error::DivisionByZero("c - d"))?;
            let a = delta1 as f64 * eta1;
            let b = delta2 as f64;
            let num = b * b * s.v002 - a * b * s.v011 + a * s.v110 - b * s.v101;
            let (k1, flat) = solve_1d(num, s.contrast_var(a, b), s.contrast_scale(a, b), 0.5)?;
            (
                EstimatorSpec::T5 {
                    k1,
                    k2: 1.0 - k1,
                    delta1,
                    delta2,
                    c,
                    d,
                },
                flat,
            )
        }
    };
    Ok(Optimum { spec, non_unique })
}

fn nonzero(den: f64, what: &str) -> Result<f64> {
    if den == 0.0 || !den.is_finite() {
        Err(Error::Singular(format!("{what} is zero")))
    } else {
        Ok(den)
    }
}

fn published_formula(
    template: &EstimatorSpec,
    s: &Second,
    m: &Means,
    v: &VTable,
) -> Result<EstimatorSpec> {
    Ok(match *template {
        EstimatorSpec::T1 { .. } => {
            if s.v200 <= 0.0 || s.v020 <= 0.0 || s.v002 <= 0.0 {
                return Err(Error::Singular("a variance term is not positive".into()));
            }
            let r_yx = s.v110 / (s.v200 * s.v020).sqrt();
            let r_yz = s.v101 / (s.v200 * s.v002).sqrt();
            let r_xz = s.v011 / (s.v020 * s.v002).sqrt();
            let den = 1.0 - r_xz * r_xz;
            if den.abs() <= SINGULAR_TOL {
                return Err(Error::Singular("rho_xz^2 = 1".into()));
            }
            EstimatorSpec::T1 {
                alpha1: (r_yx - r_yz * r_xz) / den * (s.v200 / s.v020).sqrt(),
                alpha2: (r_yz - r_yx * r_xz) / den * (s.v200 / s.v002).sqrt(),
            }
        }
        EstimatorSpec::T4 { .. } => {
            let det = s.det();
            if s.det_is_zero() {
                return Err(Error::Singular("V002 V020 - V011^2 = 0".into()));
            }
            EstimatorSpec::T4 {
                beta1: 2.0 * (s.v110 * s.v002 - s.v101 * s.v011) / det,
                beta2: 2.0 * (s.v020 * s.v101 - s.v110 * s.v011) / det,
            }
        }
        EstimatorSpec::T2 { .. } => {
            let v012 = v.get(Powers::new(0, 1, 2))?;
            let den = nonzero(s.v020 + s.v002 - 2.0 * v012, "V020 + V002 - 2 V012")?;
            let l1 = (s.v002 - s.v101 + s.v110 - v012) / den;
            EstimatorSpec::T2 {
                lambda1: l1,
                lambda2: 1.0 - l1,
            }
        }
        EstimatorSpec::T3 { alpha, .. } => {
            // λ = 1/(w1 X̄ + w2 Z̄) depends on w1 itself: fixed-point iteration
            let (x1, x2) = (m.x, m.z);
            let num = x1 * s.v110 - x2 * s.v101 + x2 * x2 * s.v002 - x1 * x2 * s.v011;
            let mut w1 = 0.5;
            let mut converged = false;
            for _ in 0..500 {
                let lam = 1.0 / nonzero(w1 * x1 + (1.0 - w1) * x2, "w1 X̄ + w2 Z̄")?;
                let den =
                    x1 * x1 * s.v020 + alpha * lam * x2 * x2 * s.v002 - 2.0 * x1 * x2 * s.v011;
                let next = num / nonzero(den, "published t3 weight denominator")?;
                if (next - w1).abs() <= 1e-13 * next.abs().max(1.0) {
                    w1 = next;
                    converged = true;
                    break;
                }
                w1 = next;
            }
            if !converged || !w1.is_finite() {
                return Err(Error::NotConverged("published t3 weight"));
            }
            EstimatorSpec::T3 {
                w1,
                w2: 1.0 - w1,
                alpha,
            }
        }
        EstimatorSpec::T5 {
            delta1,
            delta2,
            c,
            d,
            ..
        } => {
            let eta1 = template.eta1().ok_or(Error::DivisionByZero("c - d"))?;
            let v102 = v.get(Powers::new(1, 0, 2))?;
            let (d1, d2) = (delta1 as f64, delta2 as f64);
            let num = d1 * eta1 * s.v110 + d2 * d2 * s.v002 - d2 * v102 - d1 * d2 * eta1 * s.v011;
            let den =
                d1 * d1 * eta1 * eta1 * s.v110 + d2 * d2 * s.v002 - 2.0 * d1 * d2 * eta1 * s.v011;
            let k1 = num / nonzero(den, "published k1 denominator")?;
            EstimatorSpec::T5 {
                k1,
                k2: 1.0 - k1,
                delta1,
                delta2,
                c,
                d,
            }
        }
    })
}

/// First-order MSE of the two-auxiliary regression estimator, the infimum of
/// the t1 quadratic form.
pub fn regression_min_mse(v: &VTable) -> Result<f64> {
    let s = Second::read(v)?;
    if s.det_is_zero() {
        return Err(Error::Singular("V020 V002 - V011^2 = 0".into()));
    }
    let explained = (s.v110 * s.v110 * s.v002 + s.v101 * s.v101 * s.v020
        - 2.0 * s.v110 * s.v101 * s.v011)
        / s.det();
    let ybar = v.means().y;
    Ok(ybar * ybar * (s.v200 - explained))
}

/// Golden-section search over t3's exponent on `[-4, 4]`, re-optimizing the
/// weights by the normal equations at every trial value.
pub fn optimize_t3_alpha(template: &EstimatorSpec, v: &VTable) -> Result<(Optimum, f64)> {
    if !matches!(template, EstimatorSpec::T3 { .. }) {
        return Err(Error::Unsupported(
            "exponent search only applies to t3".into(),
        ));
    }
    let profile = |alpha: f64| -> f64 {
        let t = EstimatorSpec::T3 {
            w1: 0.5,
            w2: 0.5,
            alpha,
        };
        optimal_parameters(&t, v, OptimumMethod::QuadraticSolve)
            .and_then(|o| first_order_mse(&o.spec, v))
            .unwrap_or(f64::INFINITY)
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (-4.0f64, 4.0f64);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (profile(c), profile(d));
    while hi - lo > 1e-8 {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = profile(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = profile(d);
        }
    }
    let alpha = (lo + hi) / 2.0;
    let t = EstimatorSpec::T3 {
        w1: 0.5,
        w2: 0.5,
        alpha,
    };
    let opt = optimal_parameters(&t, v, OptimumMethod::QuadraticSolve)?;
    let mse = first_order_mse(&opt.spec, v)?;
    Ok((opt, mse))
}
