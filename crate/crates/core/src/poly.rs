//! Sparse polynomials in `(e0, e1, e2)` truncated at a fixed total degree.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::Result;
use crate::moments::{Powers, VTable};

/// Highest total degree kept by default.
pub const MAX_DEGREE: u32 = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    max_degree: u32,
    terms: BTreeMap<Powers, f64>,
}

impl Poly {
    pub fn zero(max_degree: u32) -> Self {
        Self {
            max_degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: f64, max_degree: u32) -> Self {
        Self::monomial(Powers::new(0, 0, 0), c, max_degree)
    }

    pub fn monomial(p: Powers, c: f64, max_degree: u32) -> Self {
        let mut out = Self::zero(max_degree);
        out.add_term(p, c);
        out
    }

    /// `e0`, `e1` or `e2`.
    pub fn var(k: usize, max_degree: u32) -> Self {
        let p = match k {
            0 => Powers::new(1, 0, 0),
            1 => Powers::new(0, 1, 0),
            2 => Powers::new(0, 0, 1),
            _ => panic!("variable index {k} out of range"),
        };
        Self::monomial(p, 1.0, max_degree)
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn add_term(&mut self, p: Powers, c: f64) {
        if p.degree() > self.max_degree || c == 0.0 {
            return;
        }
        let slot = self.terms.entry(p).or_insert(0.0);
        *slot += c;
        if *slot == 0.0 {
            self.terms.remove(&p);
        }
    }

    pub fn coeff(&self, p: Powers) -> f64 {
        self.terms.get(&p).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (Powers, f64)> + '_ {
        self.terms.iter().map(|(k, v)| (*k, *v))
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::zero(self.max_degree);
        for (p, v) in self.terms() {
            out.add_term(p, v * c);
        }
        out
    }

    /// Drops every term above `degree`.
    pub fn truncate(&self, degree: u32) -> Self {
        let mut out = Self::zero(degree.min(self.max_degree));
        for (p, v) in self.terms() {
            out.add_term(p, v);
        }
        out
    }

    /// `Σ_j series[j] · self^j`, truncated. `self` must have no constant term
    /// for the truncation to be exact.
    pub fn compose(&self, series: &[f64]) -> Self {
        debug_assert_eq!(self.coeff(Powers::new(0, 0, 0)), 0.0);
        let mut out = Self::zero(self.max_degree);
        let mut power = Self::constant(1.0, self.max_degree);
        for (j, &c) in series.iter().enumerate() {
            if j > 0 {
                power = &power * self;
            }
            out = &out + &power.scale(c);
        }
        out
    }

    /// Expectation of the polynomial under the design: each monomial
    /// `e0^p e1^q e2^r` is replaced by `V_pqr`.
    pub fn expectation(&self, v: &VTable) -> Result<f64> {
        self.terms().map(|(p, c)| v.get(p).map(|val| c * val)).sum()
    }

    /// As [`Poly::expectation`], reading absent table entries as zero and
    /// reporting which ones were absent.
    pub fn expectation_lenient(&self, v: &VTable) -> (f64, Vec<Powers>) {
        let mut missing = Vec::new();
        let mut total = 0.0;
        for (p, c) in self.terms() {
            match v.get(p) {
                Ok(val) => total += c * val,
                Err(_) => missing.push(p),
            }
        }
        (total, missing)
    }

    /// Evaluates the polynomial at a point.
    pub fn eval(&self, e: [f64; 3]) -> f64 {
        self.terms()
            .map(|(p, c)| c * e[0].powi(p.y as i32) * e[1].powi(p.x as i32) * e[2].powi(p.z as i32))
            .sum()
    }
}

impl Add for &Poly {
    type Output = Poly;

    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out.max_degree = self.max_degree.min(rhs.max_degree);
        out.terms.retain(|p, _| p.degree() <= out.max_degree);
        for (p, c) in rhs.terms() {
            out.add_term(p, c);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;

    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;

    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;

    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero(self.max_degree.min(rhs.max_degree));
        for (pa, ca) in self.terms() {
            for (pb, cb) in rhs.terms() {
                let p = pa + pb;
                if p.degree() <= out.max_degree {
                    out.add_term(p, ca * cb);
                }
            }
        }
        out
    }
}

/// Coefficients of `(1+u)^a` in powers of `u`, up to `u^degree`.
pub fn binomial_series(a: f64, degree: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(degree as usize + 1);
    let mut c = 1.0;
    for j in 0..=degree {
        out.push(c);
        c *= (a - j as f64) / (j as f64 + 1.0);
    }
    out
}

/// Coefficients of `exp(u)`.
pub fn exp_series(degree: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(degree as usize + 1);
    let mut c = 1.0;
    for j in 0..=degree {
        out.push(c);
        c /= j as f64 + 1.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(y: u8, x: u8, z: u8) -> Powers {
        Powers::new(y, x, z)
    }

    #[test]
    fn product_truncates() {
        let a = &Poly::constant(1.0, 4) + &Poly::var(1, 4);
        let mut acc = Poly::constant(1.0, 4);
        for _ in 0..6 {
            acc = &acc * &a;
        }
        // (1+e1)^6 truncated at degree 4
        assert_eq!(acc.coeff(p(0, 4, 0)), 15.0);
        assert_eq!(acc.coeff(p(0, 3, 0)), 20.0);
        assert_eq!(acc.coeff(p(0, 5, 0)), 0.0);
        assert_eq!(acc.terms().count(), 5);
    }

    #[test]
    fn geometric_series_by_composition() {
        // 1/(1+e1) = Σ (-e1)^j
        let g = Poly::var(1, 4).compose(&binomial_series(-1.0, 4));
        for j in 0..=4u8 {
            let expected = if j % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(g.coeff(p(0, j, 0)), expected);
        }
    }

    #[test]
    fn series_coefficients() {
        assert_eq!(binomial_series(2.0, 4), vec![1.0, 2.0, 1.0, 0.0, 0.0]);
        let e = exp_series(4);
        assert!((e[4] - 1.0 / 24.0).abs() < 1e-16);
    }

    #[test]
    fn cancellation_removes_terms() {
        let a = Poly::var(0, 4);
        let z = &a - &a;
        assert_eq!(z.terms().count(), 0);
    }

    #[test]
    fn evaluation_matches_terms() {
        let mut q = Poly::zero(4);
        q.add_term(p(1, 1, 0), 2.0);
        q.add_term(p(0, 0, 2), -1.0);
        assert_eq!(q.eval([2.0, 3.0, 4.0]), 12.0 - 16.0);
    }
}
