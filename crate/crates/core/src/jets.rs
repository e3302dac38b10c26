//! Truncated Taylor arithmetic.
//!
//! [`Jet2`] carries every partial derivative of a scalar field `f(x, y)` up to
//! total degree 4 at a fixed base point. Arithmetic on jets propagates those
//! derivatives exactly (up to floating point), so a key function assembled
//! from jets yields its Weyl coefficients without any finite differencing.
//!
//! [`Series`] is the univariate analogue used to push an ODE right-hand side
//! through Taylor mode and recover higher derivatives of a profile function.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Highest total degree kept by [`Jet2`] and [`Series`].
pub const ORDER: usize = 4;
const LEN: usize = 15;
const FACT: [f64; 5] = [1.0, 1.0, 2.0, 6.0, 24.0];

#[inline]
const fn idx(i: usize, j: usize) -> usize {
    let n = i + j;
    n * (n + 1) / 2 + j
}

/// Which jet [`Jet2::seed`] produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Seed {
    X,
    Y,
    Constant(f64),
}

/// Arithmetic selector for [`arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

/// Bivariate jet of total degree 4.
///
/// Internally the normalized Taylor coefficients `∂^{i+j}f / (i! j! ∂xⁱ∂yʲ)`
/// are stored densely (15 entries); [`Jet2::coeff`] returns the plain partial
/// derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    base_x: f64,
    base_y: f64,
    t: [f64; LEN],
}

impl Jet2 {
    pub fn seed(base_x: f64, base_y: f64, which: Seed) -> Self {
        let mut t = [0.0; LEN];
        match which {
            Seed::X => {
                t[0] = base_x;
                t[idx(1, 0)] = 1.0;
            }
            Seed::Y => {
                t[0] = base_y;
                t[idx(0, 1)] = 1.0;
            }
            Seed::Constant(c) => t[0] = c,
        }
        Self { base_x, base_y, t }
    }

    pub fn var_x(base_x: f64, base_y: f64) -> Self {
        Self::seed(base_x, base_y, Seed::X)
    }

    pub fn var_y(base_x: f64, base_y: f64) -> Self {
        Self::seed(base_x, base_y, Seed::Y)
    }

    /// Constant jet sharing this jet's base point.
    pub fn constant_like(&self, c: f64) -> Self {
        Self::seed(self.base_x, self.base_y, Seed::Constant(c))
    }

    /// Builds a jet from plain partial derivatives `d[i][j] = ∂^{i+j}f/∂xⁱ∂yʲ`
    /// (entries with `i + j > 4` are ignored).
    pub fn from_partials(base_x: f64, base_y: f64, d: &[[f64; 5]; 5]) -> Self {
        let mut t = [0.0; LEN];
        for i in 0..=ORDER {
            for j in 0..=(ORDER - i) {
                t[idx(i, j)] = d[i][j] / (FACT[i] * FACT[j]);
            }
        }
        Self { base_x, base_y, t }
    }

    pub fn base(&self) -> (f64, f64) {
        (self.base_x, self.base_y)
    }

    pub fn value(&self) -> f64 {
        self.t[0]
    }

    /// `∂^{i+j}f/∂xⁱ∂yʲ` at the base point; zero when `i + j > 4`.
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        if i + j > ORDER {
            return 0.0;
        }
        self.t[idx(i, j)] * FACT[i] * FACT[j]
    }

    /// Checked version of [`Jet2::coeff`].
    pub fn partial(&self, i: usize, j: usize) -> Result<f64> {
        if i + j > ORDER {
            return Err(Error::OrderOverflow { order: i + j });
        }
        Ok(self.coeff(i, j))
    }

    pub fn is_finite(&self) -> bool {
        self.t.iter().all(|c| c.is_finite())
    }

    fn same_base(&self, other: &Self) -> bool {
        self.base_x == other.base_x && self.base_y == other.base_y
    }

    fn zip(self, other: Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut t = [0.0; LEN];
        for (k, v) in t.iter_mut().enumerate() {
            *v = f(self.t[k], other.t[k]);
        }
        Self { t, ..self }
    }

    fn mul_jet(&self, other: &Self) -> Self {
        let mut t = [0.0; LEN];
        for i in 0..=ORDER {
            for j in 0..=(ORDER - i) {
                let mut acc = 0.0;
                for k in 0..=i {
                    for l in 0..=j {
                        acc += self.t[idx(k, l)] * other.t[idx(i - k, j - l)];
                    }
                }
                t[idx(i, j)] = acc;
            }
        }
        Self { t, ..*self }
    }

    /// `self / other`, failing when `other` has a vanishing constant term.
    pub fn try_div(&self, other: &Self, factor: &str) -> Result<Self> {
        let b0 = other.t[0];
        if b0 == 0.0 || !b0.is_finite() {
            return Err(Error::ZeroDivisor(factor.to_string()));
        }
        let mut c = [0.0; LEN];
        // Degree order guarantees every c[i-k][j-l] on the right is final.
        for n in 0..=ORDER {
            for j in 0..=n {
                let i = n - j;
                let mut acc = self.t[idx(i, j)];
                for k in 0..=i {
                    for l in 0..=j {
                        if k == 0 && l == 0 {
                            continue;
                        }
                        acc -= other.t[idx(k, l)] * c[idx(i - k, j - l)];
                    }
                }
                c[idx(i, j)] = acc / b0;
            }
        }
        Ok(Self { t: c, ..*self })
    }

    /// Composes a univariate map `g` with this jet. `g_table[k]` is the k-th
    /// derivative of `g` at `self.value()`.
    pub fn lift(&self, g_table: &[f64; 5]) -> Self {
        let mut h = *self;
        h.t[0] = 0.0;
        let mut out = self.constant_like(g_table[0]);
        let mut power = self.constant_like(1.0);
        for (k, gk) in g_table.iter().enumerate().skip(1) {
            power = power.mul_jet(&h);
            let s = gk / FACT[k];
            for (o, p) in out.t.iter_mut().zip(power.t.iter()) {
                *o += s * p;
            }
        }
        out
    }

    pub fn exp(&self) -> Self {
        let e = self.t[0].exp();
        self.lift(&[e; 5])
    }

    pub fn ln(&self) -> Result<Self> {
        let a = self.t[0];
        if a <= 0.0 {
            return Err(Error::Domain(format!("ln of non-positive value {a}")));
        }
        Ok(self.lift(&[
            a.ln(),
            1.0 / a,
            -1.0 / (a * a),
            2.0 / (a * a * a),
            -6.0 / (a * a * a * a),
        ]))
    }

    /// Real power `a^alpha`, defined only for a strictly positive base.
    pub fn powf(&self, alpha: f64) -> Result<Self> {
        let a = self.t[0];
        if a <= 0.0 {
            return Err(Error::Domain(format!(
                "fractional power {alpha} of non-positive value {a}"
            )));
        }
        Ok(self.lift(&power_table(a, alpha)))
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.powf(0.5)
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut out = self.constant_like(1.0);
        for _ in 0..n {
            out = out.mul_jet(self);
        }
        out
    }

    pub fn atan(&self) -> Self {
        let a = self.t[0];
        let s = 1.0 + a * a;
        self.lift(&[
            a.atan(),
            1.0 / s,
            -2.0 * a / (s * s),
            (6.0 * a * a - 2.0) / (s * s * s),
            24.0 * a * (1.0 - a * a) / (s * s * s * s),
        ])
    }
}

/// Derivative table of `t ↦ t^alpha` at `a`.
pub fn power_table(a: f64, alpha: f64) -> [f64; 5] {
    let mut out = [0.0; 5];
    let mut coef = 1.0;
    for (k, o) in out.iter_mut().enumerate() {
        *o = coef * a.powf(alpha - k as f64);
        coef *= alpha - k as f64;
    }
    out
}

/// Pointwise combination of two jets at a common base point.
pub fn arith(a: &Jet2, b: &Jet2, op: Op) -> Result<Jet2> {
    if !a.same_base(b) {
        return Err(Error::Domain(format!(
            "jets expanded at different points ({}, {}) and ({}, {})",
            a.base_x, a.base_y, b.base_x, b.base_y
        )));
    }
    Ok(match op {
        Op::Add => *a + *b,
        Op::Sub => *a - *b,
        Op::Mul => *a * *b,
        Op::Div => a.try_div(b, "right operand")?,
    })
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, rhs: Jet2) -> Jet2 {
        debug_assert!(self.same_base(&rhs));
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: Jet2) -> Jet2 {
        debug_assert!(self.same_base(&rhs));
        self.zip(rhs, |a, b| a - b)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        debug_assert!(self.same_base(&rhs));
        self.mul_jet(&rhs)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(mut self) -> Jet2 {
        self.t.iter_mut().for_each(|c| *c = -*c);
        self
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(mut self, rhs: f64) -> Jet2 {
        self.t[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet2 {
    type Output = Jet2;
    fn sub(mut self, rhs: f64) -> Jet2 {
        self.t[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(mut self, rhs: f64) -> Jet2 {
        self.t.iter_mut().for_each(|c| *c *= rhs);
        self
    }
}

impl Mul<Jet2> for f64 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        rhs * self
    }
}

/// Minimal field interface used to write ODE right-hand sides once and run
/// them both on plain floats and in Taylor mode.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;
}

impl Real for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
}

/// Univariate truncated Taylor series of order 4 (normalized coefficients).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Series(pub [f64; 5]);

impl Series {
    pub fn constant(c: f64) -> Self {
        Series([c, 0.0, 0.0, 0.0, 0.0])
    }

    pub fn variable(t0: f64) -> Self {
        Series([t0, 1.0, 0.0, 0.0, 0.0])
    }

    pub fn from_derivatives(d: &[f64; 5]) -> Self {
        let mut c = [0.0; 5];
        for k in 0..5 {
            c[k] = d[k] / FACT[k];
        }
        Series(c)
    }

    /// Plain derivatives `f^(k)(t0)`.
    pub fn derivatives(&self) -> [f64; 5] {
        let mut d = [0.0; 5];
        for k in 0..5 {
            d[k] = self.0[k] * FACT[k];
        }
        d
    }

    /// Term-wise derivative; the top coefficient is lost to truncation.
    pub fn differentiate(&self) -> Self {
        let c = &self.0;
        Series([c[1], 2.0 * c[2], 3.0 * c[3], 4.0 * c[4], 0.0])
    }

    pub fn lift(&self, g_table: &[f64; 5]) -> Self {
        let mut h = *self;
        h.0[0] = 0.0;
        let mut out = Series::constant(g_table[0]);
        let mut power = Series::constant(1.0);
        for (k, gk) in g_table.iter().enumerate().skip(1) {
            power = power * h;
            let s = gk / FACT[k];
            for (o, p) in out.0.iter_mut().zip(power.0.iter()) {
                *o += s * p;
            }
        }
        out
    }

    pub fn powf(&self, alpha: f64) -> Result<Self> {
        let a = self.0[0];
        if a <= 0.0 {
            return Err(Error::Domain(format!(
                "fractional power {alpha} of non-positive value {a}"
            )));
        }
        Ok(self.lift(&power_table(a, alpha)))
    }

    pub fn ln(&self) -> Result<Self> {
        let a = self.0[0];
        if a <= 0.0 {
            return Err(Error::Domain(format!("ln of non-positive value {a}")));
        }
        Ok(self.lift(&[
            a.ln(),
            1.0 / a,
            -1.0 / (a * a),
            2.0 / (a * a * a),
            -6.0 / (a * a * a * a),
        ]))
    }
}

impl Add for Series {
    type Output = Series;
    fn add(self, r: Series) -> Series {
        let mut c = self.0;
        c.iter_mut().zip(r.0).for_each(|(a, b)| *a += b);
        Series(c)
    }
}

impl Sub for Series {
    type Output = Series;
    fn sub(self, r: Series) -> Series {
        let mut c = self.0;
        c.iter_mut().zip(r.0).for_each(|(a, b)| *a -= b);
        Series(c)
    }
}

impl Mul for Series {
    type Output = Series;
    fn mul(self, r: Series) -> Series {
        let mut c = [0.0; 5];
        for i in 0..5 {
            for j in 0..=(4 - i) {
                c[i + j] += self.0[i] * r.0[j];
            }
        }
        Series(c)
    }
}

impl Div for Series {
    type Output = Series;
    /// Callers must ensure a nonzero constant term; otherwise the result is
    /// non-finite.
    fn div(self, r: Series) -> Series {
        let b0 = r.0[0];
        let mut c = [0.0; 5];
        for k in 0..5 {
            let mut acc = self.0[k];
            for j in 1..=k {
                acc -= r.0[j] * c[k - j];
            }
            c[k] = acc / b0;
        }
        Series(c)
    }
}

impl Neg for Series {
    type Output = Series;
    fn neg(self) -> Series {
        Series(self.0.map(|c| -c))
    }
}

impl Add<f64> for Series {
    type Output = Series;
    fn add(mut self, r: f64) -> Series {
        self.0[0] += r;
        self
    }
}

impl Sub<f64> for Series {
    type Output = Series;
    fn sub(mut self, r: f64) -> Series {
        self.0[0] -= r;
        self
    }
}

impl Mul<f64> for Series {
    type Output = Series;
    fn mul(self, r: f64) -> Series {
        Series(self.0.map(|c| c * r))
    }
}

impl Real for Series {
    fn cst(v: f64) -> Self {
        Series::constant(v)
    }
    fn value(&self) -> f64 {
        self.0[0]
    }
}

/// Derivatives `u, u', …, u''''` at `t0` of the solution of
/// `u'' = phi(t, u, u')` through `(u0, u1)`.
///
/// Coefficient `k` of `phi` depends only on the Taylor coefficients of `u`
/// up to order `k + 1`, so three fixed-point sweeps determine the series
/// exactly.
pub fn second_order_taylor<F>(phi: F, t0: f64, u0: f64, u1: f64) -> Result<[f64; 5]>
where
    F: Fn(Series, Series, Series) -> Result<Series>,
{
    let mut c = [u0, u1, 0.0, 0.0, 0.0];
    for _ in 0..3 {
        let u = Series(c);
        let du = u.differentiate();
        let rhs = phi(Series::variable(t0), u, du)?;
        c[2] = rhs.0[0] / 2.0;
        c[3] = rhs.0[1] / 6.0;
        c[4] = rhs.0[2] / 12.0;
    }
    let d = Series(c).derivatives();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "non-finite Taylor expansion at t = {t0}"
        )));
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn seeds() {
        let jx = Jet2::seed(2.0, 3.0, Seed::X);
        assert_eq!(jx.coeff(0, 0), 2.0);
        assert_eq!(jx.coeff(1, 0), 1.0);
        assert_eq!(jx.coeff(0, 1), 0.0);
        let jy = Jet2::seed(2.0, 3.0, Seed::Y);
        assert_eq!(jy.coeff(0, 0), 3.0);
        assert_eq!(jy.coeff(0, 1), 1.0);
        let c = Jet2::seed(0.0, 0.0, Seed::Constant(7.0));
        assert_eq!(c.coeff(0, 0), 7.0);
        for i in 0..=4 {
            for j in 0..=(4 - i) {
                if i + j > 0 {
                    assert_eq!(c.coeff(i, j), 0.0);
                    if (i, j) != (1, 0) {
                        assert_eq!(jx.coeff(i, j), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn products_and_quotients() {
        let x = Jet2::var_x(2.0, 3.0);
        let y = Jet2::var_y(2.0, 3.0);
        let xy = arith(&x, &y, Op::Mul).unwrap();
        assert_eq!(xy.coeff(0, 0), 6.0);
        assert_eq!(xy.coeff(1, 1), 1.0);

        let x1 = Jet2::var_x(1.0, 0.0);
        assert_eq!((x1 * x1).coeff(2, 0), 2.0);

        let y2 = Jet2::var_y(0.0, 2.0);
        let inv = arith(&y2.constant_like(1.0), &y2, Op::Div).unwrap();
        assert_relative_eq!(inv.coeff(0, 4), 24.0 / 32.0, epsilon = 1e-15);
        assert_eq!(inv.coeff(0, 4), 0.75);
    }

    #[test]
    fn division_by_zero_constant_names_factor() {
        let y = Jet2::var_y(1.0, 0.0);
        let err = y.constant_like(1.0).try_div(&y, "y").unwrap_err();
        assert_eq!(err, Error::ZeroDivisor("y".into()));
        assert!(arith(&y, &y, Op::Div).is_err());
    }

    #[test]
    fn mismatched_bases_rejected() {
        let a = Jet2::var_x(0.0, 0.0);
        let b = Jet2::var_x(1.0, 0.0);
        assert!(matches!(arith(&a, &b, Op::Add), Err(Error::Domain(_))));
    }

    #[test]
    fn lifts() {
        let s = Jet2::var_x(0.0, 0.0) + Jet2::var_y(0.0, 0.0);
        let e = s.lift(&[1.0; 5]);
        for i in 0..=4 {
            for j in 0..=(4 - i) {
                assert_relative_eq!(e.coeff(i, j), 1.0, epsilon = 1e-14);
            }
        }
        let x = Jet2::var_x(1.0, 0.0);
        let l = x.lift(&[0.0, 1.0, -1.0, 2.0, -6.0]);
        assert_eq!(l.coeff(1, 0), 1.0);
        assert_eq!(l.coeff(2, 0), -1.0);
        assert_eq!(l.coeff(3, 0), 2.0);
        assert_eq!(l.coeff(4, 0), -6.0);

        let q = Jet2::var_x(1.0, 1.0)
            .try_div(&Jet2::var_y(1.0, 1.0), "y")
            .unwrap();
        assert_relative_eq!(q.atan().coeff(1, 0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn partial_extraction() {
        let x = Jet2::var_x(0.7, -0.3);
        let y = Jet2::var_y(0.7, -0.3);
        assert_relative_eq!(x.powi(4).partial(4, 0).unwrap(), 24.0, epsilon = 1e-13);
        assert_relative_eq!(
            (x * x * y * y).partial(2, 2).unwrap(),
            4.0,
            epsilon = 1e-13
        );
        let e = (Jet2::var_x(0.0, 0.0) + Jet2::var_y(0.0, 0.0)).exp();
        assert_relative_eq!(e.partial(1, 3).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(x.partial(3, 2), Err(Error::OrderOverflow { order: 5 }));
    }

    #[test]
    fn fractional_power_needs_positive_base() {
        let x = Jet2::var_x(-1.0, 0.0);
        assert!(matches!(x.powf(1.0 / 3.0), Err(Error::Domain(_))));
        assert!(x.ln().is_err());
        assert!(x.sqrt().is_err());
        let x = Jet2::var_x(8.0, 0.0);
        let c = x.powf(1.0 / 3.0).unwrap();
        assert_relative_eq!(c.value(), 2.0, epsilon = 1e-15);
        assert_relative_eq!(c.coeff(1, 0), 1.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn series_taylor_of_exponential() {
        // u'' = u with u(0)=1, u'(0)=1 is exp.
        let d = second_order_taylor(|_, u, _| Ok(u), 0.0, 1.0, 1.0).unwrap();
        for v in d {
            assert_relative_eq!(v, 1.0, epsilon = 1e-15);
        }
        // u'' = -t u' (u' = exp(-t²/2)).
        let d = second_order_taylor(|t, _, du| Ok(-(t * du)), 0.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(d[1], 1.0);
        assert_relative_eq!(d[2], 0.0);
        assert_relative_eq!(d[3], -1.0, epsilon = 1e-15);
        assert_relative_eq!(d[4], 0.0);
    }

    #[test]
    fn series_division_roundtrip() {
        let a = Series([1.0, 2.0, -1.0, 0.5, 3.0]);
        let b = Series([2.0, -1.0, 0.25, 4.0, 1.0]);
        let r = (a / b) * b;
        for k in 0..5 {
            assert_relative_eq!(r.0[k], a.0[k], epsilon = 1e-13);
        }
    }
}
