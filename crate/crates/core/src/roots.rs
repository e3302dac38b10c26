//! Scalar root finding: Brent's method on a bracket and real roots of
//! real polynomials by derivative-based interval isolation.

use crate::error::{Error, Result};

/// Brent's method on `[a, b]` with `f(a)·f(b) ≤ 0`, to absolute `xtol`.
pub fn brent<F>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Domain(format!(
            "root not bracketed on [{a}, {b}] (f = {fa:e}, {fb:e})"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Ok(b)
}

/// Horner evaluation; `coeffs[k]` multiplies `xᵏ`.
pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

pub fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| k as f64 * c)
        .collect()
}

fn trim(coeffs: &[f64]) -> &[f64] {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut n = coeffs.len();
    while n > 0 && coeffs[n - 1].abs() <= 1e-300_f64.max(scale * 1e-15) {
        n -= 1;
    }
    &coeffs[..n]
}

/// All distinct real roots of a real polynomial, ascending.
///
/// Roots of the derivative split the line into monotone pieces; each piece
/// holding a sign change is refined by Brent. Even-multiplicity roots are
/// caught when a critical value is itself a root.
pub fn real_poly_roots(coeffs: &[f64]) -> Vec<f64> {
    let c = trim(coeffs);
    match c.len() {
        0 | 1 => return Vec::new(),
        2 => return vec![-c[0] / c[1]],
        _ => {}
    }
    let lead = c[c.len() - 1];
    // Cauchy bound.
    let bound = 1.0 + c[..c.len() - 1].iter().fold(0.0f64, |m, a| m.max((a / lead).abs()));
    let crit = real_poly_roots(&poly_derivative(c));
    let mut knots = vec![-bound];
    knots.extend(crit.iter().copied().filter(|x| x.abs() < bound));
    knots.push(bound);

    let scale = c.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let mut roots: Vec<f64> = Vec::new();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (poly_eval(c, a), poly_eval(c, b));
        if fa.signum() != fb.signum() && fa != 0.0 && fb != 0.0 {
            if let Ok(r) = brent(|x| Ok(poly_eval(c, x)), a, b, 1e-15 * (1.0 + b.abs())) {
                roots.push(r);
            }
        }
    }
    for &x in &crit {
        let mag = c
            .iter()
            .enumerate()
            .fold(0.0f64, |m, (k, a)| m + (a * x.powi(k as i32)).abs());
        if poly_eval(c, x).abs() <= 1e-12 * mag.max(scale * 1e-300) {
            roots.push(x);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    roots
}
