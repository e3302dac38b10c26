//! Printed closed-form discriminants as functions of the reduced state.

use serde::Serialize;

use crate::error::{Error, Result};

use super::{AlgebraCase, CaseTag};

/// Closed-form discriminant at a reduced state.
///
/// When only a prefactor of the discriminant is known in closed form,
/// `partial` is set and `d` holds that prefactor alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedForm {
    pub d: f64,
    pub partial: bool,
}

fn pole(what: &str, den: f64, at: f64) -> Result<()> {
    if den == 0.0 || !den.is_finite() {
        Err(Error::Pole {
            what: what.to_string(),
            at,
        })
    } else {
        Ok(())
    }
}

/// Discriminant of the A3,2 reduction in terms of `F` and `w = F_z`.
pub fn a32_discriminant(lambda: f64, f: f64, w: f64) -> Result<f64> {
    let den = 12.0 * f + w - 1.0;
    pole("D (12F + w - 1)", den, w)?;
    let (f2, f3, f4, f5, f6) = (f * f, f.powi(3), f.powi(4), f.powi(5), f.powi(6));
    let (w2, w3, w4, w5, w6, w7, w8) = (
        w * w,
        w.powi(3),
        w.powi(4),
        w.powi(5),
        w.powi(6),
        w.powi(7),
        w.powi(8),
    );
    let a = 18144.0 * f2 * w2 + 10368.0 * f3 * w + 1998.0 * f2 * w + 1512.0 * f3 - 135.0 * f2
        + 1944.0 * f * w4
        + 7668.0 * f * w3
        - 225.0 * f * w2
        - 261.0 * f * w
        - 810.0 * w5
        - 534.0 * w4
        - 727.0 * w3
        - 126.0 * w2;
    let b = -979776.0 * f2 * w5 - 1119744.0 * f3 * w4 + 23112.0 * f2 * w4 + 2066688.0 * f3 * w3
        - 460440.0 * f2 * w3
        + 6531840.0 * f4 * w2
        - 1186272.0 * f3 * w2
        + 45333.0 * f2 * w2
        + 7464960.0 * f5 * w
        - 1425600.0 * f4 * w
        + 84348.0 * f3 * w
        - 3294.0 * f2 * w
        + 2985984.0 * f6
        - 622080.0 * f5
        + 46980.0 * f4
        - 2268.0 * f3
        + 81.0 * f2
        - 279936.0 * f * w6
        - 84132.0 * f * w5
        - 72672.0 * f * w4
        + 14898.0 * f * w3
        - 144.0 * f * w2
        + 162.0 * f * w
        + 26244.0 * w8
        + 26568.0 * w7
        + 35656.0 * w6
        + 17480.0 * w5
        + 7333.0 * w4
        + 882.0 * w3
        + 81.0 * w2;
    let l6 = lambda.powi(6);
    Ok(64.0 * l6 * (3.0 * f + w).powi(2) / den.powi(16) * a * a * b)
}

/// Discriminant shared by the A3,4 and A3,6 reductions in the `(g, Q)`
/// variables.
pub fn a34_discriminant(lambda: f64, g: f64, q: f64) -> Result<f64> {
    let den = g + q + 1.0;
    pole("D (g + Q + 1)", den, g)?;
    let f1 = g * (g + 1.0) + 2.0 * (g - 1.0) * q + q * q;
    let f2 = 2.0 * g * (g + 1.0).powi(2)
        + (6.0 * g * g + 2.0 * g - 1.0) * q
        + 2.0 * (3.0 * g - 1.0) * q * q
        + 2.0 * q.powi(3);
    let f3 = 2.0 * g * (g + 1.0).powi(3)
        + (g + 1.0) * (8.0 * g * g + 10.0 * g - 1.0) * q
        + 3.0 * (4.0 * g * g + 6.0 * g - 5.0) * q * q
        + 2.0 * (4.0 * g + 3.0) * q.powi(3)
        + 2.0 * q.powi(4);
    Ok(576.0 * lambda.powi(6) * q * q / den.powi(16) * (f1 * f2 * f3).powi(2))
}

/// The same discriminant written directly in `T(v)` and `T_v`.
pub fn a34_discriminant_t(lambda: f64, v: f64, t: f64, tv: f64) -> Result<f64> {
    let den = tv + v.powi(3);
    pole("D (T_v + v^3)", den, v)?;
    pole("D (v)", v, v)?;
    let (v2, v3, v4, v5, v6, v8, v9) = (
        v * v,
        v.powi(3),
        v.powi(4),
        v.powi(5),
        v.powi(6),
        v.powi(8),
        v.powi(9),
    );
    let a = t - v * tv;
    let b = -2.0 * v3 * tv + tv * tv + 3.0 * v2 * t;
    let c = -v6 * tv - 2.0 * v3 * tv * tv + 6.0 * v2 * t * tv + 2.0 * tv.powi(3) + 3.0 * v5 * t;
    let e = v9 * tv + 15.0 * v6 * tv * tv - 39.0 * v5 * t * tv - 6.0 * v3 * tv.powi(3)
        - 2.0 * tv.powi(4)
        - 3.0 * v8 * t
        + 18.0 * v4 * t * t;
    Ok(576.0 * lambda.powi(6) / (v.powi(14) * den.powi(16)) * (a * b * c * e).powi(2))
}

/// Closed-form discriminant of `case` at the reduced state `(t, u, u')`.
///
/// A3,5, A3,5^{-1/2} and A3,7 only have a known prefactor; A3,3 is
/// degenerate and returns zero.
pub fn discriminant_closed_form(case: &AlgebraCase, t: f64, u: f64, du: f64) -> Result<ClosedForm> {
    let l = case.lambda();
    let full = |d| Ok(ClosedForm { d, partial: false });
    let part = |d| Ok(ClosedForm { d, partial: true });
    match case.tag {
        CaseTag::A32 => full(a32_discriminant(l, u, du)?),
        CaseTag::A33 => full(0.0),
        CaseTag::A34 => full(a34_discriminant_t(l, t, u, du)?),
        CaseTag::A36 => full(a34_discriminant(l, u, du + 3.0 * u)?),
        CaseTag::A35 => {
            let m = case.m0();
            let (g, q) = (u, du - 3.0 * u / (1.0 - m));
            let den = g * (m + 2.0) * (2.0 * m + 1.0) + (m - 1.0) * (m * (q - 1.0) + 1.0);
            pole("D prefactor", den, t)?;
            part(64.0 * l.powi(6) * m * m / (27.0 * (m - 1.0).powi(12) * den.powi(18)))
        }
        CaseTag::A37 => {
            let a2 = case.alpha0().powi(2);
            let (g, q) = (u, du + 3.0 * u);
            let den = a2 * (9.0 * g + q) + g + q + 1.0;
            pole("D prefactor", den, t)?;
            part(64.0 * l.powi(6) / (27.0 * den.powi(18)))
        }
        CaseTag::A35Half => {
            let k = case.zeta0();
            let (z, om) = (t, du);
            let den = -4.0 * k + 3.0 * l * z + 6.0 * z * om;
            pole("D prefactor", den, t)?;
            part(2359296.0 * l * l * (k + 3.0 * z * om).powi(2) / den.powi(16))
        }
    }
}
