//! Adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let dx = h * XGK[k];
        let s = f(c - dx)? + f(c + dx)?;
        kronrod += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    let (kronrod, gauss) = (kronrod * h, gauss * h);
    if !kronrod.is_finite() {
        return Err(Error::Quadrature(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    Ok((kronrod, (kronrod - gauss).abs()))
}

/// Integral of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Subintervals are bisected (largest error first) until the summed
/// Kronrod/Gauss error estimate falls below `tol`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    let mut pieces = vec![(a, b, gk15(&mut f, a, b)?)];
    for _ in 0..2000 {
        let total_err: f64 = pieces.iter().map(|p| p.2 .1).sum();
        if total_err <= tol {
            return Ok(pieces.iter().map(|p| p.2 .0).sum());
        }
        let (k, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .expect("nonempty");
        let (lo, hi, _) = pieces.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        pieces.push((lo, mid, gk15(&mut f, lo, mid)?));
        pieces.push((mid, hi, gk15(&mut f, mid, hi)?));
    }
    let total_err: f64 = pieces.iter().map(|p| p.2 .1).sum();
    Err(Error::Quadrature(format!(
        "tolerance {tol:e} not reached on [{a}, {b}] (estimate {total_err:e})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| Ok(x.powi(5) - 3.0 * x * x), 0.0, 2.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 64.0 / 6.0 - 8.0, epsilon = 1e-13);
    }

    #[test]
    fn peaked_integrand() {
        let v = integrate(|x| Ok(1.0 / (1e-4 + x * x)), -1.0, 1.0, 1e-10).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert_abs_diff_eq!(v, exact, epsilon = 1e-9);
    }

    #[test]
    fn reversed_interval_changes_sign() {
        let a = integrate(|x| Ok(x.exp()), 0.0, 1.0, 1e-12).unwrap();
        let b = integrate(|x| Ok(x.exp()), 1.0, 0.0, 1e-12).unwrap();
        assert_abs_diff_eq!(a, -b, epsilon = 1e-14);
    }
}
