//! Reduced second-order ODEs, key-function jets and the two residuals.

use crate::error::{Error, Result};
use crate::jets::{Jet2, Real};
use crate::quartic::{invariants, weyl_from_theta, QuarticInvariants};

use super::{AlgebraCase, CaseTag, StructureConstants};

/// Denominators smaller than this are treated as a singular state.
const SINGULAR_EPS: f64 = 1e-12;

impl AlgebraCase {
    /// Name of the independent variable of the reduced ODE.
    pub fn profile_variable(&self) -> &'static str {
        match self.tag {
            CaseTag::A32 | CaseTag::A35Half | CaseTag::A33 => "z",
            CaseTag::A34 => "v",
            CaseTag::A35 | CaseTag::A36 | CaseTag::A37 => "w",
        }
    }

    /// Column names of the state `(u, u')`.
    pub fn state_names(&self) -> [&'static str; 2] {
        match self.tag {
            CaseTag::A32 => ["F", "F_z"],
            CaseTag::A34 => ["T", "T_v"],
            CaseTag::A35Half => ["F", "Omega"],
            CaseTag::A33 => ["F", "F_z"],
            CaseTag::A35 | CaseTag::A36 | CaseTag::A37 => ["g", "g_w"],
        }
    }

    /// The leading factor multiplying the highest derivative, with a label.
    pub fn singular_factor(&self, t: f64, u: f64, du: f64) -> (f64, &'static str) {
        let (_, den, name) = self.accel_parts(t, u, du);
        (den, name)
    }

    fn accel_parts<R: Real>(&self, t: R, u: R, du: R) -> (R, R, &'static str) {
        let one = R::cst(1.0);
        match self.tag {
            CaseTag::A32 => (
                du * du * 9.0 + du * 4.0 + u * 3.0,
                du + u * 12.0 - 1.0,
                "F_z + 12F - 1",
            ),
            CaseTag::A34 => (
                t * t * du * 3.0 - t * u * 3.0,
                du + t * t * t,
                "T_v + v^3",
            ),
            CaseTag::A36 | CaseTag::A37 => {
                let a2 = self.alpha0().powi(2);
                let (g, gw) = (u, du);
                let num = -(g * 3.0 + g * g * 48.0 + gw * 4.0 + g * gw * 40.0 + gw * gw * (7.0 - 9.0 * a2));
                let den = one + g * 4.0 + gw + (gw + g * 12.0) * a2;
                (num, den, "1 + 4g + g_w + alpha0^2 (g_w + 12g)")
            }
            CaseTag::A35 => {
                let m = self.m0();
                let (g, gw) = (u, du);
                let num = g * gw * (10.0 * (m - 1.0))
                    + gw * gw * (4.0 * m * m + m + 4.0)
                    + gw * (4.0 * (m - 1.0))
                    + g * g * 12.0
                    + g * 3.0;
                let den = gw * (m * (m - 1.0)) + g * (2.0 * (m * m + 4.0 * m + 1.0))
                    - (m - 1.0) * (m - 1.0);
                (num, den, "m0(m0-1) g_w + 2(m0^2+4m0+1) g - (m0-1)^2")
            }
            CaseTag::A35Half => {
                let (z, om) = (t, du);
                let (l, k) = (self.lambda(), self.zeta0());
                let num = -(z * om * om * 12.0) + om * (2.0 * k) - z * om * l + R::cst(2.0 * l * k / 3.0);
                let den = z * z * om * 6.0 - z * (4.0 * k) + z * z * (3.0 * l);
                (num, den, "6z^2 Omega - 4 zeta0 z + 3 Lambda z^2")
            }
            CaseTag::A33 => (R::cst(0.0), one, "1"),
        }
    }

    /// Second derivative of the profile isolated from the reduced equation.
    pub fn accel<R: Real>(&self, t: R, u: R, du: R) -> Result<R> {
        let (num, den, name) = self.accel_parts(t, u, du);
        let d = den.value();
        if !(d.abs() > SINGULAR_EPS) {
            return Err(Error::SingularState {
                factor: name.to_string(),
                value: d,
            });
        }
        Ok(num / den)
    }

    /// Right-hand side of the first-order system for `(u, u')`.
    pub fn system(&self) -> impl Fn(f64, &[f64]) -> Result<Vec<f64>> + '_ {
        move |t, y| Ok(vec![y[1], self.accel(t, y[0], y[1])?])
    }

    /// Profile derivatives `u, …, u''''` at `t` from the state `(u, u')`.
    pub fn profile_derivatives(&self, t: f64, u: f64, du: f64) -> Result<[f64; 5]> {
        crate::jets::second_order_taylor(|tt, uu, dd| self.accel(tt, uu, dd), t, u, du)
    }

    /// Profile argument at `(x, y)`.
    pub fn profile_coordinate(&self, x: f64, y: f64) -> Result<f64> {
        let x_jet = Jet2::var_x(x, y);
        let y_jet = Jet2::var_y(x, y);
        Ok(self.argument_jet(&x_jet, &y_jet)?.value())
    }

    /// A point of the `(x, y)` plane where the profile argument equals `t`.
    pub fn sample_point(&self, t: f64) -> (f64, f64) {
        match self.tag {
            CaseTag::A32 | CaseTag::A33 => (t, 1.0),
            CaseTag::A34 => (t, t),
            CaseTag::A35 => ((-t).exp(), 1.0),
            CaseTag::A35Half => (1.0, t),
            CaseTag::A36 | CaseTag::A37 => (0.0, t.exp()),
        }
    }

    fn argument_jet(&self, x: &Jet2, y: &Jet2) -> Result<Jet2> {
        let (xv, yv) = (x.value(), y.value());
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Domain(format!("{what} required at ({xv}, {yv})")))
            }
        };
        match self.tag {
            CaseTag::A32 => {
                need(yv > 0.0, "y > 0")?;
                Ok(y.ln()? + x.try_div(y, "y")?)
            }
            CaseTag::A33 => {
                need(yv != 0.0, "y ≠ 0")?;
                x.try_div(y, "y")
            }
            CaseTag::A34 => {
                need(xv * yv > 0.0, "xy > 0")?;
                (*x * *y).sqrt()
            }
            CaseTag::A35 => {
                need(xv > 0.0 && yv > 0.0, "x > 0 and y > 0")?;
                Ok(y.ln()? * self.m0() - x.ln()?)
            }
            CaseTag::A35Half => {
                // ln y only enters through the ζ0 term.
                need(yv > 0.0 || self.zeta0() == 0.0, "y > 0")?;
                Ok(*y * *x * *x)
            }
            CaseTag::A36 | CaseTag::A37 => {
                need(yv != 0.0, "y ≠ 0")?;
                let rho = *x * *x + *y * *y;
                Ok(rho.ln()? * 0.5 + x.try_div(y, "y")?.atan() * self.alpha0())
            }
        }
    }

    /// Degree-4 jet of the key function at `(x, y)`, given the profile
    /// derivatives as a function of the profile argument.
    pub fn theta_jet(
        &self,
        x: f64,
        y: f64,
        profile: &dyn Fn(f64) -> Result<[f64; 5]>,
    ) -> Result<Jet2> {
        self.theta_jet_sheared(x, y, 0.0, profile)
    }

    /// Shear that makes the profile argument depend, to first order, on the
    /// second local variable only. Zero when that is impossible or the case
    /// has no profile.
    pub fn adapted_shear(&self, x: f64, y: f64) -> Result<f64> {
        if self.tag == CaseTag::A33 {
            return Ok(0.0);
        }
        let tau = self.argument_jet(&Jet2::var_x(x, y), &Jet2::var_y(x, y))?;
        let (tx, ty) = (tau.coeff(1, 0), tau.coeff(0, 1));
        Ok(if ty != 0.0 && (tx / ty).is_finite() { -tx / ty } else { 0.0 })
    }

    /// Key-function jet in the unimodular frame `x = x0 + a`,
    /// `y = y0 + b + shear·a`; `coeff(i, j)` refers to `aⁱbʲ`. The quartic
    /// invariants and the real-root count are those of the plain jet.
    ///
    /// With [`AlgebraCase::adapted_shear`] the fourth-derivative term of the
    /// profile, which the plain frame spreads over all five coefficients as
    /// a perfect fourth power, lands in the `b⁴` coefficient alone, so the
    /// invariants no longer cancel it numerically.
    pub fn theta_jet_adapted(
        &self,
        x: f64,
        y: f64,
        profile: &dyn Fn(f64) -> Result<[f64; 5]>,
    ) -> Result<Jet2> {
        self.theta_jet_sheared(x, y, self.adapted_shear(x, y)?, profile)
    }

    /// Quartic invariants from whichever of the plain and adapted frames
    /// puts `D` further outside its rounding band. Both frames carry the same
    /// exact invariants; they differ only in how much cancellation the
    /// floating-point evaluation suffers.
    pub fn conditioned_invariants(
        &self,
        x: f64,
        y: f64,
        profile: &dyn Fn(f64) -> Result<[f64; 5]>,
    ) -> Result<QuarticInvariants> {
        let plain = invariants(&weyl_from_theta(&self.theta_jet(x, y, profile)?));
        let adapted = invariants(&weyl_from_theta(&self.theta_jet_adapted(x, y, profile)?));
        let margin = |i: &QuarticInvariants| {
            let m = i.d.abs() / i.d_scale;
            if m.is_nan() { 0.0 } else { m }
        };
        Ok(if margin(&adapted) > margin(&plain) { adapted } else { plain })
    }

    pub fn theta_jet_sheared(
        &self,
        x: f64,
        y: f64,
        shear: f64,
        profile: &dyn Fn(f64) -> Result<[f64; 5]>,
    ) -> Result<Jet2> {
        let xj = Jet2::var_x(x, y);
        let yj = Jet2::var_y(x, y) + (xj - x) * shear;
        let l3 = self.lambda() / 3.0;
        if self.tag == CaseTag::A33 {
            let f0 = self.params.f0.unwrap_or(1.0);
            let g0 = self.params.g0.unwrap_or(0.0);
            let s = xj + yj * g0;
            let inner = s * s * f0 + yj * yj * (self.lambda() / (48.0 * f0));
            return Ok(inner * inner);
        }
        let tau = self.argument_jet(&xj, &yj)?;
        let prof = tau.lift(&profile(tau.value())?);
        let theta = match self.tag {
            CaseTag::A32 => yj.powi(4) * prof * l3,
            CaseTag::A34 => prof * (4.0 * l3),
            CaseTag::A35 => xj * xj * yj * yj * prof * l3,
            CaseTag::A35Half if self.zeta0() == 0.0 => yj * prof,
            CaseTag::A35Half => yj * prof + yj * yj.ln()? * self.zeta0(),
            CaseTag::A36 | CaseTag::A37 => {
                let rho = xj * xj + yj * yj;
                rho * rho * prof * (-l3)
            }
            CaseTag::A33 => unreachable!(),
        };
        if theta.is_finite() {
            Ok(theta)
        } else {
            Err(Error::Domain(format!("non-finite key function at ({x}, {y})")))
        }
    }
}

/// Residual of the two-Killing hyperheavenly equation at the jet's base.
pub fn reduced_hh_residual(theta: &Jet2, lambda: f64) -> f64 {
    let (x, y) = theta.base();
    let t = |i, j| theta.coeff(i, j);
    let (txx, txy, tyy) = (t(2, 0), t(1, 1), t(0, 2));
    txx * tyy - txy * txy
        + lambda
            * (x * t(1, 0) + y * t(0, 1)
                - t(0, 0)
                - (x * x * txx + y * y * tyy + 2.0 * x * y * txy) / 3.0)
}

/// Left side minus right side of the master equation of the third
/// Killing vector.
pub fn master_residual(c: &StructureConstants, theta: &Jet2, zeta1: f64, zeta2: f64) -> f64 {
    let (x, y) = theta.base();
    (c.a0 * y - c.m0 * x) * theta.coeff(1, 0)
        + (c.n0 * x - c.b0 * y) * theta.coeff(0, 1)
        + 2.0 * (c.b0 + c.m0) * theta.coeff(0, 0)
        - zeta1 * x
        - zeta2 * y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::ModelParams;
    use crate::jets::Seed;
    use crate::quartic::{invariants, weyl_from_theta};
    use approx::assert_relative_eq;

    fn case(tag: CaseTag, p: ModelParams) -> AlgebraCase {
        AlgebraCase::new(tag, p).unwrap()
    }

    #[test]
    fn a32_accelerations() {
        let c = case(CaseTag::A32, ModelParams::new(1.0));
        assert_eq!(c.accel(0.0, 0.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(c.accel(0.0, 1.0, 1.0).unwrap(), 4.0 / 3.0, epsilon = 1e-15);
        match c.accel(0.0, 0.0, 1.0) {
            Err(Error::SingularState { factor, .. }) => assert_eq!(factor, "F_z + 12F - 1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn a33_closed_form_is_a_degenerate_solution() {
        let c = case(CaseTag::A33, ModelParams::new(48.0).with_f0_g0(1.0, 0.0));
        let th = c.theta_jet(1.0, 1.0, &|_| unreachable!()).unwrap();
        assert_relative_eq!(th.value(), 4.0, epsilon = 1e-14);
        assert!(reduced_hh_residual(&th, 48.0).abs() < 1e-10);
        let inv = invariants(&weyl_from_theta(&th));
        assert!(inv.d.abs() <= 1e-12 * inv.d_scale.max(1e-300));
    }

    #[test]
    fn residual_controls() {
        let zero = Jet2::seed(0.3, 0.4, Seed::Constant(0.0));
        assert_eq!(reduced_hh_residual(&zero, 1.0), 0.0);
        let x = Jet2::var_x(0.3, 0.4);
        let y = Jet2::var_y(0.3, 0.4);
        assert!(reduced_hh_residual(&(x * x * x * y), 1.0).abs() > 1e-3);
        let c = StructureConstants::for_tag(CaseTag::A32, &ModelParams::new(1.0)).unwrap();
        assert_eq!(master_residual(&c, &zero, 0.0, 0.0), 0.0);
    }

    /// Arbitrary smooth profile used to check the master equation for
    /// every key-function form.
    fn any_profile(t: f64) -> Result<[f64; 5]> {
        let s = t.sin();
        let c = t.cos();
        Ok([2.0 + s, c, -s, -c, s])
    }

    #[test]
    fn key_forms_solve_their_master_equation() {
        let p = ModelParams::new(0.7).with_m0(0.3).with_alpha0(0.4).with_zeta0(1.3);
        for (tag, pts) in [
            (CaseTag::A32, vec![(0.3, 1.4), (-0.8, 0.6)]),
            (CaseTag::A34, vec![(0.5, 1.2), (-0.4, -2.0)]),
            (CaseTag::A35, vec![(0.5, 1.2), (2.0, 0.3)]),
            (CaseTag::A35Half, vec![(0.5, 1.2), (-2.0, 0.3)]),
            (CaseTag::A36, vec![(0.5, 1.2), (2.0, -0.3)]),
            (CaseTag::A37, vec![(0.5, 1.2), (2.0, -0.3)]),
        ] {
            let c = case(tag, p);
            let (z1, z2) = c.master_constants();
            for (x, y) in pts {
                let th = c.theta_jet(x, y, &any_profile).unwrap();
                let r = master_residual(&c.constants, &th, z1, z2);
                assert!(r.abs() < 1e-12 * (1.0 + th.value().abs()), "{tag}: {r}");
            }
        }
    }

    #[test]
    fn a32_jet_matches_chain_rule() {
        let c = case(CaseTag::A32, ModelParams::new(1.0));
        let (x, y) = (0.2f64, 1.3f64);
        let z = y.ln() + x / y;
        let d = c.profile_derivatives(z, 0.2, 0.3).unwrap();
        let th = c.theta_jet(x, y, &|_| Ok(d)).unwrap();
        let l3 = 1.0 / 3.0;
        assert_relative_eq!(th.coeff(2, 0), l3 * y * y * d[2], max_relative = 1e-12);
        assert_relative_eq!(
            th.coeff(1, 1),
            l3 * (3.0 * y * y * d[1] + y * (y - x) * d[2]),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            th.coeff(0, 2),
            l3 * (12.0 * y * y * d[0] + y * (7.0 * y - 6.0 * x) * d[1] + (y - x).powi(2) * d[2]),
            max_relative = 1e-12
        );
    }

    #[test]
    fn reduced_equations_solve_the_hh_equation() {
        // Seeded jets satisfy the two-Killing equation exactly at the base.
        let p = ModelParams::new(-0.8).with_m0(-0.3).with_alpha0(0.6).with_zeta0(0.4);
        for (tag, t, u, du) in [
            (CaseTag::A32, 0.1, 0.2, 0.3),
            (CaseTag::A34, 1.1, 0.3, 0.5),
            (CaseTag::A35, 0.2, 0.3, -0.1),
            (CaseTag::A35Half, 0.8, 0.0, 0.3),
            (CaseTag::A36, 0.2, 0.3, 0.1),
            (CaseTag::A37, 0.2, 0.3, 0.1),
        ] {
            let c = case(tag, p);
            let d = c.profile_derivatives(t, u, du).unwrap();
            let (x, y) = c.sample_point(t);
            assert_relative_eq!(c.profile_coordinate(x, y).unwrap(), t, epsilon = 1e-14);
            let th = c.theta_jet(x, y, &|_| Ok(d)).unwrap();
            let r = reduced_hh_residual(&th, c.lambda());
            assert!(r.abs() < 1e-12, "{tag}: residual {r}");
        }
    }
}
