//! Abel equations of the second kind, the maps from profile states to Abel
//! variables, and the quadrature form of the coordinate relations.

use crate::error::{Error, Result};
use crate::ode::{integrate, Event, EventRecord, IntegratorConfig, Status, Trajectory};
use crate::quadrature;

use super::solution::ReducedSolution;
use super::{AlgebraCase, CaseTag};

const CBRT4: f64 = 1.587_401_051_968_199_5; // 2^{2/3}

fn positive_r(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("Abel variable r = {r} must be positive")))
    }
}

/// Coefficients `(f1, f0)` of `ΣΣ' = f1 Σ + f0` at `r` (the independent
/// variable is `w` for A3,2 and A3,5^{-1/2}).
pub fn abel_coefficients(case: &AlgebraCase, r: f64) -> Result<(f64, f64)> {
    match case.tag {
        CaseTag::A32 => {
            let w = r;
            Ok((10.0 * w + 4.0 / 3.0, -w * (12.0 * w + 1.0) * (3.0 * w + 1.0) / 3.0))
        }
        CaseTag::A34 | CaseTag::A36 | CaseTag::A37 => {
            positive_r(r)?;
            let a2 = case.alpha0().powi(2);
            let base = 0.75 * r + CBRT4 * r.powf(-1.0 / 3.0);
            let twist = 1.0 + a2 / 3.0 * 2f64.powf(8.0 / 3.0) * r.powf(-4.0 / 3.0);
            Ok((1.0, base * twist))
        }
        CaseTag::A35 => {
            positive_r(r)?;
            let m = case.m0();
            let k = (m - 1.0).cbrt();
            let psi = 0.75 * r
                - 2f64.powf(-2.0 / 3.0) / 3.0 * (m + 1.0).powi(2) * k.powi(16) * r.powf(-5.0 / 3.0)
                - CBRT4 * m * k.powi(5) * r.powf(-1.0 / 3.0);
            Ok((1.0, psi))
        }
        CaseTag::A35Half => {
            let (w, l, z) = (r, case.lambda(), case.zeta0());
            let s = 12.0 * w + l;
            if !(s > 0.0) {
                return Err(Error::Domain(format!("12w + Λ = {s} must be positive")));
            }
            let f1 = 2.0 * z * w * (24.0 * w * w - 5.0 * l * l / 3.0) / s.powf(4.5);
            let f0 = 12.0 * z * z * w.powi(3) * (w + l / 3.0) * (w - l / 3.0) * (6.0 * w + l)
                / s.powi(8);
            Ok((f1, f0))
        }
        CaseTag::A33 => Err(Error::Domain("A3,3 has no Abel form".into())),
    }
}

/// `Σ'` at `(r, Σ)`.
pub fn abel_rhs(case: &AlgebraCase, r: f64, sigma: f64) -> Result<f64> {
    let (f1, f0) = abel_coefficients(case, r)?;
    if sigma == 0.0 {
        return Err(Error::AbelSingularity { at: r });
    }
    Ok(f1 + f0 / sigma)
}

/// Abel variables `(r, Σ)` of the profile state `(t, u, u')`.
pub fn abel_state_from_profile(case: &AlgebraCase, t: f64, u: f64, du: f64) -> Result<(f64, f64)> {
    let q_positive = |q: f64| {
        if q > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!("Q = {q} must be positive for the Abel map")))
        }
    };
    match case.tag {
        CaseTag::A32 => Ok((du, u + 3.0 * du * du + 4.0 * du / 3.0)),
        CaseTag::A34 | CaseTag::A36 | CaseTag::A37 => {
            let (g, q) = match case.tag {
                CaseTag::A34 => {
                    let g = u / t.powi(4);
                    (g, du / t.powi(3) - g)
                }
                _ => (u, du + 3.0 * u),
            };
            q_positive(q)?;
            let a2 = case.alpha0().powi(2);
            let r = 0.5 * q.powf(-0.75);
            Ok((r, -2.0 * r * ((1.0 + 9.0 * a2) * g + 0.25 + (1.0 - 3.0 * a2) * q)))
        }
        CaseTag::A35 => {
            let m = case.m0();
            let s = du - 3.0 * u / (1.0 - m);
            q_positive(s)?;
            let r = (m - 1.0).powi(2) / (2.0 * s.powf(0.75));
            let a = (m + 2.0) * (2.0 * m + 1.0);
            let sigma =
                2.0 * r * (a * u + (1.0 - m.powi(3)) * s - 0.25 * (m - 1.0).powi(2)) / (m - 1.0).powi(2);
            Ok((r, sigma))
        }
        CaseTag::A35Half => {
            let (w, l, k) = (du, case.lambda(), case.zeta0());
            let s = 12.0 * w + l;
            if !(s > 0.0 && w != 0.0) {
                return Err(Error::Domain(format!("Ω = {w} outside 12Ω + Λ > 0, Ω ≠ 0")));
            }
            let shift = 2.0 * k * (w + l / 3.0) / (12.0 * w * w + l * w);
            Ok((w, (t - shift) * w.powi(3) / s.powf(2.5)))
        }
        CaseTag::A33 => Err(Error::Domain("A3,3 has no Abel form".into())),
    }
}

/// An integrated Abel equation.
#[derive(Debug, Clone)]
pub struct AbelSolution {
    pub case: AlgebraCase,
    pub trajectory: Trajectory,
}

impl AbelSolution {
    pub fn sigma(&self, r: f64) -> Result<f64> {
        Ok(self.trajectory.eval(r)?[0])
    }

    pub fn interval(&self) -> (f64, f64) {
        self.trajectory.interval()
    }
}

/// Integrate the Abel equation from `(r0, Σ0)` to `r1`; a zero of `Σ`
/// ends the run.
///
/// `Σ` typically reaches zero with infinite slope, where the direct form
/// stalls. The crossing is then located on the regular system
/// `dr/ds = Σ, dΣ/ds = f1 Σ + f0` started from the last accepted point.
pub fn integrate_abel(
    case: &AlgebraCase,
    r0: f64,
    sigma0: f64,
    r1: f64,
    cfg: &IntegratorConfig,
) -> Result<AbelSolution> {
    let zero_cfg = cfg.clone().with_event(Event::new("sigma_zero", true, |_, y| y[0]));
    let c = *case;
    let mut trajectory =
        integrate(move |r, y| Ok(vec![abel_rhs(&c, r, y[0])?]), &[sigma0], (r0, r1), &zero_cfg)?;
    if let Status::Singular { .. } = trajectory.status {
        let (rl, sl) = (trajectory.t_end(), trajectory.y.last().expect("nonempty")[0]);
        if let Some(at) = regular_crossing(case, rl, sl, r1, cfg) {
            trajectory.events.push(EventRecord {
                name: "sigma_zero".into(),
                t: at,
                terminal: true,
            });
            trajectory.status = Status::TerminalEvent("sigma_zero".into());
        }
    }
    Ok(AbelSolution {
        case: *case,
        trajectory,
    })
}

fn regular_crossing(case: &AlgebraCase, r: f64, sigma: f64, r1: f64, cfg: &IntegratorConfig) -> Option<f64> {
    // Orient s so that r moves towards r1.
    let orient = (r1 - r).signum() * sigma.signum();
    let c = *case;
    let reg = IntegratorConfig {
        events: Vec::new(),
        ..cfg.clone()
    }
    .with_event(Event::new("sigma_zero", true, |_, y| y[1]))
    .with_event(Event::new("end", true, move |_, y| y[0] - r1));
    let span = 10.0 * (r1 - r).abs().max(1.0) / sigma.abs().max(1e-300);
    let t = integrate(
        move |_, y| {
            let (f1, f0) = abel_coefficients(&c, y[0])?;
            Ok(vec![orient * y[1], orient * (f1 * y[1] + f0)])
        },
        &[r, sigma],
        (0.0, span.min(1e6)),
        &reg,
    )
    .ok()?;
    let e = t.events.iter().find(|e| e.name == "sigma_zero")?;
    Some(t.eval(e.t).ok()?[0])
}

/// Maximum relative deviation between the profile mapped to Abel variables
/// and an independent Abel integration started from the first mapped point.
///
/// Only the leading stretch on which the Abel variable is strictly monotone
/// is compared.
pub fn abel_cross_check(solution: &ReducedSolution, samples: usize) -> Result<f64> {
    let case = &solution.case;
    let mut pts = Vec::with_capacity(samples);
    for (t, y) in solution.trajectory.sample(samples.max(2))? {
        pts.push(abel_state_from_profile(case, t, y[0], y[1])?);
    }
    let dir = (pts[1].0 - pts[0].0).signum();
    let end = pts
        .windows(2)
        .position(|w| (w[1].0 - w[0].0).signum() != dir || w[1].0 == w[0].0)
        .map_or(pts.len(), |k| k + 1);
    if end < 2 {
        return Err(Error::Consistency("Abel variable is not monotone along the profile".into()));
    }
    let pts = &pts[..end];
    let (r0, s0) = pts[0];
    let abel = integrate_abel(case, r0, s0, pts[end - 1].0, &IntegratorConfig::with_tol(1e-12, 1e-14))?;
    let mut worst = 0.0f64;
    for &(r, s) in &pts[1..] {
        let got = abel.sigma(r)?;
        worst = worst.max((got - s).abs() / (1.0 + s.abs()));
    }
    Ok(worst)
}

/// Inputs of a coordinate relation: quadrature from `from` to `to` along
/// the Abel solution. `y` is needed only by A3,2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelationInput {
    pub from: f64,
    pub to: f64,
    pub y: Option<f64>,
}

/// Left side of the case's coordinate relation with the integration
/// constant fixed by starting the quadrature at `input.from`:
///
/// * A3,2: `x(w, y)`
/// * A3,4: `xy`; A3,6: `x² + y²`; A3,7: `(x² + y²) e^{2α0 atan(x/y)}`
/// * A3,5: `y^{m0}/x`
/// * A3,5^{-1/2}: `z = yx²` (algebraic, no quadrature)
pub fn coordinate_relation(abel: &AbelSolution, input: RelationInput) -> Result<f64> {
    let case = &abel.case;
    let (a, b) = (input.from, input.to);
    let tol = 1e-10;
    let sigma = |r: f64| -> Result<f64> {
        let s = abel.sigma(r)?;
        if s == 0.0 {
            Err(Error::AbelSingularity { at: r })
        } else {
            Ok(s)
        }
    };
    match case.tag {
        CaseTag::A32 => {
            let y = input
                .y
                .ok_or_else(|| Error::Schema("A3,2 relation needs y".into()))?;
            if !(y > 0.0) {
                return Err(Error::Domain(format!("y = {y} must be positive")));
            }
            let i = quadrature::integrate(
                |w| Ok((12.0 * w + 1.0) * (3.0 * w + 1.0) / (3.0 * sigma(w)?)),
                a,
                b,
                tol,
            )?;
            Ok(-y * y.ln() + y * (4.0 * (b - a) - i))
        }
        CaseTag::A34 | CaseTag::A36 | CaseTag::A37 => {
            positive_r(a)?;
            positive_r(b)?;
            let a2 = case.alpha0().powi(2);
            let k = 2f64.powf(8.0 / 3.0) * a2 / 3.0;
            let i = quadrature::integrate(
                |r| Ok((1.0 + k * r.powf(-4.0 / 3.0)) / sigma(r)?),
                a,
                b,
                tol,
            )?;
            Ok(b.powf(2.0 / 3.0) * (-i).exp())
        }
        CaseTag::A35 => {
            positive_r(a)?;
            positive_r(b)?;
            let m = case.m0();
            let k8 = (m - 1.0).cbrt().powi(8);
            let am = (m + 2.0) * (2.0 * m + 1.0);
            let c2 = (m - 1.0).powi(2);
            let integrand = |r: f64| -> Result<f64> {
                let s = sigma(r)?;
                let ds = abel_rhs(case, r, s)?;
                let q = k8 / (2f64.powf(4.0 / 3.0) * r.powf(4.0 / 3.0));
                let dq = -4.0 / 3.0 * q / r;
                let g = (c2 * s / (2.0 * r) - (1.0 - m.powi(3)) * q + 0.25 * c2) / am;
                let dg = (c2 * (ds / (2.0 * r) - s / (2.0 * r * r)) - (1.0 - m.powi(3)) * dq) / am;
                Ok(dg / (q + 3.0 * g / (1.0 - m)))
            };
            Ok(quadrature::integrate(integrand, a, b, tol)?.exp())
        }
        CaseTag::A35Half => {
            let (w, l, k) = (b, case.lambda(), case.zeta0());
            let s = sigma(w)?;
            Ok(s * (12.0 * w + l).powf(2.5) / w.powi(3) + 2.0 * k * (w + l / 3.0) / (12.0 * w * w + l * w))
        }
        CaseTag::A33 => Err(Error::Domain("A3,3 has no coordinate relation".into())),
    }
}
