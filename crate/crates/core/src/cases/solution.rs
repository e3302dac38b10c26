//! Integrated profiles and the key-function fields built from them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::Jet2;
use crate::ode::{integrate, Event, IntegratorConfig, Trajectory};
use crate::quartic::{classify_real, invariants, weyl_from_theta, PetrovTag};

use super::closed::discriminant_closed_form;
use super::reduced::reduced_hh_residual;
use super::{AlgebraCase, CaseTag};

/// Initial condition `(u, u')` of a reduced ODE at `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedState {
    pub t0: f64,
    pub u: f64,
    pub du: f64,
}

/// A dense profile `(u, u')` of a reduced second-order ODE.
#[derive(Debug, Clone)]
pub struct ReducedSolution {
    pub case: AlgebraCase,
    pub seed: SeedState,
    pub trajectory: Trajectory,
}

impl ReducedSolution {
    pub fn validity(&self) -> (f64, f64) {
        self.trajectory.interval()
    }

    pub fn state(&self, t: f64) -> Result<(f64, f64)> {
        let y = self.trajectory.eval(t)?;
        Ok((y[0], y[1]))
    }

    /// `u, u', …, u''''` at `t`, the higher ones from the ODE itself.
    pub fn derivatives(&self, t: f64) -> Result<[f64; 5]> {
        let (u, du) = self.state(t)?;
        self.case.profile_derivatives(t, u, du)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.trajectory.write_csv(out, &self.case.state_names())
    }
}

/// Integrate the reduced ODE from `seed` to `t_end`. The run stops where
/// the leading factor of the equation changes sign.
pub fn integrate_case(
    case: &AlgebraCase,
    seed: SeedState,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<ReducedSolution> {
    if case.tag == CaseTag::A33 {
        return Err(Error::Domain(
            "A3,3 is solved in closed form; nothing to integrate".into(),
        ));
    }
    let c = *case;
    let (f0, name) = c.singular_factor(seed.t0, seed.u, seed.du);
    if !(f0.abs() > 1e-12) {
        return Err(Error::SingularState {
            factor: name.into(),
            value: f0,
        });
    }
    let cfg = cfg
        .clone()
        .with_event(Event::new("singular_factor", true, move |t, y| {
            c.singular_factor(t, y[0], y[1]).0
        }));
    let trajectory = integrate(c.system(), &[seed.u, seed.du], (seed.t0, t_end), &cfg)?;
    Ok(ReducedSolution {
        case: *case,
        seed,
        trajectory,
    })
}

/// Evaluator of the key function's degree-4 jet over the `(x, y)` plane.
#[derive(Debug, Clone)]
pub struct KeyFunctionField {
    pub case: AlgebraCase,
    solution: Option<ReducedSolution>,
}

impl KeyFunctionField {
    pub fn solution(&self) -> Option<&ReducedSolution> {
        self.solution.as_ref()
    }

    pub fn jet(&self, x: f64, y: f64) -> Result<Jet2> {
        match &self.solution {
            None => self.case.theta_jet(x, y, &|_| {
                Err(Error::Domain("closed-form case has no profile".into()))
            }),
            Some(s) => {
                let t = self.case.profile_coordinate(x, y)?;
                let (lo, hi) = s.validity();
                if !(t >= lo && t <= hi) {
                    return Err(Error::Extrapolation { at: t, lo, hi });
                }
                self.case.theta_jet(x, y, &|tt| s.derivatives(tt))
            }
        }
    }
}

/// Key-function field of `case`; A3,3 takes no solution (closed form),
/// every other case requires one.
pub fn key_function(case: &AlgebraCase, solution: Option<&ReducedSolution>) -> Result<KeyFunctionField> {
    match (case.tag, solution) {
        (CaseTag::A33, _) => Ok(KeyFunctionField {
            case: *case,
            solution: None,
        }),
        (_, Some(s)) if s.case == *case => Ok(KeyFunctionField {
            case: *case,
            solution: Some(s.clone()),
        }),
        (_, Some(_)) => Err(Error::Schema("solution belongs to a different case".into())),
        (_, None) => Err(Error::Schema(format!("{} needs an integrated profile", case.tag))),
    }
}

/// Checks at one sample of an integrated profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSample {
    pub t: f64,
    pub u: f64,
    pub du: f64,
    /// Two-Killing hyperheavenly equation evaluated on the key-function jet.
    pub hh_residual: f64,
    /// Discriminant from the key-function jet.
    pub d_jet: f64,
    /// Printed closed form, where it is known in full.
    pub d_closed: Option<f64>,
    /// `|d_jet - d_closed| / |d_closed|`.
    pub d_gap: Option<f64>,
    pub tag: PetrovTag,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSummary {
    pub samples: Vec<ProfileSample>,
    pub max_hh_residual: f64,
    /// Worst relative disagreement of the two discriminant routes.
    pub max_d_gap: Option<f64>,
    /// Samples where both routes were available.
    pub compared: usize,
}

/// Rebuild the key-function jet at `n` evenly spaced points of `solution`
/// and compare both discriminant routes.
pub fn profile_summary(solution: &ReducedSolution, n: usize, eps: f64) -> Result<ProfileSummary> {
    let case = &solution.case;
    let mut samples = Vec::with_capacity(n);
    for (t, y) in solution.trajectory.sample(n.max(2))? {
        let d = case.profile_derivatives(t, y[0], y[1])?;
        let (x, yy) = case.sample_point(t);
        let th = case.theta_jet(x, yy, &|_| Ok(d))?;
        let d_jet = invariants(&weyl_from_theta(&th)).d;
        let tag = classify_real(&case.conditioned_invariants(x, yy, &|_| Ok(d))?, eps).tag;
        let d_closed = match discriminant_closed_form(case, t, y[0], y[1]) {
            Ok(cf) if !cf.partial => Some(cf.d),
            _ => None,
        };
        let d_gap = d_closed.map(|c| (d_jet - c).abs() / c.abs().max(f64::MIN_POSITIVE));
        samples.push(ProfileSample {
            t,
            u: y[0],
            du: y[1],
            hh_residual: reduced_hh_residual(&th, case.lambda()),
            d_jet,
            d_closed,
            d_gap,
            tag,
        });
    }
    let max_hh_residual = samples.iter().map(|s| s.hh_residual.abs()).fold(0.0, f64::max);
    let gaps: Vec<f64> = samples.iter().filter_map(|s| s.d_gap).collect();
    Ok(ProfileSummary {
        max_hh_residual,
        max_d_gap: gaps.iter().copied().reduce(f64::max),
        compared: gaps.len(),
        samples,
    })
}

/// First-order `(g, Q)` system of the g-form (A3,4, A3,6, A3,7) in
/// `w = ln v`, integrated from `(g0, Q0)` at `w = 0` to `w_end`.
pub fn integrate_a34_gq(
    case: &AlgebraCase,
    g0: f64,
    q0: f64,
    w_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if !matches!(case.tag, CaseTag::A34 | CaseTag::A36 | CaseTag::A37) {
        return Err(Error::Schema(format!("{} has no (g, Q) system", case.tag)));
    }
    let a2 = case.alpha0().powi(2);
    let den = move |g: f64, q: f64| 1.0 + g + q + a2 * (q + 9.0 * g);
    let cfg = cfg
        .clone()
        .with_event(Event::new("singular_factor", true, move |_, y| den(y[0], y[1])));
    integrate(
        move |_, y| {
            let (g, q) = (y[0], y[1]);
            let d = den(g, q);
            if d.abs() <= 1e-12 {
                return Err(Error::SingularState {
                    factor: "1 + g + Q + alpha0^2 (Q + 9g)".into(),
                    value: d,
                });
            }
            Ok(vec![
                q - 3.0 * g,
                -q * (1.0 + 4.0 * g + 4.0 * q - 12.0 * a2 * (q - 3.0 * g)) / d,
            ])
        },
        &[g0, q0],
        (0.0, w_end),
        &cfg,
    )
}
