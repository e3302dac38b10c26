//! Grid search for algebraically general initial conditions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quartic::{invariants, weyl_from_theta};
use crate::roots::brent;

use super::closed::{discriminant_closed_form, ClosedForm};
use super::solution::SeedState;
use super::{AlgebraCase, CaseTag};

/// Required jet-route margin `|D| / scale` of a certified seed.
pub const SEED_MARGIN: f64 = 1e-6;

/// Rectangle in the case's seed coordinates:
///
/// * A3,2: `(F, F_z)` at `z = 0`
/// * A3,4, A3,5, A3,6, A3,7: `(g, Q)` at `v = 1` or `w = 0`
/// * A3,5^{-1/2}: `(z, Ω)` with `F = 0`
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchBox {
    pub a: (f64, f64),
    pub b: (f64, f64),
}

impl SearchBox {
    pub fn new(a: (f64, f64), b: (f64, f64)) -> Self {
        Self { a, b }
    }

    pub fn default_for(tag: CaseTag) -> Self {
        match tag {
            CaseTag::A32 | CaseTag::A33 => Self::new((-1.0, 1.0), (-1.0, 1.0)),
            CaseTag::A35Half => Self::new((0.2, 2.0), (-1.0, 1.0)),
            _ => Self::new((-1.0, 1.0), (0.05, 1.0)),
        }
    }

    /// Names of the two seed coordinates.
    pub fn axes(tag: CaseTag) -> [&'static str; 2] {
        match tag {
            CaseTag::A32 | CaseTag::A33 => ["F", "F_z"],
            CaseTag::A35Half => ["z", "Omega"],
            _ => ["g", "Q"],
        }
    }
}

/// A seed together with the evidence that it is algebraically general.
#[derive(Debug, Clone, Serialize)]
pub struct SeedCertificate {
    pub seed: SeedState,
    /// Seed coordinates in the search box.
    pub coords: [f64; 2],
    /// Jet-route discriminant at the sample point of the profile argument.
    pub d: f64,
    /// `|D|` divided by its magnitude scale.
    pub relative_margin: f64,
    pub closed_form: Option<ClosedForm>,
    pub singular_factor: f64,
    /// Distance to the nearest zero of the leading factor along each
    /// seed axis (infinite if none within one box width).
    pub singular_distance: [f64; 2],
    pub samples: usize,
}

/// Profile state of the seed coordinates `(a, b)`.
pub fn seed_state(case: &AlgebraCase, a: f64, b: f64) -> Result<SeedState> {
    Ok(match case.tag {
        CaseTag::A32 => SeedState { t0: 0.0, u: a, du: b },
        CaseTag::A34 => SeedState { t0: 1.0, u: a, du: b + a },
        CaseTag::A35 => SeedState {
            t0: 0.0,
            u: a,
            du: b + 3.0 * a / (1.0 - case.m0()),
        },
        CaseTag::A36 | CaseTag::A37 => SeedState { t0: 0.0, u: a, du: b - 3.0 * a },
        CaseTag::A35Half => SeedState { t0: a, u: 0.0, du: b },
        CaseTag::A33 => return Err(Error::Domain("A3,3 has no seed: it is degenerate".into())),
    })
}

/// Jet-route discriminant and its relative margin at a seed.
pub fn seed_discriminant(case: &AlgebraCase, s: &SeedState) -> Result<(f64, f64)> {
    let d = case.profile_derivatives(s.t0, s.u, s.du)?;
    let (x, y) = case.sample_point(s.t0);
    let th = case.theta_jet(x, y, &|_| Ok(d))?;
    let inv = invariants(&weyl_from_theta(&th));
    if !inv.d.is_finite() {
        return Err(Error::Domain("non-finite discriminant".into()));
    }
    let scale = inv.d_scale.max(f64::MIN_POSITIVE);
    Ok((inv.d, inv.d.abs() / scale))
}

fn axis_distance(case: &AlgebraCase, a: f64, b: f64, axis: usize, reach: f64) -> f64 {
    let factor = |t: f64| -> Result<f64> {
        let (pa, pb) = if axis == 0 { (a + t, b) } else { (a, b + t) };
        let s = seed_state(case, pa, pb)?;
        Ok(case.singular_factor(s.t0, s.u, s.du).0)
    };
    let f0 = match factor(0.0) {
        Ok(v) => v,
        Err(_) => return 0.0,
    };
    let n = 200;
    let mut best = f64::INFINITY;
    for dir in [1.0, -1.0] {
        let mut prev = (0.0, f0);
        for k in 1..=n {
            let t = dir * reach * k as f64 / n as f64;
            let Ok(v) = factor(t) else { break };
            if v.signum() != prev.1.signum() || v == 0.0 {
                if let Ok(r) = brent(factor, prev.0, t, 1e-12) {
                    best = best.min(r.abs());
                }
                break;
            }
            prev = (t, v);
        }
    }
    best
}

fn evaluate(case: &AlgebraCase, a: f64, b: f64, reach: [f64; 2]) -> Option<(SeedCertificate, f64)> {
    let s = seed_state(case, a, b).ok()?;
    let (factor, _) = case.singular_factor(s.t0, s.u, s.du);
    if !(factor.abs() > 1e-8) {
        return None;
    }
    let (d, rel) = seed_discriminant(case, &s).ok()?;
    let closed = discriminant_closed_form(case, s.t0, s.u, s.du).ok();
    let dist = [
        axis_distance(case, a, b, 0, reach[0]),
        axis_distance(case, a, b, 1, reach[1]),
    ];
    let score = dist[0].min(dist[1]).min(reach[0].max(reach[1]));
    Some((
        SeedCertificate {
            seed: s,
            coords: [a, b],
            d,
            relative_margin: rel,
            closed_form: closed,
            singular_factor: factor,
            singular_distance: dist,
            samples: 0,
        },
        score,
    ))
}

/// Grid search over `bx` with roughly `samples` points followed by one local
/// refinement around the best candidate.
///
/// A point qualifies when the jet-route discriminant clears [`SEED_MARGIN`],
/// the reduced equation is regular there, and a printed closed form (where
/// one exists in full) is nonzero. Among qualifying points the one farthest
/// from the singular locus wins.
pub fn find_nondegenerate_seed(case: &AlgebraCase, bx: &SearchBox, samples: usize) -> Result<SeedCertificate> {
    seed_state(case, 0.0, 0.0)?;
    let n = ((samples.max(4) as f64).sqrt().ceil() as usize).max(2);
    let reach = [bx.a.1 - bx.a.0, bx.b.1 - bx.b.0];
    let lerp = |(lo, hi): (f64, f64), k: usize, n: usize| lo + (hi - lo) * (k as f64 + 0.5) / n as f64;
    let qualifies = |c: &SeedCertificate| {
        c.relative_margin > SEED_MARGIN
            && match c.closed_form {
                Some(cf) if !cf.partial => cf.d != 0.0,
                _ => true,
            }
    };
    let mut tested = 0;
    let mut max_abs_d = 0.0f64;
    let mut best: Option<(SeedCertificate, f64)> = None;
    let mut consider = |a: f64, b: f64, best: &mut Option<(SeedCertificate, f64)>| {
        tested += 1;
        if let Some((c, score)) = evaluate(case, a, b, reach) {
            max_abs_d = max_abs_d.max(c.d.abs());
            if qualifies(&c) && best.as_ref().is_none_or(|(_, s)| score > *s) {
                *best = Some((c, score));
            }
        }
    };
    for i in 0..n {
        for j in 0..n {
            consider(lerp(bx.a, i, n), lerp(bx.b, j, n), &mut best);
        }
    }
    if let Some((c, _)) = best.clone() {
        let (ha, hb) = (reach[0] / n as f64, reach[1] / n as f64);
        for i in 0..5 {
            for j in 0..5 {
                let a = c.coords[0] + ha * (i as f64 - 2.0) / 4.0;
                let b = c.coords[1] + hb * (j as f64 - 2.0) / 4.0;
                if a >= bx.a.0 && a <= bx.a.1 && b >= bx.b.0 && b <= bx.b.1 {
                    consider(a, b, &mut best);
                }
            }
        }
    }
    match best {
        Some((mut c, _)) => {
            c.samples = tested;
            Ok(c)
        }
        None => Err(Error::SeedExhausted {
            samples: tested,
            max_abs_d,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::ModelParams;

    #[test]
    fn a32_seed_clears_the_printed_discriminant() {
        let c = AlgebraCase::new(CaseTag::A32, ModelParams::new(1.0)).unwrap();
        let cert = find_nondegenerate_seed(&c, &SearchBox::default_for(CaseTag::A32), 121).unwrap();
        let [f, w] = cert.coords;
        assert!((3.0 * f + w).abs() > 1e-3);
        let cf = cert.closed_form.unwrap();
        assert!(!cf.partial && cf.d.abs() > 0.0);
        assert!(cert.relative_margin > SEED_MARGIN);
        assert!(cert.singular_distance.iter().all(|d| *d > 0.0));
    }

    #[test]
    fn degenerate_lines_are_never_returned() {
        let c = AlgebraCase::new(CaseTag::A32, ModelParams::new(1.0)).unwrap();
        // A box that is a thin sliver around 3F + w = 0 cannot certify.
        let thin = SearchBox::new((0.1, 0.1), (-0.3, -0.3));
        assert!(matches!(
            find_nondegenerate_seed(&c, &thin, 9),
            Err(Error::SeedExhausted { .. })
        ));
        let c = AlgebraCase::new(CaseTag::A34, ModelParams::new(1.0)).unwrap();
        let q0 = SearchBox::new((-0.5, 0.5), (0.0, 0.0));
        assert!(find_nondegenerate_seed(&c, &q0, 16).is_err());
    }

    #[test]
    fn every_integrable_case_has_a_seed() {
        let p = ModelParams::new(1.0).with_m0(0.25).with_alpha0(0.5).with_zeta0(0.3);
        for tag in [CaseTag::A32, CaseTag::A34, CaseTag::A35, CaseTag::A35Half, CaseTag::A36, CaseTag::A37] {
            let c = AlgebraCase::new(tag, p).unwrap();
            let cert = find_nondegenerate_seed(&c, &SearchBox::default_for(tag), 64).unwrap();
            assert!(cert.relative_margin > SEED_MARGIN, "{tag}");
        }
        let c = AlgebraCase::new(CaseTag::A33, ModelParams::new(1.0).with_f0_g0(1.0, 0.0)).unwrap();
        assert!(find_nondegenerate_seed(&c, &SearchBox::default_for(CaseTag::A33), 9).is_err());
    }
}
