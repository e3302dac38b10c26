//! Type of the A3,5 key function over a grid of seeds for a few exponents.
use std::collections::BTreeMap;

use gpke::cases::{seed_discriminant, seed_state, AlgebraCase, CaseTag, ModelParams};
use gpke::quartic::{classify_real, DEFAULT_EPS};

fn main() {
    for m0 in [-0.75, -0.25, 0.25, 0.75] {
        let case = AlgebraCase::new(CaseTag::A35, ModelParams::new(1.0).with_m0(m0)).unwrap();
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for i in 0..21 {
            for j in 0..21 {
                let (g, q) = (-1.0 + 0.1 * i as f64, 0.05 + 0.0475 * j as f64);
                let key = seed_state(&case, g, q)
                    .and_then(|s| {
                        let (x, y) = case.sample_point(s.t0);
                        let d = case.profile_derivatives(s.t0, s.u, s.du)?;
                        seed_discriminant(&case, &s)?;
                        case.conditioned_invariants(x, y, &|_| Ok(d))
                    })
                    .map(|inv| classify_real(&inv, DEFAULT_EPS).tag.to_string())
                    .unwrap_or_else(|_| "outside domain".into());
                *counts.entry(key).or_default() += 1;
            }
        }
        println!("m0 = {m0:+.2}: {counts:?}");
    }
}
