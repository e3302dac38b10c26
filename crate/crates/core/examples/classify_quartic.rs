//! Classify a few Weyl quartics by their invariants and by their roots.
use gpke::quartic::{classify_by_roots, classify_real, invariants, QuarticCoefficients, DEFAULT_EPS};

fn main() {
    let samples = [
        ("four real roots", [1.0, 0.0, -5.0 / 6.0, 0.0, 4.0]),
        ("two real roots", [1.0, 0.0, 0.0, 0.0, -1.0]),
        ("no real roots", [1.0, 0.0, 1.0 / 6.0, 0.0, 1.0]),
        ("quadruple root", [1.0, 0.0, 0.0, 0.0, 0.0]),
    ];
    for (label, c) in samples {
        let q = QuarticCoefficients::from_slice(&c).unwrap();
        let inv = invariants(&q);
        let ty = classify_real(&inv, DEFAULT_EPS);
        let roots = classify_by_roots(&q, 1e-7).unwrap();
        println!(
            "{label:>15}: I = {:+.4} J = {:+.4} D = {:+.4e} -> {} (roots: {} real, multiplicities {:?})",
            inv.i, inv.j, inv.d, ty.tag, roots.real_count, roots.multiplicities
        );
    }
}
