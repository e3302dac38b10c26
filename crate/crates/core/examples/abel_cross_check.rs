//! Map an integrated A3,4 profile to its Abel variables, integrate the Abel
//! equation independently and recover the coordinate relation xy.
use gpke::cases::{
    abel_cross_check, abel_state_from_profile, coordinate_relation, integrate_abel, integrate_case, seed_state, AlgebraCase, CaseTag,
    ModelParams, RelationInput,
};
use gpke::ode::IntegratorConfig;

fn main() -> gpke::Result<()> {
    let case = AlgebraCase::new(CaseTag::A34, ModelParams::new(1.0))?;
    let sol = integrate_case(&case, seed_state(&case, 0.2, 0.5)?, 2.0, &IntegratorConfig::default())?;
    println!("profile vs Abel integration: {:.1e}", abel_cross_check(&sol, 40)?);

    let (t, u, du) = (sol.seed.t0, sol.seed.u, sol.seed.du);
    let (r0, s0) = abel_state_from_profile(&case, t, u, du)?;
    let abel = integrate_abel(&case, r0, s0, 2.0 * r0, &IntegratorConfig::default())?;
    let (lo, hi) = abel.interval();
    for k in 0..=4 {
        let r = lo + (hi - lo) * k as f64 / 4.0;
        let xy = coordinate_relation(&abel, RelationInput { from: lo, to: r, y: None })?;
        println!("r = {r:.4}  Σ = {:+.6}  xy = {xy:.6}", abel.sigma(r)?);
    }
    Ok(())
}
