//! Integrate the A3,2 reduction from a certified seed and compare the two
//! discriminant routes along the way.
use gpke::cases::{find_nondegenerate_seed, integrate_case, profile_summary, AlgebraCase, CaseTag, ModelParams, SearchBox};
use gpke::ode::IntegratorConfig;
use gpke::quartic::DEFAULT_EPS;

fn main() -> gpke::Result<()> {
    let case = AlgebraCase::new(CaseTag::A32, ModelParams::new(1.0))?;
    let cert = find_nondegenerate_seed(&case, &SearchBox::default_for(case.tag), 400)?;
    let sol = integrate_case(&case, cert.seed, cert.seed.t0 + 1.0, &IntegratorConfig::default())?;
    let summary = profile_summary(&sol, 8, DEFAULT_EPS)?;
    println!("{:>8} {:>12} {:>12} {:>14} {:>10}", "z", "F", "F_z", "D", "type");
    for s in &summary.samples {
        println!("{:8.4} {:12.6} {:12.6} {:14.6e} {:>10}", s.t, s.u, s.du, s.d_jet, s.tag);
    }
    println!("max HH residual {:.1e}, max D gap {:.1e}", summary.max_hh_residual, summary.max_d_gap.unwrap_or(0.0));
    Ok(())
}
