//! Curvature of the explicit example at random points, by finite
//! differences and by exact jet partials.
use gpke::example::{ExampleParams, SamplingBox};
use gpke::geometry::{curvature, curvature_exact, ExampleMetric, FdConfig};

fn main() -> gpke::Result<()> {
    let e = ExampleParams::new(-1.0, 2.0)?;
    let field = ExampleMetric(e);
    let (points, _) = e.random_points(5, 1, SamplingBox::default());
    println!("{:>32} {:>10} {:>10} {:>10} {:>10}", "point", "FD |R+4Λ|", "FD |C|/|g|", "|R+4Λ|", "|C|/|g|");
    for pt in points {
        let fd = curvature(&field, &pt, e.lambda, &FdConfig::default())?;
        let ex = curvature_exact(&field, &pt, e.lambda)?;
        println!(
            "{:>32} {:10.1e} {:10.1e} {:10.1e} {:10.1e}",
            format!("{pt:.3?}"),
            fd.scalar_defect,
            fd.relative_traceless_ricci(),
            ex.scalar_defect,
            ex.relative_traceless_ricci()
        );
    }
    Ok(())
}
